//! Domain types for payment messages and their annotations, a seeded
//! synthetic corpus generator, and annotation file I/O.

mod generator;
mod io;
mod pools;
mod stats;

pub use generator::{default_format_mix, generate_corpus, GeneratorConfig, GeneratorError};
pub use io::{
    read_annotations, read_annotations_lenient, read_raw_messages, write_annotations,
    write_raw_messages, AnnotationError,
};
pub use stats::{corpus_stats, split_corpus, CorpusStats, SplitError};

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::EntitySpan;
use crate::tokenize::TokenSequence;

/// The six entity types recognized in payment messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityType {
    #[serde(rename = "PERSON_NAME")]
    PersonName,
    #[serde(rename = "ORGANIZATION")]
    Organization,
    #[serde(rename = "ACCOUNT_NUMBER")]
    AccountNumber,
    #[serde(rename = "LOCATION")]
    Location,
    #[serde(rename = "AMOUNT")]
    Amount,
    #[serde(rename = "PURPOSE")]
    Purpose,
}

impl EntityType {
    /// All entity types in declaration order.
    pub const ALL: [EntityType; 6] = [
        EntityType::PersonName,
        EntityType::Organization,
        EntityType::AccountNumber,
        EntityType::Location,
        EntityType::Amount,
        EntityType::Purpose,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EntityType::PersonName => "PERSON_NAME",
            EntityType::Organization => "ORGANIZATION",
            EntityType::AccountNumber => "ACCOUNT_NUMBER",
            EntityType::Location => "LOCATION",
            EntityType::Amount => "AMOUNT",
            EntityType::Purpose => "PURPOSE",
        }
    }

    /// Position within [`EntityType::ALL`].
    pub fn index(&self) -> usize {
        Self::ALL.iter().position(|t| t == self).unwrap()
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown entity type or label: {0:?}")]
pub struct ParseLabelError(pub String);

impl FromStr for EntityType {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| ParseLabelError(s.to_string()))
    }
}

/// A BIO tag: `O`, or `B-`/`I-` carrying an entity type.
///
/// The full label set has 13 members (2 x 6 entity types + `O`). Labels map
/// to dense indices with `O` at 0 followed by the B/I pair of each entity
/// type in declaration order; that ordering is relied on by the CRF weight
/// layout and by deterministic tie-breaking in decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    O,
    B(EntityType),
    I(EntityType),
}

/// Number of distinct labels.
pub const LABEL_COUNT: usize = 13;

impl Label {
    /// All 13 labels in index order.
    pub fn all() -> [Label; LABEL_COUNT] {
        let mut out = [Label::O; LABEL_COUNT];
        for (t, ty) in EntityType::ALL.into_iter().enumerate() {
            out[1 + 2 * t] = Label::B(ty);
            out[2 + 2 * t] = Label::I(ty);
        }
        out
    }

    /// Dense index in `0..13`.
    pub fn index(&self) -> usize {
        match self {
            Label::O => 0,
            Label::B(ty) => 1 + 2 * ty.index(),
            Label::I(ty) => 2 + 2 * ty.index(),
        }
    }

    pub fn from_index(idx: usize) -> Option<Label> {
        if idx >= LABEL_COUNT {
            return None;
        }
        Some(Self::all()[idx])
    }

    pub fn entity_type(&self) -> Option<EntityType> {
        match self {
            Label::O => None,
            Label::B(ty) | Label::I(ty) => Some(*ty),
        }
    }

    pub fn is_begin(&self) -> bool {
        matches!(self, Label::B(_))
    }

    pub fn is_inside(&self) -> bool {
        matches!(self, Label::I(_))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::O => f.write_str("O"),
            Label::B(ty) => write!(f, "B-{}", ty),
            Label::I(ty) => write!(f, "I-{}", ty),
        }
    }
}

impl FromStr for Label {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "O" {
            return Ok(Label::O);
        }
        if let Some(rest) = s.strip_prefix("B-") {
            return Ok(Label::B(rest.parse()?));
        }
        if let Some(rest) = s.strip_prefix("I-") {
            return Ok(Label::I(rest.parse()?));
        }
        Err(ParseLabelError(s.to_string()))
    }
}

/// Checks the BIO well-formedness rule: `I-X` may only follow `B-X` or `I-X`.
pub fn is_valid_bio(labels: &[Label]) -> bool {
    let mut prev = Label::O;
    for &label in labels {
        if let Label::I(ty) = label {
            match prev {
                Label::B(p) | Label::I(p) if p == ty => {}
                _ => return false,
            }
        }
        prev = label;
    }
    true
}

/// The five payment message format groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MessageFormat {
    #[serde(rename = "MT103")]
    Mt103,
    #[serde(rename = "PAIN001")]
    Pain001,
    #[serde(rename = "ACH")]
    Ach,
    #[serde(rename = "SEPA")]
    Sepa,
    #[serde(rename = "OTHER")]
    Other,
}

impl MessageFormat {
    pub const ALL: [MessageFormat; 5] = [
        MessageFormat::Mt103,
        MessageFormat::Pain001,
        MessageFormat::Ach,
        MessageFormat::Sepa,
        MessageFormat::Other,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MessageFormat::Mt103 => "MT103",
            MessageFormat::Pain001 => "PAIN001",
            MessageFormat::Ach => "ACH",
            MessageFormat::Sepa => "SEPA",
            MessageFormat::Other => "OTHER",
        }
    }

    pub fn index(&self) -> usize {
        Self::ALL.iter().position(|f| f == self).unwrap()
    }
}

impl fmt::Display for MessageFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown message format: {0:?}")]
pub struct ParseFormatError(pub String);

impl FromStr for MessageFormat {
    type Err = ParseFormatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MessageFormat::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| ParseFormatError(s.to_string()))
    }
}

/// Difficulty flags carried by each message.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageFlags {
    /// Content mixes languages (names / remittance text beyond English).
    pub multilingual: bool,
    /// Non-standard formatting (mangled tags, abbreviations, merged lines).
    pub nonstandard: bool,
    /// At least one entity contains a nested inner entity.
    pub has_nested: bool,
}

impl MessageFlags {
    pub fn to_list(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.multilingual {
            out.push("multilingual");
        }
        if self.nonstandard {
            out.push("nonstandard");
        }
        if self.has_nested {
            out.push("nested");
        }
        out
    }
}

/// A raw payment message: the unit of processing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaymentMessage {
    pub id: String,
    pub format: MessageFormat,
    /// Raw message text, UTF-8.
    pub text: String,
    /// ISO-639-1 codes of languages appearing in the message.
    pub language_tags: BTreeSet<String>,
    pub flags: MessageFlags,
}

/// A message together with its gold annotation.
///
/// Invariants: `tokens.len() == labels.len()`, `labels` is a well-formed BIO
/// sequence, and `gold_spans` is exactly the span extraction of `labels`
/// (spans and labels are two views of one annotation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedMessage {
    pub message: PaymentMessage,
    pub tokens: TokenSequence,
    pub labels: Vec<Label>,
    pub gold_spans: Vec<EntitySpan>,
    /// Inner spans of nested entities, flattened out of the BIO labels.
    /// Kept for error analysis only; empty unless `flags.has_nested`.
    pub inner_spans: Vec<EntitySpan>,
}

impl AnnotatedMessage {
    /// Verifies the structural invariants; returns the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.tokens.tokens.len() != self.labels.len() {
            return Err(format!(
                "message {}: {} tokens but {} labels",
                self.message.id,
                self.tokens.tokens.len(),
                self.labels.len()
            ));
        }
        if !is_valid_bio(&self.labels) {
            return Err(format!("message {}: labels break the BIO scheme", self.message.id));
        }
        let spans = crate::eval::extract_spans(&self.message.id, &self.labels);
        if spans != self.gold_spans {
            return Err(format!(
                "message {}: gold_spans disagree with the label sequence",
                self.message.id
            ));
        }
        Ok(())
    }
}
