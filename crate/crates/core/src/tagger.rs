//! The tagging pipeline shared by the CLI, benchmarks and FFI: tokenize,
//! parse the field structure, then decode spans with either the trained CRF
//! or the rule baseline.

use thiserror::Error;

use crate::baseline::{rule_tag, RuleSet};
use crate::corpus::{Label, PaymentMessage};
use crate::crf::{viterbi_decode, CrfModel, InferenceError};
use crate::eval::{extract_spans, spans_to_labels, EntitySpan};
use crate::features::{extract_features_into, Gazetteers};
use crate::formats;
use crate::tokenize::{tokenize, TokenSequence, TokenizeError};

#[derive(Debug, Error)]
pub enum TagError {
    #[error(transparent)]
    Tokenize(#[from] TokenizeError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

/// Full tagging output for one message.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedMessage {
    pub tokens: TokenSequence,
    pub labels: Vec<Label>,
    pub spans: Vec<EntitySpan>,
}

/// A message tagger. Implementations are immutable and shareable across
/// threads; any number of concurrent callers may tag through one instance.
pub trait Tagger: Send + Sync {
    fn name(&self) -> &str;

    fn tag(&self, message: &PaymentMessage) -> Result<TaggedMessage, TagError>;

    /// Convenience: spans only.
    fn tag_message(&self, message: &PaymentMessage) -> Result<Vec<EntitySpan>, TagError> {
        self.tag(message).map(|t| t.spans)
    }
}

/// CRF tagger: featurize against the model's index and Viterbi-decode with
/// hard BIO constraints.
pub struct CrfTagger {
    model: CrfModel,
    gazetteers: Gazetteers,
    enforce_bio: bool,
}

impl CrfTagger {
    pub fn new(model: CrfModel, gazetteers: Gazetteers) -> Self {
        CrfTagger { model, gazetteers, enforce_bio: true }
    }

    /// Disables the decode-time BIO constraint mask (for ablation).
    pub fn without_bio_constraints(mut self) -> Self {
        self.enforce_bio = false;
        self
    }

    pub fn model(&self) -> &CrfModel {
        &self.model
    }
}

impl Tagger for CrfTagger {
    fn name(&self) -> &str {
        "crf"
    }

    fn tag(&self, message: &PaymentMessage) -> Result<TaggedMessage, TagError> {
        let tokens = tokenize(message)?;
        let structure = formats::parse(message.format, &message.text);
        let index = &self.model.feature_index;
        let mut features = Vec::with_capacity(tokens.len());
        for i in 0..tokens.len() {
            let mut active = Vec::with_capacity(24);
            let mut emit = |s: &str| {
                if let Some(id) = index.id_of(s) {
                    active.push(id);
                }
            };
            extract_features_into(&tokens, &structure, message.format, &self.gazetteers, i, &mut emit);
            features.push(active);
        }
        let labels = viterbi_decode(&self.model, &features, self.enforce_bio)?;
        let spans = extract_spans(&message.id, &labels);
        Ok(TaggedMessage { tokens, labels, spans })
    }
}

/// Rule-based tagger over the same pipeline.
pub struct RuleTagger {
    rules: RuleSet,
    gazetteers: Gazetteers,
}

impl RuleTagger {
    pub fn new(rules: RuleSet, gazetteers: Gazetteers) -> Self {
        RuleTagger { rules, gazetteers }
    }
}

impl Tagger for RuleTagger {
    fn name(&self) -> &str {
        "rule-based"
    }

    fn tag(&self, message: &PaymentMessage) -> Result<TaggedMessage, TagError> {
        let tokens = tokenize(message)?;
        let structure = formats::parse(message.format, &message.text);
        let spans = rule_tag(message, &tokens, &structure, &self.gazetteers, &self.rules);
        let labels = spans_to_labels(&spans, tokens.len());
        Ok(TaggedMessage { tokens, labels, spans })
    }
}
