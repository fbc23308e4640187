//! CRF feature extraction and the pruned feature index.
//!
//! Feature strings carry a family prefix: token-level (`cap=`, `shape=`,
//! `len=`, `lower=`, `hasdigit`, `haspunct`), contextual (`prev=`, `next=`,
//! `prev2=`, `next2=`, `field=`, `fieldpos=`), lexicon (`gaz:*`), pattern
//! (`pat:*`) and the message type (`fmt=`). All features are binary-valued.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{AnnotatedMessage, MessageFormat};
use crate::formats::{self, FieldStructure};
use crate::tokenize::{self, TokenSequence};

/// Sentinel context values at sequence edges.
pub const BOS: &str = "<BOS>";
pub const EOS: &str = "<EOS>";

/// Named lookup sets used for lexicon features and by the rule baseline.
/// Lookups are case-insensitive after NFC normalization.
#[derive(Debug, Clone)]
pub struct Gazetteers {
    pub bank_names: HashSet<String>,
    pub country_names: HashSet<String>,
    pub city_names: HashSet<String>,
    pub currency_codes: HashSet<String>,
    pub person_name_parts: HashSet<String>,
    /// Individual words of multi-word bank names, for per-token features.
    bank_words: HashSet<String>,
}

/// Normalized lookup key: NFC, uppercased.
pub fn normalize_key(s: &str) -> String {
    s.nfc().collect::<String>().to_uppercase()
}

fn load_set(content: &str) -> HashSet<String> {
    content
        .lines()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(normalize_key)
        .collect()
}

impl Gazetteers {
    /// The gazetteers shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_contents(
            include_str!("../data/banks.txt"),
            include_str!("../data/countries.txt"),
            include_str!("../data/cities.txt"),
            include_str!("../data/currencies.txt"),
            include_str!("../data/names.txt"),
        )
    }

    /// Loads gazetteers from a directory of `<name>.txt` files (one entry
    /// per line, `#` comments allowed). Missing files fall back to the
    /// builtin lists.
    pub fn from_dir(dir: &Path) -> std::io::Result<Self> {
        let read = |name: &str, fallback: &str| -> std::io::Result<String> {
            let path = dir.join(name);
            if path.exists() {
                std::fs::read_to_string(path)
            } else {
                Ok(fallback.to_string())
            }
        };
        Ok(Self::from_contents(
            &read("banks.txt", include_str!("../data/banks.txt"))?,
            &read("countries.txt", include_str!("../data/countries.txt"))?,
            &read("cities.txt", include_str!("../data/cities.txt"))?,
            &read("currencies.txt", include_str!("../data/currencies.txt"))?,
            &read("names.txt", include_str!("../data/names.txt"))?,
        ))
    }

    fn from_contents(
        banks: &str,
        countries: &str,
        cities: &str,
        currencies: &str,
        names: &str,
    ) -> Self {
        let bank_names = load_set(banks);
        let bank_words = bank_names
            .iter()
            .flat_map(|name| name.split_whitespace().map(str::to_string))
            .collect();
        Gazetteers {
            bank_names,
            country_names: load_set(countries),
            city_names: load_set(cities),
            currency_codes: load_set(currencies),
            person_name_parts: load_set(names),
            bank_words,
        }
    }

    pub fn is_bank_word(&self, token: &str) -> bool {
        self.bank_words.contains(&normalize_key(token))
    }

    pub fn is_country(&self, token: &str) -> bool {
        self.country_names.contains(&normalize_key(token))
    }

    pub fn is_city(&self, token: &str) -> bool {
        self.city_names.contains(&normalize_key(token))
    }

    pub fn is_currency(&self, token: &str) -> bool {
        self.currency_codes.contains(&normalize_key(token))
    }

    pub fn is_name_part(&self, token: &str) -> bool {
        self.person_name_parts.contains(&normalize_key(token))
    }
}

/// Emits the feature strings for position `i` of a token sequence.
pub fn extract_features(
    tokens: &TokenSequence,
    structure: &FieldStructure,
    format: MessageFormat,
    gazetteers: &Gazetteers,
    i: usize,
) -> Vec<String> {
    let mut out = Vec::with_capacity(24);
    let mut emit = |s: &str| out.push(s.to_string());
    extract_features_into(tokens, structure, format, gazetteers, i, &mut emit);
    out
}

/// Same as [`extract_features`] but streaming each feature string through a
/// caller-supplied sink via one reused buffer, so the tagging hot path can
/// look features up without allocating.
pub fn extract_features_into(
    tokens: &TokenSequence,
    structure: &FieldStructure,
    format: MessageFormat,
    gazetteers: &Gazetteers,
    i: usize,
    emit: &mut dyn FnMut(&str),
) {
    assert!(i < tokens.tokens.len(), "feature position {i} out of range");
    let token = &tokens.tokens[i];
    let text = token.text.as_str();
    let mut buf = String::with_capacity(32);
    macro_rules! feature {
        ($($arg:tt)*) => {{
            buf.clear();
            let _ = write!(buf, $($arg)*);
            emit(&buf);
        }};
    }

    // Token-level.
    feature!("cap={}", capitalization_class(text));
    if text.chars().any(|c| c.is_ascii_digit()) {
        emit("hasdigit");
    }
    if text.chars().any(|c| c.is_ascii_punctuation()) {
        emit("haspunct");
    }
    feature!("len={}", length_bucket(text.chars().count()));
    feature!("shape={}", shape_of(text));
    feature!("lower={}", text.to_lowercase());

    // Contextual window (+/-2, lowercased forms) with boundary sentinels.
    let lower_at = |j: isize| -> String {
        if j < 0 {
            BOS.to_string()
        } else if j as usize >= tokens.tokens.len() {
            EOS.to_string()
        } else {
            tokens.tokens[j as usize].text.to_lowercase()
        }
    };
    let pos = i as isize;
    feature!("prev={}", lower_at(pos - 1));
    feature!("next={}", lower_at(pos + 1));
    feature!("prev2={}", lower_at(pos - 2));
    feature!("next2={}", lower_at(pos + 2));

    let fv = formats::format_features(token, structure, format);
    feature!("field={}", fv.field_type.as_str());
    feature!("fieldpos={}", position_decile(fv.relative_position));
    feature!("fmt={}", format.as_str());

    // Lexicon.
    if gazetteers.is_bank_word(text) {
        emit("gaz:bank");
    }
    if gazetteers.is_country(text) {
        emit("gaz:country");
    }
    if gazetteers.is_city(text) {
        emit("gaz:city");
    }
    if gazetteers.is_currency(text) {
        emit("gaz:ccy");
    }
    if gazetteers.is_name_part(text) {
        emit("gaz:name");
    }

    // Patterns.
    if fv.pattern.is_iban {
        emit("pat:iban");
    }
    if fv.pattern.is_bic {
        emit("pat:bic");
    }
    if fv.pattern.is_amount {
        emit("pat:amount");
    }
    if fv.pattern.is_date {
        emit("pat:date");
    }
    if fv.pattern.is_iban || tokenize::has_domestic_account_shape(text) {
        emit("pat:acct");
    }
}

fn capitalization_class(text: &str) -> &'static str {
    let mut letters = text.chars().filter(|c| c.is_alphabetic()).peekable();
    if letters.peek().is_none() {
        return "none";
    }
    let upper = text.chars().filter(|c| c.is_uppercase()).count();
    let lower = text.chars().filter(|c| c.is_lowercase()).count();
    let first_upper = text.chars().find(|c| c.is_alphabetic()).map_or(false, |c| c.is_uppercase());
    if lower == 0 {
        "ALLCAPS"
    } else if upper == 0 {
        "lower"
    } else if first_upper && upper == 1 {
        "Init"
    } else {
        "mixed"
    }
}

fn length_bucket(len: usize) -> &'static str {
    match len {
        1 => "1",
        2 => "2",
        3 => "3",
        4..=6 => "4-6",
        7..=12 => "7-12",
        _ => "13+",
    }
}

/// Word shape: uppercase -> `X`, lowercase -> `x`, digit -> `9`, everything
/// else kept verbatim.
fn shape_of(text: &str) -> String {
    let mut shape = String::with_capacity(text.len());
    for c in text.chars() {
        if c.is_uppercase() {
            shape.push('X');
        } else if c.is_lowercase() {
            shape.push('x');
        } else if c.is_ascii_digit() {
            shape.push('9');
        } else {
            shape.push(c);
        }
    }
    shape
}

fn position_decile(relative_position: f64) -> usize {
    ((relative_position * 10.0) as usize).min(9)
}

/// Bidirectional map between feature strings and dense ids, with pruning by
/// training-set occurrence count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureIndex {
    /// Feature strings in id order (lexicographic).
    strings: Vec<String>,
    #[serde(skip)]
    ids: HashMap<String, u32>,
    /// Occurrence count of each retained feature in the training set.
    counts: Vec<u32>,
    pub prune_threshold: u32,
}

#[derive(Debug, Error)]
pub enum FeatureIndexError {
    #[error("cannot build a feature index from an empty training set")]
    EmptyTrainingSet,
}

impl FeatureIndex {
    /// Rebuilds the string-to-id map; needed after deserialization.
    pub fn rebuild_lookup(&mut self) {
        self.ids = self
            .strings
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
    }

    pub fn from_strings(strings: Vec<String>, counts: Vec<u32>, prune_threshold: u32) -> Self {
        let mut index = FeatureIndex { strings, ids: HashMap::new(), counts, prune_threshold };
        index.rebuild_lookup();
        index
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn id_of(&self, feature: &str) -> Option<u32> {
        self.ids.get(feature).copied()
    }

    pub fn string_of(&self, id: u32) -> Option<&str> {
        self.strings.get(id as usize).map(String::as_str)
    }

    pub fn strings(&self) -> &[String] {
        &self.strings
    }

    pub fn count_of(&self, id: u32) -> u32 {
        self.counts[id as usize]
    }
}

/// Enumerates all feature strings over a training corpus, counts
/// occurrences, retains features occurring at least `prune_threshold`
/// times, and assigns dense ids in lexicographic order.
pub fn build_feature_index(
    train: &[AnnotatedMessage],
    gazetteers: &Gazetteers,
    prune_threshold: u32,
) -> Result<FeatureIndex, FeatureIndexError> {
    if train.is_empty() {
        return Err(FeatureIndexError::EmptyTrainingSet);
    }
    let mut counts: HashMap<String, u32> = HashMap::new();
    for message in train {
        let structure = formats::parse(message.message.format, &message.message.text);
        for i in 0..message.tokens.tokens.len() {
            let mut emit = |s: &str| {
                if let Some(count) = counts.get_mut(s) {
                    *count += 1;
                } else {
                    counts.insert(s.to_string(), 1);
                }
            };
            extract_features_into(
                &message.tokens,
                &structure,
                message.message.format,
                gazetteers,
                i,
                &mut emit,
            );
        }
    }
    let mut retained: Vec<(String, u32)> = counts
        .into_iter()
        .filter(|(_, count)| *count >= prune_threshold)
        .collect();
    retained.sort_by(|a, b| a.0.cmp(&b.0));
    let (strings, kept_counts) = retained.into_iter().unzip();
    Ok(FeatureIndex::from_strings(strings, kept_counts, prune_threshold))
}

/// Writes a compact human-readable summary of an index (for logs).
pub fn describe_index(index: &FeatureIndex) -> String {
    let mut out = String::new();
    let _ = write!(out, "{} features (prune threshold {})", index.len(), index.prune_threshold);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{MessageFlags, PaymentMessage};
    use crate::tokenize::tokenize;

    fn message(text: &str) -> PaymentMessage {
        PaymentMessage {
            id: "m".into(),
            format: MessageFormat::Mt103,
            text: text.into(),
            language_tags: Default::default(),
            flags: MessageFlags::default(),
        }
    }

    fn features_at(text: &str, i: usize) -> Vec<String> {
        let msg = message(text);
        let tokens = tokenize(&msg).unwrap();
        let structure = formats::parse(msg.format, &msg.text);
        extract_features(&tokens, &structure, msg.format, &Gazetteers::builtin(), i)
    }

    #[test]
    fn currency_token_gets_lexicon_and_cap_features() {
        let feats = features_at("EUR 100", 0);
        assert!(feats.contains(&"gaz:ccy".to_string()));
        assert!(feats.contains(&"cap=ALLCAPS".to_string()));
    }

    #[test]
    fn first_position_has_bos_sentinel() {
        let feats = features_at("EUR 100", 0);
        assert!(feats.contains(&format!("prev={BOS}")));
        assert!(feats.contains(&format!("prev2={BOS}")));
        let feats = features_at("EUR 100", 1);
        assert!(feats.contains(&format!("next={EOS}")));
    }

    #[test]
    fn iban_in_beneficiary_field() {
        let feats = features_at(":59:GB82WEST12345698765432", 1);
        assert!(feats.contains(&"pat:iban".to_string()));
        assert!(feats.contains(&"pat:acct".to_string()));
        assert!(feats.contains(&"field=F59".to_string()));
    }

    #[test]
    fn shapes_and_buckets() {
        let feats = features_at("Abc123 x", 0);
        assert!(feats.contains(&"shape=Xxx999".to_string()));
        assert!(feats.contains(&"len=4-6".to_string()));
        assert!(feats.contains(&"hasdigit".to_string()));
    }

    #[test]
    fn gazetteer_lookup_is_case_insensitive() {
        let gaz = Gazetteers::builtin();
        assert!(gaz.is_city("London"));
        assert!(gaz.is_city("LONDON"));
        assert!(gaz.is_bank_word("deutsche"));
        assert!(gaz.is_name_part("Garcia"));
    }

    fn tiny_corpus(texts: &[&str]) -> Vec<AnnotatedMessage> {
        texts
            .iter()
            .enumerate()
            .map(|(i, text)| {
                let mut msg = message(text);
                msg.id = format!("m{i}");
                let tokens = tokenize(&msg).unwrap();
                let labels = vec![crate::corpus::Label::O; tokens.len()];
                AnnotatedMessage {
                    message: msg,
                    tokens,
                    labels,
                    gold_spans: Vec::new(),
                    inner_spans: Vec::new(),
                }
            })
            .collect()
    }

    #[test]
    fn threshold_one_keeps_everything_observed() {
        let corpus = tiny_corpus(&["EUR 100", "USD 200"]);
        let gaz = Gazetteers::builtin();
        let index = build_feature_index(&corpus, &gaz, 1).unwrap();
        assert!(index.id_of("lower=eur").is_some());
        assert!(index.id_of("lower=usd").is_some());
        // Ids follow lexicographic order of the feature strings.
        let strings = index.strings();
        let mut sorted = strings.to_vec();
        sorted.sort();
        assert_eq!(strings, sorted.as_slice());
    }

    #[test]
    fn pruning_drops_rare_features() {
        let corpus = tiny_corpus(&["EUR 100", "EUR 200", "xyzzy"]);
        let gaz = Gazetteers::builtin();
        let index = build_feature_index(&corpus, &gaz, 2).unwrap();
        assert!(index.id_of("lower=eur").is_some());
        assert!(index.id_of("lower=xyzzy").is_none());
        let eur = index.id_of("lower=eur").unwrap();
        assert_eq!(index.count_of(eur), 2);
    }

    #[test]
    fn infinite_threshold_empties_the_index() {
        let corpus = tiny_corpus(&["EUR 100"]);
        let gaz = Gazetteers::builtin();
        let index = build_feature_index(&corpus, &gaz, u32::MAX).unwrap();
        assert!(index.is_empty());
    }

    #[test]
    fn empty_training_set_is_an_error() {
        let gaz = Gazetteers::builtin();
        assert!(build_feature_index(&[], &gaz, 1).is_err());
    }

    #[test]
    fn index_is_deterministic() {
        let corpus = tiny_corpus(&["EUR 100", "USD 200", "GBP 5"]);
        let gaz = Gazetteers::builtin();
        let a = build_feature_index(&corpus, &gaz, 1).unwrap();
        let b = build_feature_index(&corpus, &gaz, 1).unwrap();
        assert_eq!(a.strings(), b.strings());
    }

    #[test]
    fn strings_roundtrip_through_the_bijection() {
        let corpus = tiny_corpus(&["EUR 100"]);
        let index = build_feature_index(&corpus, &Gazetteers::builtin(), 1).unwrap();
        for id in 0..index.len() as u32 {
            let s = index.string_of(id).unwrap();
            assert_eq!(index.id_of(s), Some(id));
        }
    }
}
