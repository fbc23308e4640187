//! Corpus statistics and stratified splitting.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AnnotatedMessage, MessageFormat};

/// Descriptive statistics over an annotated corpus; the diagnostic mirror
/// of the generator's targets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusStats {
    pub message_count: usize,
    pub per_format: BTreeMap<String, usize>,
    pub per_entity_type: BTreeMap<String, usize>,
    pub entity_density_mean: f64,
    pub entity_density_sd: f64,
    pub char_length_mean: f64,
    pub char_length_sd: f64,
    pub multilingual_proportion: f64,
    pub nonstandard_proportion: f64,
    pub nested_proportion: f64,
}

impl CorpusStats {
    pub fn format_proportion(&self, format: MessageFormat) -> f64 {
        let count = self.per_format.get(format.as_str()).copied().unwrap_or(0);
        count as f64 / self.message_count as f64
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("split ratios must be non-negative and sum to 1 (got {0}, {1}, {2})")]
    BadRatios(f64, f64, f64),
}

/// Exact counts, means and population standard deviations over a corpus.
pub fn corpus_stats(corpus: &[AnnotatedMessage]) -> Result<CorpusStats, SplitError> {
    if corpus.is_empty() {
        return Err(SplitError::EmptyCorpus);
    }
    let mut per_format: BTreeMap<String, usize> = BTreeMap::new();
    let mut per_entity_type: BTreeMap<String, usize> = BTreeMap::new();
    let mut densities = Vec::with_capacity(corpus.len());
    let mut lengths = Vec::with_capacity(corpus.len());
    let mut multilingual = 0usize;
    let mut nonstandard = 0usize;
    let mut nested = 0usize;
    for message in corpus {
        *per_format.entry(message.message.format.as_str().to_string()).or_insert(0) += 1;
        for span in &message.gold_spans {
            *per_entity_type.entry(span.entity_type.as_str().to_string()).or_insert(0) += 1;
        }
        densities.push(message.gold_spans.len() as f64);
        lengths.push(message.message.text.chars().count() as f64);
        multilingual += message.message.flags.multilingual as usize;
        nonstandard += message.message.flags.nonstandard as usize;
        nested += message.message.flags.has_nested as usize;
    }
    let n = corpus.len() as f64;
    let (density_mean, density_sd) = mean_sd(&densities);
    let (length_mean, length_sd) = mean_sd(&lengths);
    Ok(CorpusStats {
        message_count: corpus.len(),
        per_format,
        per_entity_type,
        entity_density_mean: density_mean,
        entity_density_sd: density_sd,
        char_length_mean: length_mean,
        char_length_sd: length_sd,
        multilingual_proportion: multilingual as f64 / n,
        nonstandard_proportion: nonstandard as f64 / n,
        nested_proportion: nested as f64 / n,
    })
}

/// Mean and population standard deviation.
fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, variance.sqrt())
}

/// Splits a corpus into train/dev/test, stratified by message format.
///
/// Within each format stratum the messages are shuffled deterministically
/// by the seed and cut at the rounded ratio boundaries, so split sizes
/// match the ratios to within rounding per stratum. Degenerate inputs
/// (too few messages to populate dev/test) are allowed but logged.
pub fn split_corpus(
    corpus: &[AnnotatedMessage],
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<(Vec<AnnotatedMessage>, Vec<AnnotatedMessage>, Vec<AnnotatedMessage>), SplitError> {
    if corpus.is_empty() {
        return Err(SplitError::EmptyCorpus);
    }
    let (r_train, r_dev, r_test) = ratios;
    let sum = r_train + r_dev + r_test;
    if r_train < 0.0 || r_dev < 0.0 || r_test < 0.0 || (sum - 1.0).abs() > 1e-9 {
        return Err(SplitError::BadRatios(r_train, r_dev, r_test));
    }

    let mut train = Vec::new();
    let mut dev = Vec::new();
    let mut test = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for format in MessageFormat::ALL {
        let mut stratum: Vec<&AnnotatedMessage> =
            corpus.iter().filter(|m| m.message.format == format).collect();
        if stratum.is_empty() {
            continue;
        }
        stratum.shuffle(&mut rng);
        let n = stratum.len();
        let cut_train = (n as f64 * r_train).round() as usize;
        let cut_dev = (n as f64 * (r_train + r_dev)).round() as usize;
        let cut_train = cut_train.min(n);
        let cut_dev = cut_dev.clamp(cut_train, n);
        train.extend(stratum[..cut_train].iter().map(|m| (*m).clone()));
        dev.extend(stratum[cut_train..cut_dev].iter().map(|m| (*m).clone()));
        test.extend(stratum[cut_dev..].iter().map(|m| (*m).clone()));
    }
    if dev.is_empty() || test.is_empty() {
        log::warn!(
            "split produced an empty part (train {}, dev {}, test {})",
            train.len(),
            dev.len(),
            test.len()
        );
    }
    Ok((train, dev, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{EntityType, Label, MessageFlags, PaymentMessage};
    use crate::eval::extract_spans;
    use crate::tokenize::tokenize;

    fn message(id: &str, format: MessageFormat, spans: usize) -> AnnotatedMessage {
        let text = (0..spans.max(1)).map(|_| "TOKEN").collect::<Vec<_>>().join(" ");
        let msg = PaymentMessage {
            id: id.into(),
            format,
            text,
            language_tags: Default::default(),
            flags: MessageFlags::default(),
        };
        let tokens = tokenize(&msg).unwrap();
        let labels: Vec<Label> = (0..tokens.len())
            .map(|i| if i < spans { Label::B(EntityType::Purpose) } else { Label::O })
            .collect();
        let gold_spans = extract_spans(id, &labels);
        AnnotatedMessage { message: msg, tokens, labels, gold_spans, inner_spans: Vec::new() }
    }

    #[test]
    fn counts_two_formats() {
        let corpus = vec![
            message("a", MessageFormat::Mt103, 1),
            message("b", MessageFormat::Sepa, 1),
        ];
        let stats = corpus_stats(&corpus).unwrap();
        assert_eq!(stats.per_format["MT103"], 1);
        assert_eq!(stats.per_format["SEPA"], 1);
    }

    #[test]
    fn single_message_density() {
        let corpus = vec![message("a", MessageFormat::Mt103, 3)];
        let stats = corpus_stats(&corpus).unwrap();
        assert_eq!(stats.entity_density_mean, 3.0);
        assert_eq!(stats.entity_density_sd, 0.0);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert_eq!(corpus_stats(&[]).unwrap_err(), SplitError::EmptyCorpus);
        assert_eq!(
            split_corpus(&[], (0.7, 0.15, 0.15), 0).unwrap_err(),
            SplitError::EmptyCorpus
        );
    }

    #[test]
    fn single_format_hundred_messages() {
        let corpus: Vec<_> =
            (0..100).map(|i| message(&format!("m{i}"), MessageFormat::Mt103, 1)).collect();
        let (train, dev, test) = split_corpus(&corpus, (0.70, 0.15, 0.15), 42).unwrap();
        assert_eq!((train.len(), dev.len(), test.len()), (70, 15, 15));
    }

    #[test]
    fn single_message_goes_to_train() {
        let corpus = vec![message("only", MessageFormat::Ach, 1)];
        let (train, dev, test) = split_corpus(&corpus, (0.70, 0.15, 0.15), 1).unwrap();
        assert_eq!(train.len(), 1);
        assert!(dev.is_empty() && test.is_empty());
    }

    #[test]
    fn stratified_by_format() {
        let mut corpus = Vec::new();
        for i in 0..10 {
            corpus.push(message(&format!("mt{i}"), MessageFormat::Mt103, 1));
            corpus.push(message(&format!("sepa{i}"), MessageFormat::Sepa, 1));
        }
        let (train, _, _) = split_corpus(&corpus, (0.7, 0.15, 0.15), 9).unwrap();
        let mt = train.iter().filter(|m| m.message.format == MessageFormat::Mt103).count();
        let sepa = train.iter().filter(|m| m.message.format == MessageFormat::Sepa).count();
        assert_eq!(mt, 7);
        assert_eq!(sepa, 7);
    }

    #[test]
    fn split_is_a_partition_and_deterministic() {
        let corpus: Vec<_> = (0..37)
            .map(|i| {
                let format = MessageFormat::ALL[i % 5];
                message(&format!("m{i}"), format, 1)
            })
            .collect();
        let (t1, d1, s1) = split_corpus(&corpus, (0.7, 0.15, 0.15), 5).unwrap();
        let (t2, d2, s2) = split_corpus(&corpus, (0.7, 0.15, 0.15), 5).unwrap();
        assert_eq!(t1.len() + d1.len() + s1.len(), corpus.len());
        let ids = |v: &[AnnotatedMessage]| -> Vec<String> {
            v.iter().map(|m| m.message.id.clone()).collect()
        };
        assert_eq!(ids(&t1), ids(&t2));
        assert_eq!(ids(&d1), ids(&d2));
        assert_eq!(ids(&s1), ids(&s2));
        // Disjointness.
        let mut all: Vec<String> = ids(&t1);
        all.extend(ids(&d1));
        all.extend(ids(&s1));
        let unique: std::collections::BTreeSet<_> = all.iter().cloned().collect();
        assert_eq!(unique.len(), all.len());
    }

    #[test]
    fn bad_ratios_rejected() {
        let corpus = vec![message("a", MessageFormat::Mt103, 1)];
        assert!(matches!(
            split_corpus(&corpus, (0.5, 0.1, 0.1), 0),
            Err(SplitError::BadRatios(..))
        ));
    }
}
