//! Paired bootstrap significance test over message-level resamples.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{match_counts, EntitySpan, EvalError};
use crate::corpus::AnnotatedMessage;

/// Paired bootstrap test of "system A beats system B" on micro-F1.
///
/// Messages are resampled with replacement `iterations` times; the returned
/// p-value is the fraction of resamples where F1(B) >= F1(A). Resampling is
/// deterministic given the seed and does not depend on the order of the two
/// prediction arguments, so swapping A and B complements the p-value on
/// tie-free inputs.
pub fn paired_bootstrap(
    gold: &[AnnotatedMessage],
    pred_a: &BTreeMap<String, Vec<EntitySpan>>,
    pred_b: &BTreeMap<String, Vec<EntitySpan>>,
    iterations: usize,
    seed: u64,
) -> Result<f64, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let counts_a = per_message_counts(gold, pred_a)?;
    let counts_b = per_message_counts(gold, pred_b)?;

    let n = gold.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b_wins_or_ties = 0usize;
    for _ in 0..iterations {
        let mut a = (0usize, 0usize, 0usize);
        let mut b = (0usize, 0usize, 0usize);
        for _ in 0..n {
            let idx = rng.gen_range(0..n);
            add(&mut a, counts_a[idx]);
            add(&mut b, counts_b[idx]);
        }
        if micro_f1(b) >= micro_f1(a) {
            b_wins_or_ties += 1;
        }
    }
    Ok(b_wins_or_ties as f64 / iterations.max(1) as f64)
}

fn per_message_counts(
    gold: &[AnnotatedMessage],
    pred: &BTreeMap<String, Vec<EntitySpan>>,
) -> Result<Vec<(usize, usize, usize)>, EvalError> {
    gold.iter()
        .map(|message| {
            let spans = pred.get(&message.message.id).ok_or_else(|| EvalError::IdMismatch {
                missing: vec![message.message.id.clone()],
                unexpected: Vec::new(),
            })?;
            Ok(match_counts(&message.gold_spans, spans))
        })
        .collect()
}

fn add(acc: &mut (usize, usize, usize), item: (usize, usize, usize)) {
    acc.0 += item.0;
    acc.1 += item.1;
    acc.2 += item.2;
}

fn micro_f1((tp, fp, fn_): (usize, usize, usize)) -> f64 {
    let den = 2 * tp + fp + fn_;
    if den == 0 {
        0.0
    } else {
        2.0 * tp as f64 / den as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{EntityType, Label};
    use crate::eval::extract_spans;

    fn small_corpus(n: usize) -> (Vec<AnnotatedMessage>, BTreeMap<String, Vec<EntitySpan>>) {
        let mut gold = Vec::new();
        let mut pred = BTreeMap::new();
        for i in 0..n {
            let id = format!("m{i}");
            let labels = vec![Label::B(EntityType::Amount), Label::O, Label::B(EntityType::Purpose)];
            let spans = extract_spans(&id, &labels);
            pred.insert(id.clone(), spans.clone());
            gold.push(AnnotatedMessage {
                message: crate::corpus::PaymentMessage {
                    id,
                    format: crate::corpus::MessageFormat::Other,
                    text: "a b c".into(),
                    language_tags: Default::default(),
                    flags: Default::default(),
                },
                tokens: crate::tokenize::TokenSequence {
                    message_id: "x".into(),
                    tokens: vec![],
                },
                labels,
                gold_spans: spans,
                inner_spans: Vec::new(),
            });
        }
        (gold, pred)
    }

    #[test]
    fn identical_systems_tie() {
        let (gold, pred) = small_corpus(20);
        let p = paired_bootstrap(&gold, &pred, &pred, 200, 7).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn single_iteration_is_zero_or_one() {
        let (gold, pred) = small_corpus(5);
        let mut worse = pred.clone();
        for spans in worse.values_mut() {
            spans.pop();
        }
        let p = paired_bootstrap(&gold, &pred, &worse, 1, 3).unwrap();
        assert!(p == 0.0 || p == 1.0);
    }

    #[test]
    fn swapping_systems_complements_p_on_tie_free_input() {
        let (gold, pred) = small_corpus(30);
        let mut worse = pred.clone();
        for spans in worse.values_mut() {
            spans.pop(); // every message strictly worse: no resample can tie
        }
        let p_ab = paired_bootstrap(&gold, &pred, &worse, 500, 11).unwrap();
        let p_ba = paired_bootstrap(&gold, &worse, &pred, 500, 11).unwrap();
        assert!((p_ab + p_ba - 1.0).abs() < 1e-12);
    }
}
