//! Shared test oracles, kept independent of the library's inference path:
//! exhaustive enumeration over all labelings (direct score summation, no
//! dynamic programming) and central finite differences for gradients.

#![allow(dead_code)]

use payment_ner::corpus::{Label, LABEL_COUNT};
use payment_ner::crf::{CrfModel, TrainConfig, TRANSITION_ROWS};
use payment_ner::features::FeatureIndex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const L: usize = LABEL_COUNT;

/// Exhaustive-enumeration results over all `13^n` labelings.
pub struct EnumerationOracle {
    pub log_partition: f64,
    pub unary: Vec<Vec<f64>>,
    pub pairwise: Vec<Vec<Vec<f64>>>,
    pub best_labeling: Vec<usize>,
    pub best_score: f64,
}

/// Direct score of one labeling: sum emissions + transitions, BOS row for
/// the first position. Mirrors the model's definition but not its code
/// path (no matrices, no log-sum-exp).
pub fn direct_score(model: &CrfModel, features: &[Vec<u32>], labeling: &[usize]) -> f64 {
    let mut score = 0.0;
    let mut prev = TRANSITION_ROWS - 1; // BOS row
    for (active, &y) in features.iter().zip(labeling) {
        for &f in active {
            score += model.emission(f, y);
        }
        score += model.transition(prev, y);
        prev = y;
    }
    score
}

fn bio_ok(labeling: &[usize]) -> bool {
    let mut prev: Option<Label> = None;
    for &y in labeling {
        let label = Label::from_index(y).unwrap();
        if let Label::I(ty) = label {
            match prev {
                Some(Label::B(p) | Label::I(p)) if p == ty => {}
                _ => return false,
            }
        }
        prev = Some(label);
    }
    true
}

/// Enumerates every labeling (optionally only BIO-valid ones), computing
/// the exact partition function, marginals and argmax.
pub fn enumerate(model: &CrfModel, features: &[Vec<u32>], constrain_bio: bool) -> EnumerationOracle {
    let n = features.len();
    let total = L.pow(n as u32);
    let mut scores = Vec::with_capacity(total);
    let mut labelings = Vec::with_capacity(total);
    let mut labeling = vec![0usize; n];
    for code in 0..total {
        let mut rest = code;
        for slot in labeling.iter_mut() {
            *slot = rest % L;
            rest /= L;
        }
        if constrain_bio && !bio_ok(&labeling) {
            continue;
        }
        scores.push(direct_score(model, features, &labeling));
        labelings.push(labeling.clone());
    }

    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    let mut unary = vec![vec![0.0; L]; n];
    let mut pairwise = vec![vec![vec![0.0; L]; L]; n.saturating_sub(1)];
    let mut best_score = f64::NEG_INFINITY;
    let mut best_labeling = labelings[0].clone();
    for (score, labeling) in scores.iter().zip(&labelings) {
        let weight = (score - max).exp();
        z += weight;
        for (i, &y) in labeling.iter().enumerate() {
            unary[i][y] += weight;
            if i > 0 {
                pairwise[i - 1][labeling[i - 1]][y] += weight;
            }
        }
        if *score > best_score {
            best_score = *score;
            best_labeling = labeling.clone();
        }
    }
    for row in unary.iter_mut() {
        for value in row.iter_mut() {
            *value /= z;
        }
    }
    for matrix in pairwise.iter_mut() {
        for row in matrix.iter_mut() {
            for value in row.iter_mut() {
                *value /= z;
            }
        }
    }
    EnumerationOracle {
        log_partition: max + z.ln(),
        unary,
        pairwise,
        best_labeling,
        best_score,
    }
}

/// A random small model plus random per-position feature activations.
pub fn random_model(
    rng: &mut ChaCha8Rng,
    num_features: usize,
    positions: usize,
) -> (CrfModel, Vec<Vec<u32>>) {
    let strings: Vec<String> = (0..num_features).map(|i| format!("f{i:03}")).collect();
    let counts = vec![1; num_features];
    let index = FeatureIndex::from_strings(strings, counts, 1);
    let emissions: Vec<f64> = (0..num_features * L).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let transitions: Vec<f64> =
        (0..TRANSITION_ROWS * L).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let model = CrfModel::new(index, emissions, transitions, TrainConfig::default());
    let features: Vec<Vec<u32>> = (0..positions)
        .map(|_| {
            let k = rng.gen_range(1..=3.min(num_features));
            let mut active: Vec<u32> = (0..num_features as u32).collect();
            for i in (1..active.len()).rev() {
                let j = rng.gen_range(0..=i);
                active.swap(i, j);
            }
            active.truncate(k);
            active.sort_unstable();
            active
        })
        .collect();
    (model, features)
}

/// Relative error with a unit floor in the denominator.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Relative error suitable for probabilities (no unit floor).
pub fn rel_err_prob(a: f64, b: f64) -> f64 {
    let denom = a.abs().max(b.abs());
    if denom == 0.0 {
        0.0
    } else {
        (a - b).abs() / denom
    }
}
