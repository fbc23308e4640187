//! Exact inference for the linear-chain CRF: sequence scoring, log-space
//! partition function, forward-backward marginals, and Viterbi decoding.
//!
//! All computations run in log-space double precision with per-position
//! max-shifting, so messages hundreds of tokens long do not underflow.

use thiserror::Error;

use super::{bio_transition_allowed, CrfModel, BOS_ROW};
use crate::corpus::{Label, LABEL_COUNT};

const L: usize = LABEL_COUNT;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InferenceError {
    #[error("empty sequence")]
    EmptySequence,
    #[error("feature/label length mismatch: {features} positions vs {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
}

/// Borrowed weight blocks; lets the trainer run inference on raw parameter
/// vectors without materializing a model.
#[derive(Clone, Copy)]
pub(crate) struct WeightsView<'a> {
    pub emissions: &'a [f64],
    pub transitions: &'a [f64],
}

impl<'a> WeightsView<'a> {
    #[inline]
    pub fn emission(&self, feature: u32, label: usize) -> f64 {
        self.emissions[feature as usize * L + label]
    }

    #[inline]
    pub fn transition(&self, prev: usize, label: usize) -> f64 {
        self.transitions[prev * L + label]
    }

    /// Splits a flat parameter vector into emission and transition blocks.
    pub fn split(params: &'a [f64], num_features: usize) -> Self {
        let boundary = num_features * L;
        WeightsView { emissions: &params[..boundary], transitions: &params[boundary..] }
    }
}

impl CrfModel {
    pub(crate) fn view(&self) -> WeightsView<'_> {
        WeightsView {
            emissions: self.emission_weights(),
            transitions: self.transition_weights(),
        }
    }
}

/// Per-position and adjacent-pair label marginals.
#[derive(Debug, Clone)]
pub struct Marginals {
    /// `unary[i][y] = P(y_i = y | X)`; each row sums to 1.
    pub unary: Vec<[f64; L]>,
    /// `pairwise[i - 1][p][y] = P(y_{i-1} = p, y_i = y | X)` for `i >= 1`.
    pub pairwise: Vec<[[f64; L]; L]>,
    pub log_partition: f64,
}

/// Unnormalized log-score of a labeling: emission weights of the active
/// features at each position under that position's label, plus transition
/// weights between adjacent labels (BOS row into the first position).
pub fn sequence_score(
    model: &CrfModel,
    features: &[Vec<u32>],
    labels: &[Label],
) -> Result<f64, InferenceError> {
    if features.len() != labels.len() {
        return Err(InferenceError::LengthMismatch {
            features: features.len(),
            labels: labels.len(),
        });
    }
    if features.is_empty() {
        return Err(InferenceError::EmptySequence);
    }
    let indices: Vec<usize> = labels.iter().map(Label::index).collect();
    Ok(score_on_view(model.view(), features, &indices))
}

pub(crate) fn score_on_view(view: WeightsView<'_>, features: &[Vec<u32>], labels: &[usize]) -> f64 {
    let mut score = 0.0;
    let mut prev_row = BOS_ROW;
    for (active, &y) in features.iter().zip(labels) {
        for &f in active {
            score += view.emission(f, y);
        }
        score += view.transition(prev_row, y);
        prev_row = y;
    }
    score
}

/// Emission score vectors for every position.
pub(crate) fn emission_matrix(view: WeightsView<'_>, features: &[Vec<u32>]) -> Vec<[f64; L]> {
    features
        .iter()
        .map(|active| {
            let mut scores = [0.0; L];
            for &f in active {
                let base = f as usize * L;
                let row = &view.emissions[base..base + L];
                for (s, w) in scores.iter_mut().zip(row) {
                    *s += w;
                }
            }
            scores
        })
        .collect()
}

pub(crate) fn log_sum_exp(values: &[f64; L]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Forward pass; returns the `n x L` alpha matrix of log prefix sums.
pub(crate) fn forward(view: WeightsView<'_>, emissions: &[[f64; L]]) -> Vec<[f64; L]> {
    let n = emissions.len();
    let mut alpha = vec![[0.0; L]; n];
    for y in 0..L {
        alpha[0][y] = view.transition(BOS_ROW, y) + emissions[0][y];
    }
    for i in 1..n {
        let prev = alpha[i - 1];
        let shift = prev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exp_prev: [f64; L] = std::array::from_fn(|p| (prev[p] - shift).exp());
        for y in 0..L {
            let mut sum = 0.0;
            for (p, ep) in exp_prev.iter().enumerate() {
                sum += ep * view.transition(p, y).exp();
            }
            alpha[i][y] = shift + sum.ln() + emissions[i][y];
        }
    }
    alpha
}

/// Backward pass; returns the `n x L` beta matrix of log suffix sums.
pub(crate) fn backward(view: WeightsView<'_>, emissions: &[[f64; L]]) -> Vec<[f64; L]> {
    let n = emissions.len();
    let mut beta = vec![[0.0; L]; n];
    for i in (0..n - 1).rev() {
        let mut next = [0.0; L];
        for y in 0..L {
            next[y] = emissions[i + 1][y] + beta[i + 1][y];
        }
        let shift = next.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exp_next: [f64; L] = std::array::from_fn(|y| (next[y] - shift).exp());
        for p in 0..L {
            let mut sum = 0.0;
            for (y, en) in exp_next.iter().enumerate() {
                sum += view.transition(p, y).exp() * en;
            }
            beta[i][p] = shift + sum.ln();
        }
    }
    beta
}

/// Log of the partition function `Z(X)`: the log-sum-exp over all `13^n`
/// labelings of their sequence scores, computed by the forward recursion.
pub fn log_partition(model: &CrfModel, features: &[Vec<u32>]) -> Result<f64, InferenceError> {
    if features.is_empty() {
        return Err(InferenceError::EmptySequence);
    }
    let view = model.view();
    let emissions = emission_matrix(view, features);
    let alpha = forward(view, &emissions);
    Ok(log_sum_exp(alpha.last().unwrap()))
}

/// Exact posterior marginals via forward-backward.
pub fn forward_backward(
    model: &CrfModel,
    features: &[Vec<u32>],
) -> Result<Marginals, InferenceError> {
    if features.is_empty() {
        return Err(InferenceError::EmptySequence);
    }
    let view = model.view();
    let n = features.len();
    let emissions = emission_matrix(view, features);
    let alpha = forward(view, &emissions);
    let beta = backward(view, &emissions);
    let log_z = log_sum_exp(alpha.last().unwrap());

    let mut unary = vec![[0.0; L]; n];
    for i in 0..n {
        for y in 0..L {
            unary[i][y] = (alpha[i][y] + beta[i][y] - log_z).exp();
        }
    }
    let mut pairwise = vec![[[0.0; L]; L]; n - 1];
    for i in 1..n {
        for p in 0..L {
            let base = alpha[i - 1][p];
            if base == f64::NEG_INFINITY {
                continue;
            }
            for y in 0..L {
                pairwise[i - 1][p][y] =
                    (base + view.transition(p, y) + emissions[i][y] + beta[i][y] - log_z).exp();
            }
        }
    }
    Ok(Marginals { unary, pairwise, log_partition: log_z })
}

/// Highest-scoring labeling via max-product dynamic programming.
///
/// With `enforce_bio`, transitions into `I-X` from anything other than
/// `B-X`/`I-X` (including from BOS) score minus infinity, so every decoded
/// sequence is a well-formed BIO labeling. Ties break toward the lower
/// label index, making decoding deterministic.
pub fn viterbi_decode(
    model: &CrfModel,
    features: &[Vec<u32>],
    enforce_bio: bool,
) -> Result<Vec<Label>, InferenceError> {
    if features.is_empty() {
        return Err(InferenceError::EmptySequence);
    }
    let path = viterbi_on_view(model.view(), features, enforce_bio);
    Ok(path.into_iter().map(|y| Label::from_index(y).unwrap()).collect())
}

pub(crate) fn viterbi_on_view(
    view: WeightsView<'_>,
    features: &[Vec<u32>],
    enforce_bio: bool,
) -> Vec<usize> {
    let n = features.len();
    let emissions = emission_matrix(view, features);
    let allowed = |prev: usize, y: usize| !enforce_bio || bio_transition_allowed(prev, y);

    let mut delta = vec![[f64::NEG_INFINITY; L]; n];
    let mut back = vec![[0usize; L]; n];
    for y in 0..L {
        if allowed(BOS_ROW, y) {
            delta[0][y] = view.transition(BOS_ROW, y) + emissions[0][y];
        }
    }
    for i in 1..n {
        for y in 0..L {
            let mut best = f64::NEG_INFINITY;
            let mut best_prev = 0;
            for p in 0..L {
                if !allowed(p, y) || delta[i - 1][p] == f64::NEG_INFINITY {
                    continue;
                }
                let candidate = delta[i - 1][p] + view.transition(p, y);
                if candidate > best {
                    best = candidate;
                    best_prev = p;
                }
            }
            if best > f64::NEG_INFINITY {
                delta[i][y] = best + emissions[i][y];
                back[i][y] = best_prev;
            }
        }
    }

    let mut best_last = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (y, &score) in delta[n - 1].iter().enumerate() {
        if score > best_score {
            best_score = score;
            best_last = y;
        }
    }
    let mut path = vec![best_last; n];
    for i in (1..n).rev() {
        path[i - 1] = back[i][path[i]];
    }
    path
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::EntityType;
    use crate::crf::{CrfModel, TrainConfig, TRANSITION_ROWS};
    use crate::features::FeatureIndex;

    fn model_with(emissions: Vec<f64>, transitions: Vec<f64>, num_features: usize) -> CrfModel {
        let strings: Vec<String> = (0..num_features).map(|i| format!("f{i:03}")).collect();
        let counts = vec![1; num_features];
        let index = FeatureIndex::from_strings(strings, counts, 1);
        CrfModel::new(index, emissions, transitions, TrainConfig::default())
    }

    fn zero_model(num_features: usize) -> CrfModel {
        model_with(
            vec![0.0; num_features * L],
            vec![0.0; TRANSITION_ROWS * L],
            num_features,
        )
    }

    #[test]
    fn zero_weights_score_zero() {
        let model = zero_model(2);
        let features = vec![vec![0u32], vec![1u32]];
        let labels = vec![Label::O, Label::B(EntityType::Amount)];
        assert_eq!(sequence_score(&model, &features, &labels).unwrap(), 0.0);
    }

    #[test]
    fn single_position_single_feature() {
        let mut emissions = vec![0.0; L];
        emissions[Label::O.index()] = 2.0;
        let model = model_with(emissions, vec![0.0; TRANSITION_ROWS * L], 1);
        let score = sequence_score(&model, &[vec![0]], &[Label::O]).unwrap();
        assert_eq!(score, 2.0);
    }

    #[test]
    fn length_mismatch_rejected() {
        let model = zero_model(1);
        let err = sequence_score(&model, &[vec![0]], &[]).unwrap_err();
        assert!(matches!(err, InferenceError::LengthMismatch { .. }));
    }

    #[test]
    fn uniform_partition_is_log_label_count_powers() {
        let model = zero_model(1);
        let z1 = log_partition(&model, &[vec![]]).unwrap();
        assert!((z1 - (13f64).ln()).abs() < 1e-12);
        let z2 = log_partition(&model, &[vec![], vec![]]).unwrap();
        assert!((z2 - (169f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn empty_sequence_rejected() {
        let model = zero_model(1);
        assert_eq!(log_partition(&model, &[]), Err(InferenceError::EmptySequence));
        assert!(viterbi_decode(&model, &[], true).is_err());
        assert!(forward_backward(&model, &[]).is_err());
    }

    #[test]
    fn zero_weights_give_uniform_marginals() {
        let model = zero_model(1);
        let marginals = forward_backward(&model, &[vec![0], vec![0], vec![0]]).unwrap();
        for row in &marginals.unary {
            for &p in row {
                assert!((p - 1.0 / 13.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_position_marginal_is_softmax_of_emissions() {
        let mut emissions = vec![0.0; L];
        for (y, e) in emissions.iter_mut().enumerate() {
            *e = y as f64 * 0.3;
        }
        let model = model_with(emissions.clone(), vec![0.0; TRANSITION_ROWS * L], 1);
        let marginals = forward_backward(&model, &[vec![0]]).unwrap();
        let max = emissions.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = emissions.iter().map(|e| (e - max).exp()).sum();
        for y in 0..L {
            let expected = (emissions[y] - max).exp() / z;
            assert!((marginals.unary[0][y] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn marginal_rows_sum_to_one() {
        // Small deterministic non-zero model.
        let num_features = 3;
        let emissions: Vec<f64> =
            (0..num_features * L).map(|i| ((i * 31 % 17) as f64 - 8.0) * 0.1).collect();
        let transitions: Vec<f64> =
            (0..TRANSITION_ROWS * L).map(|i| ((i * 13 % 11) as f64 - 5.0) * 0.1).collect();
        let model = model_with(emissions, transitions, num_features);
        let features = vec![vec![0u32, 2], vec![1], vec![0, 1, 2], vec![2]];
        let marginals = forward_backward(&model, &features).unwrap();
        for row in &marginals.unary {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
        // Pairwise marginals must be consistent with unary ones.
        for (i, pair) in marginals.pairwise.iter().enumerate() {
            for p in 0..L {
                let row_sum: f64 = pair[p].iter().sum();
                assert!((row_sum - marginals.unary[i][p]).abs() < 1e-9);
            }
            for y in 0..L {
                let col_sum: f64 = (0..L).map(|p| pair[p][y]).sum();
                assert!((col_sum - marginals.unary[i + 1][y]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_weights_decode_to_all_o_by_tie_break() {
        let model = zero_model(1);
        let labels = viterbi_decode(&model, &[vec![0], vec![0], vec![0]], false).unwrap();
        assert_eq!(labels, vec![Label::O; 3]);
    }

    #[test]
    fn bio_constraint_blocks_leading_inside() {
        // Strongly favor I-PERSON_NAME everywhere.
        let i_person = Label::I(EntityType::PersonName).index();
        let mut emissions = vec![0.0; L];
        emissions[i_person] = 100.0;
        let model = model_with(emissions, vec![0.0; TRANSITION_ROWS * L], 1);
        let unconstrained = viterbi_decode(&model, &[vec![0], vec![0]], false).unwrap();
        assert_eq!(unconstrained[0], Label::I(EntityType::PersonName));
        let constrained = viterbi_decode(&model, &[vec![0], vec![0]], true).unwrap();
        assert!(!constrained[0].is_inside());
        assert!(crate::corpus::is_valid_bio(&constrained));
    }
}
