//! Linear-chain conditional random field: model representation, exact
//! log-space inference, maximum-likelihood training with L2 regularization
//! via limited-memory quasi-Newton optimization, and Viterbi decoding with
//! optional hard BIO constraints.
//!
//! A label sequence is scored as the sum of emission weights for the
//! features active at each position under that position's label, plus a
//! transition weight for each adjacent label pair (a distinguished BOS row
//! supplies the transition into the first position). The conditional
//! probability of a labeling is this score exponentiated and normalized by
//! the partition function over all possible labelings.

mod inference;
mod io;
mod lbfgs;
mod train;

pub use inference::{
    forward_backward, log_partition, sequence_score, viterbi_decode, InferenceError, Marginals,
};
pub use io::{load_model, save_model, ModelIoError, MODEL_FORMAT_VERSION};
pub use lbfgs::{LbfgsConfig, TerminationReason};
pub use train::{nll_and_gradient, prepare_messages, train, PreparedMessage, TrainError,
    TrainProgress};

use serde::{Deserialize, Serialize};

use crate::corpus::{Label, LABEL_COUNT};
use crate::features::FeatureIndex;

/// Number of transition rows: one per label plus the BOS row.
pub const TRANSITION_ROWS: usize = LABEL_COUNT + 1;

/// Index of the BOS transition row.
pub const BOS_ROW: usize = LABEL_COUNT;

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// L2 regularization coefficient added to the summed negative
    /// log-likelihood as `l2_lambda * ||w||^2`.
    pub l2_lambda: f64,
    pub max_iterations: usize,
    /// Minimum training-set occurrence count for a feature to be retained.
    pub prune_threshold: u32,
    /// Relative objective change below which optimization stops.
    pub convergence_tol: f64,
    /// History size of the limited-memory quasi-Newton update.
    pub lbfgs_history: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2_lambda: 0.1,
            max_iterations: 200,
            prune_threshold: 2,
            convergence_tol: 1e-6,
            lbfgs_history: 10,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.l2_lambda >= 0.0) {
            return Err(TrainError::InvalidConfig("l2_lambda must be >= 0".into()));
        }
        if self.max_iterations < 1 {
            return Err(TrainError::InvalidConfig("max_iterations must be >= 1".into()));
        }
        if self.lbfgs_history < 1 {
            return Err(TrainError::InvalidConfig("lbfgs_history must be >= 1".into()));
        }
        if !(self.convergence_tol >= 0.0) {
            return Err(TrainError::InvalidConfig("convergence_tol must be >= 0".into()));
        }
        Ok(())
    }
}

/// A trained linear-chain CRF. Immutable after training; safe to share
/// across any number of concurrent decoders.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    pub feature_index: FeatureIndex,
    /// The 13 labels in dense index order (`O` first, then B/I pairs in
    /// entity-type declaration order).
    pub labels: Vec<Label>,
    /// Emission weights, feature-major: `emissions[f * 13 + y]`.
    emissions: Vec<f64>,
    /// Transition weights, row-major `14 x 13`; row 13 is the BOS row.
    transitions: Vec<f64>,
    pub config: TrainConfig,
}

impl CrfModel {
    pub fn new(
        feature_index: FeatureIndex,
        emissions: Vec<f64>,
        transitions: Vec<f64>,
        config: TrainConfig,
    ) -> Self {
        assert_eq!(emissions.len(), feature_index.len() * LABEL_COUNT);
        assert_eq!(transitions.len(), TRANSITION_ROWS * LABEL_COUNT);
        CrfModel {
            feature_index,
            labels: Label::all().to_vec(),
            emissions,
            transitions,
            config,
        }
    }

    /// Zero-weight model over the given index (the training start point).
    pub fn zeroed(feature_index: FeatureIndex, config: TrainConfig) -> Self {
        let emissions = vec![0.0; feature_index.len() * LABEL_COUNT];
        let transitions = vec![0.0; TRANSITION_ROWS * LABEL_COUNT];
        Self::new(feature_index, emissions, transitions, config)
    }

    pub fn num_features(&self) -> usize {
        self.feature_index.len()
    }

    pub fn emission_weights(&self) -> &[f64] {
        &self.emissions
    }

    pub fn transition_weights(&self) -> &[f64] {
        &self.transitions
    }

    pub fn emission(&self, feature: u32, label: usize) -> f64 {
        self.emissions[feature as usize * LABEL_COUNT + label]
    }

    pub fn transition(&self, prev: usize, label: usize) -> f64 {
        self.transitions[prev * LABEL_COUNT + label]
    }

    pub fn all_weights_finite(&self) -> bool {
        self.emissions.iter().chain(self.transitions.iter()).all(|w| w.is_finite())
    }

    /// Splits a flat parameter vector (emissions then transitions) into the
    /// model's two weight blocks.
    pub(crate) fn from_params(index: FeatureIndex, params: &[f64], config: TrainConfig) -> Self {
        let split = index.len() * LABEL_COUNT;
        Self::new(index, params[..split].to_vec(), params[split..].to_vec(), config)
    }
}

/// Transition mask implementing the hard BIO constraints: `I-X` is only
/// reachable from `B-X` or `I-X` of the same type.
pub(crate) fn bio_transition_allowed(prev_row: usize, next: usize) -> bool {
    let next_label = Label::from_index(next).unwrap();
    match next_label {
        Label::I(ty) => {
            if prev_row == BOS_ROW {
                return false;
            }
            matches!(Label::from_index(prev_row), Some(Label::B(p) | Label::I(p)) if p == ty)
        }
        _ => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::EntityType;

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig { max_iterations: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = TrainConfig { l2_lambda: -1.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn bio_mask() {
        let b_person = Label::B(EntityType::PersonName).index();
        let i_person = Label::I(EntityType::PersonName).index();
        let i_amount = Label::I(EntityType::Amount).index();
        let o = Label::O.index();
        assert!(bio_transition_allowed(b_person, i_person));
        assert!(bio_transition_allowed(i_person, i_person));
        assert!(!bio_transition_allowed(o, i_person));
        assert!(!bio_transition_allowed(b_person, i_amount));
        assert!(!bio_transition_allowed(BOS_ROW, i_person));
        assert!(bio_transition_allowed(BOS_ROW, b_person));
        assert!(bio_transition_allowed(BOS_ROW, o));
    }
}
