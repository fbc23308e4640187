//! Maximum-likelihood CRF training: the regularized negative log-likelihood
//! objective with its exact gradient, and the L-BFGS training driver.

use rayon::prelude::*;
use thiserror::Error;

use super::inference::{
    backward, emission_matrix, forward, log_sum_exp, score_on_view, viterbi_on_view, WeightsView,
};
use super::lbfgs::{minimize, LbfgsConfig, Objective};
use super::{CrfModel, TrainConfig, BOS_ROW, TRANSITION_ROWS};
use crate::corpus::{AnnotatedMessage, LABEL_COUNT};
use crate::eval::extract_spans;
use crate::features::{build_feature_index, extract_features_into, FeatureIndex,
    FeatureIndexError, Gazetteers};
use crate::formats;

const L: usize = LABEL_COUNT;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("training corpus is empty")]
    EmptyTrainingSet,
    #[error("feature index is empty after pruning; lower the prune threshold")]
    EmptyFeatureIndex,
    #[error("message {id}: {reason}")]
    InvalidMessage { id: String, reason: String },
    #[error("non-finite objective contribution from message {id}")]
    NonFinite { id: String },
    #[error(transparent)]
    FeatureIndex(#[from] FeatureIndexError),
}

/// A message featurized against a fixed index: per-position active feature
/// ids plus gold label indices.
#[derive(Debug, Clone)]
pub struct PreparedMessage {
    pub id: String,
    pub features: Vec<Vec<u32>>,
    pub gold: Vec<usize>,
}

/// Featurizes messages against an index. Features unknown to the index are
/// silently dropped; message invariants are checked up front.
pub fn prepare_messages(
    index: &FeatureIndex,
    gazetteers: &Gazetteers,
    corpus: &[AnnotatedMessage],
) -> Result<Vec<PreparedMessage>, TrainError> {
    corpus
        .iter()
        .map(|message| {
            message.check_invariants().map_err(|reason| TrainError::InvalidMessage {
                id: message.message.id.clone(),
                reason,
            })?;
            Ok(prepare_one(index, gazetteers, message))
        })
        .collect()
}

pub(crate) fn prepare_one(
    index: &FeatureIndex,
    gazetteers: &Gazetteers,
    message: &AnnotatedMessage,
) -> PreparedMessage {
    let structure = formats::parse(message.message.format, &message.message.text);
    let n = message.tokens.tokens.len();
    let mut features = Vec::with_capacity(n);
    for i in 0..n {
        let mut active = Vec::with_capacity(24);
        let mut emit = |s: &str| {
            if let Some(id) = index.id_of(s) {
                active.push(id);
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
        features.push(active);
    }
    PreparedMessage {
        id: message.message.id.clone(),
        features,
        gold: message.labels.iter().map(|l| l.index()).collect(),
    }
}

/// One message's NLL contribution and gradient accumulation
/// (expected minus empirical feature counts).
fn message_nll_grad(view: WeightsView<'_>, msg: &PreparedMessage, grad: &mut [f64]) -> f64 {
    let n = msg.features.len();
    let emissions = emission_matrix(view, &msg.features);
    let alpha = forward(view, &emissions);
    let beta = backward(view, &emissions);
    let log_z = log_sum_exp(alpha.last().unwrap());
    let gold_score = score_on_view(view, &msg.features, &msg.gold);

    let em_offset = 0;
    let tr_offset = view.emissions.len();

    // Per-position unary marginals drive the emission gradient.
    for i in 0..n {
        let mut unary = [0.0; L];
        for y in 0..L {
            unary[y] = (alpha[i][y] + beta[i][y] - log_z).exp();
        }
        for &f in &msg.features[i] {
            let base = em_offset + f as usize * L;
            for y in 0..L {
                grad[base + y] += unary[y];
            }
            grad[base + msg.gold[i]] -= 1.0;
        }
        if i == 0 {
            // BOS transitions use the first position's unary marginal.
            let base = tr_offset + BOS_ROW * L;
            for y in 0..L {
                grad[base + y] += unary[y];
            }
            grad[base + msg.gold[0]] -= 1.0;
        }
    }
    // Adjacent-pair marginals drive the transition gradient.
    for i in 1..n {
        for p in 0..L {
            let a = alpha[i - 1][p];
            if a == f64::NEG_INFINITY {
                continue;
            }
            let base = tr_offset + p * L;
            for y in 0..L {
                grad[base + y] +=
                    (a + view.transition(p, y) + emissions[i][y] + beta[i][y] - log_z).exp();
            }
        }
        grad[tr_offset + msg.gold[i - 1] * L + msg.gold[i]] -= 1.0;
    }
    log_z - gold_score
}

fn message_nll(view: WeightsView<'_>, msg: &PreparedMessage) -> f64 {
    let emissions = emission_matrix(view, &msg.features);
    let alpha = forward(view, &emissions);
    let log_z = log_sum_exp(alpha.last().unwrap());
    log_z - score_on_view(view, &msg.features, &msg.gold)
}

/// Fixed chunking by message index keeps the parallel reduction order
/// independent of the worker count, so gradients are bit-reproducible.
fn chunk_size(n: usize) -> usize {
    n.div_ceil(16).max(1)
}

/// Regularized objective over a batch:
/// `sum_i [log Z(x_i) - score(x_i, y_i)] + lambda * ||w||^2`.
pub(crate) fn batch_objective(
    params: &[f64],
    num_features: usize,
    batch: &[PreparedMessage],
    l2_lambda: f64,
) -> Result<f64, TrainError> {
    let view = WeightsView::split(params, num_features);
    let chunks: Vec<Result<f64, TrainError>> = batch
        .par_chunks(chunk_size(batch.len()))
        .map(|chunk| {
            let mut obj = 0.0;
            for msg in chunk {
                let value = message_nll(view, msg);
                if !value.is_finite() {
                    return Err(TrainError::NonFinite { id: msg.id.clone() });
                }
                obj += value;
            }
            Ok(obj)
        })
        .collect();
    let mut objective = 0.0;
    for chunk in chunks {
        objective += chunk?;
    }
    objective += l2_lambda * params.iter().map(|w| w * w).sum::<f64>();
    Ok(objective)
}

/// Objective plus its exact gradient: expected feature counts under the
/// model marginals minus empirical gold counts, plus `2 * lambda * w`.
pub(crate) fn batch_objective_grad(
    params: &[f64],
    num_features: usize,
    batch: &[PreparedMessage],
    l2_lambda: f64,
) -> Result<(f64, Vec<f64>), TrainError> {
    let view = WeightsView::split(params, num_features);
    let dim = params.len();
    let chunks: Vec<Result<(f64, Vec<f64>), TrainError>> = batch
        .par_chunks(chunk_size(batch.len()))
        .map(|chunk| {
            let mut grad = vec![0.0; dim];
            let mut obj = 0.0;
            for msg in chunk {
                let value = message_nll_grad(view, msg, &mut grad);
                if !value.is_finite() {
                    return Err(TrainError::NonFinite { id: msg.id.clone() });
                }
                obj += value;
            }
            Ok((obj, grad))
        })
        .collect();

    let mut objective = 0.0;
    let mut gradient = vec![0.0; dim];
    for chunk in chunks {
        let (obj, grad) = chunk?;
        objective += obj;
        for (g, c) in gradient.iter_mut().zip(&grad) {
            *g += c;
        }
    }
    objective += l2_lambda * params.iter().map(|w| w * w).sum::<f64>();
    for (g, w) in gradient.iter_mut().zip(params) {
        *g += 2.0 * l2_lambda * w;
    }
    Ok((objective, gradient))
}

/// Public entry point for the regularized NLL and its gradient over a batch
/// of annotated messages, evaluated at the model's current weights. The
/// gradient is laid out as emissions (feature-major) then transitions
/// (row-major with the BOS row last).
pub fn nll_and_gradient(
    model: &CrfModel,
    gazetteers: &Gazetteers,
    batch: &[AnnotatedMessage],
) -> Result<(f64, Vec<f64>), TrainError> {
    if batch.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    let prepared = prepare_messages(&model.feature_index, gazetteers, batch)?;
    let mut params = Vec::with_capacity(model.emission_weights().len() + model.transition_weights().len());
    params.extend_from_slice(model.emission_weights());
    params.extend_from_slice(model.transition_weights());
    batch_objective_grad(&params, model.num_features(), &prepared, model.config.l2_lambda)
}

/// Per-iteration training diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct TrainProgress {
    pub iteration: usize,
    pub objective: f64,
    pub gradient_norm: f64,
    pub step_size: f64,
    pub line_search_evals: usize,
    /// Micro-F1 on the dev split under the current weights, when a dev
    /// split was provided.
    pub dev_micro_f1: Option<f64>,
}

struct CrfObjective<'a> {
    batch: &'a [PreparedMessage],
    num_features: usize,
    l2_lambda: f64,
    error: Option<TrainError>,
}

impl Objective for CrfObjective<'_> {
    fn value(&mut self, x: &[f64]) -> f64 {
        match batch_objective(x, self.num_features, self.batch, self.l2_lambda) {
            Ok(v) => v,
            Err(e) => {
                self.error.get_or_insert(e);
                f64::INFINITY
            }
        }
    }

    fn value_grad(&mut self, x: &[f64]) -> (f64, Vec<f64>) {
        match batch_objective_grad(x, self.num_features, self.batch, self.l2_lambda) {
            Ok(v) => v,
            Err(e) => {
                self.error.get_or_insert(e);
                (f64::INFINITY, vec![0.0; x.len()])
            }
        }
    }
}

fn dev_micro_f1(params: &[f64], num_features: usize, dev: &[(PreparedMessage, &AnnotatedMessage)]) -> f64 {
    let view = WeightsView::split(params, num_features);
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (prepared, message) in dev {
        let path = viterbi_on_view(view, &prepared.features, true);
        let labels: Vec<_> = path
            .into_iter()
            .map(|y| crate::corpus::Label::from_index(y).unwrap())
            .collect();
        let spans = extract_spans(&message.message.id, &labels);
        let (m_tp, m_fp, m_fn) = crate::eval::match_counts(&message.gold_spans, &spans);
        tp += m_tp;
        fp += m_fp;
        fn_ += m_fn;
    }
    let den = 2 * tp + fp + fn_;
    if den == 0 {
        0.0
    } else {
        2.0 * tp as f64 / den as f64
    }
}

/// Trains a CRF by minimizing the summed NLL with L2 regularization via
/// limited-memory quasi-Newton iteration. Weights start at zero (the
/// objective is convex, so initialization only affects iteration count);
/// optimization stops at `max_iterations` or when the relative objective
/// change drops below `convergence_tol`. Per-iteration diagnostics go to
/// the optional progress callback.
pub fn train(
    train_corpus: &[AnnotatedMessage],
    dev_corpus: &[AnnotatedMessage],
    gazetteers: &Gazetteers,
    config: &TrainConfig,
    mut progress: Option<&mut dyn FnMut(&TrainProgress)>,
) -> Result<CrfModel, TrainError> {
    config.validate()?;
    if train_corpus.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    let index = build_feature_index(train_corpus, gazetteers, config.prune_threshold)?;
    if index.is_empty() {
        return Err(TrainError::EmptyFeatureIndex);
    }
    let prepared = prepare_messages(&index, gazetteers, train_corpus)?;
    let dev_prepared: Vec<(PreparedMessage, &AnnotatedMessage)> = prepare_messages(&index, gazetteers, dev_corpus)?
        .into_iter()
        .zip(dev_corpus)
        .collect();

    let num_features = index.len();
    let dim = num_features * L + TRANSITION_ROWS * L;
    let mut objective = CrfObjective {
        batch: &prepared,
        num_features,
        l2_lambda: config.l2_lambda,
        error: None,
    };
    let lbfgs_config = LbfgsConfig {
        history: config.lbfgs_history,
        max_iterations: config.max_iterations,
        tolerance: config.convergence_tol,
        ..Default::default()
    };

    let result = minimize(&mut objective, vec![0.0; dim], &lbfgs_config, |info, params| {
        let dev_f1 = if dev_prepared.is_empty() {
            None
        } else {
            Some(dev_micro_f1(params, num_features, &dev_prepared))
        };
        let report = TrainProgress {
            iteration: info.iteration,
            objective: info.objective,
            gradient_norm: info.gradient_norm,
            step_size: info.step_size,
            line_search_evals: info.evaluations,
            dev_micro_f1: dev_f1,
        };
        if let Some(callback) = progress.as_deref_mut() {
            callback(&report);
        } else {
            log::debug!(
                "iter {} objective {:.6} grad_norm {:.6} dev_f1 {:?}",
                report.iteration,
                report.objective,
                report.gradient_norm,
                report.dev_micro_f1
            );
        }
    });
    if let Some(error) = objective.error {
        return Err(error);
    }
    log::debug!(
        "training stopped after {} iterations ({:?}), objective {:.6}",
        result.iterations,
        result.reason,
        result.objective
    );

    let model = CrfModel::from_params(index, &result.x, config.clone());
    debug_assert!(model.all_weights_finite());
    Ok(model)
}
