//! Cross-format generalization experiments: train on one set of message
//! formats, evaluate on another, and tabulate micro-F1 per plan entry.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::evaluate;
use crate::corpus::{split_corpus, AnnotatedMessage, MessageFormat};
use crate::crf::{train, TrainConfig, TrainError};
use crate::features::Gazetteers;
use crate::tagger::{CrfTagger, Tagger};

/// One experiment: train on messages of `train_formats`, test on held-out
/// messages of `test_format`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossFormatPlanEntry {
    pub train_formats: Vec<MessageFormat>,
    pub test_format: MessageFormat,
}

/// Result cell for one plan entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossFormatCell {
    pub train_formats: Vec<MessageFormat>,
    pub test_format: MessageFormat,
    pub micro_f1: f64,
    pub train_messages: usize,
    pub test_messages: usize,
}

/// Micro-F1 per (train format set, test format) pair, in plan order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossFormatMatrix {
    pub cells: Vec<CrossFormatCell>,
}

impl CrossFormatMatrix {
    pub fn get(&self, train_formats: &[MessageFormat], test_format: MessageFormat) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.train_formats == train_formats && c.test_format == test_format)
            .map(|c| c.micro_f1)
    }
}

#[derive(Debug, Error)]
pub enum CrossFormatError {
    #[error("plan entry {index}: empty {what} subset")]
    EmptySubset { index: usize, what: &'static str },
    #[error("corpus split failed: {0}")]
    Split(#[from] crate::corpus::SplitError),
    #[error("training failed for plan entry {index}: {source}")]
    Train { index: usize, source: TrainError },
    #[error("evaluation failed: {0}")]
    Eval(#[from] super::EvalError),
}

/// Runs every plan entry with the same seed, split and training config.
///
/// The corpus is split 70/15/15 stratified by format once up front; each
/// entry trains a fresh CRF on the train-split messages of its train
/// formats and evaluates micro-F1 on the test-split messages of its test
/// format. Entries run concurrently; results keep plan order.
pub fn cross_format_eval(
    corpus: &[AnnotatedMessage],
    plan: &[CrossFormatPlanEntry],
    gazetteers: &Gazetteers,
    config: &TrainConfig,
) -> Result<CrossFormatMatrix, CrossFormatError> {
    let (train_split, dev_split, test_split) =
        split_corpus(corpus, (0.70, 0.15, 0.15), config.seed)?;

    let cells: Result<Vec<CrossFormatCell>, CrossFormatError> = plan
        .par_iter()
        .enumerate()
        .map(|(index, entry)| {
            let train_set: Vec<AnnotatedMessage> = train_split
                .iter()
                .filter(|m| entry.train_formats.contains(&m.message.format))
                .cloned()
                .collect();
            let dev_set: Vec<AnnotatedMessage> = dev_split
                .iter()
                .filter(|m| entry.train_formats.contains(&m.message.format))
                .cloned()
                .collect();
            let test_set: Vec<AnnotatedMessage> = test_split
                .iter()
                .filter(|m| m.message.format == entry.test_format)
                .cloned()
                .collect();
            if train_set.is_empty() {
                return Err(CrossFormatError::EmptySubset { index, what: "train" });
            }
            if test_set.is_empty() {
                return Err(CrossFormatError::EmptySubset { index, what: "test" });
            }
            let model = train(&train_set, &dev_set, gazetteers, config, None)
                .map_err(|source| CrossFormatError::Train { index, source })?;
            let tagger = CrfTagger::new(model, gazetteers.clone());
            let pred: BTreeMap<_, _> = test_set
                .iter()
                .map(|m| (m.message.id.clone(), tagger.tag_message(&m.message).unwrap_or_default()))
                .collect();
            let report = evaluate(&test_set, &pred)?;
            Ok(CrossFormatCell {
                train_formats: entry.train_formats.clone(),
                test_format: entry.test_format,
                micro_f1: report.micro.f1,
                train_messages: train_set.len(),
                test_messages: test_set.len(),
            })
        })
        .collect();

    Ok(CrossFormatMatrix { cells: cells? })
}
