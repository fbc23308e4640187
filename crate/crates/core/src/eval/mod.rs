//! Exact-match span evaluation: precision/recall/F1 per entity type and
//! micro-averaged, automatic error categorization, paired-bootstrap
//! significance testing and the cross-format experiment driver.

mod bootstrap;
mod crossformat;

pub use bootstrap::paired_bootstrap;
pub use crossformat::{cross_format_eval, CrossFormatMatrix, CrossFormatPlanEntry};

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AnnotatedMessage, EntityType, Label, MessageFlags};

/// A typed, token-indexed entity span; the unit of exact-match evaluation.
/// `token_start..=token_end` are inclusive token indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntitySpan {
    pub entity_type: EntityType,
    pub token_start: usize,
    pub token_end: usize,
    pub message_id: String,
}

impl EntitySpan {
    pub fn new(message_id: &str, entity_type: EntityType, start: usize, end: usize) -> Self {
        EntitySpan { entity_type, token_start: start, token_end: end, message_id: message_id.into() }
    }

    fn key(&self) -> (EntityType, usize, usize) {
        (self.entity_type, self.token_start, self.token_end)
    }

    fn overlaps(&self, other: &EntitySpan) -> bool {
        self.token_start <= other.token_end && other.token_start <= self.token_end
    }
}

/// Extracts entity spans from a BIO label sequence.
///
/// A span opens at each `B-X`, extends through following `I-X`, and closes
/// at anything else. Orphan `I-X` (no preceding `B-X`/`I-X` of the same
/// type) is repaired CoNLL-style into a fresh `B-X`.
pub fn extract_spans(message_id: &str, labels: &[Label]) -> Vec<EntitySpan> {
    extract_spans_counting(message_id, labels).0
}

/// Like [`extract_spans`], also reporting how many orphan `I-` labels were
/// repaired into span starts.
pub fn extract_spans_counting(message_id: &str, labels: &[Label]) -> (Vec<EntitySpan>, usize) {
    let mut spans = Vec::new();
    let mut repairs = 0;
    let mut open: Option<(EntityType, usize)> = None;
    for (i, &label) in labels.iter().enumerate() {
        match label {
            Label::B(ty) => {
                if let Some((t, start)) = open.take() {
                    spans.push(EntitySpan::new(message_id, t, start, i - 1));
                }
                open = Some((ty, i));
            }
            Label::I(ty) => match open {
                Some((t, _)) if t == ty => {}
                _ => {
                    // Orphan continuation: treat as a begin.
                    if let Some((t, start)) = open.take() {
                        spans.push(EntitySpan::new(message_id, t, start, i - 1));
                    }
                    open = Some((ty, i));
                    repairs += 1;
                }
            },
            Label::O => {
                if let Some((t, start)) = open.take() {
                    spans.push(EntitySpan::new(message_id, t, start, i - 1));
                }
            }
        }
    }
    if let Some((t, start)) = open {
        spans.push(EntitySpan::new(message_id, t, start, labels.len() - 1));
    }
    (spans, repairs)
}

/// Encodes spans back into a BIO label sequence of the given length.
/// Spans must be within bounds and non-overlapping.
pub fn spans_to_labels(spans: &[EntitySpan], len: usize) -> Vec<Label> {
    let mut labels = vec![Label::O; len];
    for span in spans {
        labels[span.token_start] = Label::B(span.entity_type);
        for slot in labels.iter_mut().take(span.token_end + 1).skip(span.token_start + 1) {
            *slot = Label::I(span.entity_type);
        }
    }
    labels
}

/// Precision / recall / F1 triple with its supporting counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Scores {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Scores { tp, fp, fn_, precision, recall, f1 }
    }
}

/// `0/0` is defined as 0 (conservative NER-scorer convention).
fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Counts of automatically categorized prediction errors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBreakdown {
    /// Same type, overlapping tokens, different boundaries.
    pub boundary: usize,
    /// Overlapping tokens, different type (same or different boundaries).
    pub type_confusion: usize,
    /// Prediction overlapping no gold span.
    pub spurious: usize,
    /// Gold span with no overlapping prediction.
    pub missing: usize,
}

impl ErrorBreakdown {
    fn add(&mut self, other: &ErrorBreakdown) {
        self.boundary += other.boundary;
        self.type_confusion += other.type_confusion;
        self.spurious += other.spurious;
        self.missing += other.missing;
    }
}

/// Full evaluation report: micro and per-type scores, error breakdown, and
/// per-flag corpus slices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub micro: Scores,
    pub per_type: BTreeMap<String, Scores>,
    pub errors: ErrorBreakdown,
    /// Micro scores over messages carrying each difficulty flag.
    pub slices: BTreeMap<String, Scores>,
    pub message_count: usize,
    /// Orphan `I-` repairs performed while reading predictions, if any.
    pub repairs: usize,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("prediction ids do not cover gold ids: missing {missing:?}, unexpected {unexpected:?}")]
    IdMismatch { missing: Vec<String>, unexpected: Vec<String> },
    #[error("empty corpus")]
    EmptyCorpus,
}

/// Evaluates predictions against gold annotations with exact span matching:
/// a predicted span counts as a true positive only when its type and both
/// boundaries equal a gold span.
pub fn evaluate(
    gold: &[AnnotatedMessage],
    pred: &BTreeMap<String, Vec<EntitySpan>>,
) -> Result<EvalReport, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    check_id_cover(gold, pred)?;

    let mut per_type_counts: BTreeMap<EntityType, (usize, usize, usize)> = BTreeMap::new();
    let mut errors = ErrorBreakdown::default();
    let mut slice_counts: BTreeMap<&'static str, (usize, usize, usize)> = BTreeMap::new();

    for message in gold {
        let gold_spans = &message.gold_spans;
        let pred_spans = &pred[&message.message.id];
        let (tp, fp, fn_) = match_counts(gold_spans, pred_spans);
        for slice in flag_slices(&message.message.flags) {
            let entry = slice_counts.entry(slice).or_default();
            entry.0 += tp;
            entry.1 += fp;
            entry.2 += fn_;
        }
        let gold_keys: HashSet<_> = gold_spans.iter().map(|s| s.key()).collect();
        let pred_keys: HashSet<_> = pred_spans.iter().map(|s| s.key()).collect();
        for span in gold_spans {
            let entry = per_type_counts.entry(span.entity_type).or_default();
            if pred_keys.contains(&span.key()) {
                entry.0 += 1; // TP counted on the gold side
            } else {
                entry.2 += 1; // FN
            }
        }
        for span in pred_spans {
            if !gold_keys.contains(&span.key()) {
                per_type_counts.entry(span.entity_type).or_default().1 += 1; // FP
            }
        }
        errors.add(&categorize_errors(gold_spans, pred_spans));
    }

    let mut micro_tp = 0;
    let mut micro_fp = 0;
    let mut micro_fn = 0;
    let mut per_type = BTreeMap::new();
    for (ty, (tp, fp, fn_)) in &per_type_counts {
        micro_tp += tp;
        micro_fp += fp;
        micro_fn += fn_;
        per_type.insert(ty.as_str().to_string(), Scores::from_counts(*tp, *fp, *fn_));
    }
    let slices = slice_counts
        .into_iter()
        .map(|(name, (tp, fp, fn_))| (name.to_string(), Scores::from_counts(tp, fp, fn_)))
        .collect();

    Ok(EvalReport {
        micro: Scores::from_counts(micro_tp, micro_fp, micro_fn),
        per_type,
        errors,
        slices,
        message_count: gold.len(),
        repairs: 0,
    })
}

fn flag_slices(flags: &MessageFlags) -> Vec<&'static str> {
    let mut out = Vec::new();
    if flags.multilingual {
        out.push("multilingual");
    }
    if flags.nonstandard {
        out.push("nonstandard");
    }
    if flags.has_nested {
        out.push("nested");
    }
    out
}

fn check_id_cover(
    gold: &[AnnotatedMessage],
    pred: &BTreeMap<String, Vec<EntitySpan>>,
) -> Result<(), EvalError> {
    let gold_ids: BTreeSet<_> = gold.iter().map(|m| m.message.id.clone()).collect();
    let pred_ids: BTreeSet<_> = pred.keys().cloned().collect();
    if gold_ids == pred_ids {
        return Ok(());
    }
    Err(EvalError::IdMismatch {
        missing: gold_ids.difference(&pred_ids).cloned().collect(),
        unexpected: pred_ids.difference(&gold_ids).cloned().collect(),
    })
}

/// (TP, FP, FN) exact-match counts for one message.
pub(crate) fn match_counts(gold: &[EntitySpan], pred: &[EntitySpan]) -> (usize, usize, usize) {
    let gold_keys: HashSet<_> = gold.iter().map(|s| s.key()).collect();
    let tp = pred.iter().filter(|s| gold_keys.contains(&s.key())).count();
    (tp, pred.len() - tp, gold.len() - tp)
}

/// Categorizes every non-TP prediction and every unmatched gold span.
///
/// A wrong prediction that overlaps gold of the same type is a boundary
/// error; any overlap with a differently-typed gold span is type confusion;
/// no overlap at all is spurious. Gold spans missed entirely (no
/// overlapping prediction) are missing.
pub fn categorize_errors(gold: &[EntitySpan], pred: &[EntitySpan]) -> ErrorBreakdown {
    let gold_keys: HashSet<_> = gold.iter().map(|s| s.key()).collect();
    let mut breakdown = ErrorBreakdown::default();
    for p in pred {
        if gold_keys.contains(&p.key()) {
            continue;
        }
        let overlapping: Vec<_> = gold.iter().filter(|g| g.overlaps(p)).collect();
        if overlapping.is_empty() {
            breakdown.spurious += 1;
        } else if overlapping.iter().any(|g| g.entity_type == p.entity_type) {
            breakdown.boundary += 1;
        } else {
            breakdown.type_confusion += 1;
        }
    }
    for g in gold {
        let matched = pred.iter().any(|p| p.key() == g.key());
        if !matched && !pred.iter().any(|p| p.overlaps(g)) {
            breakdown.missing += 1;
        }
    }
    breakdown
}
