//! Named-entity recognition for payment messages.
//!
//! This crate implements a feature-engineered linear-chain CRF pipeline for
//! extracting entities (names, organizations, account numbers, locations,
//! amounts, payment purposes) from payment messages in SWIFT MT103,
//! ISO 20022 pain.001, ACH, SEPA and free-text formats:
//!
//! - [`corpus`] — domain types, a seeded synthetic corpus generator and
//!   CoNLL-style annotation file I/O
//! - [`tokenize`] — payment-aware tokenization with char/token span alignment
//! - [`formats`] — MT103 and pain.001 field parsers, IBAN/BIC validators,
//!   pattern detectors and per-token format features
//! - [`features`] — CRF feature extraction and the pruned feature index
//! - [`crf`] — linear-chain CRF training (L-BFGS), exact log-space inference
//!   and constrained Viterbi decoding
//! - [`baseline`] — the rule-based tagger (patterns + gazetteers)
//! - [`eval`] — exact-match span evaluation, paired-bootstrap significance,
//!   error categorization and the cross-format experiment driver
//! - [`bench`] — latency/throughput measurement for taggers
//!
//! The `payment-ner` binary wires these into file-based experiment recipes
//! (`generate`, `train`, `tag`, `eval`, `crossformat`, `bench`).

pub mod baseline;
pub mod bench;
pub mod corpus;
pub mod crf;
pub mod eval;
pub mod features;
pub mod formats;
pub mod tagger;
pub mod tokenize;

pub use corpus::{AnnotatedMessage, EntityType, Label, MessageFormat, PaymentMessage};
pub use crf::{CrfModel, TrainConfig};
pub use eval::{EntitySpan, EvalReport};
pub use tagger::{CrfTagger, RuleTagger, Tagger};
