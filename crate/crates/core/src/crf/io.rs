//! Model persistence: versioned canonical JSON with a CRC32 integrity
//! check. Canonical means keys sorted and floats in shortest round-trip
//! form, so save -> load -> save is byte-identical.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{CrfModel, TrainConfig, TRANSITION_ROWS};
use crate::corpus::{Label, LABEL_COUNT};
use crate::features::FeatureIndex;

pub const MODEL_FORMAT_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupted model file: {0}")]
    Corrupted(String),
    #[error("model checksum mismatch: stored {stored}, computed {computed}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("unsupported model format version {found} (expected {MODEL_FORMAT_VERSION})")]
    VersionMismatch { found: u64 },
    #[error("model contains non-finite weights; refusing to save")]
    NonFiniteWeights,
    #[error("model file has an unexpected label set")]
    LabelSetMismatch,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u64,
    labels: Vec<String>,
    features: Vec<String>,
    emission_weights: Vec<f64>,
    transition_weights: Vec<f64>,
    config: TrainConfig,
}

/// Serializes a model as canonical JSON with an embedded `crc32` of the
/// payload (the canonical serialization of every other field).
pub fn save_model(model: &CrfModel, sink: &mut dyn Write) -> Result<(), ModelIoError> {
    if !model.all_weights_finite() {
        return Err(ModelIoError::NonFiniteWeights);
    }
    let file = ModelFile {
        version: MODEL_FORMAT_VERSION,
        labels: model.labels.iter().map(|l| l.to_string()).collect(),
        features: model.feature_index.strings().to_vec(),
        emission_weights: model.emission_weights().to_vec(),
        transition_weights: model.transition_weights().to_vec(),
        config: model.config.clone(),
    };
    // serde_json's default map is ordered, so Value serialization is
    // canonical (sorted keys).
    let mut value = serde_json::to_value(&file).expect("model serialization cannot fail");
    let payload = serde_json::to_string(&value).expect("payload serialization cannot fail");
    let checksum = crc32fast::hash(payload.as_bytes());
    value
        .as_object_mut()
        .unwrap()
        .insert("crc32".to_string(), Value::from(checksum));
    let body = serde_json::to_string(&value).expect("model serialization cannot fail");
    sink.write_all(body.as_bytes())?;
    sink.write_all(b"\n")?;
    Ok(())
}

/// Loads and verifies a model file: checksum first, then version, then the
/// structural shape.
pub fn load_model(source: &mut dyn Read) -> Result<CrfModel, ModelIoError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let mut value: Value =
        serde_json::from_str(text.trim_end()).map_err(|e| ModelIoError::Corrupted(e.to_string()))?;
    let object = value
        .as_object_mut()
        .ok_or_else(|| ModelIoError::Corrupted("top level is not an object".into()))?;
    let stored = object
        .remove("crc32")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| ModelIoError::Corrupted("missing crc32 field".into()))?
        as u32;
    let payload = serde_json::to_string(&value).expect("payload serialization cannot fail");
    let computed = crc32fast::hash(payload.as_bytes());
    if stored != computed {
        return Err(ModelIoError::ChecksumMismatch { stored, computed });
    }

    let file: ModelFile =
        serde_json::from_value(value).map_err(|e| ModelIoError::Corrupted(e.to_string()))?;
    if file.version != MODEL_FORMAT_VERSION {
        return Err(ModelIoError::VersionMismatch { found: file.version });
    }
    let expected: Vec<String> = Label::all().iter().map(|l| l.to_string()).collect();
    if file.labels != expected {
        return Err(ModelIoError::LabelSetMismatch);
    }
    if file.emission_weights.len() != file.features.len() * LABEL_COUNT
        || file.transition_weights.len() != TRANSITION_ROWS * LABEL_COUNT
    {
        return Err(ModelIoError::Corrupted("weight array sizes disagree with feature count".into()));
    }
    let count = file.features.len();
    let index = FeatureIndex::from_strings(
        file.features,
        vec![0; count],
        file.config.prune_threshold,
    );
    Ok(CrfModel::new(index, file.emission_weights, file.transition_weights, file.config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crf::viterbi_decode;

    fn small_model() -> CrfModel {
        let strings: Vec<String> = ["lower=eur", "pat:amount", "cap=ALLCAPS"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let index = FeatureIndex::from_strings(strings, vec![3, 2, 5], 2);
        let emissions: Vec<f64> =
            (0..3 * LABEL_COUNT).map(|i| ((i * 17 % 13) as f64 - 6.0) * 0.25).collect();
        let transitions: Vec<f64> =
            (0..TRANSITION_ROWS * LABEL_COUNT).map(|i| ((i * 7 % 9) as f64 - 4.0) * 0.125).collect();
        CrfModel::new(index, emissions, transitions, TrainConfig::default())
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let model = small_model();
        let mut first = Vec::new();
        save_model(&model, &mut first).unwrap();
        let reloaded = load_model(&mut first.as_slice()).unwrap();
        let mut second = Vec::new();
        save_model(&reloaded, &mut second).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn reloaded_model_decodes_identically() {
        let model = small_model();
        let mut buffer = Vec::new();
        save_model(&model, &mut buffer).unwrap();
        let reloaded = load_model(&mut buffer.as_slice()).unwrap();
        let features = vec![vec![0u32, 2], vec![1], vec![0, 1, 2]];
        assert_eq!(
            viterbi_decode(&model, &features, true).unwrap(),
            viterbi_decode(&reloaded, &features, true).unwrap()
        );
    }

    #[test]
    fn truncated_file_fails_closed() {
        let model = small_model();
        let mut buffer = Vec::new();
        save_model(&model, &mut buffer).unwrap();
        buffer.truncate(buffer.len() / 2);
        assert!(matches!(
            load_model(&mut buffer.as_slice()),
            Err(ModelIoError::Corrupted(_))
        ));
    }

    #[test]
    fn bit_flip_fails_the_checksum() {
        let model = small_model();
        let mut buffer = Vec::new();
        save_model(&model, &mut buffer).unwrap();
        // Flip one digit inside a weight without breaking JSON syntax.
        let text = String::from_utf8(buffer).unwrap();
        let flipped = text.replacen("0.25", "0.35", 1);
        assert_ne!(text, flipped);
        assert!(matches!(
            load_model(&mut flipped.as_bytes()),
            Err(ModelIoError::ChecksumMismatch { .. })
        ));
    }

    #[test]
    fn version_mismatch_detected() {
        let model = small_model();
        let mut buffer = Vec::new();
        save_model(&model, &mut buffer).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        // Rewrite the version and fix up the checksum so only the version
        // check can fail.
        let mut value: Value = serde_json::from_str(text.trim_end()).unwrap();
        let object = value.as_object_mut().unwrap();
        object.remove("crc32");
        object.insert("version".into(), Value::from(99));
        let payload = serde_json::to_string(&value).unwrap();
        let checksum = crc32fast::hash(payload.as_bytes());
        value.as_object_mut().unwrap().insert("crc32".into(), Value::from(checksum));
        let body = serde_json::to_string(&value).unwrap();
        assert!(matches!(
            load_model(&mut body.as_bytes()),
            Err(ModelIoError::VersionMismatch { found: 99 })
        ));
    }

    #[test]
    fn non_finite_weights_refused() {
        let mut model = small_model();
        let mut buffer = Vec::new();
        // Poke a NaN into the emissions through the public constructor path.
        let mut emissions = model.emission_weights().to_vec();
        emissions[0] = f64::NAN;
        model = CrfModel::new(model.feature_index.clone(), emissions,
            model.transition_weights().to_vec(), model.config.clone());
        assert!(matches!(save_model(&model, &mut buffer), Err(ModelIoError::NonFiniteWeights)));
    }
}
