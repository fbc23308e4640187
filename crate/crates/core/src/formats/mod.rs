//! Structured parsing of payment formats and per-token format features:
//! MT103 field scanning, pain.001 element scanning, IBAN/BIC validation,
//! pattern indicators, and the format feature vector fed to the CRF.

mod mt103;
mod pain001;
mod patterns;

pub use mt103::parse_mt103;
pub use pain001::parse_pain001;
pub use patterns::{detect_patterns, is_amount_pattern, is_currency_code, is_date_pattern,
    validate_bic, validate_iban, PatternFlags};

use serde::{Deserialize, Serialize};

use crate::corpus::MessageFormat;
use crate::tokenize::Token;

/// Identity of a parsed field. MT103 tags and pain.001 element roles share
/// one closed set; anything unknown maps to [`FieldId::OtherField`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FieldId {
    // MT103 tags.
    F20,
    F23B,
    F32A,
    F50K,
    F52A,
    F57A,
    F59,
    F70,
    F71A,
    // pain.001 element roles.
    Dbtr,
    DbtrAcct,
    Cdtr,
    CdtrAcct,
    CdtrAgt,
    RmtInf,
    InstdAmt,
    OtherField,
}

impl FieldId {
    pub fn as_str(&self) -> &'static str {
        match self {
            FieldId::F20 => "F20",
            FieldId::F23B => "F23B",
            FieldId::F32A => "F32A",
            FieldId::F50K => "F50K",
            FieldId::F52A => "F52A",
            FieldId::F57A => "F57A",
            FieldId::F59 => "F59",
            FieldId::F70 => "F70",
            FieldId::F71A => "F71A",
            FieldId::Dbtr => "Dbtr",
            FieldId::DbtrAcct => "DbtrAcct",
            FieldId::Cdtr => "Cdtr",
            FieldId::CdtrAcct => "CdtrAcct",
            FieldId::CdtrAgt => "CdtrAgt",
            FieldId::RmtInf => "RmtInf",
            FieldId::InstdAmt => "InstdAmt",
            FieldId::OtherField => "OTHER_FIELD",
        }
    }
}

/// One parsed region of a message, with optional source attributes
/// (e.g. the `Ccy` attribute of a pain.001 `InstdAmt` element).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldRegion {
    pub field: FieldId,
    pub char_start: usize,
    pub char_end: usize,
    pub attrs: Vec<(String, String)>,
}

/// Ordered, non-overlapping parsed regions covering parts of a message.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldStructure {
    pub regions: Vec<FieldRegion>,
    /// Byte length of the parsed text; used to normalize positions of
    /// tokens that lie outside every region.
    pub text_len: usize,
}

impl FieldStructure {
    /// Structure for a format without field markup: no regions at all.
    pub fn unstructured(text_len: usize) -> Self {
        FieldStructure { regions: Vec::new(), text_len }
    }

    /// The field containing the given byte position, if any.
    pub fn field_at(&self, pos: usize) -> Option<FieldId> {
        self.region_at(pos).map(|r| r.field)
    }

    pub fn region_at(&self, pos: usize) -> Option<&FieldRegion> {
        self.regions
            .iter()
            .find(|r| r.char_start <= pos && pos < r.char_end)
    }
}

/// Parses a message into fields according to its format. Formats without a
/// structured parser yield an unstructured result.
pub fn parse(format: MessageFormat, text: &str) -> FieldStructure {
    match format {
        MessageFormat::Mt103 => parse_mt103(text),
        MessageFormat::Pain001 => parse_pain001(text),
        _ => FieldStructure::unstructured(text.len()),
    }
}

/// Format features of one token: containing field, normalized position
/// within it, pattern indicators, and the message type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormatFeatureVector {
    pub field_type: FieldId,
    /// Position of the token within its field, normalized to `[0, 1]`.
    pub relative_position: f64,
    pub pattern: PatternFlags,
    pub message_type: MessageFormat,
}

/// Computes the format feature vector for a token.
pub fn format_features(
    token: &Token,
    structure: &FieldStructure,
    format: MessageFormat,
) -> FormatFeatureVector {
    let (field_type, field_start, field_len) = match structure.region_at(token.char_start) {
        Some(region) => (region.field, region.char_start, region.char_end - region.char_start),
        None => (FieldId::OtherField, 0, structure.text_len),
    };
    let relative_position = (token.char_start - field_start) as f64 / field_len.max(1) as f64;
    FormatFeatureVector {
        field_type,
        relative_position: relative_position.clamp(0.0, 1.0),
        pattern: detect_patterns(&token.text),
        message_type: format,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn token(text: &str, start: usize) -> Token {
        Token {
            text: text.to_string(),
            char_start: start,
            char_end: start + text.len(),
            field_context: None,
        }
    }

    #[test]
    fn first_token_of_field_has_zero_position() {
        let structure = parse_mt103(":50K:JOHN DOE");
        let t = token("JOHN", 5);
        let fv = format_features(&t, &structure, MessageFormat::Mt103);
        assert_eq!(fv.field_type, FieldId::F50K);
        assert_eq!(fv.relative_position, 0.0);
    }

    #[test]
    fn token_outside_any_field_maps_to_other() {
        let structure = parse_mt103("preamble\n:59:X");
        let t = token("preamble", 0);
        let fv = format_features(&t, &structure, MessageFormat::Mt103);
        assert_eq!(fv.field_type, FieldId::OtherField);
        assert!(fv.relative_position >= 0.0 && fv.relative_position <= 1.0);
    }

    #[test]
    fn iban_inside_beneficiary_field() {
        let text = ":59:GB82WEST12345698765432";
        let structure = parse_mt103(text);
        let t = token("GB82WEST12345698765432", 4);
        let fv = format_features(&t, &structure, MessageFormat::Mt103);
        assert_eq!(fv.field_type, FieldId::F59);
        assert!(fv.pattern.is_iban);
    }
}
