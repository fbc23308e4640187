//! Lightweight, namespace-agnostic scanner for ISO 20022 pain.001 XML.
//!
//! This is deliberately not a schema validator: it walks the element
//! structure, maps the handful of payment-relevant elements to [`FieldId`]s
//! over their text content, and degrades to a single `OTHER_FIELD` region
//! over the raw text when the input is not well-formed markup.

use super::{FieldId, FieldRegion, FieldStructure};

/// Scans pain.001-style XML. Known element roles (debtor/creditor names,
/// account IBANs, creditor agent BIC, unstructured remittance info and the
/// instructed amount) map to their field ids; any other text content is
/// kept as `OTHER_FIELD` so downstream tokenization preserves it.
pub fn parse_pain001(text: &str) -> FieldStructure {
    match scan(text) {
        Some(regions) => FieldStructure { regions, text_len: text.len() },
        None => degraded(text),
    }
}

fn degraded(text: &str) -> FieldStructure {
    let start = text.len() - text.trim_start().len();
    let end = start + text.trim().len();
    let regions = if start < end {
        vec![FieldRegion {
            field: FieldId::OtherField,
            char_start: start,
            char_end: end,
            attrs: Vec::new(),
        }]
    } else {
        Vec::new()
    };
    FieldStructure { regions, text_len: text.len() }
}

fn scan(text: &str) -> Option<Vec<FieldRegion>> {
    if !text.contains('<') {
        return None;
    }
    let mut regions = Vec::new();
    let mut stack: Vec<(String, Vec<(String, String)>)> = Vec::new();
    let mut pos = 0;
    while pos < text.len() {
        if text[pos..].starts_with('<') {
            let close = text[pos..].find('>')? + pos;
            let markup = &text[pos + 1..close];
            if markup.starts_with('?') || markup.starts_with('!') {
                // Declaration or comment; nothing to track.
            } else if let Some(name) = markup.strip_prefix('/') {
                let name = name.trim();
                // Tolerant pop: unwind to the matching open tag if present.
                if let Some(found) = stack.iter().rposition(|(n, _)| n == name) {
                    stack.truncate(found);
                }
            } else {
                let self_closing = markup.ends_with('/');
                let body = markup.strip_suffix('/').unwrap_or(markup);
                let (name, attrs) = parse_tag(body);
                if name.is_empty() {
                    return None;
                }
                if !self_closing {
                    stack.push((name, attrs));
                }
            }
            pos = close + 1;
        } else {
            let end = text[pos..].find('<').map_or(text.len(), |i| i + pos);
            let slice = &text[pos..end];
            let lead = slice.len() - slice.trim_start().len();
            let content = slice.trim();
            if !content.is_empty() {
                let field = classify(&stack);
                regions.push(FieldRegion {
                    field,
                    char_start: pos + lead,
                    char_end: pos + lead + content.len(),
                    attrs: stack.last().map(|(_, a)| a.clone()).unwrap_or_default(),
                });
            }
            pos = end;
        }
    }
    Some(regions)
}

fn parse_tag(body: &str) -> (String, Vec<(String, String)>) {
    let mut parts = body.split_whitespace();
    let name = parts.next().unwrap_or("").to_string();
    let mut attrs = Vec::new();
    for part in parts {
        if let Some((key, value)) = part.split_once('=') {
            let value = value.trim_matches(|c| c == '"' || c == '\'');
            attrs.push((key.to_string(), value.to_string()));
        }
    }
    (name, attrs)
}

fn classify(stack: &[(String, Vec<(String, String)>)]) -> FieldId {
    let has = |name: &str| stack.iter().any(|(n, _)| n == name);
    let top = stack.last().map(|(n, _)| n.as_str()).unwrap_or("");
    match top {
        "Nm" if has("Dbtr") => FieldId::Dbtr,
        "Nm" if has("Cdtr") => FieldId::Cdtr,
        "IBAN" if has("DbtrAcct") => FieldId::DbtrAcct,
        "IBAN" if has("CdtrAcct") => FieldId::CdtrAcct,
        "BIC" | "BICFI" if has("CdtrAgt") => FieldId::CdtrAgt,
        "Ustrd" if has("RmtInf") => FieldId::RmtInf,
        "InstdAmt" => FieldId::InstdAmt,
        _ => FieldId::OtherField,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn content<'t>(text: &'t str, r: &FieldRegion) -> &'t str {
        &text[r.char_start..r.char_end]
    }

    #[test]
    fn creditor_name_element() {
        let text = "<Cdtr><Nm>ACME GMBH</Nm></Cdtr>";
        let s = parse_pain001(text);
        assert_eq!(s.regions.len(), 1);
        assert_eq!(s.regions[0].field, FieldId::Cdtr);
        assert_eq!(content(text, &s.regions[0]), "ACME GMBH");
    }

    #[test]
    fn instructed_amount_keeps_currency_attribute() {
        let text = "<InstdAmt Ccy=\"EUR\">100.00</InstdAmt>";
        let s = parse_pain001(text);
        assert_eq!(s.regions.len(), 1);
        assert_eq!(s.regions[0].field, FieldId::InstdAmt);
        assert_eq!(content(text, &s.regions[0]), "100.00");
        assert_eq!(s.regions[0].attrs, vec![("Ccy".to_string(), "EUR".to_string())]);
    }

    #[test]
    fn plain_text_degrades_to_other_field() {
        let text = "just a plain remittance note";
        let s = parse_pain001(text);
        assert_eq!(s.regions.len(), 1);
        assert_eq!(s.regions[0].field, FieldId::OtherField);
        assert_eq!(content(text, &s.regions[0]), text);
    }

    #[test]
    fn unterminated_markup_degrades_to_raw_text() {
        // A `<` that never closes is structural breakage; the whole raw
        // text becomes one OTHER_FIELD region.
        let text = "<Cdtr><Nm>ACME GMBH</Nm";
        let s = parse_pain001(text);
        assert_eq!(s.regions.len(), 1);
        assert_eq!(s.regions[0].field, FieldId::OtherField);
        assert_eq!(content(text, &s.regions[0]), text);
    }

    #[test]
    fn dropped_closing_tags_are_tolerated() {
        let text = "<Cdtr><Nm>ACME GMBH\n<InstdAmt Ccy=\"EUR\">10.00</InstdAmt>";
        let s = parse_pain001(text);
        assert_eq!(s.regions[0].field, FieldId::Cdtr);
        assert_eq!(content(text, &s.regions[0]), "ACME GMBH");
    }

    #[test]
    fn account_ibans_disambiguated_by_context() {
        let text = "<DbtrAcct><Id><IBAN>DE02120300000000202051</IBAN></Id></DbtrAcct>\
                    <CdtrAcct><Id><IBAN>GB82WEST12345698765432</IBAN></Id></CdtrAcct>";
        let s = parse_pain001(text);
        let fields: Vec<_> = s.regions.iter().map(|r| r.field).collect();
        assert_eq!(fields, [FieldId::DbtrAcct, FieldId::CdtrAcct]);
    }

    #[test]
    fn unknown_elements_keep_content_as_other() {
        let text = "<GrpHdr><MsgId>MSG-1</MsgId></GrpHdr>";
        let s = parse_pain001(text);
        assert_eq!(s.regions.len(), 1);
        assert_eq!(s.regions[0].field, FieldId::OtherField);
        assert_eq!(content(text, &s.regions[0]), "MSG-1");
    }
}
