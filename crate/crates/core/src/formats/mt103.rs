//! Tolerant scanner for SWIFT MT103 field tags.

use super::{FieldId, FieldRegion, FieldStructure};

fn field_for_tag(tag: &str) -> FieldId {
    match tag {
        "20" => FieldId::F20,
        "23B" => FieldId::F23B,
        "32A" => FieldId::F32A,
        "50K" => FieldId::F50K,
        "52A" => FieldId::F52A,
        "57A" => FieldId::F57A,
        "59" => FieldId::F59,
        "70" => FieldId::F70,
        "71A" => FieldId::F71A,
        _ => FieldId::OtherField,
    }
}

/// Scans for `:<tag>:` markers at line starts. Each field spans from just
/// after its tag to the start of the next tag line (or end of text), with
/// surrounding whitespace trimmed. Unknown tags map to `OTHER_FIELD`; text
/// before the first tag stays uncovered. Never fails: input without tags
/// yields an empty structure.
pub fn parse_mt103(text: &str) -> FieldStructure {
    // (content_start, field) per tag, plus the offset where its tag line begins.
    let mut tags: Vec<(usize, usize, FieldId)> = Vec::new();
    let mut line_start = 0;
    for line in text.split_inclusive('\n') {
        if let Some((tag, content_start)) = match_tag(line) {
            tags.push((line_start, line_start + content_start, field_for_tag(tag)));
        }
        line_start += line.len();
    }

    let mut regions = Vec::with_capacity(tags.len());
    for (i, &(_, content_start, field)) in tags.iter().enumerate() {
        let region_end = tags.get(i + 1).map_or(text.len(), |next| next.0);
        let (start, end) = trim_bounds(text, content_start, region_end);
        regions.push(FieldRegion { field, char_start: start, char_end: end, attrs: Vec::new() });
    }
    FieldStructure { regions, text_len: text.len() }
}

/// Matches `:<1-3 alphanumerics>:` at the start of a line; returns the tag
/// and the offset of the first content byte within the line.
fn match_tag(line: &str) -> Option<(&str, usize)> {
    let rest = line.strip_prefix(':')?;
    let tag_len = rest.bytes().take_while(|b| b.is_ascii_alphanumeric()).count();
    if (1..=3).contains(&tag_len) && rest.as_bytes().get(tag_len) == Some(&b':') {
        Some((&rest[..tag_len], 1 + tag_len + 1))
    } else {
        None
    }
}

fn trim_bounds(text: &str, mut start: usize, mut end: usize) -> (usize, usize) {
    while start < end && text.as_bytes()[start].is_ascii_whitespace() {
        start += 1;
    }
    while end > start && text.as_bytes()[end - 1].is_ascii_whitespace() {
        end -= 1;
    }
    (start, end)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_known_fields() {
        let text = ":50K:JOHN DOE\n:59:ACME GMBH";
        let s = parse_mt103(text);
        assert_eq!(s.regions.len(), 2);
        assert_eq!(s.regions[0].field, FieldId::F50K);
        assert_eq!(&text[s.regions[0].char_start..s.regions[0].char_end], "JOHN DOE");
        assert_eq!(s.regions[1].field, FieldId::F59);
        assert_eq!(&text[s.regions[1].char_start..s.regions[1].char_end], "ACME GMBH");
    }

    #[test]
    fn empty_text_yields_empty_structure() {
        assert!(parse_mt103("").regions.is_empty());
        assert!(parse_mt103("no tags here").regions.is_empty());
    }

    #[test]
    fn unknown_tag_maps_to_other_field() {
        let text = ":99Z:x";
        let s = parse_mt103(text);
        assert_eq!(s.regions.len(), 1);
        assert_eq!(s.regions[0].field, FieldId::OtherField);
        assert_eq!(&text[s.regions[0].char_start..s.regions[0].char_end], "x");
    }

    #[test]
    fn multiline_field_runs_to_next_tag() {
        let text = ":50K:JOHN DOE\n12 MAIN STREET\nLONDON\n:70:RENT";
        let s = parse_mt103(text);
        assert_eq!(s.regions.len(), 2);
        assert_eq!(
            &text[s.regions[0].char_start..s.regions[0].char_end],
            "JOHN DOE\n12 MAIN STREET\nLONDON"
        );
    }

    #[test]
    fn every_tag_produces_exactly_one_region_and_none_overlap() {
        let text = ":20:REF1\n:23B:CRED\n:32A:240115EUR10,00\n:50K:A\n:59:B\n:70:C\n:71A:SHA";
        let s = parse_mt103(text);
        assert_eq!(s.regions.len(), 7);
        for w in s.regions.windows(2) {
            assert!(w[0].char_end <= w[1].char_start);
        }
    }

    #[test]
    fn colon_mid_line_is_not_a_tag() {
        let s = parse_mt103("TIME 09:30:00\n:59:X");
        assert_eq!(s.regions.len(), 1);
        assert_eq!(s.regions[0].field, FieldId::F59);
    }
}
