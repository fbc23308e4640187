//! Annotation file I/O.
//!
//! The annotation format is CoNLL-style UTF-8 text. Each message starts
//! with header comment lines, followed by one line per token, with messages
//! separated by a single blank line:
//!
//! ```text
//! # id = MSG000001
//! # format = MT103
//! # flags = multilingual
//! # langs = de,en
//! # text = ":50K:JOHN DOE\n..."
//! # inner = LOCATION:4-4
//! JOHN<TAB>B-PERSON_NAME<TAB>5<TAB>9
//! DOE<TAB>I-PERSON_NAME<TAB>10<TAB>13
//! ```
//!
//! `id` and `format` are required. `flags`, `langs`, `text` (JSON string
//! escape) and `inner` (nested inner spans) are optional; offsets columns
//! are optional on read and reconstructed when absent. Lines starting with
//! `#` outside headers are comments.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read, Write};

use thiserror::Error;

use super::{
    is_valid_bio, AnnotatedMessage, EntityType, Label, MessageFlags, MessageFormat, PaymentMessage,
};
use crate::eval::{extract_spans, extract_spans_counting, EntitySpan};
use crate::tokenize::{Token, TokenSequence};

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

fn parse_error(line: usize, reason: impl Into<String>) -> AnnotationError {
    AnnotationError::Parse { line, reason: reason.into() }
}

/// Writes a corpus in the annotation format. Every optional header the
/// reader understands is emitted, so `read(write(c)) == c`.
pub fn write_annotations(
    corpus: &[AnnotatedMessage],
    sink: &mut dyn Write,
) -> Result<(), AnnotationError> {
    for (i, message) in corpus.iter().enumerate() {
        if i > 0 {
            writeln!(sink)?;
        }
        writeln!(sink, "# id = {}", message.message.id)?;
        writeln!(sink, "# format = {}", message.message.format)?;
        writeln!(sink, "# flags = {}", message.message.flags.to_list().join(","))?;
        if !message.message.language_tags.is_empty() {
            let langs: Vec<&str> =
                message.message.language_tags.iter().map(String::as_str).collect();
            writeln!(sink, "# langs = {}", langs.join(","))?;
        }
        writeln!(
            sink,
            "# text = {}",
            serde_json::to_string(&message.message.text).expect("string serialization")
        )?;
        if !message.inner_spans.is_empty() {
            let parts: Vec<String> = message
                .inner_spans
                .iter()
                .map(|s| format!("{}:{}-{}", s.entity_type, s.token_start, s.token_end))
                .collect();
            writeln!(sink, "# inner = {}", parts.join(","))?;
        }
        for (token, label) in message.tokens.tokens.iter().zip(&message.labels) {
            writeln!(
                sink,
                "{}\t{}\t{}\t{}",
                token.text, label, token.char_start, token.char_end
            )?;
        }
    }
    Ok(())
}

/// How to treat label sequences that break the BIO scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BioPolicy {
    /// Reject the file with a parse error naming the offending line.
    Strict,
    /// Accept and repair orphan `I-` labels when extracting spans.
    Repair,
}

/// Reads a corpus, rejecting malformed input (count mismatches, unknown
/// labels, broken BIO sequences) with the offending line number.
pub fn read_annotations(source: &mut dyn Read) -> Result<Vec<AnnotatedMessage>, AnnotationError> {
    read_with_policy(source, BioPolicy::Strict)
}

/// Reads predictions tolerantly: orphan `I-` labels are repaired into span
/// begins instead of rejected. Returns the corpus and the repair count.
pub fn read_annotations_lenient(
    source: &mut dyn Read,
) -> Result<(Vec<AnnotatedMessage>, usize), AnnotationError> {
    let corpus = read_with_policy(source, BioPolicy::Repair)?;
    let repairs = corpus
        .iter()
        .map(|m| extract_spans_counting(&m.message.id, &m.labels).1)
        .sum();
    Ok((corpus, repairs))
}

#[derive(Default)]
struct PendingMessage {
    id: Option<String>,
    format: Option<MessageFormat>,
    flags: MessageFlags,
    langs: BTreeSet<String>,
    text: Option<String>,
    inner: Vec<(EntityType, usize, usize)>,
    /// (text, label, offsets, line number)
    rows: Vec<(String, Label, Option<(usize, usize)>, usize)>,
    first_line: usize,
}

impl PendingMessage {
    fn is_empty(&self) -> bool {
        self.id.is_none() && self.rows.is_empty()
    }
}

fn read_with_policy(
    source: &mut dyn Read,
    policy: BioPolicy,
) -> Result<Vec<AnnotatedMessage>, AnnotationError> {
    let reader = BufReader::new(source);
    let mut corpus = Vec::new();
    let mut pending = PendingMessage::default();
    let mut line_number = 0;
    for line in reader.lines() {
        line_number += 1;
        let line = line?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.is_empty() {
            if !pending.is_empty() {
                corpus.push(finish_message(std::mem::take(&mut pending), policy)?);
            }
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            parse_header(rest.trim(), &mut pending, line_number)?;
            continue;
        }
        if pending.is_empty() {
            pending.first_line = line_number;
        }
        let mut parts = trimmed.split('\t');
        let token = parts.next().unwrap_or_default();
        let label_text = parts
            .next()
            .ok_or_else(|| parse_error(line_number, "expected <token>\\t<label>"))?;
        let label: Label = label_text
            .parse()
            .map_err(|_| parse_error(line_number, format!("unknown label {label_text:?}")))?;
        let offsets = match (parts.next(), parts.next()) {
            (Some(start), Some(end)) => {
                let start = start
                    .parse()
                    .map_err(|_| parse_error(line_number, "bad start offset"))?;
                let end =
                    parts_end(end).map_err(|reason| parse_error(line_number, reason))?;
                Some((start, end))
            }
            (None, _) => None,
            (Some(_), None) => return Err(parse_error(line_number, "missing end offset column")),
        };
        pending.rows.push((token.to_string(), label, offsets, line_number));
    }
    if !pending.is_empty() {
        corpus.push(finish_message(pending, policy)?);
    }
    Ok(corpus)
}

fn parts_end(text: &str) -> Result<usize, String> {
    text.parse().map_err(|_| "bad end offset".to_string())
}

fn parse_header(
    rest: &str,
    pending: &mut PendingMessage,
    line: usize,
) -> Result<(), AnnotationError> {
    let Some((key, value)) = rest.split_once('=') else {
        return Ok(()); // plain comment
    };
    let key = key.trim();
    let value = value.trim();
    match key {
        "id" => pending.id = Some(value.to_string()),
        "format" => {
            let format = value
                .parse()
                .map_err(|_| parse_error(line, format!("unknown format {value:?}")))?;
            pending.format = Some(format);
        }
        "flags" => {
            for flag in value.split(',').map(str::trim).filter(|f| !f.is_empty()) {
                match flag {
                    "multilingual" => pending.flags.multilingual = true,
                    "nonstandard" => pending.flags.nonstandard = true,
                    "nested" => pending.flags.has_nested = true,
                    other => {
                        return Err(parse_error(line, format!("unknown flag {other:?}")));
                    }
                }
            }
        }
        "langs" => {
            pending.langs =
                value.split(',').map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
        }
        "text" => {
            let text: String = serde_json::from_str(value)
                .map_err(|_| parse_error(line, "text header is not a JSON string"))?;
            pending.text = Some(text);
        }
        "inner" => {
            for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                let (ty, range) = part
                    .split_once(':')
                    .ok_or_else(|| parse_error(line, "inner span must be TYPE:start-end"))?;
                let ty: EntityType = ty
                    .parse()
                    .map_err(|_| parse_error(line, format!("unknown entity type {ty:?}")))?;
                let (start, end) = range
                    .split_once('-')
                    .ok_or_else(|| parse_error(line, "inner span must be TYPE:start-end"))?;
                let start = start.parse().map_err(|_| parse_error(line, "bad inner start"))?;
                let end = end.parse().map_err(|_| parse_error(line, "bad inner end"))?;
                pending.inner.push((ty, start, end));
            }
        }
        _ => {} // unknown headers are ignored
    }
    Ok(())
}

fn finish_message(
    pending: PendingMessage,
    policy: BioPolicy,
) -> Result<AnnotatedMessage, AnnotationError> {
    let line = pending.first_line.max(1);
    let id = pending
        .id
        .ok_or_else(|| parse_error(line, "message without `# id =` header"))?;
    let format = pending
        .format
        .ok_or_else(|| parse_error(line, format!("message {id} without `# format =` header")))?;
    if pending.rows.is_empty() {
        return Err(parse_error(line, format!("message {id} has no token lines")));
    }

    let labels: Vec<Label> = pending.rows.iter().map(|(_, label, _, _)| *label).collect();
    if policy == BioPolicy::Strict && !is_valid_bio(&labels) {
        let bad = pending
            .rows
            .iter()
            .scan(Label::O, |prev, (_, label, _, row_line)| {
                let broken = matches!(label, Label::I(ty)
                    if !matches!(prev, Label::B(p) | Label::I(p) if p == ty));
                *prev = *label;
                Some((broken, *row_line))
            })
            .find(|(broken, _)| *broken)
            .map(|(_, row_line)| row_line)
            .unwrap_or(line);
        return Err(parse_error(bad, format!("label breaks the BIO scheme in message {id}")));
    }

    // Reconstruct text and offsets for minimal 2-column files.
    let have_offsets = pending.rows.iter().all(|(_, _, offsets, _)| offsets.is_some());
    let (text, tokens) = if let (Some(text), true) = (pending.text.clone(), have_offsets) {
        let tokens = pending
            .rows
            .iter()
            .map(|(token_text, _, offsets, row_line)| {
                let (start, end) = offsets.unwrap();
                if end > text.len()
                    || start >= end
                    || !text.is_char_boundary(start)
                    || !text.is_char_boundary(end)
                    || &text[start..end] != token_text
                {
                    return Err(parse_error(
                        *row_line,
                        format!("offsets {start}..{end} do not match token {token_text:?}"),
                    ));
                }
                Ok(Token {
                    text: token_text.clone(),
                    char_start: start,
                    char_end: end,
                    field_context: None,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        (text, tokens)
    } else {
        // Join tokens with single spaces to synthesize text and offsets.
        let mut text = String::new();
        let mut tokens = Vec::with_capacity(pending.rows.len());
        for (token_text, _, _, _) in &pending.rows {
            if !text.is_empty() {
                text.push(' ');
            }
            let start = text.len();
            text.push_str(token_text);
            tokens.push(Token {
                text: token_text.clone(),
                char_start: start,
                char_end: text.len(),
                field_context: None,
            });
        }
        (text, tokens)
    };

    let gold_spans = extract_spans(&id, &labels);
    let inner_spans = pending
        .inner
        .into_iter()
        .map(|(ty, start, end)| EntitySpan::new(&id, ty, start, end))
        .collect();
    Ok(AnnotatedMessage {
        message: PaymentMessage {
            id: id.clone(),
            format,
            text,
            language_tags: pending.langs,
            flags: pending.flags,
        },
        tokens: TokenSequence { message_id: id, tokens },
        labels,
        gold_spans,
        inner_spans,
    })
}

/// Writes raw messages as JSON lines (`id`, `format`, `text` per object).
pub fn write_raw_messages(
    messages: &[PaymentMessage],
    sink: &mut dyn Write,
) -> Result<(), AnnotationError> {
    for message in messages {
        let value = serde_json::json!({
            "id": message.id,
            "format": message.format.as_str(),
            "text": message.text,
        });
        writeln!(sink, "{value}")?;
    }
    Ok(())
}

/// Reads raw messages from JSON lines.
pub fn read_raw_messages(source: &mut dyn Read) -> Result<Vec<PaymentMessage>, AnnotationError> {
    let reader = BufReader::new(source);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| parse_error(i + 1, format!("bad JSON: {e}")))?;
        let id = value["id"]
            .as_str()
            .ok_or_else(|| parse_error(i + 1, "missing id"))?
            .to_string();
        let format: MessageFormat = value["format"]
            .as_str()
            .ok_or_else(|| parse_error(i + 1, "missing format"))?
            .parse()
            .map_err(|_| parse_error(i + 1, "unknown format"))?;
        let text = value["text"]
            .as_str()
            .ok_or_else(|| parse_error(i + 1, "missing text"))?
            .to_string();
        out.push(PaymentMessage {
            id,
            format,
            text,
            language_tags: BTreeSet::new(),
            flags: MessageFlags::default(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(corpus: &[AnnotatedMessage]) -> Vec<AnnotatedMessage> {
        let mut buffer = Vec::new();
        write_annotations(corpus, &mut buffer).unwrap();
        read_annotations(&mut buffer.as_slice()).unwrap()
    }

    fn tiny_message() -> AnnotatedMessage {
        let msg = PaymentMessage {
            id: "m1".into(),
            format: MessageFormat::Mt103,
            text: "JOHN DOE".into(),
            language_tags: ["en".to_string()].into_iter().collect(),
            flags: MessageFlags { multilingual: true, ..Default::default() },
        };
        let tokens = crate::tokenize::tokenize(&msg).unwrap();
        let labels = vec![
            Label::B(EntityType::PersonName),
            Label::I(EntityType::PersonName),
        ];
        let gold_spans = extract_spans("m1", &labels);
        AnnotatedMessage { message: msg, tokens, labels, gold_spans, inner_spans: Vec::new() }
    }

    #[test]
    fn empty_corpus_roundtrips() {
        assert!(roundtrip(&[]).is_empty());
    }

    #[test]
    fn smallest_record_roundtrips() {
        let corpus = vec![tiny_message()];
        let mut buffer = Vec::new();
        write_annotations(&corpus, &mut buffer).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        // Two data lines, headers, no trailing blank line.
        let data_lines =
            text.lines().filter(|l| !l.starts_with('#') && !l.is_empty()).count();
        assert_eq!(data_lines, 2);
        assert_eq!(roundtrip(&corpus), corpus);
    }

    #[test]
    fn orphan_inside_at_start_is_a_strict_parse_error() {
        let file = "# id = m1\n# format = MT103\nJOHN\tI-PERSON_NAME\n";
        let err = read_annotations(&mut file.as_bytes()).unwrap_err();
        match err {
            AnnotationError::Parse { line, reason } => {
                assert_eq!(line, 3);
                assert!(reason.contains("BIO"), "{reason}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn lenient_read_repairs_orphans() {
        let file = "# id = m1\n# format = MT103\nJOHN\tI-PERSON_NAME\n";
        let (corpus, repairs) = read_annotations_lenient(&mut file.as_bytes()).unwrap();
        assert_eq!(repairs, 1);
        assert_eq!(corpus[0].gold_spans.len(), 1);
        assert_eq!(corpus[0].gold_spans[0].token_start, 0);
    }

    #[test]
    fn unknown_label_names_the_line() {
        let file = "# id = m1\n# format = MT103\nJOHN\tB-WHATEVER\n";
        let err = read_annotations(&mut file.as_bytes()).unwrap_err();
        assert!(matches!(err, AnnotationError::Parse { line: 3, .. }));
    }

    #[test]
    fn missing_label_column_names_the_line() {
        let file = "# id = m1\n# format = MT103\nJOHN\n";
        let err = read_annotations(&mut file.as_bytes()).unwrap_err();
        assert!(matches!(err, AnnotationError::Parse { line: 3, .. }));
    }

    #[test]
    fn two_column_files_synthesize_text_and_offsets() {
        let file = "# id = m1\n# format = OTHER\nJOHN\tB-PERSON_NAME\nDOE\tI-PERSON_NAME\n";
        let corpus = read_annotations(&mut file.as_bytes()).unwrap();
        assert_eq!(corpus[0].message.text, "JOHN DOE");
        assert_eq!(corpus[0].tokens.tokens[1].char_start, 5);
    }

    #[test]
    fn multiple_messages_separated_by_blank_lines() {
        let mut a = tiny_message();
        let mut b = tiny_message();
        a.message.id = "a".into();
        a.tokens.message_id = "a".into();
        a.gold_spans = extract_spans("a", &a.labels);
        b.message.id = "b".into();
        b.tokens.message_id = "b".into();
        b.gold_spans = extract_spans("b", &b.labels);
        let corpus = vec![a, b];
        assert_eq!(roundtrip(&corpus), corpus);
    }

    #[test]
    fn raw_messages_roundtrip() {
        let messages = vec![PaymentMessage {
            id: "r1".into(),
            format: MessageFormat::Sepa,
            text: "BETRAG: EUR 10,00\nzeile 2".into(),
            language_tags: BTreeSet::new(),
            flags: MessageFlags::default(),
        }];
        let mut buffer = Vec::new();
        write_raw_messages(&messages, &mut buffer).unwrap();
        let back = read_raw_messages(&mut buffer.as_slice()).unwrap();
        assert_eq!(back[0].id, "r1");
        assert_eq!(back[0].text, messages[0].text);
        assert_eq!(back[0].format, MessageFormat::Sepa);
    }
}
