//! Payment-aware tokenization and char-span / token-span alignment.
//!
//! Tokenization applies, in order: SWIFT field tags (`:50K:`, `:59:`, ...)
//! are kept as single tokens; for pain.001 the XML markup is stripped and
//! only element content is tokenized, with the element identity recorded as
//! the token's field context; account-number-shaped runs (IBANs, BICs, long
//! digit strings) are kept whole; reference codes are split on `/`, `-` and
//! transitions between all-caps letters and digits; everything else splits
//! on whitespace and punctuation, with punctuation emitted as its own token
//! except inside numbers like `1,234.56`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{EntityType, MessageFormat, PaymentMessage};
use crate::eval::EntitySpan;
use crate::formats::{self, FieldId, FieldStructure};

/// A single token with byte offsets into the source message text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    /// Byte offset of the first char (inclusive).
    pub char_start: usize,
    /// Byte offset past the last char (exclusive).
    pub char_end: usize,
    /// Field the token lies in, when the message parsed into fields.
    pub field_context: Option<FieldId>,
}

/// Ordered, non-overlapping tokens of one message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub message_id: String,
    pub tokens: Vec<Token>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TokenizeError {
    #[error("message {0}: empty text cannot be tokenized")]
    EmptyText(String),
    #[error("char span {start}..{end} out of bounds for message {id} (len {len})")]
    SpanOutOfBounds { id: String, start: usize, end: usize, len: usize },
    #[error("char span {start}..{end} covers no token in message {id}")]
    SpanCoversNoToken { id: String, start: usize, end: usize },
}

/// Tokenizes a payment message according to its format.
pub fn tokenize(message: &PaymentMessage) -> Result<TokenSequence, TokenizeError> {
    if message.text.trim().is_empty() {
        return Err(TokenizeError::EmptyText(message.id.clone()));
    }
    let tokens = match message.format {
        MessageFormat::Pain001 => tokenize_pain001(&message.text),
        MessageFormat::Mt103 => {
            let structure = formats::parse_mt103(&message.text);
            tokenize_with_structure(&message.text, &structure)
        }
        _ => tokenize_with_structure(&message.text, &FieldStructure::default()),
    };
    debug_assert!(!tokens.is_empty(), "non-empty text produced no tokens");
    Ok(TokenSequence { message_id: message.id.clone(), tokens })
}

/// pain.001: only element content is tokenized; markup is skipped entirely.
fn tokenize_pain001(text: &str) -> Vec<Token> {
    let structure = formats::parse_pain001(text);
    let mut tokens = Vec::new();
    for region in &structure.regions {
        scan_plain(
            &text[region.char_start..region.char_end],
            region.char_start,
            Some(region.field),
            &mut tokens,
        );
    }
    tokens
}

fn tokenize_with_structure(text: &str, structure: &FieldStructure) -> Vec<Token> {
    let mut tokens = Vec::new();
    scan_plain(text, 0, None, &mut tokens);
    if !structure.regions.is_empty() {
        for token in &mut tokens {
            token.field_context = structure.field_at(token.char_start);
        }
    }
    tokens
}

/// Scans plain text into tokens, offsetting positions by `base`.
fn scan_plain(text: &str, base: usize, field: Option<FieldId>, out: &mut Vec<Token>) {
    let bytes = text.as_bytes();
    let mut pos = 0;
    while pos < text.len() {
        let ch = next_char(text, pos);
        if ch.is_whitespace() {
            pos += ch.len_utf8();
            continue;
        }
        // SWIFT field tag at a line start or after whitespace.
        if ch == ':' && at_boundary(bytes, pos) {
            if let Some(end) = match_field_tag(text, pos) {
                out.push(make_token(text, pos, end, base, field));
                pos = end;
                continue;
            }
        }
        if ch.is_alphanumeric() {
            let end = scan_alnum_run(text, pos);
            split_run(&text[pos..end], pos, text, base, field, out);
            pos = end;
            continue;
        }
        // Any other char is punctuation: one token per char.
        out.push(make_token(text, pos, pos + ch.len_utf8(), base, field));
        pos += ch.len_utf8();
    }
}

fn next_char(text: &str, pos: usize) -> char {
    text[pos..].chars().next().unwrap()
}

fn at_boundary(bytes: &[u8], pos: usize) -> bool {
    pos == 0 || bytes[pos - 1].is_ascii_whitespace()
}

/// Matches `:<tag>:` where tag is 1-3 alphanumerics; returns the end offset.
fn match_field_tag(text: &str, pos: usize) -> Option<usize> {
    let rest = &text[pos + 1..];
    let tag_len = rest.bytes().take_while(|b| b.is_ascii_alphanumeric()).count();
    if (1..=3).contains(&tag_len) && rest.as_bytes().get(tag_len) == Some(&b':') {
        Some(pos + 1 + tag_len + 1)
    } else {
        None
    }
}

/// Consumes alphanumerics, keeping `,` and `.` when both neighbors are digits.
fn scan_alnum_run(text: &str, start: usize) -> usize {
    let mut end = start;
    let mut chars = text[start..].char_indices().peekable();
    let mut prev_digit = false;
    while let Some((off, ch)) = chars.next() {
        let abs = start + off;
        if ch.is_alphanumeric() {
            prev_digit = ch.is_ascii_digit();
            end = abs + ch.len_utf8();
        } else if (ch == ',' || ch == '.') && prev_digit {
            match chars.peek() {
                Some(&(_, next)) if next.is_ascii_digit() => {
                    prev_digit = false;
                    end = abs + ch.len_utf8();
                }
                _ => break,
            }
        } else {
            break;
        }
    }
    end
}

/// Splits an alphanumeric run at all-caps/digit transitions unless the run
/// has an account-like shape that must stay whole.
fn split_run(
    run: &str,
    run_start: usize,
    text: &str,
    base: usize,
    field: Option<FieldId>,
    out: &mut Vec<Token>,
) {
    if keep_whole(run) {
        out.push(make_token(text, run_start, run_start + run.len(), base, field));
        return;
    }
    let mut piece_start = 0;
    let mut prev: Option<char> = None;
    for (off, ch) in run.char_indices() {
        if let Some(p) = prev {
            let caps_to_digit = p.is_uppercase() && ch.is_ascii_digit();
            let digit_to_caps = p.is_ascii_digit() && ch.is_uppercase();
            let num_punct = p == ',' || p == '.' || ch == ',' || ch == '.';
            if (caps_to_digit || digit_to_caps) && !num_punct {
                out.push(make_token(text, run_start + piece_start, run_start + off, base, field));
                piece_start = off;
            }
        }
        prev = Some(ch);
    }
    out.push(make_token(text, run_start + piece_start, run_start + run.len(), base, field));
}

/// Shapes that are never split internally: IBANs, BICs, pure numbers and
/// long digit runs (domestic account numbers).
fn keep_whole(run: &str) -> bool {
    if run.bytes().all(|b| b.is_ascii_digit() || b == b',' || b == b'.') {
        return true;
    }
    has_iban_shape(run) || has_bic_shape(run) || has_domestic_account_shape(run)
}

/// Loose IBAN shape: 2 letters, 2 digits, 11-30 alphanumerics.
pub fn has_iban_shape(s: &str) -> bool {
    let b = s.as_bytes();
    (15..=34).contains(&b.len())
        && b[0].is_ascii_uppercase()
        && b[1].is_ascii_uppercase()
        && b[2].is_ascii_digit()
        && b[3].is_ascii_digit()
        && b[4..].iter().all(|c| c.is_ascii_alphanumeric())
}

/// ISO 9362 shape: 6 letters then 2 alphanumerics, optional 3-char branch.
pub fn has_bic_shape(s: &str) -> bool {
    let b = s.as_bytes();
    (b.len() == 8 || b.len() == 11)
        && b[..6].iter().all(|c| c.is_ascii_uppercase())
        && b[6..].iter().all(|c| c.is_ascii_alphanumeric())
}

/// Domestic account shape: up to 3 letters then 6+ digits.
pub fn has_domestic_account_shape(s: &str) -> bool {
    let b = s.as_bytes();
    let letters = b.iter().take_while(|c| c.is_ascii_uppercase()).count();
    if letters > 3 || b.len() - letters < 6 {
        return false;
    }
    b[letters..].iter().all(|c| c.is_ascii_digit())
}

fn make_token(
    text: &str,
    start: usize,
    end: usize,
    base: usize,
    field: Option<FieldId>,
) -> Token {
    debug_assert!(text.is_char_boundary(start) && text.is_char_boundary(end));
    Token {
        text: text[start..end].to_string(),
        char_start: base + start,
        char_end: base + end,
        field_context: field,
    }
}

/// Projects char-offset entity spans onto token indices.
///
/// Each char span maps to the minimal token range covering it; a span that
/// splits a token expands to include the whole token, counted in the
/// returned expansion counter.
pub fn align_char_spans(
    tokens: &TokenSequence,
    char_spans: &[(usize, usize, EntityType)],
    text_len: usize,
) -> Result<(Vec<EntitySpan>, usize), TokenizeError> {
    let mut spans = Vec::with_capacity(char_spans.len());
    let mut expanded = 0usize;
    for &(start, end, entity_type) in char_spans {
        if start >= end || end > text_len {
            return Err(TokenizeError::SpanOutOfBounds {
                id: tokens.message_id.clone(),
                start,
                end,
                len: text_len,
            });
        }
        let mut first = None;
        let mut last = None;
        let mut exact = true;
        for (i, token) in tokens.tokens.iter().enumerate() {
            if token.char_end <= start || token.char_start >= end {
                continue;
            }
            if first.is_none() {
                first = Some(i);
                exact &= token.char_start >= start;
            }
            last = Some(i);
        }
        let (Some(first), Some(last)) = (first, last) else {
            return Err(TokenizeError::SpanCoversNoToken {
                id: tokens.message_id.clone(),
                start,
                end,
            });
        };
        exact &= tokens.tokens[last].char_end <= end;
        if !exact {
            expanded += 1;
        }
        spans.push(EntitySpan {
            entity_type,
            token_start: first,
            token_end: last,
            message_id: tokens.message_id.clone(),
        });
    }
    spans.sort_by_key(|s| (s.token_start, s.token_end));
    Ok((spans, expanded))
}
