//! Pattern validators and indicators: IBAN mod-97, BIC shape, currency
//! codes, amounts and dates.

use std::collections::HashSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// Binary pattern indicators for one token.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternFlags {
    pub is_iban: bool,
    pub is_bic: bool,
    pub is_currency_code: bool,
    pub is_amount: bool,
    pub is_date: bool,
}

/// ISO 13616 IBAN validation: 15-34 chars, two-letter country code, two
/// check digits, alphanumeric body, and the mod-97 remainder of the
/// rearranged string equals 1. The remainder is computed by streaming the
/// digit expansion through `u32` arithmetic, so no big integers are needed.
pub fn validate_iban(s: &str) -> bool {
    let b = s.as_bytes();
    if !(15..=34).contains(&b.len()) {
        return false;
    }
    if !(b[0].is_ascii_uppercase() && b[1].is_ascii_uppercase()) {
        return false;
    }
    if !(b[2].is_ascii_digit() && b[3].is_ascii_digit()) {
        return false;
    }
    if !b[4..].iter().all(|c| c.is_ascii_alphanumeric()) {
        return false;
    }
    // Move the first four chars to the end, then take mod 97 of the
    // digit expansion (A=10 .. Z=35).
    let rearranged = b[4..].iter().chain(&b[..4]);
    let mut acc: u32 = 0;
    for &c in rearranged {
        if c.is_ascii_digit() {
            acc = (acc * 10 + (c - b'0') as u32) % 97;
        } else if c.is_ascii_uppercase() {
            acc = (acc * 100 + (c - b'A') as u32 + 10) % 97;
        } else {
            return false;
        }
    }
    acc == 1
}

/// ISO 9362 BIC shape: 4-letter bank code, 2-letter country, 2-alphanumeric
/// location, optional 3-alphanumeric branch (8 or 11 chars total).
pub fn validate_bic(s: &str) -> bool {
    let b = s.as_bytes();
    if b.len() != 8 && b.len() != 11 {
        return false;
    }
    b[..6].iter().all(|c| c.is_ascii_uppercase())
        && b[6..].iter().all(|c| c.is_ascii_alphanumeric())
}

fn currency_codes() -> &'static HashSet<&'static str> {
    static CODES: OnceLock<HashSet<&'static str>> = OnceLock::new();
    CODES.get_or_init(|| {
        include_str!("../../data/currencies.txt")
            .lines()
            .map(|l| l.trim())
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

/// True iff the token is on the shipped ISO-4217 whitelist.
pub fn is_currency_code(s: &str) -> bool {
    s.len() == 3 && currency_codes().contains(s)
}

/// Digits with optional `,`/`.` group or decimal separators: `1,234.56`,
/// `1234,56`, `100`.
pub fn is_amount_pattern(s: &str) -> bool {
    let b = s.as_bytes();
    if b.is_empty() || !b[0].is_ascii_digit() || !b[b.len() - 1].is_ascii_digit() {
        return false;
    }
    let mut prev_sep = false;
    for &c in b {
        if c.is_ascii_digit() {
            prev_sep = false;
        } else if (c == b',' || c == b'.') && !prev_sep {
            prev_sep = true;
        } else {
            return false;
        }
    }
    true
}

/// Date shapes used in payment messages: `YYMMDD` (MT103 value dates),
/// `YYYY-MM-DD`, `DD/MM/YYYY`.
pub fn is_date_pattern(s: &str) -> bool {
    let b = s.as_bytes();
    let digits = |r: std::ops::Range<usize>| b[r].iter().all(|c| c.is_ascii_digit());
    let to_num = |r: std::ops::Range<usize>| -> u32 {
        s[r].parse().unwrap_or(0)
    };
    match b.len() {
        6 if digits(0..6) => {
            let month = to_num(2..4);
            let day = to_num(4..6);
            (1..=12).contains(&month) && (1..=31).contains(&day)
        }
        10 if b[4] == b'-' && b[7] == b'-' && digits(0..4) && digits(5..7) && digits(8..10) => {
            (1..=12).contains(&to_num(5..7)) && (1..=31).contains(&to_num(8..10))
        }
        10 if b[2] == b'/' && b[5] == b'/' && digits(0..2) && digits(3..5) && digits(6..10) => {
            (1..=31).contains(&to_num(0..2)) && (1..=12).contains(&to_num(3..5))
        }
        _ => false,
    }
}

/// Evaluates all pattern indicators for one token.
pub fn detect_patterns(token_text: &str) -> PatternFlags {
    PatternFlags {
        is_iban: validate_iban(token_text),
        is_bic: validate_bic(token_text),
        is_currency_code: is_currency_code(token_text),
        is_amount: is_amount_pattern(token_text),
        is_date: is_date_pattern(token_text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_good_iban_accepted() {
        assert!(validate_iban("GB82WEST12345698765432"));
        assert!(validate_iban("DE02120300000000202051"));
    }

    #[test]
    fn perturbed_check_digit_rejected() {
        assert!(!validate_iban("GB82WEST12345698765431"));
        assert!(!validate_iban("GB83WEST12345698765432"));
    }

    #[test]
    fn iban_shape_violations_rejected() {
        assert!(!validate_iban(""));
        assert!(!validate_iban("GB82WEST123"));
        assert!(!validate_iban("G882WEST12345698765432"));
        assert!(!validate_iban("GBAAWEST12345698765432"));
        assert!(!validate_iban("gb82west12345698765432"));
    }

    #[test]
    fn bic_forms() {
        assert!(validate_bic("DEUTDEFF"));
        assert!(validate_bic("DEUTDEFF500"));
        assert!(!validate_bic("DEUT1EFF"));
        assert!(!validate_bic("DEUTDEFF5"));
        assert!(!validate_bic("deutdeff"));
    }

    #[test]
    fn currency_whitelist() {
        assert!(is_currency_code("EUR"));
        assert!(is_currency_code("USD"));
        assert!(!is_currency_code("XXZ"));
        assert!(!is_currency_code("EURO"));
    }

    #[test]
    fn amount_patterns() {
        assert!(is_amount_pattern("1,234.56"));
        assert!(is_amount_pattern("1234,56"));
        assert!(is_amount_pattern("100"));
        assert!(!is_amount_pattern("1,,2"));
        assert!(!is_amount_pattern("12."));
        assert!(!is_amount_pattern("EUR"));
    }

    #[test]
    fn date_patterns() {
        assert!(is_date_pattern("240115"));
        assert!(is_date_pattern("2024-01-15"));
        assert!(is_date_pattern("15/01/2024"));
        assert!(!is_date_pattern("241315")); // month 13
        assert!(!is_date_pattern("123456789"));
    }

    #[test]
    fn detect_combines_flags() {
        let flags = detect_patterns("EUR");
        assert!(flags.is_currency_code && !flags.is_amount && !flags.is_iban);
        let flags = detect_patterns("1,234.56");
        assert!(flags.is_amount);
        let flags = detect_patterns("240115");
        assert!(flags.is_date && flags.is_amount);
    }
}
