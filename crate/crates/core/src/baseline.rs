//! Rule-based baseline tagger: handcrafted patterns, gazetteer matching and
//! field-specific heuristics producing entity spans directly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{EntityType, PaymentMessage};
use crate::eval::EntitySpan;
use crate::features::{normalize_key, Gazetteers};
use crate::formats::{detect_patterns, FieldId, FieldStructure};
use crate::tokenize::{self, TokenSequence};

/// What fires a rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    /// IBAN or domestic-account-shaped token.
    AccountShape,
    /// Amount-pattern token adjacent to a currency code (span covers both).
    AmountWithCurrency,
    /// Longest n-gram match against the bank name gazetteer.
    BankGazetteer,
    /// Country or city gazetteer hit.
    GeoGazetteer,
    /// Run of capitalized non-gazetteer tokens inside a name field
    /// (`:50K:`, `:59:`, `Dbtr`, `Cdtr`).
    CapitalizedNameInField,
    /// Whole content of a remittance field (`:70:`, `RmtInf`).
    RemittanceField,
}

/// One rule: trigger, produced entity type, priority (lower wins).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub kind: RuleKind,
    pub entity_type: EntityType,
    pub priority: i32,
}

/// Ordered rule collection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
}

#[derive(Debug, Error)]
pub enum RuleSetError {
    #[error("duplicate rule priority {0}")]
    DuplicatePriority(i32),
    #[error("bad rule file: {0}")]
    Parse(#[from] serde_json::Error),
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet {
            rules: vec![
                Rule { kind: RuleKind::AccountShape, entity_type: EntityType::AccountNumber, priority: 10 },
                Rule { kind: RuleKind::AmountWithCurrency, entity_type: EntityType::Amount, priority: 20 },
                Rule { kind: RuleKind::BankGazetteer, entity_type: EntityType::Organization, priority: 30 },
                Rule { kind: RuleKind::GeoGazetteer, entity_type: EntityType::Location, priority: 40 },
                Rule { kind: RuleKind::CapitalizedNameInField, entity_type: EntityType::PersonName, priority: 50 },
                Rule { kind: RuleKind::RemittanceField, entity_type: EntityType::Purpose, priority: 60 },
            ],
        }
    }
}

impl RuleSet {
    /// Parses a JSON array of `{kind, entity_type, priority}` objects.
    pub fn from_json(text: &str) -> Result<Self, RuleSetError> {
        let rules: Vec<Rule> = serde_json::from_str(text)?;
        let set = RuleSet { rules };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), RuleSetError> {
        let mut seen = std::collections::BTreeSet::new();
        for rule in &self.rules {
            if !seen.insert(rule.priority) {
                return Err(RuleSetError::DuplicatePriority(rule.priority));
            }
        }
        Ok(())
    }

    fn sorted(&self) -> Vec<Rule> {
        let mut rules = self.rules.clone();
        rules.sort_by_key(|r| r.priority);
        rules
    }
}

/// Candidate span proposed by a rule before conflict resolution.
struct Candidate {
    start: usize,
    end: usize,
    entity_type: EntityType,
    priority: i32,
}

/// Applies the rules in priority order and resolves overlaps by priority,
/// then leftmost-longest. Output spans never overlap.
pub fn rule_tag(
    message: &PaymentMessage,
    tokens: &TokenSequence,
    structure: &FieldStructure,
    gazetteers: &Gazetteers,
    rules: &RuleSet,
) -> Vec<EntitySpan> {
    let mut candidates = Vec::new();
    for rule in rules.sorted() {
        propose(rule, tokens, structure, gazetteers, &mut candidates);
    }
    // Priority, then leftmost, then longest.
    candidates.sort_by(|a, b| {
        a.priority
            .cmp(&b.priority)
            .then(a.start.cmp(&b.start))
            .then(b.end.cmp(&a.end))
    });
    let mut taken = vec![false; tokens.len()];
    let mut spans = Vec::new();
    for candidate in candidates {
        if (candidate.start..=candidate.end).any(|i| taken[i]) {
            continue;
        }
        for slot in taken.iter_mut().take(candidate.end + 1).skip(candidate.start) {
            *slot = true;
        }
        spans.push(EntitySpan::new(
            &message.id,
            candidate.entity_type,
            candidate.start,
            candidate.end,
        ));
    }
    spans.sort_by_key(|s| (s.token_start, s.token_end));
    spans
}

fn propose(
    rule: Rule,
    tokens: &TokenSequence,
    structure: &FieldStructure,
    gazetteers: &Gazetteers,
    out: &mut Vec<Candidate>,
) {
    let items = &tokens.tokens;
    let field_of = |i: usize| -> Option<FieldId> {
        items[i].field_context.or_else(|| structure.field_at(items[i].char_start))
    };
    match rule.kind {
        RuleKind::AccountShape => {
            for (i, token) in items.iter().enumerate() {
                if tokenize::has_iban_shape(&token.text)
                    || tokenize::has_domestic_account_shape(&token.text)
                {
                    out.push(Candidate { start: i, end: i, entity_type: rule.entity_type, priority: rule.priority });
                }
            }
        }
        RuleKind::AmountWithCurrency => {
            for i in 0..items.len().saturating_sub(1) {
                let a = detect_patterns(&items[i].text);
                let b = detect_patterns(&items[i + 1].text);
                if (a.is_currency_code && b.is_amount) || (a.is_amount && b.is_currency_code) {
                    out.push(Candidate { start: i, end: i + 1, entity_type: rule.entity_type, priority: rule.priority });
                }
            }
        }
        RuleKind::BankGazetteer => {
            // Longest n-gram match, up to 4 tokens.
            let mut i = 0;
            while i < items.len() {
                let mut matched = 0;
                for len in (1..=4.min(items.len() - i)).rev() {
                    let phrase = items[i..i + len]
                        .iter()
                        .map(|t| t.text.as_str())
                        .collect::<Vec<_>>()
                        .join(" ");
                    if gazetteers.bank_names.contains(&normalize_key(&phrase)) {
                        out.push(Candidate { start: i, end: i + len - 1, entity_type: rule.entity_type, priority: rule.priority });
                        matched = len;
                        break;
                    }
                }
                i += matched.max(1);
            }
        }
        RuleKind::GeoGazetteer => {
            let mut i = 0;
            while i < items.len() {
                let mut matched = 0;
                for len in (1..=3.min(items.len() - i)).rev() {
                    let phrase = items[i..i + len]
                        .iter()
                        .map(|t| t.text.as_str())
                        .collect::<Vec<_>>()
                        .join(" ");
                    let key = normalize_key(&phrase);
                    if gazetteers.city_names.contains(&key) || gazetteers.country_names.contains(&key) {
                        out.push(Candidate { start: i, end: i + len - 1, entity_type: rule.entity_type, priority: rule.priority });
                        matched = len;
                        break;
                    }
                }
                i += matched.max(1);
            }
        }
        RuleKind::CapitalizedNameInField => {
            let name_field = |f: Option<FieldId>| {
                matches!(f, Some(FieldId::F50K | FieldId::F59 | FieldId::Dbtr | FieldId::Cdtr))
            };
            let mut run_start: Option<usize> = None;
            for i in 0..=items.len() {
                let is_name_token = i < items.len() && {
                    let t = &items[i].text;
                    name_field(field_of(i))
                        && t.chars().next().map_or(false, |c| c.is_uppercase())
                        && t.chars().all(|c| c.is_alphabetic())
                        && !gazetteers.is_bank_word(t)
                        && !gazetteers.is_city(t)
                        && !gazetteers.is_country(t)
                        && !gazetteers.is_currency(t)
                };
                match (run_start, is_name_token) {
                    (None, true) => run_start = Some(i),
                    (Some(start), false) => {
                        out.push(Candidate { start, end: i - 1, entity_type: rule.entity_type, priority: rule.priority });
                        run_start = None;
                    }
                    _ => {}
                }
            }
        }
        RuleKind::RemittanceField => {
            // One span per contiguous token run inside a remittance field.
            let remit = |f: Option<FieldId>| matches!(f, Some(FieldId::F70 | FieldId::RmtInf));
            let mut run_start: Option<usize> = None;
            for i in 0..=items.len() {
                let inside = i < items.len() && remit(field_of(i)) && !is_tag_token(&items[i].text);
                match (run_start, inside) {
                    (None, true) => run_start = Some(i),
                    (Some(start), false) => {
                        out.push(Candidate { start, end: i - 1, entity_type: rule.entity_type, priority: rule.priority });
                        run_start = None;
                    }
                    _ => {}
                }
            }
        }
    }
}

fn is_tag_token(text: &str) -> bool {
    text.len() >= 3 && text.starts_with(':') && text.ends_with(':')
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{MessageFlags, MessageFormat};
    use crate::formats;
    use crate::tokenize::tokenize;

    fn run(format: MessageFormat, text: &str, rules: &RuleSet) -> Vec<EntitySpan> {
        let message = PaymentMessage {
            id: "m".into(),
            format,
            text: text.into(),
            language_tags: Default::default(),
            flags: MessageFlags::default(),
        };
        let tokens = tokenize(&message).unwrap();
        let structure = formats::parse(format, text);
        rule_tag(&message, &tokens, &structure, &Gazetteers::builtin(), rules)
    }

    #[test]
    fn iban_in_beneficiary_field_is_account_number() {
        let spans = run(MessageFormat::Mt103, ":59:GB82WEST12345698765432", &RuleSet::default());
        let account: Vec<_> = spans
            .iter()
            .filter(|s| s.entity_type == EntityType::AccountNumber)
            .collect();
        assert_eq!(account.len(), 1);
        assert_eq!(account[0].token_start, 1);
    }

    #[test]
    fn empty_rule_set_produces_no_spans() {
        let spans = run(
            MessageFormat::Mt103,
            ":59:GB82WEST12345698765432",
            &RuleSet { rules: vec![] },
        );
        assert!(spans.is_empty());
    }

    #[test]
    fn currency_adjacent_amount_covers_both_tokens() {
        let spans = run(MessageFormat::Other, "EUR 1,234.56", &RuleSet::default());
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].entity_type, EntityType::Amount);
        assert_eq!((spans[0].token_start, spans[0].token_end), (0, 1));
    }

    #[test]
    fn bank_gazetteer_matches_multiword_names() {
        let spans = run(MessageFormat::Other, "VIA DEUTSCHE BANK PLEASE", &RuleSet::default());
        let org: Vec<_> =
            spans.iter().filter(|s| s.entity_type == EntityType::Organization).collect();
        assert_eq!(org.len(), 1);
        assert_eq!((org[0].token_start, org[0].token_end), (1, 2));
    }

    #[test]
    fn capitalized_run_in_name_field() {
        let spans = run(MessageFormat::Mt103, ":50K:WALDO PEPPER\n:71A:SHA", &RuleSet::default());
        let person: Vec<_> =
            spans.iter().filter(|s| s.entity_type == EntityType::PersonName).collect();
        assert_eq!(person.len(), 1);
        assert_eq!((person[0].token_start, person[0].token_end), (1, 2));
    }

    #[test]
    fn remittance_field_becomes_purpose() {
        let spans = run(MessageFormat::Mt103, ":70:RENT MARCH 2024", &RuleSet::default());
        let purpose: Vec<_> =
            spans.iter().filter(|s| s.entity_type == EntityType::Purpose).collect();
        assert_eq!(purpose.len(), 1);
        assert_eq!((purpose[0].token_start, purpose[0].token_end), (1, 3));
    }

    #[test]
    fn outputs_never_overlap() {
        let spans = run(
            MessageFormat::Mt103,
            ":59:GB82WEST12345698765432\nDEUTSCHE BANK LONDON\n:70:EUR 100,00 RENT",
            &RuleSet::default(),
        );
        for pair in spans.windows(2) {
            assert!(pair[0].token_end < pair[1].token_start);
        }
    }

    #[test]
    fn lower_priority_rule_never_changes_higher_priority_output() {
        let text = ":59:GB82WEST12345698765432\nDEUTSCHE BANK\n:70:EUR 55,00 DONATION";
        let mut rules = RuleSet::default();
        rules.rules.truncate(3); // account, amount, bank
        let base = run(MessageFormat::Mt103, text, &rules);
        let full = run(MessageFormat::Mt103, text, &RuleSet::default());
        for span in &base {
            assert!(full.contains(span), "higher-priority span lost: {span:?}");
        }
    }

    #[test]
    fn duplicate_priorities_rejected() {
        let mut rules = RuleSet::default();
        rules.rules[1].priority = rules.rules[0].priority;
        assert!(rules.validate().is_err());
    }

    #[test]
    fn rule_file_roundtrip() {
        let json = serde_json::to_string(&RuleSet::default().rules).unwrap();
        let parsed = RuleSet::from_json(&json).unwrap();
        assert_eq!(parsed, RuleSet::default());
    }
}
