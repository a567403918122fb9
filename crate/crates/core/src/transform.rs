//! Declarative rewrites from canonical terms to derived patterns.
//!
//! A [`TransformRule`] pairs a regular expression over the canonical term
//! (full `regex` syntax, capture groups allowed) with a template written in
//! the pattern dialect. Applying a rule replaces every match of the
//! expression with the expanded template; the untouched parts of the term and
//! the text of every capture are escaped, so the output is always a pattern
//! even when the term itself contains operator characters.
//!
//! Templates reference captures as `$1`, `${1}` or `${name}`; `$$` is a
//! literal dollar sign.

use std::collections::{BTreeSet, HashSet};

use regex::{Captures, Regex};
use thiserror::Error;

use crate::lexicon::{LexEntry, PrimaryEntity, Source};
use crate::pattern::{self, EnumerateError, Pattern, PatternError};

/// Default cap on the number of strings enumerated from one pattern.
pub const DEFAULT_ENUMERATION_LIMIT: usize = 256;

/// Rule id recorded on generated plural forms.
pub const PLURAL_RULE_ID: &str = "plural";

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("line {line}: expected 4 tab-separated columns, found {found}")]
    Malformed { line: usize, found: usize },
    #[error("line {line}: empty {field}")]
    EmptyField { line: usize, field: &'static str },
    #[error("line {line}: invalid match expression: {source}")]
    BadMatch { line: usize, source: regex::Error },
    #[error("line {line}: invalid priority {value:?}")]
    BadPriority { line: usize, value: String },
    #[error("line {line}: {message}")]
    BadTemplate { line: usize, message: String },
    #[error("line {line}: duplicate rule id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("rule {rule:?} on term {term:?} produced an invalid pattern: {source}")]
    InvalidOutput {
        rule: String,
        term: String,
        source: PatternError,
    },
    #[error("rule {rule:?} on term {term:?} produced {pattern:?}, which matches the empty string")]
    EmptyMatch {
        rule: String,
        term: String,
        pattern: String,
    },
}

#[derive(Debug, Clone)]
pub struct TransformRule {
    pub id: String,
    matcher: Regex,
    pub template: String,
    pub priority: i64,
}

impl PartialEq for TransformRule {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.matcher.as_str() == other.matcher.as_str()
            && self.template == other.template
            && self.priority == other.priority
    }
}

impl TransformRule {
    pub fn new(id: &str, matcher: &str, template: &str, priority: i64) -> Result<Self, TransformError> {
        Self::build(0, id, matcher, template, priority)
    }

    fn build(line: usize, id: &str, matcher: &str, template: &str, priority: i64) -> Result<Self, TransformError> {
        let matcher = Regex::new(matcher).map_err(|source| TransformError::BadMatch { line, source })?;
        check_template(&matcher, template).map_err(|message| TransformError::BadTemplate { line, message })?;
        Ok(Self {
            id: id.to_string(),
            matcher,
            template: template.to_string(),
            priority,
        })
    }

    pub fn match_source(&self) -> &str {
        self.matcher.as_str()
    }

    /// Canonical TSV line for this rule (no trailing newline).
    pub fn to_tsv(&self) -> String {
        format!("{}\t{}\t{}\t{}", self.id, self.matcher.as_str(), self.template, self.priority)
    }
}

/// Parses a transform file: `id`, `match`, `template`, `priority` per line,
/// tab-separated, with `#` comments and blank lines ignored.
pub fn parse_transform_rules(text: &str) -> Result<Vec<TransformRule>, TransformError> {
    let mut rules = Vec::new();
    let mut ids = HashSet::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        if cols.len() != 4 {
            return Err(TransformError::Malformed { line, found: cols.len() });
        }
        for (value, field) in cols.iter().zip(["id", "match", "template", "priority"]) {
            if value.trim().is_empty() {
                return Err(TransformError::EmptyField { line, field });
            }
        }
        let priority = cols[3]
            .trim()
            .parse()
            .map_err(|_| TransformError::BadPriority {
                line,
                value: cols[3].to_string(),
            })?;
        let id = cols[0].trim();
        if !ids.insert(id.to_string()) {
            return Err(TransformError::DuplicateId { line, id: id.to_string() });
        }
        rules.push(TransformRule::build(line, id, cols[1], cols[2], priority)?);
    }
    Ok(rules)
}

enum Piece<'t> {
    Text(&'t str),
    Group(GroupRef<'t>),
}

enum GroupRef<'t> {
    Index(usize),
    Name(&'t str),
}

fn template_pieces(template: &str) -> Result<Vec<Piece<'_>>, String> {
    let mut pieces = Vec::new();
    let mut rest = template;
    while let Some(at) = rest.find('$') {
        if at > 0 {
            pieces.push(Piece::Text(&rest[..at]));
        }
        let after = &rest[at + 1..];
        if let Some(tail) = after.strip_prefix('$') {
            pieces.push(Piece::Text("$"));
            rest = tail;
        } else if let Some(tail) = after.strip_prefix('{') {
            let close = tail.find('}').ok_or("unclosed `${` in template")?;
            let name = &tail[..close];
            if name.is_empty() {
                return Err("empty group reference `${}`".into());
            }
            pieces.push(Piece::Group(match name.parse() {
                Ok(n) => GroupRef::Index(n),
                Err(_) => GroupRef::Name(name),
            }));
            rest = &tail[close + 1..];
        } else {
            let digits = after.len() - after.trim_start_matches(|c: char| c.is_ascii_digit()).len();
            if digits == 0 {
                return Err("`$` must be followed by a group number, `{name}` or `$`".into());
            }
            pieces.push(Piece::Group(GroupRef::Index(after[..digits].parse().unwrap())));
            rest = &after[digits..];
        }
    }
    if !rest.is_empty() {
        pieces.push(Piece::Text(rest));
    }
    Ok(pieces)
}

fn check_template(matcher: &Regex, template: &str) -> Result<(), String> {
    for piece in template_pieces(template)? {
        match piece {
            Piece::Group(GroupRef::Index(n)) if n >= matcher.captures_len() => {
                return Err(format!("template references group {n}, the expression has {}", matcher.captures_len() - 1));
            }
            Piece::Group(GroupRef::Name(name)) if !matcher.capture_names().flatten().any(|n| n == name) => {
                return Err(format!("template references unknown group {name:?}"));
            }
            _ => {}
        }
    }
    Ok(())
}

fn expand(template: &str, caps: &Captures<'_>, out: &mut String) {
    // the template was validated when the rule was built
    for piece in template_pieces(template).expect("validated template") {
        match piece {
            Piece::Text(text) => out.push_str(text),
            Piece::Group(group) => {
                let m = match group {
                    GroupRef::Index(n) => caps.get(n),
                    GroupRef::Name(name) => caps.name(name),
                };
                if let Some(m) = m {
                    out.push_str(&pattern::escape(m.as_str()));
                }
            }
        }
    }
}

/// Applies one rule to a canonical term. A rule that does not match yields
/// nothing, and an output identical to the term itself is dropped.
pub fn apply_transform(rule: &TransformRule, term: &str) -> Vec<String> {
    if !rule.matcher.is_match(term) {
        return Vec::new();
    }
    let mut out = String::new();
    let mut last = 0;
    for caps in rule.matcher.captures_iter(term) {
        let whole = caps.get(0).expect("group 0 always participates");
        out.push_str(&pattern::escape(&term[last..whole.start()]));
        expand(&rule.template, &caps, &mut out);
        last = whole.end();
    }
    out.push_str(&pattern::escape(&term[last..]));
    if out == pattern::escape(term) {
        Vec::new()
    } else {
        vec![out]
    }
}

/// Options for secondary-entity generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SecondaryOptions {
    pub pluralize: bool,
}

impl Default for SecondaryOptions {
    fn default() -> Self {
        Self { pluralize: true }
    }
}

/// Spanish plural of a single-token literal: `s` after a final vowel, `es`
/// after a final consonant. Tokens ending in anything other than a lowercase
/// letter (acronyms, digits, punctuation) get no plural.
pub fn pluralize(token: &str) -> Option<String> {
    if token.is_empty() || token.chars().any(char::is_whitespace) {
        return None;
    }
    let last = token.chars().last()?;
    if !last.is_alphabetic() || !last.is_lowercase() {
        return None;
    }
    let suffix = if "aeiouáéíóú".contains(last) { "s" } else { "es" };
    Some(format!("{token}{suffix}"))
}

/// Derives the secondary entries of one primary entity. Every derived entry
/// inherits class, concept id and rank from `entry` and remembers which rule
/// produced it.
pub fn generate_secondary(
    entry: &PrimaryEntity,
    rules: &[TransformRule],
    options: SecondaryOptions,
) -> Result<Vec<LexEntry>, TransformError> {
    let mut ordered: Vec<&TransformRule> = rules.iter().collect();
    ordered.sort_by(|a, b| a.priority.cmp(&b.priority).then_with(|| a.id.cmp(&b.id)));

    let mut derived: Vec<(String, String)> = Vec::new();
    for rule in ordered {
        derived.extend(apply_transform(rule, &entry.term).into_iter().map(|p| (p, rule.id.clone())));
    }

    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut plural_sources = vec![entry.term.clone()];
    let mut push = |pattern: String, is_regexp: bool, rule: String, out: &mut Vec<LexEntry>| {
        if !is_regexp && pattern == entry.term {
            return;
        }
        if seen.insert((pattern.clone(), is_regexp)) {
            out.push(LexEntry {
                pattern,
                is_regexp,
                class: entry.class,
                concept_id: entry.concept_id.clone(),
                rank: entry.rank,
                source: Source::Secondary,
                ambiguous_focus: false,
                canonical: entry.term.clone(),
                rule: Some(rule),
            });
        }
    };

    for (text, rule) in derived {
        let parsed = Pattern::parse(&text).map_err(|source| TransformError::InvalidOutput {
            rule: rule.clone(),
            term: entry.term.clone(),
            source,
        })?;
        if parsed.matches_empty() {
            return Err(TransformError::EmptyMatch {
                rule,
                term: entry.term.clone(),
                pattern: text,
            });
        }
        match parsed.literal_text() {
            Some(literal) => {
                plural_sources.push(literal.clone());
                push(literal, false, rule, &mut out);
            }
            None => push(text, true, rule, &mut out),
        }
    }

    if options.pluralize {
        for source in plural_sources {
            if let Some(plural) = pluralize(&source) {
                push(plural, false, PLURAL_RULE_ID.to_string(), &mut out);
            }
        }
    }
    Ok(out)
}

/// The finite language of `pattern`, sorted, or an error when it is infinite
/// or larger than `limit`.
pub fn enumerate_pattern(pattern: &str, limit: usize) -> Result<BTreeSet<String>, EnumerateError> {
    Pattern::parse_extended(pattern)?.enumerate(limit)
}
