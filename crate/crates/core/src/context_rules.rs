//! Contextual rules that pick the reading of an ambiguous focus.
//!
//! ```text
//! b:[il::bioquímica|en sangre|hemograma|prote.na] - [PCR] - >
//! [m=proteína]
//! ```
//!
//! A rule is `LEFT? - [FOCUS] - (RIGHT -)? > [m=EXPANSION]`. A context is
//! `[FLAGS::ALT|ALT|...]`, optionally prefixed with `b:` to make it apply on
//! either side of the focus. Flags are `i` (case-insensitive) and `l` (local:
//! the match must start within the window, 40 characters by default, of the
//! focus edge). Alternatives are dialect patterns matched as stems at word
//! starts. Newlines and the indentation that follows them are ignored inside
//! brackets, so a long alternative list can be wrapped freely; `#` at the
//! start of a line outside brackets begins a comment.

use std::fmt;

use regex::Regex;
use thiserror::Error;

use crate::pattern::{Pattern, PatternError};
use crate::scanner::is_word_char;

pub const DEFAULT_WINDOW: usize = 40;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct RuleError {
    pub line: usize,
    pub kind: RuleErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleErrorKind {
    UnbalancedBracket,
    MissingFocus,
    MissingAction,
    UnknownFlag(char),
    MalformedContext(String),
    Unexpected(String),
    BadPattern(PatternError),
}

impl fmt::Display for RuleErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UnbalancedBracket => f.write_str("unbalanced bracket"),
            Self::MissingFocus => f.write_str("missing focus"),
            Self::MissingAction => f.write_str("missing action `> [m=...]`"),
            Self::UnknownFlag(c) => write!(f, "unknown flag {c:?}"),
            Self::MalformedContext(why) => write!(f, "malformed context: {why}"),
            Self::Unexpected(what) => write!(f, "unexpected {what}"),
            Self::BadPattern(e) => write!(f, "{e}"),
        }
    }
}

/// One side condition: a disjunction of stems with its flags.
#[derive(Debug, Clone)]
pub struct ContextSpec {
    pub alternatives: Vec<String>,
    pub case_insensitive: bool,
    pub local: bool,
    pub window_chars: usize,
    matcher: Regex,
}

impl PartialEq for ContextSpec {
    fn eq(&self, other: &Self) -> bool {
        self.alternatives == other.alternatives
            && self.case_insensitive == other.case_insensitive
            && self.local == other.local
            && self.window_chars == other.window_chars
    }
}

impl ContextSpec {
    pub fn new(
        alternatives: Vec<String>,
        case_insensitive: bool,
        local: bool,
        window_chars: usize,
    ) -> Result<Self, RuleErrorKind> {
        if alternatives.is_empty() {
            return Err(RuleErrorKind::MalformedContext("no alternatives".into()));
        }
        for alt in &alternatives {
            let parsed = Pattern::parse(alt).map_err(RuleErrorKind::BadPattern)?;
            if parsed.matches_empty() {
                return Err(RuleErrorKind::MalformedContext(format!("alternative {alt:?} matches the empty string")));
            }
        }
        let flags = if case_insensitive { "(?i)" } else { "" };
        let matcher = Regex::new(&format!("{flags}^(?:{})", alternatives.join("|")))
            .map_err(|e| RuleErrorKind::MalformedContext(e.to_string()))?;
        Ok(Self {
            alternatives,
            case_insensitive,
            local,
            window_chars,
            matcher,
        })
    }

    fn render(&self) -> String {
        let mut flags = String::new();
        if self.case_insensitive {
            flags.push('i');
        }
        if self.local {
            flags.push('l');
        }
        format!("[{flags}::{}]", self.alternatives.join("|"))
    }

    /// Whether a context match ends at or before `focus_start`, within the
    /// window when local.
    fn holds_left(&self, text: &IndexedText<'_>, focus_start: usize) -> bool {
        (0..focus_start).filter(|&p| text.is_word_start(p)).any(|p| {
            self.match_end(text, p)
                .is_some_and(|end| end <= focus_start && (!self.local || focus_start - end <= self.window_chars))
        })
    }

    /// Whether a context match starts at or after `focus_end`, within the
    /// window when local.
    fn holds_right(&self, text: &IndexedText<'_>, focus_end: usize) -> bool {
        let last = if self.local {
            (focus_end + self.window_chars).min(text.len().saturating_sub(1))
        } else {
            text.len().saturating_sub(1)
        };
        (focus_end..=last)
            .filter(|&p| p < text.len() && text.is_word_start(p))
            .any(|p| self.match_end(text, p).is_some())
    }

    fn match_end(&self, text: &IndexedText<'_>, start: usize) -> Option<usize> {
        let from = text.byte(start);
        let m = self.matcher.find(&text.text[from..])?;
        Some(text.char_at_byte(from + m.end()))
    }
}

/// When a rule's context condition holds.
#[derive(Debug, Clone, PartialEq)]
pub enum ContextCondition {
    /// Default rule: no context, always applicable.
    Always,
    /// Independent left and/or right conditions; every present side must hold.
    Sides {
        left: Option<ContextSpec>,
        right: Option<ContextSpec>,
    },
    /// `b:` rule: the single context may hold on either side.
    Either(ContextSpec),
}

#[derive(Debug, Clone)]
pub struct ContextRule {
    /// 1-based ordinal in the rule file.
    pub rule_id: usize,
    pub focus: String,
    pub condition: ContextCondition,
    pub expansion: String,
    focus_matcher: Regex,
}

impl PartialEq for ContextRule {
    fn eq(&self, other: &Self) -> bool {
        self.rule_id == other.rule_id
            && self.focus == other.focus
            && self.condition == other.condition
            && self.expansion == other.expansion
    }
}

impl ContextRule {
    pub fn new(rule_id: usize, focus: &str, condition: ContextCondition, expansion: &str) -> Result<Self, RuleErrorKind> {
        let parsed = Pattern::parse(focus).map_err(RuleErrorKind::BadPattern)?;
        if parsed.matches_empty() {
            return Err(RuleErrorKind::MissingFocus);
        }
        if expansion.trim().is_empty() {
            return Err(RuleErrorKind::MissingAction);
        }
        let condition = match condition {
            ContextCondition::Sides { left: None, right: None } => ContextCondition::Always,
            other => other,
        };
        Ok(Self {
            rule_id,
            focus: focus.to_string(),
            condition,
            expansion: expansion.to_string(),
            focus_matcher: Regex::new(&format!("^(?:{focus})$")).expect("dialect patterns are valid regexes"),
        })
    }

    pub fn is_default(&self) -> bool {
        self.condition == ContextCondition::Always
    }

    pub fn is_bidirectional(&self) -> bool {
        matches!(self.condition, ContextCondition::Either(_))
    }

    /// Whether `surface` is a realization of this rule's focus.
    pub fn focus_matches(&self, surface: &str) -> bool {
        self.focus_matcher.is_match(surface)
    }

    fn applies(&self, text: &IndexedText<'_>, span: (usize, usize)) -> bool {
        match &self.condition {
            ContextCondition::Always => true,
            ContextCondition::Either(spec) => spec.holds_left(text, span.0) || spec.holds_right(text, span.1),
            ContextCondition::Sides { left, right } => {
                left.as_ref().is_none_or(|s| s.holds_left(text, span.0))
                    && right.as_ref().is_none_or(|s| s.holds_right(text, span.1))
            }
        }
    }
}

/// Canonical text of one rule.
pub fn serialize_rule(rule: &ContextRule) -> String {
    let focus = format!("- [{}] - ", rule.focus);
    let action = format!("> [m={}]", rule.expansion);
    match &rule.condition {
        ContextCondition::Always => format!("{focus}{action}"),
        ContextCondition::Either(spec) => format!("b:{} {focus}{action}", spec.render()),
        ContextCondition::Sides { left, right } => {
            let mut out = String::new();
            if let Some(left) = left {
                out.push_str(&left.render());
                out.push(' ');
            }
            out.push_str(&focus);
            if let Some(right) = right {
                out.push_str(&right.render());
                out.push_str(" - ");
            }
            out.push_str(&action);
            out
        }
    }
}

/// Canonical text of a rule file, one rule per line.
pub fn serialize_rules(rules: &[ContextRule]) -> String {
    rules.iter().map(|r| serialize_rule(r) + "\n").collect()
}

pub fn parse_rules(text: &str) -> Result<Vec<ContextRule>, RuleError> {
    parse_rules_with_window(text, DEFAULT_WINDOW)
}

/// Parses a rule file, giving every local context `window_chars` as its
/// window.
pub fn parse_rules_with_window(text: &str, window_chars: usize) -> Result<Vec<ContextRule>, RuleError> {
    let tokens = lex(text)?;
    let mut rules = Vec::new();
    let mut pos = 0;
    while pos < tokens.len() {
        let (rule, next) = parse_one(&tokens, pos, rules.len() + 1, window_chars)?;
        rules.push(rule);
        pos = next;
    }
    Ok(rules)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Dash,
    Arrow,
    Both,
    Bracket(String),
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, RuleError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut line = 1;
    let mut line_start = true;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '\n' => {
                line += 1;
                line_start = true;
                i += 1;
                continue;
            }
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '#' if line_start => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '-' => tokens.push((Tok::Dash, line)),
            '>' => tokens.push((Tok::Arrow, line)),
            'b' if chars.get(i + 1) == Some(&':') => {
                tokens.push((Tok::Both, line));
                i += 1;
            }
            '[' => {
                let open_line = line;
                let mut depth = 1;
                let mut body = String::new();
                i += 1;
                loop {
                    let Some(&c) = chars.get(i) else {
                        return Err(RuleError {
                            line: open_line,
                            kind: RuleErrorKind::UnbalancedBracket,
                        });
                    };
                    match c {
                        '\\' => {
                            body.push(c);
                            if let Some(&next) = chars.get(i + 1) {
                                body.push(next);
                                i += 1;
                            }
                        }
                        '[' => {
                            depth += 1;
                            body.push(c);
                        }
                        ']' => {
                            depth -= 1;
                            if depth == 0 {
                                break;
                            }
                            body.push(c);
                        }
                        '\n' => {
                            line += 1;
                            body.push(c);
                        }
                        c => body.push(c),
                    }
                    i += 1;
                }
                tokens.push((Tok::Bracket(body), open_line));
            }
            ']' => {
                return Err(RuleError {
                    line,
                    kind: RuleErrorKind::UnbalancedBracket,
                })
            }
            other => {
                return Err(RuleError {
                    line,
                    kind: RuleErrorKind::Unexpected(format!("character {other:?}")),
                })
            }
        }
        line_start = false;
        i += 1;
    }
    Ok(tokens)
}

/// Drops every whitespace run that contains a line break.
fn unwrap_lines(body: &str) -> String {
    let mut out = String::with_capacity(body.len());
    let mut pending = String::new();
    let mut broken = false;
    for c in body.chars() {
        if c.is_whitespace() {
            pending.push(c);
            broken |= c == '\n';
        } else {
            if !broken {
                out.push_str(&pending);
            }
            pending.clear();
            broken = false;
            out.push(c);
        }
    }
    if !broken {
        out.push_str(&pending);
    }
    out
}

/// Splits on `|` outside groups and classes.
fn split_alternatives(body: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut depth = 0i32;
    let mut in_class = false;
    let mut escaped = false;
    for c in body.chars() {
        if escaped {
            escaped = false;
            current.push(c);
            continue;
        }
        match c {
            '\\' => escaped = true,
            '[' if !in_class => in_class = true,
            ']' if in_class => in_class = false,
            '(' if !in_class => depth += 1,
            ')' if !in_class => depth -= 1,
            '|' if !in_class && depth == 0 => {
                out.push(std::mem::take(&mut current));
                continue;
            }
            _ => {}
        }
        current.push(c);
    }
    out.push(current);
    out.into_iter().map(|s| s.trim().to_string()).collect()
}

fn parse_context(body: &str, line: usize, window: usize) -> Result<Option<ContextSpec>, RuleError> {
    let err = |kind| RuleError { line, kind };
    let body = unwrap_lines(body);
    if body.trim().is_empty() {
        return Ok(None);
    }
    let (flags, alts) = body
        .split_once("::")
        .ok_or_else(|| err(RuleErrorKind::MalformedContext("expected `FLAGS::ALTERNATIVES`".into())))?;
    let mut case_insensitive = false;
    let mut local = false;
    for flag in flags.trim().chars() {
        match flag {
            'i' => case_insensitive = true,
            'l' => local = true,
            other => return Err(err(RuleErrorKind::UnknownFlag(other))),
        }
    }
    let alternatives = split_alternatives(alts);
    if alternatives.iter().any(String::is_empty) {
        return Err(err(RuleErrorKind::MalformedContext("empty alternative".into())));
    }
    ContextSpec::new(alternatives, case_insensitive, local, window)
        .map(Some)
        .map_err(err)
}

fn parse_one(
    tokens: &[(Tok, usize)],
    mut pos: usize,
    rule_id: usize,
    window: usize,
) -> Result<(ContextRule, usize), RuleError> {
    let rule_line = tokens[pos].1;
    let line_at = |p: usize| tokens.get(p).map_or_else(|| tokens.last().map_or(rule_line, |t| t.1), |t| t.1);

    // optional context: `b:`? `[...]`
    let context = |pos: &mut usize| -> Result<Option<(Option<ContextSpec>, bool)>, RuleError> {
        let both = matches!(tokens.get(*pos), Some((Tok::Both, _)));
        let at = *pos + usize::from(both);
        match tokens.get(at) {
            Some((Tok::Bracket(body), line)) => {
                *pos = at + 1;
                Ok(Some((parse_context(body, *line, window)?, both)))
            }
            _ if both => Err(RuleError {
                line: line_at(at),
                kind: RuleErrorKind::MalformedContext("`b:` must precede a context".into()),
            }),
            _ => Ok(None),
        }
    };
    let expect = |pos: &mut usize, want: Tok, missing: RuleErrorKind| -> Result<(), RuleError> {
        match tokens.get(*pos) {
            Some((tok, _)) if *tok == want => {
                *pos += 1;
                Ok(())
            }
            _ => Err(RuleError {
                line: line_at(*pos),
                kind: missing,
            }),
        }
    };

    let left = context(&mut pos)?;
    expect(&mut pos, Tok::Dash, RuleErrorKind::MissingFocus)?;
    let focus = match tokens.get(pos) {
        Some((Tok::Bracket(body), _)) if !body.trim().is_empty() => {
            pos += 1;
            body.trim().to_string()
        }
        _ => {
            return Err(RuleError {
                line: line_at(pos),
                kind: RuleErrorKind::MissingFocus,
            })
        }
    };
    expect(&mut pos, Tok::Dash, RuleErrorKind::MissingAction)?;
    let right = if matches!(tokens.get(pos), Some((Tok::Arrow, _))) {
        None
    } else {
        let right = context(&mut pos)?;
        if right.is_none() {
            return Err(RuleError {
                line: line_at(pos),
                kind: RuleErrorKind::MissingAction,
            });
        }
        expect(&mut pos, Tok::Dash, RuleErrorKind::MissingAction)?;
        right
    };
    expect(&mut pos, Tok::Arrow, RuleErrorKind::MissingAction)?;
    let expansion = match tokens.get(pos) {
        Some((Tok::Bracket(body), _)) => {
            let body = unwrap_lines(body);
            match body.trim().strip_prefix("m=") {
                Some(exp) if !exp.trim().is_empty() => {
                    pos += 1;
                    exp.trim().to_string()
                }
                _ => {
                    return Err(RuleError {
                        line: line_at(pos),
                        kind: RuleErrorKind::MissingAction,
                    })
                }
            }
        }
        _ => {
            return Err(RuleError {
                line: line_at(pos),
                kind: RuleErrorKind::MissingAction,
            })
        }
    };

    let condition = match (left, right) {
        (Some((Some(spec), true)), None) | (None, Some((Some(spec), true))) => ContextCondition::Either(spec),
        (Some((_, true)), _) | (_, Some((_, true))) => {
            return Err(RuleError {
                line: rule_line,
                kind: RuleErrorKind::MalformedContext("a `b:` rule takes exactly one non-empty context".into()),
            })
        }
        (left, right) => ContextCondition::Sides {
            left: left.and_then(|(spec, _)| spec),
            right: right.and_then(|(spec, _)| spec),
        },
    };
    let rule = ContextRule::new(rule_id, &focus, condition, &expansion).map_err(|kind| RuleError {
        line: rule_line,
        kind,
    })?;
    Ok((rule, pos))
}

/// Text with a character-to-byte index, shared across several lookups in
/// one document.
pub struct IndexedText<'t> {
    text: &'t str,
    chars: Vec<char>,
    bytes: Vec<usize>,
}

impl<'t> IndexedText<'t> {
    pub fn new(text: &'t str) -> Self {
        let mut chars = Vec::new();
        let mut bytes = Vec::new();
        for (b, c) in text.char_indices() {
            chars.push(c);
            bytes.push(b);
        }
        bytes.push(text.len());
        Self { text, chars, bytes }
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn text(&self) -> &'t str {
        self.text
    }

    fn byte(&self, char_offset: usize) -> usize {
        self.bytes[char_offset]
    }

    fn char_at_byte(&self, byte: usize) -> usize {
        self.bytes.partition_point(|&b| b < byte)
    }

    /// The text between two character offsets.
    pub fn slice(&self, start: usize, end: usize) -> &'t str {
        &self.text[self.bytes[start]..self.bytes[end]]
    }

    fn is_word_start(&self, p: usize) -> bool {
        p == 0 || !is_word_char(self.chars[p - 1])
    }
}

/// Picks the expansion for the focus at `focus_span` (character offsets):
/// the first contextual rule, in file order, whose focus matches and whose
/// condition holds; failing that, the first matching default rule.
pub fn disambiguate<'r>(text: &str, focus_span: (usize, usize), rules: &'r [ContextRule]) -> Option<&'r str> {
    disambiguate_indexed(&IndexedText::new(text), focus_span, rules)
}

pub fn disambiguate_indexed<'r>(
    text: &IndexedText<'_>,
    focus_span: (usize, usize),
    rules: &'r [ContextRule],
) -> Option<&'r str> {
    let surface = text.slice(focus_span.0, focus_span.1);
    let contextual = rules.iter().filter(|r| !r.is_default());
    let defaults = rules.iter().filter(|r| r.is_default());
    contextual
        .chain(defaults)
        .find(|r| r.focus_matches(surface) && r.applies(text, focus_span))
        .map(|r| r.expansion.as_str())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const PCR_RULE: &str = "b:[il::bioquímica|en sangre|hemoglobina|
   hemograma|leucocit|parásito|plaqueta|
   prote.na|recuento|urea] - [PCR] - >
[m=proteína]";

    fn focus_of(text: &str, focus: &str) -> (usize, usize) {
        let byte = text.find(focus).unwrap();
        let start = text[..byte].chars().count();
        (start, start + focus.chars().count())
    }

    #[test]
    fn parses_the_pcr_rule() {
        let rules = parse_rules(PCR_RULE).unwrap();
        assert_eq!(rules.len(), 1);
        let r = &rules[0];
        assert_eq!(r.focus, "PCR");
        assert_eq!(r.expansion, "proteína");
        assert!(r.is_bidirectional());
        let ContextCondition::Either(spec) = &r.condition else { panic!() };
        assert!(spec.case_insensitive && spec.local);
        assert_eq!(spec.window_chars, 40);
        assert_eq!(spec.alternatives.len(), 10);
        assert_eq!(spec.alternatives[1], "en sangre");
        assert_eq!(spec.alternatives[3], "hemograma");
    }

    #[test]
    fn default_rule() {
        let rules = parse_rules("- [Cr] - > [m=cromo]").unwrap();
        assert!(rules[0].is_default());
        assert_eq!(serialize_rule(&rules[0]), "- [Cr] - > [m=cromo]");
    }

    #[test]
    fn unknown_flag() {
        let err = parse_rules("[x::foo] - [A] - > [m=b]").unwrap_err();
        assert_eq!(err, RuleError { line: 1, kind: RuleErrorKind::UnknownFlag('x') });
    }

    #[test]
    fn structural_errors_carry_lines() {
        let err = parse_rules("# c\n\n[i::foo - [A] - > [m=b]").unwrap_err();
        assert_eq!(err.kind, RuleErrorKind::UnbalancedBracket);
        assert_eq!(err.line, 3);
        assert_eq!(parse_rules("- [A] - > [m=b]\n]").unwrap_err().line, 2);
        let err = parse_rules("[i::foo] - - > [m=b]").unwrap_err();
        assert_eq!(err.kind, RuleErrorKind::MissingFocus);
        let err = parse_rules("- [A] - >\n\n").unwrap_err();
        assert_eq!(err.kind, RuleErrorKind::MissingAction);
        let err = parse_rules("- [A] - > [x=b]").unwrap_err();
        assert_eq!(err.kind, RuleErrorKind::MissingAction);
        let err = parse_rules("- [A] - > [m=b]\n- [B] - [i::x]\n- [C] - > [m=d]").unwrap_err();
        assert_eq!(err.line, 3);
    }

    #[test]
    fn right_and_two_sided_contexts() {
        let text = "- [A] - [i::foo] - > [m=b]\n[::x] - [A] - [l::y] - > [m=c]\n";
        let rules = parse_rules(text).unwrap();
        assert_eq!(rules.len(), 2);
        assert!(matches!(&rules[0].condition, ContextCondition::Sides { left: None, right: Some(_) }));
        assert!(matches!(&rules[1].condition, ContextCondition::Sides { left: Some(_), right: Some(_) }));
        assert_eq!(serialize_rules(&rules), text);
        assert_eq!(rules[1].rule_id, 2);
    }

    #[test]
    fn serialization_round_trip() {
        let rules = parse_rules(PCR_RULE).unwrap();
        let text = serialize_rule(&rules[0]);
        assert!(text.starts_with("b:[il::bioquímica|en sangre|"));
        assert_eq!(parse_rules(&text).unwrap(), rules);
        let r = parse_rules("b:[i::a|(?:b|c)d] - [X] - > [m=y]").unwrap();
        assert_eq!(serialize_rule(&r[0]), "b:[i::a|(?:b|c)d] - [X] - > [m=y]");
        assert_eq!(r.len(), 1);
        let ContextCondition::Either(spec) = &r[0].condition else { panic!() };
        assert_eq!(spec.alternatives, vec!["a", "(?:b|c)d"]);
    }

    #[test]
    fn protein_context_fires() {
        let rules = parse_rules(PCR_RULE).unwrap();
        let text = "hemograma normal, PCR 15 mg/l";
        assert_eq!(disambiguate(text, focus_of(text, "PCR"), &rules), Some("proteína"));
        let text = "PCR de virus JC positiva";
        assert_eq!(disambiguate(text, focus_of(text, "PCR"), &rules), None);
    }

    #[test]
    fn window_is_inclusive_at_forty() {
        let rules = parse_rules(PCR_RULE).unwrap();
        for (gap, expected) in [(39, true), (40, true), (41, false)] {
            // right side: distance from focus end to context start
            let text = format!("PCR{}proteína", " ".repeat(gap));
            let got = disambiguate(&text, (0, 3), &rules);
            assert_eq!(got.is_some(), expected, "right gap {gap}");
            // left side: distance from context end to focus start
            let text = format!("Hemograma{}PCR", " ".repeat(gap));
            let start = 9 + gap;
            let got = disambiguate(&text, (start, start + 3), &rules);
            assert_eq!(got.is_some(), expected, "left gap {gap}");
        }
    }

    #[test]
    fn stems_match_at_word_starts_only() {
        let rules = parse_rules("b:[l::leucocit] - [PCR] - > [m=p]").unwrap();
        assert!(disambiguate("leucocitos y PCR", (13, 16), &rules).is_some());
        assert!(disambiguate("xleucocitos y PCR", (14, 17), &rules).is_none());
        // no `i` flag: exact case
        assert!(disambiguate("Leucocitos y PCR", (13, 16), &rules).is_none());
    }

    #[test]
    fn non_local_reaches_the_whole_document() {
        let rules = parse_rules("b:[::urea] - [PCR] - > [m=p]").unwrap();
        let text = format!("PCR{}urea", ".".repeat(500));
        assert!(disambiguate(&text, (0, 3), &rules).is_some());
    }

    #[test]
    fn contextual_rules_precede_defaults() {
        let text = "- [Cr] - > [m=cromo]\n[il::creatin|renal] - [Cr] - > [m=creatinina]";
        let rules = parse_rules(text).unwrap();
        assert_eq!(disambiguate("función renal: Cr 1,2", (15, 17), &rules), Some("creatinina"));
        assert_eq!(disambiguate("aleación de Cr y níquel", (12, 14), &rules), Some("cromo"));
        assert_eq!(disambiguate("aleación de Co", (12, 14), &rules), None);
    }

    #[test]
    fn left_context_must_not_overlap_focus() {
        let rules = parse_rules("[::PC] - [PCR] - > [m=x]").unwrap();
        assert!(disambiguate("PCR", (0, 3), &rules).is_none());
    }
}
