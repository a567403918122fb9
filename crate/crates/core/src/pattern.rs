//! The pattern dialect shared by lexicon entries, transform output and
//! context-rule alternatives.
//!
//! The dialect accepted by [`Pattern::parse`] is deliberately small: literal
//! characters, backslash escapes of punctuation, alternation `|`, grouping
//! with `( )` or `(?: )`, optionality `?`, character classes such as `[- ]`
//! or `[^0-9]`, and `.` (any character except a line feed). Every pattern in
//! the dialect therefore denotes a finite language.
//!
//! [`Pattern::parse_extended`] additionally accepts the counted and unbounded
//! quantifiers (`*`, `+`, `{n}`, `{n,}`, `{n,m}`) so that enumeration can say
//! *why* it refuses a pattern instead of failing to parse it.
//!
//! Matching is over Unicode scalar values, never bytes.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Highest Unicode scalar value plus one.
const SCALAR_SPACE: u64 = 0x11_0000;
/// Number of surrogate code points, which are not scalar values.
const SURROGATES: u64 = 0x800;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid pattern {pattern:?} at character {offset}: {kind}")]
pub struct PatternError {
    pub pattern: String,
    pub offset: usize,
    pub kind: PatternErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternErrorKind {
    UnbalancedParen,
    UnclosedClass,
    EmptyClass,
    InvalidRange(char, char),
    UnsupportedEscape(char),
    TrailingBackslash,
    DanglingQuantifier,
    /// A quantifier other than `?` in a pattern that must stay finite.
    Repetition,
    Unsupported(&'static str),
}

impl fmt::Display for PatternErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UnbalancedParen => f.write_str("unbalanced parenthesis"),
            Self::UnclosedClass => f.write_str("unclosed character class"),
            Self::EmptyClass => f.write_str("empty character class"),
            Self::InvalidRange(a, b) => write!(f, "invalid class range {a:?}-{b:?}"),
            Self::UnsupportedEscape(c) => write!(f, "unsupported escape \\{c}"),
            Self::TrailingBackslash => f.write_str("trailing backslash"),
            Self::DanglingQuantifier => f.write_str("quantifier without operand"),
            Self::Repetition => f.write_str("repetition other than `?` is outside the dialect"),
            Self::Unsupported(what) => write!(f, "unsupported syntax: {what}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumerateError {
    #[error("pattern has an infinite language")]
    InfiniteLanguage,
    #[error("pattern language exceeds the limit of {limit} strings")]
    LimitExceeded { limit: usize },
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharClass {
    pub negated: bool,
    /// Inclusive ranges, sorted and merged.
    pub ranges: Vec<(char, char)>,
}

impl CharClass {
    fn new(negated: bool, mut ranges: Vec<(char, char)>) -> Self {
        ranges.sort_unstable();
        let mut merged: Vec<(char, char)> = Vec::with_capacity(ranges.len());
        for (lo, hi) in ranges {
            match merged.last_mut() {
                Some(last) if (lo as u32) <= (last.1 as u32).saturating_add(1) => {
                    if hi > last.1 {
                        last.1 = hi;
                    }
                }
                _ => merged.push((lo, hi)),
            }
        }
        Self { negated, ranges: merged }
    }

    /// The class matched by `.`.
    pub fn any() -> Self {
        Self::new(true, vec![('\n', '\n')])
    }

    pub fn contains(&self, c: char) -> bool {
        let hit = self.ranges.iter().any(|&(lo, hi)| lo <= c && c <= hi);
        hit != self.negated
    }

    fn positive_size(&self) -> u64 {
        self.ranges.iter().map(|&(lo, hi)| scalar_count(lo, hi)).sum()
    }

    /// Number of scalar values the class accepts.
    pub fn size(&self) -> u64 {
        if self.negated {
            SCALAR_SPACE - SURROGATES - self.positive_size()
        } else {
            self.positive_size()
        }
    }

    fn members(&self) -> Box<dyn Iterator<Item = char> + '_> {
        if self.negated {
            Box::new(
                (0..SCALAR_SPACE as u32)
                    .filter_map(char::from_u32)
                    .filter(move |&c| self.contains(c)),
            )
        } else {
            Box::new(
                self.ranges
                    .iter()
                    .flat_map(|&(lo, hi)| (lo as u32..=hi as u32).filter_map(char::from_u32)),
            )
        }
    }
}

fn scalar_count(lo: char, hi: char) -> u64 {
    let (lo, hi) = (lo as u64, hi as u64);
    let total = hi - lo + 1;
    // overlap with the surrogate block 0xD800..=0xDFFF
    let s_lo = lo.max(0xD800);
    let s_hi = hi.min(0xDFFF);
    let surrogate = if s_lo <= s_hi { s_hi - s_lo + 1 } else { 0 };
    total - surrogate
}

/// Abstract syntax of a parsed pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Empty,
    Literal(char),
    Class(CharClass),
    /// `.`: any scalar value except `\n`.
    Any,
    Concat(Vec<Node>),
    Alternation(Vec<Node>),
    Repeat {
        node: Box<Node>,
        min: u32,
        max: Option<u32>,
    },
}

impl Node {
    pub fn matches_empty(&self) -> bool {
        match self {
            Node::Empty => true,
            Node::Literal(_) | Node::Class(_) | Node::Any => false,
            Node::Concat(items) => items.iter().all(Node::matches_empty),
            Node::Alternation(alts) => alts.iter().any(Node::matches_empty),
            Node::Repeat { node, min, .. } => *min == 0 || node.matches_empty(),
        }
    }

    fn has_unbounded_repeat(&self) -> bool {
        match self {
            Node::Empty | Node::Literal(_) | Node::Class(_) | Node::Any => false,
            Node::Concat(items) | Node::Alternation(items) => {
                items.iter().any(Node::has_unbounded_repeat)
            }
            Node::Repeat { node, max, .. } => max.is_none() || node.has_unbounded_repeat(),
        }
    }

    fn has_non_optional_repeat(&self) -> bool {
        match self {
            Node::Empty | Node::Literal(_) | Node::Class(_) | Node::Any => false,
            Node::Concat(items) | Node::Alternation(items) => {
                items.iter().any(Node::has_non_optional_repeat)
            }
            Node::Repeat { node, min, max } => {
                !(*min == 0 && *max == Some(1)) || node.has_non_optional_repeat()
            }
        }
    }
}

/// A parsed pattern together with its source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    source: String,
    root: Node,
}

impl Pattern {
    /// Parses `source` in the finite lexicon dialect.
    pub fn parse(source: &str) -> Result<Self, PatternError> {
        let pattern = Self::parse_extended(source)?;
        if pattern.root.has_non_optional_repeat() {
            return Err(PatternError {
                pattern: source.to_string(),
                offset: 0,
                kind: PatternErrorKind::Repetition,
            });
        }
        Ok(pattern)
    }

    /// Parses `source` accepting every quantifier.
    pub fn parse_extended(source: &str) -> Result<Self, PatternError> {
        let root = Parser::new(source).parse()?;
        Ok(Self {
            source: source.to_string(),
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn matches_empty(&self) -> bool {
        self.root.matches_empty()
    }

    /// The plain text this pattern stands for, when it contains no operators.
    pub fn literal_text(&self) -> Option<String> {
        fn collect(node: &Node, out: &mut String) -> bool {
            match node {
                Node::Empty => true,
                Node::Literal(c) => {
                    out.push(*c);
                    true
                }
                Node::Concat(items) => items.iter().all(|n| collect(n, out)),
                _ => false,
            }
        }
        let mut out = String::new();
        collect(&self.root, &mut out).then_some(out)
    }

    /// Enumerates the language of the pattern in lexicographic order.
    pub fn enumerate(&self, limit: usize) -> Result<BTreeSet<String>, EnumerateError> {
        if self.root.has_unbounded_repeat() {
            return Err(EnumerateError::InfiniteLanguage);
        }
        language(&self.root, limit)
    }
}

/// Whether `text` contains an uppercase letter; such patterns match
/// case-sensitively.
pub fn has_uppercase(text: &str) -> bool {
    text.chars().any(char::is_uppercase)
}

/// Escapes every character that is an operator in the dialect.
pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        if is_meta(c) {
            out.push('\\');
        }
        out.push(c);
    }
    out
}

fn is_meta(c: char) -> bool {
    matches!(
        c,
        '\\' | '.' | '+' | '*' | '?' | '(' | ')' | '|' | '[' | ']' | '{' | '}' | '^' | '$'
    )
}

fn language(node: &Node, limit: usize) -> Result<BTreeSet<String>, EnumerateError> {
    let exceeded = || EnumerateError::LimitExceeded { limit };
    let checked = |set: BTreeSet<String>| {
        if set.len() > limit {
            Err(exceeded())
        } else {
            Ok(set)
        }
    };
    match node {
        Node::Empty => checked(BTreeSet::from([String::new()])),
        Node::Literal(c) => checked(BTreeSet::from([c.to_string()])),
        Node::Any => language(&Node::Class(CharClass::any()), limit),
        Node::Class(class) => {
            if class.size() as u128 > limit as u128 {
                return Err(exceeded());
            }
            Ok(class.members().map(String::from).collect())
        }
        Node::Concat(items) => {
            let mut acc = BTreeSet::from([String::new()]);
            for item in items {
                let part = language(item, limit)?;
                acc = product(&acc, &part, limit).ok_or_else(exceeded)?;
            }
            Ok(acc)
        }
        Node::Alternation(alts) => {
            let mut acc = BTreeSet::new();
            for alt in alts {
                acc.extend(language(alt, limit)?);
                if acc.len() > limit {
                    return Err(exceeded());
                }
            }
            Ok(acc)
        }
        Node::Repeat { node, min, max } => {
            let max = max.expect("unbounded repetition rejected before enumeration");
            let inner = language(node, limit)?;
            let mut power = BTreeSet::from([String::new()]);
            let mut acc = BTreeSet::new();
            for count in 0..=max {
                if count >= *min {
                    acc.extend(power.iter().cloned());
                    if acc.len() > limit {
                        return Err(exceeded());
                    }
                }
                if count < max {
                    power = product(&power, &inner, limit).ok_or_else(exceeded)?;
                }
            }
            Ok(acc)
        }
    }
}

fn product(left: &BTreeSet<String>, right: &BTreeSet<String>, limit: usize) -> Option<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    for a in left {
        for b in right {
            let mut s = String::with_capacity(a.len() + b.len());
            s.push_str(a);
            s.push_str(b);
            out.insert(s);
            if out.len() > limit {
                return None;
            }
        }
    }
    Some(out)
}

struct Parser<'a> {
    source: &'a str,
    chars: Vec<char>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(source: &'a str) -> Self {
        Self {
            source,
            chars: source.chars().collect(),
            pos: 0,
        }
    }

    fn error(&self, offset: usize, kind: PatternErrorKind) -> PatternError {
        PatternError {
            pattern: self.source.to_string(),
            offset,
            kind,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn parse(mut self) -> Result<Node, PatternError> {
        let node = self.alternation()?;
        if self.pos < self.chars.len() {
            // only a stray `)` can stop the top-level alternation early
            return Err(self.error(self.pos, PatternErrorKind::UnbalancedParen));
        }
        Ok(node)
    }

    fn alternation(&mut self) -> Result<Node, PatternError> {
        let mut alts = vec![self.concat()?];
        while self.peek() == Some('|') {
            self.pos += 1;
            alts.push(self.concat()?);
        }
        Ok(if alts.len() == 1 {
            alts.pop().unwrap()
        } else {
            Node::Alternation(alts)
        })
    }

    fn concat(&mut self) -> Result<Node, PatternError> {
        let mut items = Vec::new();
        while let Some(c) = self.peek() {
            if c == '|' || c == ')' {
                break;
            }
            items.push(self.repeat()?);
        }
        Ok(match items.len() {
            0 => Node::Empty,
            1 => items.pop().unwrap(),
            _ => Node::Concat(items),
        })
    }

    fn repeat(&mut self) -> Result<Node, PatternError> {
        let atom = self.atom()?;
        let start = self.pos;
        let (min, max) = match self.peek() {
            Some('?') => (0, Some(1)),
            Some('*') => (0, None),
            Some('+') => (1, None),
            Some('{') => {
                self.pos += 1;
                let (min, max) = self.counted(start)?;
                self.pos -= 1;
                (min, max)
            }
            _ => return Ok(atom),
        };
        self.pos += 1;
        if matches!(self.peek(), Some('?' | '*' | '+' | '{')) {
            return Err(self.error(self.pos, PatternErrorKind::Unsupported("stacked quantifier")));
        }
        Ok(Node::Repeat {
            node: Box::new(atom),
            min,
            max,
        })
    }

    /// Parses the body of `{n}`, `{n,}` or `{n,m}` and leaves `pos` just past
    /// the closing brace.
    fn counted(&mut self, start: usize) -> Result<(u32, Option<u32>), PatternError> {
        let bad = |p: &Self| p.error(start, PatternErrorKind::Unsupported("malformed counted repetition"));
        let number = |p: &mut Self| -> Option<u32> {
            let begin = p.pos;
            while p.peek().is_some_and(|c| c.is_ascii_digit()) {
                p.pos += 1;
            }
            let digits: String = p.chars[begin..p.pos].iter().collect();
            digits.parse().ok()
        };
        let min = number(self).ok_or_else(|| bad(self))?;
        let max = if self.peek() == Some(',') {
            self.pos += 1;
            if self.peek() == Some('}') {
                None
            } else {
                Some(number(self).ok_or_else(|| bad(self))?)
            }
        } else {
            Some(min)
        };
        if self.peek() != Some('}') || max.is_some_and(|m| m < min) {
            return Err(bad(self));
        }
        self.pos += 1;
        Ok((min, max))
    }

    fn atom(&mut self) -> Result<Node, PatternError> {
        let start = self.pos;
        let c = self.peek().expect("atom called at end of input");
        self.pos += 1;
        match c {
            '(' => {
                if self.peek() == Some('?') {
                    if self.chars.get(self.pos + 1) == Some(&':') {
                        self.pos += 2;
                    } else {
                        return Err(self.error(start, PatternErrorKind::Unsupported("group flags or lookaround")));
                    }
                }
                let inner = self.alternation()?;
                if self.peek() != Some(')') {
                    return Err(self.error(start, PatternErrorKind::UnbalancedParen));
                }
                self.pos += 1;
                Ok(inner)
            }
            ')' => Err(self.error(start, PatternErrorKind::UnbalancedParen)),
            '[' => self.class(start),
            '.' => Ok(Node::Any),
            '\\' => Ok(Node::Literal(self.escape(start)?)),
            '?' | '*' | '+' | '{' => Err(self.error(start, PatternErrorKind::DanglingQuantifier)),
            '^' | '$' => Err(self.error(start, PatternErrorKind::Unsupported("anchors"))),
            other => Ok(Node::Literal(other)),
        }
    }

    fn escape(&mut self, start: usize) -> Result<char, PatternError> {
        let c = self
            .peek()
            .ok_or_else(|| self.error(start, PatternErrorKind::TrailingBackslash))?;
        self.pos += 1;
        match c {
            'n' => Ok('\n'),
            't' => Ok('\t'),
            c if c.is_ascii_punctuation() || c == ' ' => Ok(c),
            c => Err(self.error(start, PatternErrorKind::UnsupportedEscape(c))),
        }
    }

    fn class(&mut self, start: usize) -> Result<Node, PatternError> {
        let negated = if self.peek() == Some('^') {
            self.pos += 1;
            true
        } else {
            false
        };
        let mut ranges = Vec::new();
        let mut first = true;
        loop {
            let item_start = self.pos;
            let c = self
                .peek()
                .ok_or_else(|| self.error(start, PatternErrorKind::UnclosedClass))?;
            self.pos += 1;
            let lo = match c {
                ']' => break,
                '[' => return Err(self.error(item_start, PatternErrorKind::Unsupported("nested class"))),
                '\\' => self.escape(item_start)?,
                '-' if !first && self.peek() == Some('-') => {
                    return Err(self.error(item_start, PatternErrorKind::Unsupported("class set operation")))
                }
                c => c,
            };
            first = false;
            // a range needs a `-` followed by something other than `]`
            if self.peek() == Some('-') && !matches!(self.chars.get(self.pos + 1), Some(']') | None) {
                self.pos += 1;
                let hi_start = self.pos;
                let hi = match self.peek() {
                    Some('\\') => {
                        self.pos += 1;
                        self.escape(hi_start)?
                    }
                    Some('[') => return Err(self.error(hi_start, PatternErrorKind::Unsupported("nested class"))),
                    Some(c) => {
                        self.pos += 1;
                        c
                    }
                    None => return Err(self.error(start, PatternErrorKind::UnclosedClass)),
                };
                if hi < lo {
                    return Err(self.error(item_start, PatternErrorKind::InvalidRange(lo, hi)));
                }
                ranges.push((lo, hi));
            } else {
                ranges.push((lo, lo));
            }
        }
        if ranges.is_empty() {
            return Err(self.error(start, PatternErrorKind::EmptyClass));
        }
        Ok(Node::Class(CharClass::new(negated, ranges)))
    }
}
