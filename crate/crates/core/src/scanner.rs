//! A single Thompson automaton over every lexicon pattern.
//!
//! The scanner runs the combined automaton from every position that starts a
//! word and reports each `(start, end, entry)` triple whose slice belongs to
//! the entry's language and whose right edge is also a word boundary. There is
//! no tokenization: the only notion of a word is the alphanumeric boundary
//! test in [`is_word_char`].

use std::collections::HashMap;

use crate::pattern::{CharClass, Node};

/// Characters that glue a match to its surroundings.
pub fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Simple one-to-one lowercase mapping; characters whose lowercase form is
/// longer than one scalar value map to themselves.
pub fn fold(c: char) -> char {
    let mut lower = c.to_lowercase();
    match (lower.next(), lower.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

fn upper(c: char) -> char {
    let mut up = c.to_uppercase();
    match (up.next(), up.next()) {
        (Some(u), None) => u,
        _ => c,
    }
}

/// One hit of the combined automaton, in character offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RawMatch {
    pub start: usize,
    pub end: usize,
    pub entry: usize,
}

#[derive(Debug, Clone)]
enum State {
    Char { c: char, fold: bool, next: usize },
    Class { class: CharClass, fold: bool, next: usize },
    Split(Vec<usize>),
    Match(usize),
}

impl State {
    fn step(&self, c: char) -> Option<usize> {
        match self {
            State::Char { c: want, fold: f, next } => {
                let hit = if *f { fold(c) == *want } else { c == *want };
                hit.then_some(*next)
            }
            State::Class { class, fold: f, next } => {
                let hit = if *f {
                    let any = [c, fold(c), upper(c)]
                        .iter()
                        .any(|&v| class.ranges.iter().any(|&(lo, hi)| lo <= v && v <= hi));
                    any != class.negated
                } else {
                    class.contains(c)
                };
                hit.then_some(*next)
            }
            State::Split(_) | State::Match(_) => None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Scanner {
    states: Vec<State>,
    first_exact: HashMap<char, Vec<usize>>,
    first_folded: HashMap<char, Vec<usize>>,
    first_other: Vec<usize>,
}

impl Scanner {
    /// Builds the automaton. Pattern `i` of the iterator reports entry `i`;
    /// the flag selects case-insensitive matching for that pattern.
    pub fn new<'a, I>(patterns: I) -> Self
    where
        I: IntoIterator<Item = (&'a Node, bool)>,
    {
        let mut scanner = Scanner::default();
        let mut roots = Vec::new();
        for (entry, (node, case_insensitive)) in patterns.into_iter().enumerate() {
            let accept = scanner.push(State::Match(entry));
            roots.push(scanner.compile(node, accept, case_insensitive));
        }

        let mut seen = vec![false; scanner.states.len()];
        let mut stack = roots;
        while let Some(s) = stack.pop() {
            if std::mem::replace(&mut seen[s], true) {
                continue;
            }
            match &scanner.states[s] {
                State::Split(targets) => stack.extend(targets.iter().copied()),
                State::Char { c, fold: false, .. } => scanner.first_exact.entry(*c).or_default().push(s),
                State::Char { c, fold: true, .. } => scanner.first_folded.entry(*c).or_default().push(s),
                State::Class { .. } => scanner.first_other.push(s),
                // empty-matching patterns are rejected when the lexicon is built
                State::Match(_) => {}
            }
        }
        scanner
    }

    fn push(&mut self, state: State) -> usize {
        self.states.push(state);
        self.states.len() - 1
    }

    fn compile(&mut self, node: &Node, next: usize, ci: bool) -> usize {
        match node {
            Node::Empty => next,
            Node::Literal(c) => self.push(State::Char {
                c: if ci { fold(*c) } else { *c },
                fold: ci,
                next,
            }),
            Node::Class(class) => self.push(State::Class {
                class: class.clone(),
                fold: ci,
                next,
            }),
            Node::Any => self.push(State::Class {
                class: CharClass::any(),
                fold: false,
                next,
            }),
            Node::Concat(items) => items
                .iter()
                .rev()
                .fold(next, |cont, item| self.compile(item, cont, ci)),
            Node::Alternation(alts) => {
                let starts = alts.iter().map(|alt| self.compile(alt, next, ci)).collect();
                self.push(State::Split(starts))
            }
            Node::Repeat { node, min, max } => {
                let mut cur = match max {
                    Some(max) => {
                        let mut cur = next;
                        for _ in *min..*max {
                            let body = self.compile(node, cur, ci);
                            cur = self.push(State::Split(vec![body, next]));
                        }
                        cur
                    }
                    None => {
                        let split = self.push(State::Split(Vec::new()));
                        let body = self.compile(node, split, ci);
                        self.states[split] = State::Split(vec![body, next]);
                        split
                    }
                };
                for _ in 0..*min {
                    cur = self.compile(node, cur, ci);
                }
                cur
            }
        }
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    /// Every boundary-respecting match in `text`, ordered by start, then end,
    /// then entry.
    pub fn find_all(&self, text: &[char]) -> Vec<RawMatch> {
        let mut out = Vec::new();
        let mut stamp = vec![0u32; self.states.len()];
        let mut generation = 0u32;
        let mut current: Vec<usize> = Vec::new();
        let mut following: Vec<usize> = Vec::new();
        let mut stack: Vec<usize> = Vec::new();

        for start in 0..text.len() {
            if start > 0 && is_word_char(text[start - 1]) {
                continue;
            }
            let c = text[start];
            generation += 1;
            current.clear();
            let exact = self.first_exact.get(&c).into_iter().flatten();
            let folded = self.first_folded.get(&fold(c)).into_iter().flatten();
            for &s in exact.chain(folded).chain(self.first_other.iter()) {
                if let Some(target) = self.states[s].step(c) {
                    self.close(target, generation, &mut stamp, &mut stack, &mut current);
                }
            }

            let mut pos = start + 1;
            loop {
                let mut consuming = false;
                for &s in &current {
                    match self.states[s] {
                        State::Match(entry) => {
                            if pos == text.len() || !is_word_char(text[pos]) {
                                out.push(RawMatch { start, end: pos, entry });
                            }
                        }
                        _ => consuming = true,
                    }
                }
                if !consuming || pos == text.len() {
                    break;
                }
                let c = text[pos];
                generation += 1;
                following.clear();
                for &s in &current {
                    if let Some(target) = self.states[s].step(c) {
                        self.close(target, generation, &mut stamp, &mut stack, &mut following);
                    }
                }
                std::mem::swap(&mut current, &mut following);
                pos += 1;
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn close(&self, from: usize, generation: u32, stamp: &mut [u32], stack: &mut Vec<usize>, into: &mut Vec<usize>) {
        stack.push(from);
        while let Some(s) = stack.pop() {
            if stamp[s] == generation {
                continue;
            }
            stamp[s] = generation;
            match &self.states[s] {
                State::Split(targets) => stack.extend(targets.iter().rev().copied()),
                _ => into.push(s),
            }
        }
    }
}
