//! Dictionary annotation: scan, resolve overlaps, disambiguate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context_rules::{disambiguate_indexed, ContextRule, IndexedText};
use crate::lexicon::{CompiledLexicon, EntityClass};
use crate::scanner::{is_word_char, RawMatch};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            text: text.into(),
        }
    }
}

/// An annotated span. Offsets count Unicode scalar values, end exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Annotation {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub class: EntityClass,
    pub concept_id: Option<String>,
}

/// Keeps the leftmost match, preferring the longest, then the entry with the
/// best precedence; discards everything overlapping a kept match.
pub fn resolve_overlaps(matches: &[RawMatch]) -> Vec<RawMatch> {
    let mut sorted = matches.to_vec();
    sorted.sort_by_key(|m| (m.start, std::cmp::Reverse(m.end), m.entry));
    let mut kept = Vec::new();
    let mut cursor = 0;
    for m in sorted {
        if m.start >= cursor {
            cursor = m.end;
            kept.push(m);
        }
    }
    kept
}

/// True when neither edge of `span` sits inside an alphanumeric run.
pub fn match_boundaries(text: &[char], (start, end): (usize, usize)) -> bool {
    let left = start == 0 || !is_word_char(text[start - 1]);
    let right = end == text.len() || !is_word_char(text[end]);
    left && right
}

pub fn annotate(doc: &Document, lex: &CompiledLexicon, rules: &[ContextRule]) -> Vec<Annotation> {
    let text = IndexedText::new(&doc.text);
    let mut out = Vec::new();
    for m in resolve_overlaps(&lex.scan(text.chars())) {
        let entry = lex.entry(m.entry);
        let (class, concept_id) = if entry.ambiguous_focus {
            let Some(expansion) = disambiguate_indexed(&text, (m.start, m.end), rules) else {
                log::debug!("{}: {:?} at {} left unresolved", doc.doc_id, entry.pattern, m.start);
                continue;
            };
            let Some((_, target)) = lex.lookup_expansion(expansion) else {
                log::warn!("{}: expansion {expansion:?} names no lexicon entry", doc.doc_id);
                continue;
            };
            (target.class, target.concept_id.clone())
        } else {
            (entry.class, entry.concept_id.clone())
        };
        out.push(Annotation {
            doc_id: doc.doc_id.clone(),
            start: m.start,
            end: m.end,
            surface: text.slice(m.start, m.end).to_string(),
            class,
            concept_id,
        });
    }
    out.sort();
    out
}

/// Annotates documents in parallel; results keep the input order.
pub fn annotate_corpus(docs: &[Document], lex: &CompiledLexicon, rules: &[ContextRule]) -> Vec<Vec<Annotation>> {
    docs.par_iter().map(|d| annotate(d, lex, rules)).collect()
}

/// Concept ids of a document's scored annotations, deduplicated and sorted.
pub fn index_concepts(annotations: &[Annotation]) -> Vec<String> {
    let mut ids: Vec<String> = annotations
        .iter()
        .filter(|a| a.class.is_scored())
        .filter_map(|a| a.concept_id.clone())
        .collect();
    ids.sort();
    ids.dedup();
    ids
}
