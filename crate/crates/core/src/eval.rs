//! Scoring of entity annotations and concept indexes, plus a categorized
//! disagreement report.
//!
//! Both scores are micro-averaged: one global tp/fp/fn count over the whole
//! corpus. `UNCLEAR` annotations never count.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::annotator::Annotation;
use crate::lexicon::EntityClass;

/// Annotations keyed by document id.
pub type Corpus = BTreeMap<String, Vec<Annotation>>;
/// Concept ids keyed by document id.
pub type Index = BTreeMap<String, Vec<String>>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("document {0:?} has system output but no gold annotation")]
    CorpusMismatch(String),
    #[error("tally check failed: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScoreReport {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ScoreReport {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }

    fn add(self, other: Self) -> Self {
        Self {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
        }
    }
}

impl fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "tp={} fp={} fn={} P={:.5} R={:.5} F1={:.5}",
            self.tp,
            self.fp,
            self.fn_,
            self.precision(),
            self.recall(),
            self.f1()
        )
    }
}

/// Renders one row per task with scores to five decimals.
pub fn format_report(rows: &[(&str, ScoreReport)]) -> String {
    let mut out = format!(
        "{:<8}{:>8}{:>8}{:>8}{:>11}{:>11}{:>11}\n",
        "task", "tp", "fp", "fn", "precision", "recall", "f1"
    );
    for (task, r) in rows {
        out.push_str(&format!(
            "{:<8}{:>8}{:>8}{:>8}{:>11.5}{:>11.5}{:>11.5}\n",
            task,
            r.tp,
            r.fp,
            r.fn_,
            r.precision(),
            r.recall(),
            r.f1()
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NerOptions {
    /// Match on offsets alone, ignoring the class.
    pub offsets_only: bool,
}

fn check_docs<T>(gold: &BTreeMap<String, T>, sys: &BTreeMap<String, T>) -> Result<(), EvalError> {
    match sys.keys().find(|d| !gold.contains_key(*d)) {
        Some(d) => Err(EvalError::CorpusMismatch(d.clone())),
        None => Ok(()),
    }
}

/// Drops `UNCLEAR` gold spans, system annotations on those spans and
/// system annotations labelled `UNCLEAR`.
fn scored<'a>(gold: &'a [Annotation], sys: &'a [Annotation]) -> (Vec<&'a Annotation>, Vec<&'a Annotation>) {
    let unclear: Vec<(usize, usize)> = gold
        .iter()
        .filter(|a| !a.class.is_scored())
        .map(|a| (a.start, a.end))
        .collect();
    let g = gold.iter().filter(|a| a.class.is_scored()).collect();
    let s = sys
        .iter()
        .filter(|a| a.class.is_scored() && !unclear.contains(&(a.start, a.end)))
        .collect();
    (g, s)
}

type Key = (usize, usize, Option<EntityClass>);

fn key(a: &Annotation, opts: NerOptions) -> Key {
    (a.start, a.end, (!opts.offsets_only).then_some(a.class))
}

fn tally_doc(gold: &[&Annotation], sys: &[&Annotation], opts: NerOptions) -> ScoreReport {
    let mut pending: HashMap<Key, usize> = HashMap::new();
    for g in gold {
        *pending.entry(key(g, opts)).or_default() += 1;
    }
    let mut tp = 0;
    for s in sys {
        if let Some(n) = pending.get_mut(&key(s, opts)).filter(|n| **n > 0) {
            *n -= 1;
            tp += 1;
        }
    }
    ScoreReport {
        tp,
        fp: sys.len() - tp,
        fn_: gold.len() - tp,
    }
}

pub fn score_ner(gold: &Corpus, sys: &Corpus, opts: NerOptions) -> Result<ScoreReport, EvalError> {
    check_docs(gold, sys)?;
    let empty = Vec::new();
    let (report, n_gold, n_sys) = gold
        .par_iter()
        .map(|(doc, g)| {
            let (g, s) = scored(g, sys.get(doc).unwrap_or(&empty));
            (tally_doc(&g, &s, opts), g.len(), s.len())
        })
        .reduce(
            || (ScoreReport::default(), 0, 0),
            |a, b| (a.0.add(b.0), a.1 + b.1, a.2 + b.2),
        );
    if report.tp + report.fp != n_sys || report.tp + report.fn_ != n_gold {
        return Err(EvalError::Inconsistent(format!("{report} with {n_gold} gold and {n_sys} system annotations")));
    }
    Ok(report)
}

pub fn score_indexing(gold: &Index, sys: &Index) -> Result<ScoreReport, EvalError> {
    check_docs(gold, sys)?;
    let empty = Vec::new();
    let report = gold
        .par_iter()
        .map(|(doc, g)| {
            let s = sys.get(doc).unwrap_or(&empty);
            let mut g: Vec<&String> = g.iter().collect();
            let mut s: Vec<&String> = s.iter().collect();
            g.sort();
            g.dedup();
            s.sort();
            s.dedup();
            let tp = s.iter().filter(|id| g.binary_search(id).is_ok()).count();
            ScoreReport {
                tp,
                fp: s.len() - tp,
                fn_: g.len() - tp,
            }
        })
        .reduce(ScoreReport::default, ScoreReport::add);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DiffCategory {
    SpanMismatch,
    ClassMismatch,
    IdMismatch,
    Spurious,
    Missing,
}

impl DiffCategory {
    pub fn label(self) -> &'static str {
        match self {
            Self::SpanMismatch => "span_mismatch",
            Self::ClassMismatch => "class_mismatch",
            Self::IdMismatch => "id_mismatch",
            Self::Spurious => "spurious",
            Self::Missing => "missing",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffRecord {
    pub category: DiffCategory,
    pub doc_id: String,
    pub gold: Option<Annotation>,
    pub sys: Option<Annotation>,
}

fn overlaps(a: &Annotation, b: &Annotation) -> bool {
    a.start < b.end && b.start < a.end
}

/// Every false positive and false negative of class-inclusive matching,
/// each in exactly one record. A pair that shares a span and a class but
/// not a concept id is reported as `id_mismatch` on top of that.
pub fn diff_report(gold: &Corpus, sys: &Corpus) -> Vec<DiffRecord> {
    let empty = Vec::new();
    let mut out = Vec::new();
    let docs: std::collections::BTreeSet<&String> = gold.keys().chain(sys.keys()).collect();
    for doc in docs {
        let (g, s) = scored(gold.get(doc).unwrap_or(&empty), sys.get(doc).unwrap_or(&empty));
        let mut gold_left: Vec<Option<&Annotation>> = g.iter().copied().map(Some).collect();
        let mut sys_left = Vec::new();
        for a in s {
            let exact = gold_left
                .iter()
                .position(|x| x.is_some_and(|x| (x.start, x.end, x.class) == (a.start, a.end, a.class)));
            match exact {
                Some(i) => {
                    let g = gold_left[i].take().expect("position found a gold entry");
                    if g.concept_id != a.concept_id {
                        out.push(record(DiffCategory::IdMismatch, doc, Some(g), Some(a)));
                    }
                }
                None => sys_left.push(a),
            }
        }
        let mut unpaired = Vec::new();
        for a in sys_left {
            let same_span = gold_left
                .iter()
                .position(|x| x.is_some_and(|x| (x.start, x.end) == (a.start, a.end)));
            let pick = same_span
                .map(|i| (i, DiffCategory::ClassMismatch))
                .or_else(|| {
                    gold_left
                        .iter()
                        .position(|x| x.is_some_and(|x| overlaps(x, a)))
                        .map(|i| (i, DiffCategory::SpanMismatch))
                });
            match pick {
                Some((i, category)) => out.push(record(category, doc, gold_left[i].take(), Some(a))),
                None => unpaired.push(a),
            }
        }
        for a in unpaired {
            out.push(record(DiffCategory::Spurious, doc, None, Some(a)));
        }
        for g in gold_left.into_iter().flatten() {
            out.push(record(DiffCategory::Missing, doc, Some(g), None));
        }
    }
    out.sort_by_key(|r| {
        let anchor = r.gold.as_ref().or(r.sys.as_ref()).map(|a| (a.start, a.end));
        (r.doc_id.clone(), anchor, r.category)
    });
    out
}

fn record(category: DiffCategory, doc: &str, gold: Option<&Annotation>, sys: Option<&Annotation>) -> DiffRecord {
    DiffRecord {
        category,
        doc_id: doc.to_string(),
        gold: gold.cloned(),
        sys: sys.cloned(),
    }
}

/// Tab-separated diff: category, doc id, then start, end, surface, class and
/// id for the gold side and the system side (empty when absent).
pub fn write_diff(records: &[DiffRecord]) -> String {
    let mut out = String::from(
        "# category\tdoc_id\tgold_start\tgold_end\tgold_surface\tgold_class\tgold_id\tsys_start\tsys_end\tsys_surface\tsys_class\tsys_id\n",
    );
    let side = |a: &Option<Annotation>| match a {
        Some(a) => format!(
            "{}\t{}\t{}\t{}\t{}",
            a.start,
            a.end,
            a.surface,
            a.class,
            a.concept_id.as_deref().unwrap_or("")
        ),
        None => "\t\t\t\t".to_string(),
    };
    for r in records {
        out.push_str(&format!("{}\t{}\t{}\t{}\n", r.category.label(), r.doc_id, side(&r.gold), side(&r.sys)));
    }
    out
}
