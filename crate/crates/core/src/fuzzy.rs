//! Offline mining of misspelled variants with a bounded edit distance.
//!
//! Words are maximal runs of letters and digits, possibly joined by internal
//! hyphens. A candidate is a sequence of one to `max_words` words on one line
//! that is close to a lexicon string with the same number of words.

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use thiserror::Error;

use crate::annotator::Document;
use crate::lexicon::{CompiledLexicon, EntityClass, LexEntry, Source};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FuzzyError {
    #[error("invalid fuzzy parameters: {0}")]
    InvalidParams(String),
    #[error("variant {variant:?} is closest to canonicals with different concept ids: {ids:?}")]
    AmbiguousPromotion { variant: String, ids: Vec<Option<String>> },
    #[error("variant {variant:?}: canonical {canonical:?} is not a lexicon entry")]
    UnknownCanonical { variant: String, canonical: String },
    #[error("decision for {0:?}, which is not a candidate")]
    UndecidableVariant(String),
    #[error("line {line}: {message}")]
    Tsv { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuzzyParams {
    pub max_words: usize,
    pub min_length: usize,
    /// `(minimum length, allowed distance)` steps in ascending length order.
    pub distance_table: Vec<(usize, usize)>,
}

impl Default for FuzzyParams {
    fn default() -> Self {
        Self {
            max_words: 3,
            min_length: 4,
            distance_table: vec![(4, 1), (8, 2), (13, 3)],
        }
    }
}

impl FuzzyParams {
    pub fn validate(&self) -> Result<(), FuzzyError> {
        let bad = |m: String| Err(FuzzyError::InvalidParams(m));
        if self.max_words == 0 || self.min_length == 0 {
            return bad("max_words and min_length must be positive".into());
        }
        if !self.distance_table.windows(2).all(|w| w[0].0 < w[1].0) {
            return bad("distance table lengths must be strictly increasing".into());
        }
        for &(len, d) in &self.distance_table {
            if d > 3 || d > len.div_ceil(4) {
                return bad(format!("distance {d} too large for length {len}"));
            }
        }
        Ok(())
    }
}

/// Allowed distance for a candidate of `length` characters.
pub fn max_distance_for(length: usize, params: &FuzzyParams) -> usize {
    if length < params.min_length {
        return 0;
    }
    params
        .distance_table
        .iter()
        .take_while(|&&(min, _)| min <= length)
        .last()
        .map_or(0, |&(_, d)| d)
}

/// Levenshtein distance over Unicode scalar values.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein(&a, &b)
}

fn levenshtein(a: &[char], b: &[char]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// What a lexicon string stands for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Target {
    pub class: EntityClass,
    pub concept_id: Option<String>,
    pub rank: u32,
    pub canonical: String,
}

#[derive(Debug, Clone)]
struct LexString {
    text: String,
    lower: Vec<char>,
    target: Option<Target>,
}

/// The strings candidates are compared against, bucketed by word count and
/// length.
#[derive(Debug, Clone, Default)]
pub struct LexiconStrings {
    strings: Vec<LexString>,
    exact: HashMap<String, usize>,
    buckets: HashMap<(usize, usize), Vec<usize>>,
}

impl LexiconStrings {
    pub fn from_strings<I, S>(strings: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out = Self::default();
        for s in strings {
            out.insert(s.into(), None);
        }
        out
    }

    /// Literal entries plus the enumerated language of each finite regexp
    /// entry (up to `limit` strings). Entries that need context rules are
    /// skipped.
    pub fn from_lexicon(lex: &CompiledLexicon, limit: usize) -> Self {
        let mut out = Self::default();
        for entry in lex.entries().iter().filter(|e| !e.ambiguous_focus) {
            let target = Target {
                class: entry.class,
                concept_id: entry.concept_id.clone(),
                rank: entry.rank,
                canonical: entry.canonical.clone(),
            };
            if !entry.is_regexp {
                out.insert(entry.pattern.clone(), Some(target));
                continue;
            }
            match crate::transform::enumerate_pattern(&entry.pattern, limit) {
                Ok(strings) => {
                    for s in strings {
                        out.insert(s, Some(target.clone()));
                    }
                }
                Err(e) => log::debug!("skipping {:?} for fuzzy matching: {e}", entry.pattern),
            }
        }
        out
    }

    fn insert(&mut self, text: String, target: Option<Target>) {
        let key = text.to_lowercase();
        if self.exact.contains_key(&key) {
            return;
        }
        let lower: Vec<char> = key.chars().collect();
        let index = self.strings.len();
        let words = words(&lower).len();
        if words == 0 {
            return;
        }
        self.buckets.entry((words, lower.len())).or_default().push(index);
        self.exact.insert(key, index);
        self.strings.push(LexString { text, lower, target });
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn contains(&self, text: &str) -> bool {
        self.exact.contains_key(&text.to_lowercase())
    }

    pub fn target(&self, text: &str) -> Option<&Target> {
        self.exact.get(&text.to_lowercase()).and_then(|&i| self.strings[i].target.as_ref())
    }
}

/// Words of `text` as `(start, end)` character ranges.
fn words(text: &[char]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < text.len() {
        if !text[i].is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = i;
        while i < text.len() {
            if text[i].is_alphanumeric() {
                i += 1;
            } else if text[i] == '-' && i + 1 < text.len() && text[i + 1].is_alphanumeric() {
                i += 2;
            } else {
                break;
            }
        }
        out.push((start, i));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuzzyCandidate {
    pub variant: String,
    pub canonical: String,
    pub distance: usize,
    pub doc_id: String,
    pub count: usize,
}

/// Mines candidates from every document. Output follows document order,
/// then the offset of each variant's first occurrence.
pub fn scan(
    docs: &[Document],
    lexicon: &LexiconStrings,
    vocabulary: &HashSet<String>,
    params: &FuzzyParams,
) -> Result<Vec<FuzzyCandidate>, FuzzyError> {
    params.validate()?;
    let per_doc: Vec<Vec<FuzzyCandidate>> = docs
        .par_iter()
        .map(|d| scan_document(d, lexicon, vocabulary, params))
        .collect();
    Ok(per_doc.into_iter().flatten().collect())
}

fn scan_document(
    doc: &Document,
    lexicon: &LexiconStrings,
    vocabulary: &HashSet<String>,
    params: &FuzzyParams,
) -> Vec<FuzzyCandidate> {
    let text: Vec<char> = doc.text.chars().collect();
    let spans = words(&text);
    // (variant, canonical index) -> (first offset, distance, count)
    let mut found: HashMap<(String, usize), (usize, usize, usize)> = HashMap::new();
    for first in 0..spans.len() {
        for n in 1..=params.max_words {
            let Some(&(_, end)) = spans.get(first + n - 1) else { break };
            let start = spans[first].0;
            if text[start..end].iter().any(|&c| c == '\n' || c == '\r') {
                break;
            }
            let variant: String = text[start..end].iter().collect();
            let lower: Vec<char> = variant.to_lowercase().chars().collect();
            let d_max = max_distance_for(lower.len(), params);
            if d_max == 0 || lexicon.contains(&variant) {
                continue;
            }
            let common = spans[first..first + n]
                .iter()
                .all(|&(s, e)| vocabulary.contains(&text[s..e].iter().collect::<String>().to_lowercase()));
            if common {
                continue;
            }
            let mut best = usize::MAX;
            let mut hits = Vec::new();
            let lo = lower.len().saturating_sub(d_max);
            for len in lo..=lower.len() + d_max {
                for &i in lexicon.buckets.get(&(n, len)).into_iter().flatten() {
                    let d = levenshtein(&lower, &lexicon.strings[i].lower);
                    if d == 0 || d > d_max || d > best {
                        continue;
                    }
                    if d < best {
                        best = d;
                        hits.clear();
                    }
                    hits.push(i);
                }
            }
            for i in hits {
                let slot = found.entry((variant.clone(), i)).or_insert((start, best, 0));
                slot.2 += 1;
            }
        }
    }
    let mut out: Vec<_> = found.into_iter().collect();
    out.sort_by(|a, b| {
        let key = |((v, i), (offset, _, _)): &((String, usize), (usize, usize, usize))| {
            (*offset, v.chars().count(), lexicon.strings[*i].text.clone(), v.clone())
        };
        key(a).cmp(&key(b))
    });
    out.into_iter()
        .map(|((variant, i), (_, distance, count))| FuzzyCandidate {
            variant,
            canonical: lexicon.strings[i].text.clone(),
            distance,
            doc_id: doc.doc_id.clone(),
            count,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Reject,
}

/// Turns accepted variants into literal lexicon entries that inherit the
/// class, concept id and rank of their canonical string.
pub fn promote_candidates(
    candidates: &[FuzzyCandidate],
    decisions: &BTreeMap<String, Decision>,
    lexicon: &LexiconStrings,
) -> Result<Vec<LexEntry>, FuzzyError> {
    let mut by_variant: BTreeMap<&str, Vec<&FuzzyCandidate>> = BTreeMap::new();
    for c in candidates {
        by_variant.entry(&c.variant).or_default().push(c);
    }
    let mut out = Vec::new();
    for (variant, decision) in decisions {
        let Some(cands) = by_variant.get(variant.as_str()) else {
            return Err(FuzzyError::UndecidableVariant(variant.clone()));
        };
        if *decision == Decision::Reject {
            continue;
        }
        let mut targets: Vec<&Target> = Vec::new();
        for c in cands {
            let target = lexicon.target(&c.canonical).ok_or_else(|| FuzzyError::UnknownCanonical {
                variant: variant.clone(),
                canonical: c.canonical.clone(),
            })?;
            targets.push(target);
        }
        let mut ids: Vec<Option<String>> = targets.iter().map(|t| t.concept_id.clone()).collect();
        ids.sort();
        ids.dedup();
        if ids.len() > 1 {
            return Err(FuzzyError::AmbiguousPromotion {
                variant: variant.clone(),
                ids,
            });
        }
        let target = targets
            .into_iter()
            .min_by(|a, b| (a.rank, a.class, &a.canonical).cmp(&(b.rank, b.class, &b.canonical)))
            .expect("every candidate group is non-empty");
        out.push(LexEntry {
            pattern: variant.clone(),
            is_regexp: false,
            class: target.class,
            concept_id: target.concept_id.clone(),
            rank: target.rank,
            source: Source::Fuzzy,
            ambiguous_focus: false,
            canonical: target.canonical.clone(),
            rule: None,
        });
    }
    Ok(out)
}

pub fn write_candidates(candidates: &[FuzzyCandidate]) -> String {
    let mut out = String::from("# variant\tcanonical\tdistance\tdoc_id\tcount\n");
    for c in candidates {
        out.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", c.variant, c.canonical, c.distance, c.doc_id, c.count));
    }
    out
}

fn tsv_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.strip_suffix('\r').unwrap_or(l);
        (!l.trim().is_empty() && !l.starts_with('#')).then(|| (i + 1, l.split('\t').collect()))
    })
}

pub fn parse_candidates(text: &str) -> Result<Vec<FuzzyCandidate>, FuzzyError> {
    tsv_lines(text)
        .map(|(line, cols)| {
            let err = |message: String| FuzzyError::Tsv { line, message };
            let [variant, canonical, distance, doc_id, count] = cols[..] else {
                return Err(err(format!("expected 5 columns, found {}", cols.len())));
            };
            let number = |s: &str| s.parse::<usize>().ok().filter(|&n| n > 0);
            Ok(FuzzyCandidate {
                variant: variant.to_string(),
                canonical: canonical.to_string(),
                distance: number(distance).ok_or_else(|| err(format!("bad distance {distance:?}")))?,
                doc_id: doc_id.to_string(),
                count: number(count).ok_or_else(|| err(format!("bad count {count:?}")))?,
            })
        })
        .collect()
}

pub fn parse_decisions(text: &str) -> Result<BTreeMap<String, Decision>, FuzzyError> {
    let mut out = BTreeMap::new();
    for (line, cols) in tsv_lines(text) {
        let err = |message: String| FuzzyError::Tsv { line, message };
        let [variant, decision] = cols[..] else {
            return Err(err(format!("expected 2 columns, found {}", cols.len())));
        };
        let decision = match decision.trim() {
            "accept" => Decision::Accept,
            "reject" => Decision::Reject,
            other => return Err(err(format!("decision must be accept or reject, found {other:?}"))),
        };
        if out.insert(variant.to_string(), decision).is_some() {
            return Err(err(format!("duplicate decision for {variant:?}")));
        }
    }
    Ok(out)
}

/// One lowercased word per line; `#` starts a comment line.
pub fn parse_vocabulary(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str) -> Vec<Document> {
        vec![Document::new("d1", text)]
    }

    fn vocab(words: &[&str]) -> HashSet<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn distance_table() {
        let p = FuzzyParams::default();
        let got: Vec<usize> = [3, 4, 7, 8, 12, 13, 40].iter().map(|&n| max_distance_for(n, &p)).collect();
        assert_eq!(got, vec![0, 1, 1, 2, 2, 3, 3]);
        p.validate().unwrap();
        let too_loose = FuzzyParams {
            distance_table: vec![(4, 2)],
            ..FuzzyParams::default()
        };
        assert!(too_loose.validate().is_err());
    }

    #[test]
    fn small_distances() {
        assert_eq!(edit_distance("", ""), 0);
        assert_eq!(edit_distance("abc", ""), 3);
        assert_eq!(edit_distance("kitten", "sitting"), 3);
        assert_eq!(edit_distance("ácido", "acido"), 1);
    }

    #[test]
    fn word_anchors() {
        let t: Vec<char> = "SARS-CoV-2, dosis- x".chars().collect();
        let w: Vec<String> = words(&t).iter().map(|&(s, e)| t[s..e].iter().collect()).collect();
        assert_eq!(w, vec!["SARS-CoV-2", "dosis", "x"]);
    }

    #[test]
    fn finds_a_misspelling() {
        let lex = LexiconStrings::from_strings(["amoxicilina"]);
        let got = scan(&doc("Pautamos amoxicilinna 500."), &lex, &vocab(&["pautamos"]), &FuzzyParams::default()).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].variant, "amoxicilinna");
        assert_eq!(got[0].canonical, "amoxicilina");
        assert_eq!(got[0].distance, 1);
    }

    #[test]
    fn exclusions() {
        let lex = LexiconStrings::from_strings(["amoxicilina", "cas"]);
        let params = FuzzyParams::default();
        assert!(scan(&doc("amoxicilina"), &lex, &vocab(&[]), &params).unwrap().is_empty());
        assert!(scan(&doc("Amoxicilina"), &lex, &vocab(&[]), &params).unwrap().is_empty());
        assert!(scan(&doc("caso"), &lex, &vocab(&["caso"]), &params).unwrap().is_empty());
    }

    #[test]
    fn multiword_counts_and_ties() {
        let lex = LexiconStrings::from_strings(["ácido fólico", "hierro"]);
        let text = "ácido fólcio y ácido fólcio.\nhiero o hierrro";
        let got = scan(&doc(text), &lex, &vocab(&["y", "o", "ácido"]), &FuzzyParams::default()).unwrap();
        let brief: Vec<(&str, &str, usize, usize)> = got
            .iter()
            .map(|c| (c.variant.as_str(), c.canonical.as_str(), c.distance, c.count))
            .collect();
        assert_eq!(
            brief,
            vec![
                ("ácido fólcio", "ácido fólico", 2, 2),
                ("hiero", "hierro", 1, 1),
                ("hierrro", "hierro", 1, 1),
            ]
        );
        let ties = LexiconStrings::from_strings(["cabo", "cavo"]);
        let got = scan(&doc("caxo"), &ties, &vocab(&[]), &FuzzyParams::default()).unwrap();
        assert_eq!(got.iter().map(|c| c.canonical.as_str()).collect::<Vec<_>>(), vec!["cabo", "cavo"]);
    }

    #[test]
    fn sequences_stop_at_line_breaks() {
        let lex = LexiconStrings::from_strings(["ácido fólico"]);
        assert!(scan(&doc("ácido\nfólcio"), &lex, &vocab(&[]), &FuzzyParams::default()).unwrap().is_empty());
    }

    #[test]
    fn tsv_round_trip() {
        let c = vec![FuzzyCandidate {
            variant: "hiero".into(),
            canonical: "hierro".into(),
            distance: 1,
            doc_id: "d".into(),
            count: 2,
        }];
        assert_eq!(parse_candidates(&write_candidates(&c)).unwrap(), c);
        let d = parse_decisions("hiero\taccept\nfoo\treject\n").unwrap();
        assert_eq!(d["hiero"], Decision::Accept);
        assert!(parse_decisions("x\tmaybe").is_err());
    }
}
