#![allow(dead_code)]

use std::path::PathBuf;

use clinlex::brat;
use clinlex::context_rules::ContextRule;
use clinlex::lexicon::{CompiledLexicon, LexiconInputs, PrimaryEntity};
use clinlex::transform::TransformRule;
use clinlex::{parse_rules, parse_transform_rules, Document};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn read(name: &str) -> String {
    std::fs::read_to_string(fixtures().join(name)).unwrap()
}

pub struct Fixture {
    pub primaries: Vec<PrimaryEntity>,
    pub transforms: Vec<TransformRule>,
    pub rules: Vec<ContextRule>,
}

impl Fixture {
    pub fn load() -> Self {
        Self {
            primaries: clinlex::load_primary_entities(&read("lexicon.tsv")).unwrap(),
            transforms: parse_transform_rules(&read("transforms.tsv")).unwrap(),
            rules: parse_rules(&read("context.rules")).unwrap(),
        }
    }

    pub fn inputs(&self) -> LexiconInputs<'_> {
        LexiconInputs::new(&self.primaries, &self.transforms).with_rules(&self.rules)
    }

    pub fn lexicon(&self) -> CompiledLexicon {
        self.inputs().build().unwrap()
    }
}

pub fn corpus_documents() -> Vec<Document> {
    brat::read_documents(&fixtures().join("corpus")).unwrap()
}

/// Sentences of the PCR fixture as (id, should fire, text).
pub fn pcr_sentences() -> Vec<(String, bool, String)> {
    read("pcr_sentences.tsv")
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let cols: Vec<&str> = l.split('\t').collect();
            (cols[0].to_string(), cols[1] == "fire", cols[2].to_string())
        })
        .collect()
}

/// Textbook full-matrix Levenshtein distance.
pub fn naive_levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut m = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in m.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in m[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = if a[i - 1] == b[j - 1] { 0 } else { 1 };
            m[i][j] = (m[i - 1][j] + 1).min(m[i][j - 1] + 1).min(m[i - 1][j - 1] + cost);
        }
    }
    m[a.len()][b.len()]
}

/// Every string over `alphabet` of length up to `max_len`.
pub fn all_strings(alphabet: &[char], max_len: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut frontier = vec![String::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for &c in alphabet {
                let mut t = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}
