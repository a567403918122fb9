//! Primary entities, the ranked lexicon compiled from them, and its on-disk
//! cache.
//!
//! Entries are kept in precedence order: lower rank first, then `PROTEINAS`
//! before the other classes, then longer patterns, then a lexicographic
//! tie-break over the remaining fields. An entry's index in
//! [`CompiledLexicon::entries`] is therefore its precedence.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::context_rules::{serialize_rule, ContextCondition, ContextRule};
use crate::pattern::{self, Pattern, PatternError};
use crate::scanner::{RawMatch, Scanner};
use crate::transform::{generate_secondary, SecondaryOptions, TransformError, TransformRule};

pub const CACHE_FORMAT_VERSION: u32 = 1;
const CACHE_MAGIC: &str = "clinlex-cache";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityClass {
    #[serde(rename = "PROTEINAS")]
    Proteinas,
    #[serde(rename = "NORMALIZABLES")]
    Normalizables,
    #[serde(rename = "NO_NORMALIZABLES")]
    NoNormalizables,
    #[serde(rename = "UNCLEAR")]
    Unclear,
}

impl EntityClass {
    pub const ALL: [EntityClass; 4] = [
        EntityClass::Proteinas,
        EntityClass::Normalizables,
        EntityClass::NoNormalizables,
        EntityClass::Unclear,
    ];

    pub fn label(self) -> &'static str {
        match self {
            EntityClass::Proteinas => "PROTEINAS",
            EntityClass::Normalizables => "NORMALIZABLES",
            EntityClass::NoNormalizables => "NO_NORMALIZABLES",
            EntityClass::Unclear => "UNCLEAR",
        }
    }

    /// Secondary sort key: `PROTEINAS` wins ties on rank.
    pub fn priority(self) -> u8 {
        self as u8
    }

    /// `UNCLEAR` is annotated but never scored.
    pub fn is_scored(self) -> bool {
        self != EntityClass::Unclear
    }
}

impl fmt::Display for EntityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown entity class {0:?}")]
pub struct UnknownClass(pub String);

impl FromStr for EntityClass {
    type Err = UnknownClass;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityClass::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| UnknownClass(s.to_string()))
    }
}

/// A canonical term taken from the terminology.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimaryEntity {
    pub term: String,
    pub class: EntityClass,
    pub concept_id: Option<String>,
    pub rank: u32,
}

impl PrimaryEntity {
    pub fn to_tsv(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}",
            self.term,
            self.class,
            self.concept_id.as_deref().unwrap_or(""),
            self.rank
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Primary,
    Secondary,
    Fuzzy,
}

/// One matchable pattern of the compiled lexicon.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LexEntry {
    /// The literal text when `is_regexp` is false, otherwise a dialect pattern.
    pub pattern: String,
    pub is_regexp: bool,
    pub class: EntityClass,
    pub concept_id: Option<String>,
    pub rank: u32,
    pub source: Source,
    /// The surface needs a contextual rule before it can be annotated.
    pub ambiguous_focus: bool,
    /// Term of the primary entity this entry derives from.
    pub canonical: String,
    /// Transform rule that produced a secondary entry.
    pub rule: Option<String>,
}

impl LexEntry {
    pub fn primary(entity: &PrimaryEntity) -> Self {
        Self {
            pattern: entity.term.clone(),
            is_regexp: false,
            class: entity.class,
            concept_id: entity.concept_id.clone(),
            rank: entity.rank,
            source: Source::Primary,
            ambiguous_focus: false,
            canonical: entity.term.clone(),
            rule: None,
        }
    }

    /// Patterns written without any uppercase letter match case-insensitively.
    pub fn case_insensitive(&self) -> bool {
        !pattern::has_uppercase(&self.pattern)
    }

    /// The entry as a dialect pattern.
    pub fn to_pattern(&self) -> Result<Pattern, PatternError> {
        if self.is_regexp {
            Pattern::parse(&self.pattern)
        } else {
            Pattern::parse(&pattern::escape(&self.pattern))
        }
    }

    /// Total precedence order; `Less` means higher precedence.
    pub fn precedence_cmp(&self, other: &Self) -> Ordering {
        let key = |e: &Self| {
            (
                e.rank,
                e.class.priority(),
                Reverse(e.pattern.chars().count()),
                e.pattern.clone(),
                e.is_regexp,
                e.source,
                e.concept_id.clone(),
                e.canonical.clone(),
                e.rule.clone(),
                e.ambiguous_focus,
            )
        };
        key(self).cmp(&key(other))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TsvErrorKind {
    Malformed { found: usize },
    UnknownClass(String),
    EmptyTerm,
    SurroundingWhitespace,
    BadRank(String),
    IdOnNonNormalizable,
    Duplicate { term: String, class: EntityClass },
}

impl fmt::Display for TsvErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Malformed { found } => write!(f, "expected 4 tab-separated columns, found {found}"),
            Self::UnknownClass(c) => write!(f, "unknown class {c:?}"),
            Self::EmptyTerm => f.write_str("empty term"),
            Self::SurroundingWhitespace => f.write_str("term has leading or trailing whitespace"),
            Self::BadRank(r) => write!(f, "rank {r:?} is not a non-negative integer"),
            Self::IdOnNonNormalizable => f.write_str("NO_NORMALIZABLES entries carry no concept id"),
            Self::Duplicate { term, class } => write!(f, "duplicate entry ({term:?}, {class})"),
        }
    }
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("primary entities, line {line}: {kind}")]
    Tsv { line: usize, kind: TsvErrorKind },
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("entry {pattern:?}: {source}")]
    InvalidEntry { pattern: String, source: PatternError },
    #[error("entry {0:?} matches the empty string")]
    EmptyMatch(String),
}

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("cache is stale (stored {stored}, current {current})")]
    Stale { stored: String, current: String },
    #[error("cache is corrupt: {0}")]
    Corrupt(String),
}

/// Reads the primary-entity TSV: term, class, concept id (may be empty),
/// rank. Lines starting with `#` are comments.
pub fn load_primary_entities(source: &str) -> Result<Vec<PrimaryEntity>, LexiconError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (index, raw) in source.lines().enumerate() {
        let line = index + 1;
        let err = |kind| LexiconError::Tsv { line, kind };
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        if cols.len() != 4 {
            return Err(err(TsvErrorKind::Malformed { found: cols.len() }));
        }
        let term = cols[0];
        if term.trim().is_empty() {
            return Err(err(TsvErrorKind::EmptyTerm));
        }
        if term.trim() != term {
            return Err(err(TsvErrorKind::SurroundingWhitespace));
        }
        let class: EntityClass = cols[1]
            .trim()
            .parse()
            .map_err(|UnknownClass(c)| err(TsvErrorKind::UnknownClass(c)))?;
        let concept_id = Some(cols[2].trim()).filter(|id| !id.is_empty()).map(str::to_string);
        if class == EntityClass::NoNormalizables && concept_id.is_some() {
            return Err(err(TsvErrorKind::IdOnNonNormalizable));
        }
        let rank = cols[3]
            .trim()
            .parse()
            .map_err(|_| err(TsvErrorKind::BadRank(cols[3].to_string())))?;
        if !seen.insert((term.to_string(), class)) {
            return Err(err(TsvErrorKind::Duplicate {
                term: term.to_string(),
                class,
            }));
        }
        out.push(PrimaryEntity {
            term: term.to_string(),
            class,
            concept_id,
            rank,
        });
    }
    Ok(out)
}

/// Digest of every resource a lexicon is built from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fingerprint(pub String);

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Entry counts by source.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    pub primary: usize,
    pub secondary: usize,
    pub fuzzy: usize,
}

/// Surfaces listed with more than one concept id; precedence picks the winner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Collision {
    pub pattern: String,
    pub concept_ids: Vec<Option<String>>,
}

/// Everything a lexicon is compiled from.
#[derive(Debug, Clone, Copy)]
pub struct LexiconInputs<'a> {
    pub primaries: &'a [PrimaryEntity],
    pub transforms: &'a [TransformRule],
    pub rules: &'a [ContextRule],
    /// Promoted fuzzy variants.
    pub fuzzy: &'a [LexEntry],
    pub options: SecondaryOptions,
}

impl<'a> LexiconInputs<'a> {
    pub fn new(primaries: &'a [PrimaryEntity], transforms: &'a [TransformRule]) -> Self {
        Self {
            primaries,
            transforms,
            rules: &[],
            fuzzy: &[],
            options: SecondaryOptions::default(),
        }
    }

    pub fn with_rules(mut self, rules: &'a [ContextRule]) -> Self {
        self.rules = rules;
        self
    }

    pub fn with_fuzzy(mut self, fuzzy: &'a [LexEntry]) -> Self {
        self.fuzzy = fuzzy;
        self
    }

    pub fn with_options(mut self, options: SecondaryOptions) -> Self {
        self.options = options;
        self
    }

    pub fn fingerprint(&self) -> Fingerprint {
        let mut h = Sha256::new();
        h.update(format!("{CACHE_MAGIC} v{CACHE_FORMAT_VERSION}\n"));
        h.update(format!("pluralize={}\n", self.options.pluralize));
        h.update("[primary]\n");
        for p in self.primaries {
            h.update(p.to_tsv());
            h.update("\n");
        }
        h.update("[transforms]\n");
        for t in self.transforms {
            h.update(t.to_tsv());
            h.update("\n");
        }
        h.update("[rules]\n");
        for r in self.rules {
            h.update(serialize_rule(r));
            let windows: Vec<usize> = match &r.condition {
                ContextCondition::Always => Vec::new(),
                ContextCondition::Either(s) => vec![s.window_chars],
                ContextCondition::Sides { left, right } => {
                    left.iter().chain(right).map(|s| s.window_chars).collect()
                }
            };
            h.update(format!("\t{windows:?}\n"));
        }
        h.update("[fuzzy]\n");
        for e in self.fuzzy {
            h.update(serde_json::to_string(e).expect("entries serialize"));
            h.update("\n");
        }
        Fingerprint(hex::encode(h.finalize()))
    }

    pub fn build(&self) -> Result<CompiledLexicon, LexiconError> {
        let mut entries: Vec<LexEntry> = self.primaries.iter().map(LexEntry::primary).collect();
        let mut secondary = 0;
        for primary in self.primaries {
            let derived = generate_secondary(primary, self.transforms, self.options)?;
            secondary += derived.len();
            entries.extend(derived);
        }
        entries.extend(self.fuzzy.iter().cloned().map(|mut e| {
            e.source = Source::Fuzzy;
            e.is_regexp = false;
            e
        }));

        for entry in &mut entries {
            if !entry.is_regexp {
                entry.ambiguous_focus = self.rules.iter().any(|r| r.focus_matches(&entry.pattern));
            } else {
                entry.ambiguous_focus = self.rules.iter().any(|r| r.focus == entry.pattern);
            }
        }
        for rule in self.rules {
            if !entries.iter().any(|e| e.ambiguous_focus && rule.focus_matches(&e.pattern)) {
                log::warn!("rule {} focus {:?} has no lexicon entry; it will never fire", rule.rule_id, rule.focus);
            }
        }

        entries.sort_by(LexEntry::precedence_cmp);
        let mut kept = HashSet::new();
        entries.retain(|e| kept.insert((e.pattern.clone(), e.is_regexp, e.class, e.concept_id.clone())));

        let stats = BuildStats {
            primary: self.primaries.len(),
            secondary: entries.iter().filter(|e| e.source == Source::Secondary).count(),
            fuzzy: entries.iter().filter(|e| e.source == Source::Fuzzy).count(),
        };
        log::debug!("{secondary} secondary patterns derived before deduplication");
        let lexicon = CompiledLexicon::assemble(entries, self.fingerprint(), stats)?;
        for c in lexicon.collisions() {
            log::warn!("pattern {:?} maps to several concept ids: {:?}", c.pattern, c.concept_ids);
        }
        Ok(lexicon)
    }
}

/// Builds a lexicon from primaries and transforms alone.
pub fn build_lexicon(primaries: &[PrimaryEntity], transforms: &[TransformRule]) -> Result<CompiledLexicon, LexiconError> {
    LexiconInputs::new(primaries, transforms).build()
}

/// The ranked, scan-ready lexicon. Immutable once built.
#[derive(Debug, Clone)]
pub struct CompiledLexicon {
    entries: Vec<LexEntry>,
    scanner: Scanner,
    fingerprint: Fingerprint,
    stats: BuildStats,
    /// Lowercased canonical term of every unambiguous primary entry, mapped
    /// to its best entry.
    canonical: BTreeMap<String, usize>,
}

impl CompiledLexicon {
    fn assemble(entries: Vec<LexEntry>, fingerprint: Fingerprint, stats: BuildStats) -> Result<Self, LexiconError> {
        let mut patterns = Vec::with_capacity(entries.len());
        for entry in &entries {
            let parsed = entry.to_pattern().map_err(|source| LexiconError::InvalidEntry {
                pattern: entry.pattern.clone(),
                source,
            })?;
            if parsed.matches_empty() {
                return Err(LexiconError::EmptyMatch(entry.pattern.clone()));
            }
            patterns.push((parsed, entry.case_insensitive()));
        }
        let scanner = Scanner::new(patterns.iter().map(|(p, ci)| (p.root(), *ci)));

        let mut canonical = BTreeMap::new();
        for (index, entry) in entries.iter().enumerate() {
            if entry.source == Source::Primary && !entry.ambiguous_focus {
                canonical.entry(entry.canonical.to_lowercase()).or_insert(index);
            }
        }
        Ok(Self {
            entries,
            scanner,
            fingerprint,
            stats,
            canonical,
        })
    }

    pub fn entries(&self) -> &[LexEntry] {
        &self.entries
    }

    pub fn entry(&self, index: usize) -> &LexEntry {
        &self.entries[index]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn fingerprint(&self) -> &Fingerprint {
        &self.fingerprint
    }

    pub fn stats(&self) -> BuildStats {
        self.stats
    }

    pub fn scanner(&self) -> &Scanner {
        &self.scanner
    }

    /// All boundary-respecting matches over `text`.
    pub fn scan(&self, text: &[char]) -> Vec<RawMatch> {
        self.scanner.find_all(text)
    }

    /// The entry an expansion stands for: the best primary entry whose
    /// canonical term equals `expansion` (ignoring case), or failing that the
    /// best one whose term starts with `expansion` followed by a space.
    pub fn lookup_expansion(&self, expansion: &str) -> Option<(usize, &LexEntry)> {
        let key = expansion.to_lowercase();
        let index = self.canonical.get(&key).copied().or_else(|| {
            let lo = format!("{key} ");
            let hi = format!("{key}!");
            self.canonical.range(lo..hi).map(|(_, &i)| i).min()
        })?;
        Some((index, &self.entries[index]))
    }

    pub fn collisions(&self) -> Vec<Collision> {
        let mut by_pattern: BTreeMap<(&str, bool), Vec<Option<String>>> = BTreeMap::new();
        for e in &self.entries {
            let ids = by_pattern.entry((&e.pattern, e.is_regexp)).or_default();
            if !ids.contains(&e.concept_id) {
                ids.push(e.concept_id.clone());
            }
        }
        by_pattern
            .into_iter()
            .filter(|(_, ids)| ids.len() > 1)
            .map(|((pattern, _), concept_ids)| Collision {
                pattern: pattern.to_string(),
                concept_ids,
            })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct CachePayload {
    stats: BuildStats,
    entries: Vec<LexEntry>,
}

/// Writes the lexicon as a header line (magic, format version, fingerprint,
/// payload digest) followed by a JSON payload.
pub fn save_cache(lex: &CompiledLexicon, path: &Path) -> Result<(), CacheError> {
    let io_err = |source| CacheError::Io {
        path: path.to_path_buf(),
        source,
    };
    let payload = serde_json::to_vec(&CachePayload {
        stats: lex.stats,
        entries: lex.entries.clone(),
    })
    .expect("lexicon entries serialize");
    let digest = hex::encode(Sha256::digest(&payload));
    let mut bytes = format!("{CACHE_MAGIC}\t{CACHE_FORMAT_VERSION}\t{}\t{digest}\n", lex.fingerprint).into_bytes();
    bytes.extend_from_slice(&payload);

    let tmp = path.with_extension("tmp");
    fs::write(&tmp, &bytes).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

/// Loads a cache written by [`save_cache`]. A cache built from other
/// resources, or by another format version, is [`CacheError::Stale`]; any
/// damage to the file is [`CacheError::Corrupt`].
pub fn load_cache(path: &Path, current: &Fingerprint) -> Result<CompiledLexicon, CacheError> {
    let bytes = fs::read(path).map_err(|source| CacheError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let corrupt = |why: &str| CacheError::Corrupt(why.to_string());
    let newline = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| corrupt("missing header"))?;
    let header = std::str::from_utf8(&bytes[..newline]).map_err(|_| corrupt("header is not UTF-8"))?;
    let payload = &bytes[newline + 1..];
    let fields: Vec<&str> = header.split('\t').collect();
    let [magic, version, fingerprint, digest] = fields[..] else {
        return Err(corrupt("malformed header"));
    };
    if magic != CACHE_MAGIC {
        return Err(corrupt("not a lexicon cache"));
    }
    let version: u32 = version.parse().map_err(|_| corrupt("malformed format version"))?;
    if hex::encode(Sha256::digest(payload)) != digest {
        return Err(corrupt("payload digest mismatch"));
    }
    if version != CACHE_FORMAT_VERSION || fingerprint != current.0 {
        return Err(CacheError::Stale {
            stored: format!("v{version} {fingerprint}"),
            current: format!("v{CACHE_FORMAT_VERSION} {current}"),
        });
    }
    let payload: CachePayload =
        serde_json::from_slice(payload).map_err(|e| CacheError::Corrupt(format!("payload: {e}")))?;
    CompiledLexicon::assemble(payload.entries, current.clone(), payload.stats)
        .map_err(|e| CacheError::Corrupt(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context_rules::parse_rules;

    fn entity(term: &str, class: EntityClass, id: Option<&str>, rank: u32) -> PrimaryEntity {
        PrimaryEntity {
            term: term.into(),
            class,
            concept_id: id.map(Into::into),
            rank,
        }
    }

    #[test]
    fn loads_primary_tsv() {
        let got = load_primary_entities("# header\nwarfarina\tNORMALIZABLES\t387457003\t10\n").unwrap();
        assert_eq!(got, vec![entity("warfarina", EntityClass::Normalizables, Some("387457003"), 10)]);
        assert!(load_primary_entities("").unwrap().is_empty());
    }

    #[test]
    fn tsv_errors_carry_line_numbers() {
        let line_kind = |src: &str| match load_primary_entities(src).unwrap_err() {
            LexiconError::Tsv { line, kind } => (line, kind),
            other => panic!("unexpected {other}"),
        };
        assert_eq!(line_kind("x\tDRUGS\t1\t0"), (1, TsvErrorKind::UnknownClass("DRUGS".into())));
        assert_eq!(line_kind("a\tUNCLEAR\t\t0\nb\tUNCLEAR\t0"), (2, TsvErrorKind::Malformed { found: 3 }));
        assert_eq!(line_kind("\tUNCLEAR\t\t0"), (1, TsvErrorKind::EmptyTerm));
        assert_eq!(line_kind(" a\tUNCLEAR\t\t0"), (1, TsvErrorKind::SurroundingWhitespace));
        assert_eq!(line_kind("a\tUNCLEAR\t\t-1"), (1, TsvErrorKind::BadRank("-1".into())));
        assert_eq!(line_kind("a\tNO_NORMALIZABLES\t5\t1"), (1, TsvErrorKind::IdOnNonNormalizable));
        assert_eq!(
            line_kind("a\tUNCLEAR\t\t0\na\tUNCLEAR\t\t1"),
            (
                2,
                TsvErrorKind::Duplicate {
                    term: "a".into(),
                    class: EntityClass::Unclear
                }
            )
        );
        // same term, different class is fine
        assert_eq!(load_primary_entities("a\tUNCLEAR\t\t0\na\tPROTEINAS\t\t1").unwrap().len(), 2);
    }

    #[test]
    fn empty_lexicon_matches_nothing() {
        let lex = build_lexicon(&[], &[]).unwrap();
        assert!(lex.is_empty());
        assert!(lex.scan(&"anything at all".chars().collect::<Vec<_>>()).is_empty());
    }

    #[test]
    fn single_primary_without_transforms() {
        let lex = LexiconInputs::new(&[entity("PCR", EntityClass::Proteinas, Some("1"), 0)], &[])
            .build()
            .unwrap();
        assert_eq!(lex.len(), 1);
        assert_eq!(lex.entry(0).source, Source::Primary);
    }

    #[test]
    fn precedence_order() {
        let primaries = [
            entity("hierro", EntityClass::Normalizables, Some("3"), 5),
            entity("hierro sérico", EntityClass::Normalizables, Some("4"), 5),
            entity("hierro", EntityClass::Proteinas, Some("2"), 5),
            entity("ferritina", EntityClass::Proteinas, Some("1"), 1),
        ];
        let lex = LexiconInputs::new(&primaries, &[])
            .with_options(SecondaryOptions { pluralize: false })
            .build()
            .unwrap();
        let order: Vec<(&str, EntityClass)> = lex.entries().iter().map(|e| (e.pattern.as_str(), e.class)).collect();
        assert_eq!(
            order,
            vec![
                ("ferritina", EntityClass::Proteinas),
                ("hierro", EntityClass::Proteinas),
                ("hierro sérico", EntityClass::Normalizables),
                ("hierro", EntityClass::Normalizables),
            ]
        );
        assert_eq!(lex.collisions().len(), 1);
    }

    #[test]
    fn focus_entries_are_marked_and_skipped_for_expansion() {
        let primaries = [
            entity("PCR", EntityClass::Proteinas, None, 0),
            entity("proteína C reactiva", EntityClass::Proteinas, Some("55235003"), 1),
        ];
        let rules = parse_rules("b:[il::hemograma] - [PCR] - > [m=proteína]").unwrap();
        let lex = LexiconInputs::new(&primaries, &[]).with_rules(&rules).build().unwrap();
        let pcr = lex.entries().iter().find(|e| e.pattern == "PCR").unwrap();
        assert!(pcr.ambiguous_focus);
        let (_, entry) = lex.lookup_expansion("proteína").unwrap();
        assert_eq!(entry.concept_id.as_deref(), Some("55235003"));
        assert_eq!(lex.lookup_expansion("Proteína C reactiva").unwrap().1.canonical, "proteína C reactiva");
        assert!(lex.lookup_expansion("prote").is_none());
        assert!(lex.lookup_expansion("PCR").is_none());
    }

    #[test]
    fn fingerprint_tracks_every_input() {
        let a = [entity("a", EntityClass::Unclear, None, 0)];
        let b = [entity("a", EntityClass::Unclear, None, 1)];
        let base = LexiconInputs::new(&a, &[]).fingerprint();
        assert_eq!(base, LexiconInputs::new(&a, &[]).fingerprint());
        assert_ne!(base, LexiconInputs::new(&b, &[]).fingerprint());
        let rules = parse_rules("- [a] - > [m=b]").unwrap();
        assert_ne!(base, LexiconInputs::new(&a, &[]).with_rules(&rules).fingerprint());
        assert_ne!(
            base,
            LexiconInputs::new(&a, &[]).with_options(SecondaryOptions { pluralize: false }).fingerprint()
        );
    }

    #[test]
    fn cache_round_trip_and_staleness() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lex.cache");
        let primaries = [entity("warfarina", EntityClass::Normalizables, Some("1"), 0)];
        let inputs = LexiconInputs::new(&primaries, &[]);
        let lex = inputs.build().unwrap();
        save_cache(&lex, &path).unwrap();
        let loaded = load_cache(&path, &inputs.fingerprint()).unwrap();
        assert_eq!(loaded.entries(), lex.entries());
        assert_eq!(loaded.stats(), lex.stats());

        let edited = [entity("warfarina", EntityClass::Normalizables, Some("2"), 0)];
        let stale = load_cache(&path, &LexiconInputs::new(&edited, &[]).fingerprint());
        assert!(matches!(stale, Err(CacheError::Stale { .. })));

        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(load_cache(&path, &inputs.fingerprint()), Err(CacheError::Corrupt(_))));
        fs::write(&path, b"").unwrap();
        assert!(matches!(load_cache(&path, &inputs.fingerprint()), Err(CacheError::Corrupt(_))));
    }

    #[test]
    fn class_labels() {
        for class in EntityClass::ALL {
            assert_eq!(class.label().parse::<EntityClass>().unwrap(), class);
        }
        assert!("DRUGS".parse::<EntityClass>().is_err());
        assert!(!EntityClass::Unclear.is_scored());
    }
}
