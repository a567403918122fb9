//! Dictionary and rule based annotation of clinical text.
//!
//! A terminology of primary entities is expanded by rewrite rules into
//! secondary patterns, compiled into one automaton and run over raw text
//! without tokenization. Ambiguous abbreviations are resolved by contextual
//! rules. Misspelled variants can be mined offline and promoted into the
//! lexicon. Output is scored for entity recognition and concept indexing.
//!
//! ```
//! use clinlex::{annotate, load_primary_entities, Document, LexiconInputs};
//!
//! let primaries = load_primary_entities("warfarina\tNORMALIZABLES\t372756006\t1\n").unwrap();
//! let lexicon = LexiconInputs::new(&primaries, &[]).build().unwrap();
//! let doc = Document::new("d1", "Toma Warfarina desde 2019.");
//! let found = annotate(&doc, &lexicon, &[]);
//! assert_eq!((found[0].start, found[0].end), (5, 14));
//! assert_eq!(found[0].concept_id.as_deref(), Some("372756006"));
//! ```

pub mod annotator;
pub mod brat;
pub mod context_rules;
pub mod eval;
pub mod fuzzy;
pub mod lexicon;
pub mod pattern;
pub mod scanner;
pub mod transform;

pub use annotator::{annotate, annotate_corpus, index_concepts, resolve_overlaps, Annotation, Document};
pub use context_rules::{disambiguate, parse_rules, parse_rules_with_window, serialize_rules, ContextRule, RuleError};
pub use eval::{diff_report, score_indexing, score_ner, NerOptions, ScoreReport};
pub use fuzzy::{edit_distance, promote_candidates, FuzzyCandidate, FuzzyParams, LexiconStrings};
pub use lexicon::{
    build_lexicon, load_cache, load_primary_entities, save_cache, CompiledLexicon, EntityClass, LexEntry,
    LexiconInputs, PrimaryEntity, Source,
};
pub use transform::{apply_transform, enumerate_pattern, generate_secondary, parse_transform_rules, TransformRule};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/lexicon.md")]
    mod lexicon {}
    #[doc = include_str!("../../../book/src/transforms.md")]
    mod transforms {}
    #[doc = include_str!("../../../book/src/context-rules.md")]
    mod context_rules {}
    #[doc = include_str!("../../../book/src/annotation.md")]
    mod annotation {}
    #[doc = include_str!("../../../book/src/fuzzy.md")]
    mod fuzzy {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
