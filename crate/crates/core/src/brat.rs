//! Standoff annotation files and corpus directories.
//!
//! ```text
//! T1<TAB>NORMALIZABLES 10 19<TAB>warfarina
//! #1<TAB>AnnotatorNotes T1<TAB>111111
//! ```
//!
//! Offsets count Unicode scalar values. Input may use CRLF line endings;
//! output always uses LF.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::annotator::{Annotation, Document};
use crate::eval::{Corpus, Index};
use crate::lexicon::EntityClass;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnnErrorKind {
    Malformed(String),
    UnknownRecord(String),
    DanglingNote(String),
    DuplicateNote(String),
    DuplicateId(String),
    OutOfBounds { end: usize, len: usize },
    SliceMismatch { expected: String, found: String },
}

impl fmt::Display for AnnErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Malformed(why) => write!(f, "malformed line: {why}"),
            Self::UnknownRecord(r) => write!(f, "unsupported record {r:?}"),
            Self::DanglingNote(t) => write!(f, "note refers to missing {t}"),
            Self::DuplicateNote(t) => write!(f, "second note for {t}"),
            Self::DuplicateId(t) => write!(f, "{t} defined twice"),
            Self::OutOfBounds { end, len } => write!(f, "offset {end} beyond text of {len} characters"),
            Self::SliceMismatch { expected, found } => {
                write!(f, "surface {found:?} does not match text slice {expected:?}")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum BratError {
    #[error("{doc_id}.ann, line {line}: {kind}")]
    Parse {
        doc_id: String,
        line: usize,
        kind: AnnErrorKind,
    },
    #[error("index, line {line}: {message}")]
    Index { line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl BratError {
    pub fn kind(&self) -> Option<&AnnErrorKind> {
        match self {
            Self::Parse { kind, .. } => Some(kind),
            _ => None,
        }
    }
}

fn parse_entity(rest: &str) -> Result<(EntityClass, usize, usize, &str), String> {
    let (head, surface) = rest.split_once('\t').ok_or("missing surface column")?;
    let mut parts = head.split(' ');
    let (Some(class), Some(start), Some(end), None) = (parts.next(), parts.next(), parts.next(), parts.next())
    else {
        return Err(format!("expected \"CLASS start end\", found {head:?}"));
    };
    let class = class.parse::<EntityClass>().map_err(|e| e.to_string())?;
    let start: usize = start.parse().map_err(|_| format!("bad offset {start:?}"))?;
    let end: usize = end.parse().map_err(|_| format!("bad offset {end:?}"))?;
    if start >= end {
        return Err(format!("empty or reversed span {start}..{end}"));
    }
    if surface.chars().count() != end - start {
        return Err(format!("surface {surface:?} is not {} characters long", end - start));
    }
    Ok((class, start, end, surface))
}

/// Parses one `.ann` file. With `doc_text`, every surface must equal the
/// text between its offsets. The result is sorted by span.
pub fn parse_ann(doc_id: &str, content: &str, doc_text: Option<&str>) -> Result<Vec<Annotation>, BratError> {
    let chars: Option<Vec<char>> = doc_text.map(|t| t.chars().collect());
    let mut entities: Vec<Annotation> = Vec::new();
    let mut by_tag: HashMap<String, usize> = HashMap::new();
    let mut noted: Vec<bool> = Vec::new();
    for (index, raw) in content.lines().enumerate() {
        let line = index + 1;
        let fail = |kind| BratError::Parse {
            doc_id: doc_id.to_string(),
            line,
            kind,
        };
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.is_empty() {
            continue;
        }
        let (tag, rest) = raw
            .split_once('\t')
            .ok_or_else(|| fail(AnnErrorKind::Malformed("no tab separator".into())))?;
        if tag.starts_with('T') && tag[1..].parse::<u64>().is_ok() {
            let (class, start, end, surface) = parse_entity(rest).map_err(|m| fail(AnnErrorKind::Malformed(m)))?;
            if let Some(chars) = &chars {
                if end > chars.len() {
                    return Err(fail(AnnErrorKind::OutOfBounds { end, len: chars.len() }));
                }
                let expected: String = chars[start..end].iter().collect();
                if expected != surface {
                    return Err(fail(AnnErrorKind::SliceMismatch {
                        expected,
                        found: surface.to_string(),
                    }));
                }
            }
            if by_tag.insert(tag.to_string(), entities.len()).is_some() {
                return Err(fail(AnnErrorKind::DuplicateId(tag.to_string())));
            }
            noted.push(false);
            entities.push(Annotation {
                doc_id: doc_id.to_string(),
                start,
                end,
                surface: surface.to_string(),
                class,
                concept_id: None,
            });
        } else if tag.starts_with('#') {
            let mut cols = rest.splitn(2, '\t');
            let (Some(target), Some(id)) = (cols.next(), cols.next()) else {
                return Err(fail(AnnErrorKind::Malformed("note without a value".into())));
            };
            let Some(target) = target.strip_prefix("AnnotatorNotes ") else {
                return Err(fail(AnnErrorKind::Malformed(format!("unsupported note {target:?}"))));
            };
            let id = id.trim();
            if id.is_empty() {
                return Err(fail(AnnErrorKind::Malformed("empty concept id".into())));
            }
            let &i = by_tag
                .get(target)
                .ok_or_else(|| fail(AnnErrorKind::DanglingNote(target.to_string())))?;
            if std::mem::replace(&mut noted[i], true) {
                return Err(fail(AnnErrorKind::DuplicateNote(target.to_string())));
            }
            entities[i].concept_id = Some(id.to_string());
        } else {
            return Err(fail(AnnErrorKind::UnknownRecord(tag.to_string())));
        }
    }
    entities.sort();
    Ok(entities)
}

/// Writes T-records numbered from 1 in span order, then one note per
/// annotation that carries a concept id.
pub fn write_ann(annotations: &[Annotation]) -> String {
    let mut sorted: Vec<&Annotation> = annotations.iter().collect();
    sorted.sort();
    let mut out = String::new();
    for (i, a) in sorted.iter().enumerate() {
        out.push_str(&format!("T{}\t{} {} {}\t{}\n", i + 1, a.class, a.start, a.end, a.surface));
    }
    let notes = sorted.iter().enumerate().filter_map(|(i, a)| a.concept_id.as_ref().map(|id| (i, id)));
    for (n, (i, id)) in notes.enumerate() {
        out.push_str(&format!("#{}\tAnnotatorNotes T{}\t{}\n", n + 1, i + 1, id));
    }
    out
}

/// `doc_id\tid` lines with the ids sorted and deduplicated.
pub fn write_index(doc_id: &str, ids: &[String]) -> String {
    let mut ids: Vec<&String> = ids.iter().collect();
    ids.sort();
    ids.dedup();
    ids.into_iter().map(|id| format!("{doc_id}\t{id}\n")).collect()
}

pub fn parse_index(content: &str) -> Result<Index, BratError> {
    let mut index = Index::new();
    for (i, raw) in content.lines().enumerate() {
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let Some((doc, id)) = raw.split_once('\t').filter(|(d, id)| !d.is_empty() && !id.is_empty() && !id.contains('\t'))
        else {
            return Err(BratError::Index {
                line: i + 1,
                message: format!("expected \"doc_id<TAB>id\", found {raw:?}"),
            });
        };
        let ids = index.entry(doc.to_string()).or_default();
        if !ids.iter().any(|x| x == id) {
            ids.push(id.to_string());
        }
    }
    for ids in index.values_mut() {
        ids.sort();
    }
    Ok(index)
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> BratError + '_ {
    move |source| BratError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Paths in `dir` with the given extension, keyed by file stem.
fn files_with_extension(dir: &Path, ext: &str) -> Result<BTreeMap<String, PathBuf>, BratError> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(io_error(dir))? {
        let path = entry.map_err(io_error(dir))?.path();
        if path.extension().and_then(|e| e.to_str()) == Some(ext) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.insert(stem.to_string(), path.clone());
            }
        }
    }
    Ok(out)
}

/// Every `<doc_id>.txt` in `dir`, ordered by document id.
pub fn read_documents(dir: &Path) -> Result<Vec<Document>, BratError> {
    files_with_extension(dir, "txt")?
        .into_iter()
        .map(|(doc_id, path)| {
            let text = fs::read_to_string(&path).map_err(io_error(&path))?;
            Ok(Document { doc_id, text })
        })
        .collect()
}

/// Every `<doc_id>.ann` in `dir`, checked against the matching text in
/// `texts` when there is one.
pub fn read_annotations(dir: &Path, texts: &[Document]) -> Result<Corpus, BratError> {
    let texts: HashMap<&str, &str> = texts.iter().map(|d| (d.doc_id.as_str(), d.text.as_str())).collect();
    let mut corpus = Corpus::new();
    for (doc_id, path) in files_with_extension(dir, "ann")? {
        let content = fs::read_to_string(&path).map_err(io_error(&path))?;
        let anns = parse_ann(&doc_id, &content, texts.get(doc_id.as_str()).copied())?;
        corpus.insert(doc_id, anns);
    }
    Ok(corpus)
}

pub fn write_annotations(dir: &Path, doc_id: &str, annotations: &[Annotation]) -> Result<(), BratError> {
    let path = dir.join(format!("{doc_id}.ann"));
    fs::write(&path, write_ann(annotations)).map_err(io_error(&path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ann(start: usize, end: usize, surface: &str, class: EntityClass, id: Option<&str>) -> Annotation {
        Annotation {
            doc_id: "d".into(),
            start,
            end,
            surface: surface.into(),
            class,
            concept_id: id.map(Into::into),
        }
    }

    #[test]
    fn parses_entity_with_note() {
        let got = parse_ann("d", "T1\tNORMALIZABLES 10 19\twarfarina\n#1\tAnnotatorNotes T1\t111111\n", None).unwrap();
        assert_eq!(got, vec![ann(10, 19, "warfarina", EntityClass::Normalizables, Some("111111"))]);
    }

    #[test]
    fn empty_file() {
        assert!(parse_ann("d", "", None).unwrap().is_empty());
        assert_eq!(write_ann(&[]), "");
    }

    #[test]
    fn errors() {
        let kind = |content: &str, text: Option<&str>| {
            let e = parse_ann("d", content, text).unwrap_err();
            let BratError::Parse { line, kind, .. } = e else { panic!() };
            (line, kind)
        };
        assert_eq!(
            kind("T1\tPROTEINAS 0 2\tCA\n#1\tAnnotatorNotes T9\t5", None),
            (2, AnnErrorKind::DanglingNote("T9".into()))
        );
        assert!(matches!(kind("T1\tPROTEINAS 0\tCA", None), (1, AnnErrorKind::Malformed(_))));
        assert!(matches!(kind("T1\tPROTEINAS 0 3\tCA", None), (1, AnnErrorKind::Malformed(_))));
        assert!(matches!(kind("R1\tRel Arg1:T1", None), (1, AnnErrorKind::UnknownRecord(_))));
        assert_eq!(
            kind("T1\tPROTEINAS 0 2\tCA", Some("CE")),
            (
                1,
                AnnErrorKind::SliceMismatch {
                    expected: "CE".into(),
                    found: "CA".into()
                }
            )
        );
        assert!(matches!(kind("T1\tPROTEINAS 0 2\tCA", Some("C")), (1, AnnErrorKind::OutOfBounds { .. })));
        assert!(matches!(
            kind("T1\tPROTEINAS 0 2\tCA\n#1\tAnnotatorNotes T1\t1\n#2\tAnnotatorNotes T1\t2", None),
            (3, AnnErrorKind::DuplicateNote(_))
        ));
    }

    #[test]
    fn crlf_and_multibyte_offsets() {
        let text = "Él tomó ácido fólico";
        let got = parse_ann("d", "T1\tNORMALIZABLES 8 20\tácido fólico\r\n", Some(text)).unwrap();
        assert_eq!(got[0].start, 8);
    }

    #[test]
    fn write_numbers_in_span_order() {
        let anns = [
            ann(5, 7, "Cr", EntityClass::Normalizables, None),
            ann(0, 3, "PCR", EntityClass::Proteinas, Some("55235003")),
        ];
        assert_eq!(
            write_ann(&anns),
            "T1\tPROTEINAS 0 3\tPCR\nT2\tNORMALIZABLES 5 7\tCr\n#1\tAnnotatorNotes T1\t55235003\n"
        );
        let mut sorted = anns.to_vec();
        sorted.sort();
        assert_eq!(parse_ann("d", &write_ann(&anns), None).unwrap(), sorted);
    }

    #[test]
    fn index_lines() {
        let text = write_index("d", &["9".into(), "10".into(), "9".into()]);
        assert_eq!(text, "d\t10\nd\t9\n");
        assert_eq!(parse_index(&text).unwrap()["d"], vec!["10".to_string(), "9".to_string()]);
        assert!(parse_index("nada").is_err());
    }
}
