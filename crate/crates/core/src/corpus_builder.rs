//! Silver-standard corpus construction.
//!
//! Two builders: distant supervision from document-level headings (a detected
//! mention is kept only if it names one of its document's headings), and
//! hyperlink mapping through a page-to-concept crosswalk. Both emit
//! annotation JSONL that the typer can train on directly.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::GoldAnnotation;
use crate::io::{read_jsonl, JsonlError};
use crate::lexicon::{normalized_key, Lexicon};
use crate::matcher::{detect_and_generate, Document, MatcherConfig};
use crate::metrics::{exact_tp, MetricsError, Prf};
use crate::warning::{self, Warning};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: cui {cui} is already mapped from {existing:?}")]
    InjectivityError { cui: String, existing: String, line: usize },
    #[error("line {line}: duplicate page key {key:?}")]
    DuplicateKey { key: String, line: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: duplicate document id {doc_id:?}")]
    DuplicateDocument { doc_id: String, line: usize },
    #[error("{doc_id}: link span [{start},{end}) is not inside the text")]
    SpanError { doc_id: String, start: usize, end: usize },
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Heading {
    pub name: String,
    pub cui: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadedDocument {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub headings: Vec<Heading>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkSpan {
    pub start: usize,
    pub end: usize,
    pub page_key: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkedDocument {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub links: Vec<LinkSpan>,
}

fn load_unique<T, R>(reader: R, id: impl Fn(&T) -> &str) -> Result<Vec<T>, CorpusError>
where
    T: serde::de::DeserializeOwned,
    R: BufRead,
{
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, doc) in read_jsonl::<T, _>(reader)? {
        if !seen.insert(id(&doc).to_string()) {
            return Err(CorpusError::DuplicateDocument {
                doc_id: id(&doc).to_string(),
                line,
            });
        }
        out.push(doc);
    }
    Ok(out)
}

pub fn parse_headed_documents<R: BufRead>(reader: R) -> Result<Vec<HeadedDocument>, CorpusError> {
    load_unique(reader, |d: &HeadedDocument| &d.id)
}

pub fn parse_linked_documents<R: BufRead>(reader: R) -> Result<Vec<LinkedDocument>, CorpusError> {
    load_unique(reader, |d: &LinkedDocument| &d.id)
}

/// One-to-one map from page keys to concept ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Crosswalk {
    map: BTreeMap<String, String>,
}

impl Crosswalk {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        Self::parse(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    /// Parses `page_key<TAB>cui` lines, skipping blanks and `#` comments.
    /// Rejects repeated keys and any cui reached from two keys.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self, CorpusError> {
        let mut map = BTreeMap::new();
        let mut by_cui: HashMap<String, String> = HashMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            let [key, cui] = fields[..] else {
                return Err(CorpusError::Parse {
                    line: line_no,
                    msg: "expected page_key<TAB>cui".into(),
                });
            };
            if key.is_empty() || cui.is_empty() {
                return Err(CorpusError::Parse {
                    line: line_no,
                    msg: "empty field".into(),
                });
            }
            if map.contains_key(key) {
                return Err(CorpusError::DuplicateKey {
                    key: key.to_string(),
                    line: line_no,
                });
            }
            if let Some(existing) = by_cui.get(cui) {
                return Err(CorpusError::InjectivityError {
                    cui: cui.to_string(),
                    existing: existing.clone(),
                    line: line_no,
                });
            }
            by_cui.insert(cui.to_string(), key.to_string());
            map.insert(key.to_string(), cui.to_string());
        }
        Ok(Self { map })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Distant,
    Crosswalk,
}

/// An annotation line in silver output; readable as a plain gold annotation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SilverAnnotation {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub cui: String,
    pub provenance: Provenance,
    pub fine_types: Vec<String>,
    /// The cui is missing from the lexicon, so no types could be attached.
    pub untyped: bool,
}

impl SilverAnnotation {
    pub fn to_gold(&self) -> GoldAnnotation {
        GoldAnnotation::new(self.doc_id.clone(), self.start, self.end, self.cui.clone())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SilverCorpus {
    /// Sorted by (doc_id, start, end, cui).
    pub annotations: Vec<SilverAnnotation>,
    /// Every input document, annotated or not.
    pub doc_ids: Vec<String>,
    /// Detected mentions (distant) or link spans (crosswalk) that were not kept.
    pub discarded: usize,
}

impl SilverCorpus {
    pub fn gold_annotations(&self) -> Vec<GoldAnnotation> {
        self.annotations.iter().map(SilverAnnotation::to_gold).collect()
    }
}

/// How a mention surface is compared with a heading name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatchStrictness {
    /// Equal after normalization (case, edge punctuation, whitespace).
    #[default]
    Normalized,
    /// Byte-identical.
    Raw,
}

impl MatchStrictness {
    pub fn key(self, s: &str) -> String {
        match self {
            MatchStrictness::Normalized => normalized_key(s),
            MatchStrictness::Raw => s.to_string(),
        }
    }
}

fn fine_types_of(lexicon: &Lexicon, cui: &str) -> Option<Vec<String>> {
    lexicon.get(cui).map(|c| c.fine_types.iter().cloned().collect())
}

fn finish_corpus(mut annotations: Vec<SilverAnnotation>, mut doc_ids: Vec<String>, discarded: usize) -> SilverCorpus {
    annotations.sort();
    doc_ids.sort();
    SilverCorpus {
        annotations,
        doc_ids,
        discarded,
    }
}

/// Keeps each detected mention whose surface equals the name of one of its
/// document's headings, labelled with that heading's cui. Headings with cuis
/// outside the lexicon are ignored. A surface naming headings with different
/// cuis is ambiguous and discarded.
pub fn distant_supervise(
    docs: &[HeadedDocument],
    lexicon: &Lexicon,
    config: &MatcherConfig,
    strictness: MatchStrictness,
) -> (SilverCorpus, Vec<Warning>) {
    let per_doc: Vec<(Vec<SilverAnnotation>, usize, Vec<Warning>)> = docs
        .par_iter()
        .map(|doc| {
            let mut warnings = Vec::new();
            let mut by_name: HashMap<String, BTreeSet<&str>> = HashMap::new();
            for h in &doc.headings {
                if lexicon.contains(&h.cui) {
                    by_name.entry(strictness.key(&h.name)).or_default().insert(&h.cui);
                } else {
                    warnings.push(Warning::UnknownHeadingCui {
                        doc_id: doc.id.clone(),
                        cui: h.cui.clone(),
                    });
                }
            }
            let mut kept = Vec::new();
            let mut discarded = 0;
            if by_name.is_empty() {
                return (kept, 0, warnings);
            }
            for cs in detect_and_generate(lexicon, &Document::new(doc.id.clone(), doc.text.clone()), config) {
                let m = cs.mention;
                match by_name.get(&strictness.key(&m.surface)) {
                    Some(cuis) if cuis.len() == 1 => {
                        let cui = cuis.iter().next().expect("non-empty").to_string();
                        kept.push(SilverAnnotation {
                            fine_types: fine_types_of(lexicon, &cui).unwrap_or_default(),
                            doc_id: m.doc_id,
                            start: m.start,
                            end: m.end,
                            cui,
                            provenance: Provenance::Distant,
                            untyped: false,
                        });
                    }
                    Some(_) => {
                        warnings.push(Warning::SkippedAnnotation {
                            doc_id: m.doc_id,
                            start: m.start,
                            end: m.end,
                            reason: "surface names headings with different cuis".into(),
                        });
                        discarded += 1;
                    }
                    None => discarded += 1,
                }
            }
            (kept, discarded, warnings)
        })
        .collect();
    let mut annotations = Vec::new();
    let mut warnings = Vec::new();
    let mut discarded = 0;
    for (a, d, w) in per_doc {
        annotations.extend(a);
        discarded += d;
        warnings.extend(w);
    }
    let doc_ids = docs.iter().map(|d| d.id.clone()).collect();
    (
        finish_corpus(annotations, doc_ids, discarded),
        warning::finish(warnings),
    )
}

/// Turns every link whose page key is in the crosswalk into an annotation.
/// Unmapped links are counted in `discarded`; a mapped cui missing from the
/// lexicon yields an untyped annotation and a warning.
pub fn map_links(
    docs: &[LinkedDocument],
    crosswalk: &Crosswalk,
    lexicon: &Lexicon,
) -> Result<(SilverCorpus, Vec<Warning>), CorpusError> {
    let mut annotations = Vec::new();
    let mut warnings = Vec::new();
    let mut discarded = 0;
    for doc in docs {
        let len = doc.text.chars().count();
        let mut seen = HashSet::new();
        for link in &doc.links {
            if link.start >= link.end || link.end > len {
                return Err(CorpusError::SpanError {
                    doc_id: doc.id.clone(),
                    start: link.start,
                    end: link.end,
                });
            }
            let Some(cui) = crosswalk.get(&link.page_key) else {
                discarded += 1;
                continue;
            };
            if !seen.insert((link.start, link.end)) {
                warnings.push(Warning::SkippedAnnotation {
                    doc_id: doc.id.clone(),
                    start: link.start,
                    end: link.end,
                    reason: "repeated link span".into(),
                });
                discarded += 1;
                continue;
            }
            let fine_types = fine_types_of(lexicon, cui);
            if fine_types.is_none() {
                warnings.push(Warning::UntypedCui {
                    doc_id: doc.id.clone(),
                    cui: cui.to_string(),
                });
            }
            annotations.push(SilverAnnotation {
                doc_id: doc.id.clone(),
                start: link.start,
                end: link.end,
                cui: cui.to_string(),
                provenance: Provenance::Crosswalk,
                untyped: fine_types.is_none(),
                fine_types: fine_types.unwrap_or_default(),
            });
        }
    }
    let doc_ids = docs.iter().map(|d| d.id.clone()).collect();
    Ok((
        finish_corpus(annotations, doc_ids, discarded),
        warning::finish(warnings),
    ))
}

/// Exact span-and-cui agreement of silver with gold, restricted to the
/// documents of `gold_doc_ids` that the silver corpus also covers.
pub fn quality_report(
    silver: &SilverCorpus,
    gold: &[GoldAnnotation],
    gold_doc_ids: &[String],
) -> Result<Prf, MetricsError> {
    let silver_docs: HashSet<&str> = silver.doc_ids.iter().map(String::as_str).collect();
    let shared: HashSet<&str> = gold_doc_ids
        .iter()
        .map(String::as_str)
        .filter(|d| silver_docs.contains(d))
        .collect();
    if shared.is_empty() {
        return Err(MetricsError::EmptyOverlap);
    }
    let s: Vec<GoldAnnotation> = silver
        .annotations
        .iter()
        .filter(|a| shared.contains(a.doc_id.as_str()))
        .map(SilverAnnotation::to_gold)
        .collect();
    let g: Vec<GoldAnnotation> = gold
        .iter()
        .filter(|a| shared.contains(a.doc_id.as_str()))
        .cloned()
        .collect();
    Ok(Prf::from_counts(exact_tp(&s, &g) as f64, s.len(), g.len()))
}
