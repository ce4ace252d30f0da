//! Gold and silver concept annotations over documents.

use std::collections::HashSet;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{read_jsonl, JsonlError};
use crate::matcher::SpanKey;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("line {line}: invalid span [{start},{end})")]
    InvalidSpan { line: usize, start: usize, end: usize },
    #[error("line {line}: duplicate annotation span {doc_id}[{start},{end})")]
    Duplicate {
        line: usize,
        doc_id: String,
        start: usize,
        end: usize,
    },
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A mention span labelled with a concept id. Offsets are character offsets.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GoldAnnotation {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub cui: String,
}

impl GoldAnnotation {
    pub fn new(doc_id: impl Into<String>, start: usize, end: usize, cui: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            start,
            end,
            cui: cui.into(),
        }
    }

    pub fn key(&self) -> SpanKey {
        SpanKey {
            doc_id: self.doc_id.clone(),
            start: self.start,
            end: self.end,
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Reads annotation JSONL, rejecting empty spans and repeated spans. Extra
/// fields (silver provenance and the like) are ignored.
pub fn parse_annotations<R: BufRead>(reader: R) -> Result<Vec<GoldAnnotation>, AnnotationError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, ann) in read_jsonl::<GoldAnnotation, _>(reader)? {
        if ann.start >= ann.end {
            return Err(AnnotationError::InvalidSpan {
                line,
                start: ann.start,
                end: ann.end,
            });
        }
        if !seen.insert(ann.key()) {
            return Err(AnnotationError::Duplicate {
                line,
                doc_id: ann.doc_id,
                start: ann.start,
                end: ann.end,
            });
        }
        out.push(ann);
    }
    Ok(out)
}

pub fn load_annotations(path: impl AsRef<Path>) -> Result<Vec<GoldAnnotation>, AnnotationError> {
    let file = std::fs::File::open(path)?;
    parse_annotations(std::io::BufReader::new(file))
}
