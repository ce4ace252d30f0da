//! Per-mention group scores as JSONL, so an external model can drive the filter.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::TyperError;
use crate::io::read_jsonl;
use crate::matcher::SpanKey;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub scores: BTreeMap<String, f64>,
}

impl ScoreRecord {
    pub fn new(key: &SpanKey, groups: &[String], scores: &[f64]) -> Self {
        Self {
            doc_id: key.doc_id.clone(),
            start: key.start,
            end: key.end,
            scores: groups.iter().cloned().zip(scores.iter().copied()).collect(),
        }
    }
}

/// Reads score records and expands each into a dense vector in `groups`
/// order. Groups a record does not list score 0.0.
pub fn import_scores<R: BufRead>(reader: R, groups: &[String]) -> Result<Vec<(SpanKey, Vec<f64>)>, TyperError> {
    let mut out = Vec::new();
    for (line, rec) in read_jsonl::<ScoreRecord, _>(reader)? {
        let mut dense = vec![0.0; groups.len()];
        for (group, value) in rec.scores {
            let Ok(i) = groups.binary_search(&group) else {
                return Err(TyperError::UnknownGroup { group, line });
            };
            if !(0.0..=1.0).contains(&value) {
                return Err(TyperError::RangeError { group, value, line });
            }
            dense[i] = value;
        }
        out.push((
            SpanKey {
                doc_id: rec.doc_id,
                start: rec.start,
                end: rec.end,
            },
            dense,
        ));
    }
    Ok(out)
}
