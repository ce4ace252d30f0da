//! Error categories and candidate-set size analysis.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{GoldAnnotation, MetricsError};
use crate::matcher::{CandidateSet, SpanKey};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCounts {
    /// No gold span overlaps the mention.
    pub false_positive_mention: usize,
    /// Overlapping gold exists, but none of their cuis is a candidate.
    pub missing_candidate: usize,
    pub matched: usize,
}

impl ErrorCounts {
    pub fn total(&self) -> usize {
        self.false_positive_mention + self.missing_candidate + self.matched
    }
}

/// Classifies every detected mention by its (pre-filter) candidate list.
pub fn error_breakdown(preds: &[CandidateSet], golds: &[GoldAnnotation]) -> ErrorCounts {
    let mut by_doc: HashMap<&str, Vec<&GoldAnnotation>> = HashMap::new();
    for g in golds {
        by_doc.entry(&g.doc_id).or_default().push(g);
    }
    let mut counts = ErrorCounts::default();
    for cs in preds {
        let m = &cs.mention;
        let overlapping: Vec<&&GoldAnnotation> = by_doc
            .get(m.doc_id.as_str())
            .map(|v| v.iter().filter(|g| g.start < m.end && m.start < g.end).collect())
            .unwrap_or_default();
        if overlapping.is_empty() {
            counts.false_positive_mention += 1;
        } else if overlapping.iter().any(|g| cs.candidates.iter().any(|c| c.cui == g.cui)) {
            counts.matched += 1;
        } else {
            counts.missing_candidate += 1;
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSizeStats {
    pub mentions: usize,
    pub before_histogram: BTreeMap<usize, usize>,
    pub after_histogram: BTreeMap<usize, usize>,
    /// Share of all mentions whose set shrank.
    pub reduced_fraction: f64,
    /// Share of the mentions with more than one candidate that were left with exactly one.
    pub disambiguated_fraction: f64,
}

impl CandidateSizeStats {
    /// From (before, after) size pairs.
    pub fn from_sizes(sizes: &[(usize, usize)]) -> Self {
        let mut before_histogram = BTreeMap::new();
        let mut after_histogram = BTreeMap::new();
        let (mut reduced, mut ambiguous, mut resolved) = (0usize, 0usize, 0usize);
        for &(b, a) in sizes {
            *before_histogram.entry(b).or_insert(0) += 1;
            *after_histogram.entry(a).or_insert(0) += 1;
            reduced += usize::from(a < b);
            if b > 1 {
                ambiguous += 1;
                resolved += usize::from(a == 1);
            }
        }
        let frac = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        Self {
            mentions: sizes.len(),
            before_histogram,
            after_histogram,
            reduced_fraction: frac(reduced, sizes.len()),
            disambiguated_fraction: frac(resolved, ambiguous),
        }
    }
}

/// Compares candidate sets before and after filtering. Both lists must hold
/// exactly the same mention spans (in any order).
pub fn candidate_size_stats(
    before: &[CandidateSet],
    after: &[CandidateSet],
) -> Result<CandidateSizeStats, MetricsError> {
    if before.len() != after.len() {
        return Err(MetricsError::AlignmentError(format!(
            "{} mentions before, {} after",
            before.len(),
            after.len()
        )));
    }
    let mut after_by: HashMap<SpanKey, usize> = HashMap::with_capacity(after.len());
    for cs in after {
        if after_by.insert(cs.mention.key(), cs.len()).is_some() {
            return Err(MetricsError::AlignmentError(format!(
                "duplicate mention {:?}",
                cs.mention.key()
            )));
        }
    }
    let mut sizes = Vec::with_capacity(before.len());
    for cs in before {
        let key = cs.mention.key();
        let a = after_by
            .remove(&key)
            .ok_or_else(|| MetricsError::AlignmentError(format!("mention {key:?} missing after filtering")))?;
        sizes.push((cs.len(), a));
    }
    Ok(CandidateSizeStats::from_sizes(&sizes))
}
