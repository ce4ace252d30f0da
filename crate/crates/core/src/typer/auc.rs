//! Area under the precision-recall curve.

use std::collections::BTreeSet;

use super::TyperError;

/// Per-group scores (in group order) with the gold group set.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredExample {
    pub scores: Vec<f64>,
    pub gold: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AucMode {
    /// Pool every (score, is-gold) pair across groups.
    Micro,
    /// Average the per-group AUC over groups with at least one positive.
    Macro,
}

/// Step-interpolated PR-AUC of labelled scores.
///
/// Pairs are swept in descending score order; tied scores form a single
/// operating point. Each recall increment is weighted by the precision at the
/// point where it is reached.
pub fn pr_auc_pairs(pairs: &[(f64, bool)]) -> Result<f64, TyperError> {
    let positives = pairs.iter().filter(|p| p.1).count();
    if positives == 0 {
        return Err(TyperError::UndefinedMetric);
    }
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (mut tp, mut seen, mut prev_recall, mut area) = (0usize, 0usize, 0.0, 0.0);
    let mut i = 0;
    while i < sorted.len() {
        let score = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == score {
            tp += usize::from(sorted[i].1);
            seen += 1;
            i += 1;
        }
        let recall = tp as f64 / positives as f64;
        area += (recall - prev_recall) * (tp as f64 / seen as f64);
        prev_recall = recall;
    }
    Ok(area)
}

pub fn pr_auc(scored: &[ScoredExample], groups: &[String], mode: AucMode) -> Result<f64, TyperError> {
    if scored.iter().any(|s| s.scores.len() != groups.len()) {
        return Err(TyperError::InvalidConfig(
            "score vector length differs from group count".into(),
        ));
    }
    let column = |g: usize| -> Vec<(f64, bool)> {
        scored
            .iter()
            .map(|s| (s.scores[g], s.gold.contains(&groups[g])))
            .collect()
    };
    match mode {
        AucMode::Micro => {
            let pooled: Vec<(f64, bool)> = (0..groups.len()).flat_map(column).collect();
            pr_auc_pairs(&pooled)
        }
        AucMode::Macro => {
            let per_group: Vec<f64> = (0..groups.len())
                .filter_map(|g| pr_auc_pairs(&column(g)).ok())
                .collect();
            if per_group.is_empty() {
                return Err(TyperError::UndefinedMetric);
            }
            Ok(per_group.iter().sum::<f64>() / per_group.len() as f64)
        }
    }
}
