//! Linking evaluation: exact and partial F1, per-group F1, error analysis,
//! candidate-size statistics and paired bootstrap tests.

pub mod bootstrap;
pub mod errors;
pub mod report;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filter::LinkedMention;
use crate::lexicon::Lexicon;
use crate::type_system::TypeMap;
use crate::warning::{self, Warning};

pub use crate::annotation::GoldAnnotation;
pub use bootstrap::{paired_bootstrap, paired_bootstrap_f1, BootstrapResult, DocCounts, Winner};
pub use errors::{candidate_size_stats, error_breakdown, CandidateSizeStats, ErrorCounts};
pub use report::{evaluate, EvalReport};

/// Key under which golds and predictions with unknown cuis are scored.
pub const UNRESOLVED: &str = "UNRESOLVED";

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("inputs are not aligned: {0}")]
    AlignmentError(String),
    #[error("invalid bootstrap setup: {0}")]
    InvalidConfig(String),
    #[error("silver and gold share no document")]
    EmptyOverlap,
}

/// Precision, recall and their harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// Precision is 1 with no predictions and recall is 1 with no golds; F1 is
    /// 0 when both are 0.
    pub fn from_counts(tp: f64, n_pred: usize, n_gold: usize) -> Self {
        let precision = if n_pred == 0 { 1.0 } else { tp / n_pred as f64 };
        let recall = if n_gold == 0 { 1.0 } else { tp / n_gold as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self { precision, recall, f1 }
    }
}

/// The (span, chosen cui) pairs of linked mentions that produced a link.
pub fn predictions(preds: &[LinkedMention]) -> Vec<GoldAnnotation> {
    preds
        .iter()
        .filter_map(|p| {
            p.chosen_cui
                .as_ref()
                .map(|c| GoldAnnotation::new(p.mention.doc_id.clone(), p.mention.start, p.mention.end, c.clone()))
        })
        .collect()
}

/// Number of predictions matching a gold on span and cui, each gold used once.
pub fn exact_tp(preds: &[GoldAnnotation], golds: &[GoldAnnotation]) -> usize {
    let mut remaining: HashMap<&GoldAnnotation, usize> = HashMap::new();
    for g in golds {
        *remaining.entry(g).or_insert(0) += 1;
    }
    let mut tp = 0;
    for p in preds {
        if let Some(n) = remaining.get_mut(p) {
            if *n > 0 {
                *n -= 1;
                tp += 1;
            }
        }
    }
    tp
}

pub fn exact_f1_annotations(preds: &[GoldAnnotation], golds: &[GoldAnnotation]) -> Prf {
    Prf::from_counts(exact_tp(preds, golds) as f64, preds.len(), golds.len())
}

/// Mention-and-concept exact match. Mentions without a chosen cui are not predictions.
pub fn exact_f1(preds: &[LinkedMention], golds: &[GoldAnnotation]) -> Prf {
    exact_f1_annotations(&predictions(preds), golds)
}

struct Pair {
    gi: usize,
    pi: usize,
    overlap: usize,
    total_len: usize,
}

impl Pair {
    fn credit(&self) -> f64 {
        2.0 * self.overlap as f64 / self.total_len as f64
    }
}

fn overlap(a: &GoldAnnotation, b: &GoldAnnotation) -> usize {
    a.end.min(b.end).saturating_sub(a.start.max(b.start))
}

/// Sum of character-Dice credits over a greedy one-to-one assignment of
/// same-document, same-cui overlapping pairs. Pairs are taken by descending
/// credit, then earlier gold start, then earlier prediction start.
pub fn partial_tp(preds: &[GoldAnnotation], golds: &[GoldAnnotation]) -> f64 {
    let mut by_doc_cui: HashMap<(&str, &str), Vec<usize>> = HashMap::new();
    for (gi, g) in golds.iter().enumerate() {
        by_doc_cui.entry((&g.doc_id, &g.cui)).or_default().push(gi);
    }
    let mut pairs = Vec::new();
    for (pi, p) in preds.iter().enumerate() {
        for &gi in by_doc_cui
            .get(&(p.doc_id.as_str(), p.cui.as_str()))
            .map(Vec::as_slice)
            .unwrap_or(&[])
        {
            let ov = overlap(p, &golds[gi]);
            if ov > 0 {
                pairs.push(Pair {
                    gi,
                    pi,
                    overlap: ov,
                    total_len: p.len() + golds[gi].len(),
                });
            }
        }
    }
    // credits compared as exact fractions so that ties are ties
    fn span(i: usize, v: &[GoldAnnotation]) -> (&str, usize, usize) {
        (v[i].doc_id.as_str(), v[i].start, v[i].end)
    }
    pairs.sort_by(|a, b| {
        (b.overlap * a.total_len)
            .cmp(&(a.overlap * b.total_len))
            .then_with(|| golds[a.gi].start.cmp(&golds[b.gi].start))
            .then_with(|| preds[a.pi].start.cmp(&preds[b.pi].start))
            .then_with(|| span(a.gi, golds).cmp(&span(b.gi, golds)))
            .then_with(|| span(a.pi, preds).cmp(&span(b.pi, preds)))
    });
    let mut gold_used = vec![false; golds.len()];
    let mut pred_used = vec![false; preds.len()];
    let mut tp = 0.0;
    for pair in pairs {
        if gold_used[pair.gi] || pred_used[pair.pi] {
            continue;
        }
        gold_used[pair.gi] = true;
        pred_used[pair.pi] = true;
        tp += pair.credit();
    }
    tp
}

pub fn partial_f1_annotations(preds: &[GoldAnnotation], golds: &[GoldAnnotation]) -> Prf {
    Prf::from_counts(partial_tp(preds, golds), preds.len(), golds.len())
}

pub fn partial_f1(preds: &[LinkedMention], golds: &[GoldAnnotation]) -> Prf {
    partial_f1_annotations(&predictions(preds), golds)
}

fn groups_for(cui: &str, lexicon: &Lexicon, type_map: &TypeMap) -> Option<Vec<String>> {
    let concept = lexicon.get(cui)?;
    type_map
        .groups_of(&concept.fine_types)
        .ok()
        .map(|s| s.into_iter().collect())
}

/// Exact F1 per group. Golds count under every group of their cui;
/// predictions count under every group of their chosen cui. Golds and
/// predictions whose cui cannot be typed are scored under [`UNRESOLVED`].
/// Only groups (and [`UNRESOLVED`]) that occur in the gold appear.
pub fn per_group_f1(
    preds: &[LinkedMention],
    golds: &[GoldAnnotation],
    lexicon: &Lexicon,
    type_map: &TypeMap,
) -> (BTreeMap<String, f64>, Vec<Warning>) {
    let mut warnings = Vec::new();
    let mut gold_by: BTreeMap<String, Vec<GoldAnnotation>> = BTreeMap::new();
    for g in golds {
        let keys = groups_for(&g.cui, lexicon, type_map).unwrap_or_else(|| {
            warnings.push(Warning::UnresolvableCui { cui: g.cui.clone() });
            vec![UNRESOLVED.to_string()]
        });
        for k in keys {
            gold_by.entry(k).or_default().push(g.clone());
        }
    }
    let mut pred_by: BTreeMap<String, Vec<GoldAnnotation>> = BTreeMap::new();
    for p in predictions(preds) {
        let keys = groups_for(&p.cui, lexicon, type_map).unwrap_or_else(|| vec![UNRESOLVED.to_string()]);
        for k in keys {
            pred_by.entry(k).or_default().push(p.clone());
        }
    }
    let out = gold_by
        .iter()
        .map(|(group, g)| {
            let p = pred_by.get(group).map(Vec::as_slice).unwrap_or(&[]);
            (group.clone(), exact_f1_annotations(p, g).f1)
        })
        .collect();
    (out, warning::finish(warnings))
}
