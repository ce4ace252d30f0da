//! Paired bootstrap significance test over documents.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{exact_tp, GoldAnnotation, MetricsError, Prf};

pub const MIN_REPLICATES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Winner {
    A,
    B,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub winner: Winner,
    /// Share of resamples in which the observed loser scores at least as well
    /// as the observed winner. On an observed tie, the larger of the two
    /// directions.
    pub p_value: f64,
    pub observed_a: f64,
    pub observed_b: f64,
    pub replicates: usize,
}

/// Exact-match counts of one document.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DocCounts {
    pub tp: f64,
    pub n_pred: usize,
    pub n_gold: usize,
}

/// Per-document exact-match counts, in `doc_ids` order.
pub fn per_doc_counts(preds: &[GoldAnnotation], golds: &[GoldAnnotation], doc_ids: &[String]) -> Vec<DocCounts> {
    let mut p_by: HashMap<&str, Vec<GoldAnnotation>> = HashMap::new();
    for p in preds {
        p_by.entry(&p.doc_id).or_default().push(p.clone());
    }
    let mut g_by: HashMap<&str, Vec<GoldAnnotation>> = HashMap::new();
    for g in golds {
        g_by.entry(&g.doc_id).or_default().push(g.clone());
    }
    doc_ids
        .iter()
        .map(|d| {
            let p = p_by.get(d.as_str()).map(Vec::as_slice).unwrap_or(&[]);
            let g = g_by.get(d.as_str()).map(Vec::as_slice).unwrap_or(&[]);
            DocCounts {
                tp: exact_tp(p, g) as f64,
                n_pred: p.len(),
                n_gold: g.len(),
            }
        })
        .collect()
}

fn micro_f1(docs: &[DocCounts], idx: &[usize]) -> f64 {
    let (tp, np, ng) = idx.iter().fold((0.0, 0, 0), |(t, p, g), &i| {
        (t + docs[i].tp, p + docs[i].n_pred, g + docs[i].n_gold)
    });
    Prf::from_counts(tp, np, ng).f1
}

/// Resample indices for one replicate. The stream depends only on the seed and
/// the replicate number, so results do not depend on scheduling.
fn resample(seed: u64, replicate: usize, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate as u64);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Generic paired bootstrap: `stat_a` and `stat_b` evaluate each system on
/// a multiset of document indices.
pub fn paired_bootstrap_by<FA, FB>(
    n: usize,
    replicates: usize,
    seed: u64,
    stat_a: FA,
    stat_b: FB,
) -> Result<BootstrapResult, MetricsError>
where
    FA: Fn(&[usize]) -> f64 + Sync,
    FB: Fn(&[usize]) -> f64 + Sync,
{
    if n < 2 {
        return Err(MetricsError::InvalidConfig(format!(
            "need at least 2 documents, got {n}"
        )));
    }
    if replicates < MIN_REPLICATES {
        return Err(MetricsError::InvalidConfig(format!(
            "need at least {MIN_REPLICATES} replicates"
        )));
    }
    let all: Vec<usize> = (0..n).collect();
    let (observed_a, observed_b) = (stat_a(&all), stat_b(&all));
    let (a_ge_b, b_ge_a) = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let idx = resample(seed, r, n);
            let (sa, sb) = (stat_a(&idx), stat_b(&idx));
            (usize::from(sa >= sb), usize::from(sb >= sa))
        })
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
    let frac = |k: usize| k as f64 / replicates as f64;
    let (winner, p_value) = if observed_a > observed_b {
        (Winner::A, frac(b_ge_a))
    } else if observed_b > observed_a {
        (Winner::B, frac(a_ge_b))
    } else {
        (Winner::Tie, frac(a_ge_b.max(b_ge_a)))
    };
    Ok(BootstrapResult {
        winner,
        p_value,
        observed_a,
        observed_b,
        replicates,
    })
}

/// Bootstrap on the mean of per-document scores.
pub fn paired_bootstrap(a: &[f64], b: &[f64], replicates: usize, seed: u64) -> Result<BootstrapResult, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::AlignmentError(format!(
            "{} vs {} documents",
            a.len(),
            b.len()
        )));
    }
    let mean = |v: &[f64], idx: &[usize]| idx.iter().map(|&i| v[i]).sum::<f64>() / idx.len() as f64;
    paired_bootstrap_by(a.len(), replicates, seed, |idx| mean(a, idx), |idx| mean(b, idx))
}

/// Bootstrap on corpus-level exact F1: counts are summed over the resampled
/// documents before F1 is computed.
pub fn paired_bootstrap_f1(
    a: &[DocCounts],
    b: &[DocCounts],
    replicates: usize,
    seed: u64,
) -> Result<BootstrapResult, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::AlignmentError(format!(
            "{} vs {} documents",
            a.len(),
            b.len()
        )));
    }
    paired_bootstrap_by(
        a.len(),
        replicates,
        seed,
        |idx| micro_f1(a, idx),
        |idx| micro_f1(b, idx),
    )
}
