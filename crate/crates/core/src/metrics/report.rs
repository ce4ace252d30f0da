//! Combined evaluation report.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{
    candidate_size_stats, error_breakdown, exact_f1, partial_f1, per_group_f1, BootstrapResult, CandidateSizeStats,
    ErrorCounts, GoldAnnotation, MetricsError,
};
use crate::filter::LinkedMention;
use crate::lexicon::Lexicon;
use crate::matcher::CandidateSet;
use crate::type_system::TypeMap;
use crate::warning::Warning;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub exact_f1: f64,
    pub exact_precision: f64,
    pub exact_recall: f64,
    pub partial_f1: f64,
    pub partial_precision: f64,
    pub partial_recall: f64,
    pub per_group_f1: BTreeMap<String, f64>,
    /// Over every mention in the prediction file, linked or not.
    pub error_counts: ErrorCounts,
    /// Sizes of the candidate sets the links were chosen from.
    pub candidate_size_histogram: BTreeMap<usize, usize>,
    pub bootstrap_p: Option<f64>,
    pub bootstrap: Option<BootstrapResult>,
    pub candidate_reduction: Option<CandidateSizeStats>,
    pub mentions: usize,
    pub linked: usize,
    pub gold: usize,
}

/// Scores linked output against gold. Errors are classified against
/// `pre_filter` candidate sets when given, else against the surviving sets.
pub fn evaluate(
    preds: &[LinkedMention],
    golds: &[GoldAnnotation],
    lexicon: &Lexicon,
    type_map: &TypeMap,
    pre_filter: Option<&[CandidateSet]>,
) -> Result<(EvalReport, Vec<Warning>), MetricsError> {
    let exact = exact_f1(preds, golds);
    let partial = partial_f1(preds, golds);
    let (per_group, warnings) = per_group_f1(preds, golds, lexicon, type_map);
    let surviving: Vec<CandidateSet> = preds.iter().map(LinkedMention::surviving).collect();
    let (error_counts, candidate_reduction) = match pre_filter {
        Some(before) => (
            error_breakdown(before, golds),
            Some(candidate_size_stats(before, &surviving)?),
        ),
        None => {
            let sizes: Vec<(usize, usize)> = preds.iter().map(|p| (p.pre_filter_size, p.post_filter_size)).collect();
            (
                error_breakdown(&surviving, golds),
                Some(CandidateSizeStats::from_sizes(&sizes)),
            )
        }
    };
    let mut candidate_size_histogram = BTreeMap::new();
    for p in preds {
        *candidate_size_histogram.entry(p.post_filter_size).or_insert(0) += 1;
    }
    let report = EvalReport {
        exact_f1: exact.f1,
        exact_precision: exact.precision,
        exact_recall: exact.recall,
        partial_f1: partial.f1,
        partial_precision: partial.precision,
        partial_recall: partial.recall,
        per_group_f1: per_group,
        error_counts,
        candidate_size_histogram,
        bootstrap_p: None,
        bootstrap: None,
        candidate_reduction,
        mentions: preds.len(),
        linked: preds.iter().filter(|p| p.chosen_cui.is_some()).count(),
        gold: golds.len(),
    };
    Ok((report, warnings))
}

impl EvalReport {
    pub fn with_bootstrap(mut self, result: BootstrapResult) -> Self {
        self.bootstrap_p = Some(result.p_value);
        self.bootstrap = Some(result);
        self
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "mentions {}  linked {}  gold {}",
            self.mentions, self.linked, self.gold
        )?;
        writeln!(f, "{:<10}{:>10}{:>10}{:>10}", "", "P", "R", "F1")?;
        writeln!(
            f,
            "{:<10}{:>10.4}{:>10.4}{:>10.4}",
            "exact", self.exact_precision, self.exact_recall, self.exact_f1
        )?;
        writeln!(
            f,
            "{:<10}{:>10.4}{:>10.4}{:>10.4}",
            "partial", self.partial_precision, self.partial_recall, self.partial_f1
        )?;
        writeln!(f, "\nper-group F1")?;
        for (g, v) in &self.per_group_f1 {
            writeln!(f, "  {g:<40}{v:>8.4}")?;
        }
        let e = &self.error_counts;
        writeln!(
            f,
            "\nerrors: false positive mention {}, missing candidate {}, matched {}",
            e.false_positive_mention, e.missing_candidate, e.matched
        )?;
        if let Some(r) = &self.candidate_reduction {
            writeln!(
                f,
                "candidate sets: reduced {:.4}, disambiguated {:.4}",
                r.reduced_fraction, r.disambiguated_fraction
            )?;
        }
        write!(f, "candidate set sizes:")?;
        for (size, n) in &self.candidate_size_histogram {
            write!(f, " {size}:{n}")?;
        }
        writeln!(f)?;
        if let Some(b) = &self.bootstrap {
            writeln!(
                f,
                "bootstrap ({} replicates): A {:.4}, B {:.4}, winner {:?}, p = {:.4}",
                b.replicates, b.observed_a, b.observed_b, b.winner, b.p_value
            )?;
        }
        Ok(())
    }
}
