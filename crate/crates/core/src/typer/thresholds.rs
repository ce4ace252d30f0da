//! Per-group decision thresholds and their tuning on validation data.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::auc::ScoredExample;
use super::model::TyperModel;
use super::{MentionContext, TrainingExample, TyperError};
use crate::type_system::TypeMap;
use crate::warning::{self, Warning};

pub const THRESHOLD_MIN: f64 = 0.001;
pub const THRESHOLD_MAX: f64 = 1.0;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

fn in_open_interval(t: f64) -> bool {
    t > THRESHOLD_MIN && t < THRESHOLD_MAX
}

/// Threshold per group; serialized as a flat JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Thresholds(BTreeMap<String, f64>);

impl Thresholds {
    pub fn uniform(groups: &[String], t: f64) -> Result<Self, TyperError> {
        Self::from_map(groups.iter().map(|g| (g.clone(), t)).collect())
    }

    pub fn from_map(map: BTreeMap<String, f64>) -> Result<Self, TyperError> {
        for (g, &t) in &map {
            if !in_open_interval(t) {
                return Err(TyperError::InvalidThresholds(format!("{g}: {t} is outside (0.001, 1)")));
            }
        }
        Ok(Self(map))
    }

    pub fn get(&self, group: &str) -> Option<f64> {
        self.0.get(group).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(g, &t)| (g.as_str(), t))
    }

    /// Fails unless there is exactly one in-range entry per group.
    pub fn check_groups(&self, groups: &[String]) -> Result<(), TyperError> {
        let ours: BTreeSet<&str> = self.0.keys().map(String::as_str).collect();
        let theirs: BTreeSet<&str> = groups.iter().map(String::as_str).collect();
        if ours != theirs {
            let missing: Vec<&&str> = theirs.difference(&ours).collect();
            let extra: Vec<&&str> = ours.difference(&theirs).collect();
            return Err(TyperError::InvalidThresholds(format!(
                "missing {missing:?}, unexpected {extra:?}"
            )));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TyperError> {
        let raw: BTreeMap<String, f64> = serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?;
        Self::from_map(raw)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TyperError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// 40 log-spaced points strictly inside (0.001, 1), plus 0.5, ascending.
pub fn default_grid() -> Vec<f64> {
    let lo = THRESHOLD_MIN.ln();
    let mut grid: Vec<f64> = (1..=40).map(|i| (lo * (1.0 - f64::from(i) / 41.0)).exp()).collect();
    grid.push(DEFAULT_THRESHOLD);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

fn check_grid(grid: &[f64]) -> Result<(), TyperError> {
    if grid.is_empty() {
        return Err(TyperError::InvalidGrid("grid is empty".into()));
    }
    if let Some(t) = grid.iter().find(|t| !in_open_interval(**t)) {
        return Err(TyperError::InvalidGrid(format!("{t} is outside (0.001, 1)")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(TyperError::InvalidGrid("grid is not strictly increasing".into()));
    }
    Ok(())
}

/// Binary F1 of `score >= t` against `gold`. Zero when there are no true positives.
pub fn binary_f1(pairs: &[(f64, bool)], t: f64) -> f64 {
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for &(s, y) in pairs {
        match (s >= t, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    if tp == 0 {
        return 0.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fneg) as f64
}

/// Picks, for each group, the grid value with the highest binary F1 on the
/// scored validation set; ties go to the smaller threshold. Groups without a
/// validation positive get 0.5 and a warning.
pub fn tune_thresholds_from_scores(
    scored: &[ScoredExample],
    groups: &[String],
    grid: &[f64],
) -> Result<(Thresholds, Vec<Warning>), TyperError> {
    check_grid(grid)?;
    if scored.iter().any(|s| s.scores.len() != groups.len()) {
        return Err(TyperError::InvalidConfig(
            "score vector length differs from group count".into(),
        ));
    }
    let mut warnings = Vec::new();
    let mut out = BTreeMap::new();
    for (gi, group) in groups.iter().enumerate() {
        let pairs: Vec<(f64, bool)> = scored.iter().map(|s| (s.scores[gi], s.gold.contains(group))).collect();
        if !pairs.iter().any(|p| p.1) {
            warnings.push(Warning::GroupAbsentFromValidation { group: group.clone() });
            out.insert(group.clone(), DEFAULT_THRESHOLD);
            continue;
        }
        let mut best = (grid[0], binary_f1(&pairs, grid[0]));
        for &t in &grid[1..] {
            let f = binary_f1(&pairs, t);
            if f > best.1 {
                best = (t, f);
            }
        }
        out.insert(group.clone(), best.0);
    }
    Ok((Thresholds::from_map(out)?, warning::finish(warnings)))
}

pub fn score_examples(model: &TyperModel, examples: &[TrainingExample]) -> Vec<ScoredExample> {
    examples
        .iter()
        .map(|ex| ScoredExample {
            scores: model.predict_scores(&ex.context),
            gold: ex.labels.clone(),
        })
        .collect()
}

pub fn tune_thresholds(
    model: &TyperModel,
    validation: &[TrainingExample],
    grid: &[f64],
) -> Result<(Thresholds, Vec<Warning>), TyperError> {
    let groups: Vec<String> = model.group_names().map(str::to_string).collect();
    tune_thresholds_from_scores(&score_examples(model, validation), &groups, grid)
}

/// Groups whose score reaches their threshold (inclusive). A group without a
/// threshold entry is never predicted.
pub fn groups_above(scores: &[f64], groups: &[String], thresholds: &Thresholds) -> BTreeSet<String> {
    groups
        .iter()
        .zip(scores)
        .filter(|(g, &s)| thresholds.get(g).is_some_and(|t| s >= t))
        .map(|(g, _)| g.clone())
        .collect()
}

/// Thresholded prediction; the empty set is the abstain ("None") outcome.
pub fn predict_groups(model: &TyperModel, thresholds: &Thresholds, ctx: &MentionContext) -> BTreeSet<String> {
    let groups: Vec<String> = model.group_names().map(str::to_string).collect();
    groups_above(&model.predict_scores(ctx), &groups, thresholds)
}

/// Convenience for callers holding a type map rather than a model.
pub fn uniform_for(type_map: &TypeMap) -> Thresholds {
    Thresholds::uniform(type_map.groups(), DEFAULT_THRESHOLD).expect("0.5 is in range")
}
