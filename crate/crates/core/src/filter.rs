//! Type-based candidate filtering and final concept selection.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::GoldAnnotation;
use crate::io::{read_jsonl, JsonlError};
use crate::lexicon::Lexicon;
use crate::matcher::{Candidate, CandidateSet, Document, Mention, SpanKey};
use crate::type_system::TypeMap;
use crate::typer::thresholds::{groups_above, Thresholds};
use crate::typer::{TokenizedCorpus, TyperError, TyperModel};
use crate::warning::{self, Warning};

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("cui {0} is not in the lexicon")]
    UnknownCui(String),
    #[error("mode {0} needs {1}")]
    MissingInput(FilterMode, &'static str),
    #[error("{0} is not an oracle mode")]
    NotOracleMode(FilterMode),
    #[error(transparent)]
    Typer(#[from] TyperError),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FilterMode {
    #[default]
    None,
    Predicted,
    OracleCoarse,
    OracleFine,
}

impl fmt::Display for FilterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterMode::None => "none",
            FilterMode::Predicted => "predicted",
            FilterMode::OracleCoarse => "oracle-coarse",
            FilterMode::OracleFine => "oracle-fine",
        })
    }
}

impl FromStr for FilterMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('_', "-").as_str() {
            "none" => Ok(FilterMode::None),
            "predicted" => Ok(FilterMode::Predicted),
            "oracle-coarse" => Ok(FilterMode::OracleCoarse),
            "oracle-fine" => Ok(FilterMode::OracleFine),
            other => Err(format!("unknown filter mode {other:?}")),
        }
    }
}

/// What to do when the allowed set is empty or no candidate survives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmptyPolicy {
    /// Emit an empty set; the mention produces no link.
    #[default]
    Drop,
    /// Keep the unfiltered set.
    Passthrough,
}

impl FromStr for EmptyPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "drop" => Ok(EmptyPolicy::Drop),
            "passthrough" => Ok(EmptyPolicy::Passthrough),
            other => Err(format!("unknown empty policy {other:?}")),
        }
    }
}

/// Labels a candidate must share to survive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Allowed {
    Groups(BTreeSet<String>),
    /// Matched against a concept's fine types directly.
    FineTypes(BTreeSet<String>),
}

impl Allowed {
    pub fn labels(&self) -> &BTreeSet<String> {
        match self {
            Allowed::Groups(s) | Allowed::FineTypes(s) => s,
        }
    }
}

/// Labels of `cui` at the granularity of `allowed`. Unknown cuis and fine
/// types contribute nothing and are reported.
fn candidate_labels(
    cui: &str,
    fine: bool,
    lexicon: &Lexicon,
    type_map: &TypeMap,
    warnings: &mut Vec<Warning>,
) -> BTreeSet<String> {
    let Some(concept) = lexicon.get(cui) else {
        warnings.push(Warning::UnresolvableCui { cui: cui.to_string() });
        return BTreeSet::new();
    };
    if fine {
        return concept.fine_types.clone();
    }
    let mut out = BTreeSet::new();
    for t in &concept.fine_types {
        match type_map.group_of(t) {
            Ok(g) => {
                out.insert(g.to_string());
            }
            Err(_) => warnings.push(Warning::UnknownFineType {
                cui: cui.to_string(),
                fine_type: t.clone(),
            }),
        }
    }
    out
}

/// Keeps the candidates whose labels meet `allowed`, in their original order,
/// and renumbers ranks. An empty allowed set, or an empty result, is resolved
/// by `policy`.
pub fn filter_candidates(
    cs: &CandidateSet,
    allowed: &Allowed,
    lexicon: &Lexicon,
    type_map: &TypeMap,
    policy: EmptyPolicy,
) -> (CandidateSet, Vec<Warning>) {
    let mut warnings = Vec::new();
    let fine = matches!(allowed, Allowed::FineTypes(_));
    let wanted = allowed.labels();
    let kept: Vec<Candidate> = if wanted.is_empty() {
        Vec::new()
    } else {
        cs.candidates
            .iter()
            .filter(|c| !candidate_labels(&c.cui, fine, lexicon, type_map, &mut warnings).is_disjoint(wanted))
            .cloned()
            .collect()
    };
    if kept.is_empty() && policy == EmptyPolicy::Passthrough {
        return (cs.clone(), warnings);
    }
    let mut out = CandidateSet {
        mention: cs.mention.clone(),
        candidates: kept,
    };
    out.rerank();
    (out, warnings)
}

/// Allowed set derived from a gold concept: its fine types (fine mode) or
/// their groups (coarse mode).
pub fn oracle_allowed(
    gold_cui: &str,
    mode: FilterMode,
    lexicon: &Lexicon,
    type_map: &TypeMap,
) -> Result<Allowed, FilterError> {
    let concept = lexicon
        .get(gold_cui)
        .ok_or_else(|| FilterError::UnknownCui(gold_cui.to_string()))?;
    match mode {
        FilterMode::OracleFine => Ok(Allowed::FineTypes(concept.fine_types.clone())),
        FilterMode::OracleCoarse => {
            Ok(Allowed::Groups(type_map.groups_of(&concept.fine_types).map_err(
                |e| FilterError::Typer(TyperError::InvalidConfig(format!("gold {gold_cui}: {e}"))),
            )?))
        }
        other => Err(FilterError::NotOracleMode(other)),
    }
}

/// One line of linked output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkedMention {
    #[serde(flatten)]
    pub mention: Mention,
    pub chosen_cui: Option<String>,
    /// Labels used for filtering: thresholded groups in predicted mode, the
    /// gold concept's groups (coarse) or fine types (fine) in oracle modes.
    pub predicted_groups: BTreeSet<String>,
    pub pre_filter_size: usize,
    pub post_filter_size: usize,
    /// Surviving candidates, ranked 1..n.
    pub candidates: Vec<Candidate>,
}

impl LinkedMention {
    pub fn from_surviving(surviving: CandidateSet, labels: BTreeSet<String>, pre_filter_size: usize) -> Self {
        Self {
            chosen_cui: surviving.top().map(|c| c.cui.clone()),
            post_filter_size: surviving.len(),
            predicted_groups: labels,
            pre_filter_size,
            candidates: surviving.candidates,
            mention: surviving.mention,
        }
    }

    pub fn key(&self) -> SpanKey {
        self.mention.key()
    }

    pub fn surviving(&self) -> CandidateSet {
        CandidateSet {
            mention: self.mention.clone(),
            candidates: self.candidates.clone(),
        }
    }
}

pub fn read_linked<R: BufRead>(reader: R) -> Result<Vec<LinkedMention>, FilterError> {
    Ok(read_jsonl::<LinkedMention, _>(reader)?
        .into_iter()
        .map(|(_, m)| m)
        .collect())
}

/// Where the allowed set of each mention comes from.
#[derive(Debug, Clone, Copy)]
pub enum TypeSource<'a> {
    None,
    Model {
        model: &'a TyperModel,
        thresholds: &'a Thresholds,
        docs: &'a [Document],
    },
    /// Per-mention scores in `type_map` group order, e.g. from an external model.
    Scores {
        scores: &'a [(SpanKey, Vec<f64>)],
        thresholds: &'a Thresholds,
    },
    Gold(&'a [GoldAnnotation]),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LinkStats {
    pub mentions: usize,
    /// Oracle mode: mentions with no gold annotation on exactly the same span.
    pub unaligned: usize,
    /// Predicted mode: mentions that could not be scored.
    pub unscored: usize,
    /// Mentions whose candidate set was emptied.
    pub dropped: usize,
}

#[derive(Debug, Clone)]
pub struct LinkOutput {
    pub linked: Vec<LinkedMention>,
    pub stats: LinkStats,
    pub warnings: Vec<Warning>,
}

enum Decision {
    Skip,
    Filter(Allowed),
    Unaligned,
    Unscored,
}

/// Filters every candidate set and picks the top survivor. Mentions that
/// cannot be typed (no aligned gold, no score) are passed through unfiltered
/// and counted. Output is sorted by (doc_id, start, end).
pub fn link_corpus(
    candidate_sets: &[CandidateSet],
    mode: FilterMode,
    source: TypeSource<'_>,
    lexicon: &Lexicon,
    type_map: &TypeMap,
    policy: EmptyPolicy,
) -> Result<LinkOutput, FilterError> {
    let groups = type_map.groups();
    let mut corpus = None;
    let mut score_index: HashMap<&SpanKey, &Vec<f64>> = HashMap::new();
    let mut gold_index: HashMap<SpanKey, &GoldAnnotation> = HashMap::new();
    match (mode, source) {
        (FilterMode::None, _) => {}
        (
            FilterMode::Predicted,
            TypeSource::Model {
                model,
                thresholds,
                docs,
            },
        ) => {
            model.check_groups(type_map)?;
            thresholds.check_groups(groups)?;
            corpus = Some(TokenizedCorpus::new(docs));
        }
        (FilterMode::Predicted, TypeSource::Scores { scores, thresholds }) => {
            thresholds.check_groups(groups)?;
            if let Some((k, _)) = scores.iter().find(|(_, s)| s.len() != groups.len()) {
                return Err(TyperError::InvalidConfig(format!("score vector for {k:?} has wrong length")).into());
            }
            score_index = scores.iter().map(|(k, v)| (k, v)).collect();
        }
        (FilterMode::Predicted, _) => return Err(FilterError::MissingInput(mode, "a model or imported scores")),
        (FilterMode::OracleCoarse | FilterMode::OracleFine, TypeSource::Gold(gold)) => {
            gold_index = gold.iter().map(|g| (g.key(), g)).collect();
        }
        (_, _) => return Err(FilterError::MissingInput(mode, "gold annotations")),
    }

    let decide = |cs: &CandidateSet, warnings: &mut Vec<Warning>| -> Decision {
        let key = cs.mention.key();
        match (mode, source) {
            (FilterMode::None, _) => Decision::Skip,
            (FilterMode::Predicted, TypeSource::Model { model, thresholds, .. }) => {
                match corpus
                    .as_ref()
                    .and_then(|c| c.context(&key.doc_id, key.start, key.end, model.window_k))
                {
                    Some(ctx) => Decision::Filter(Allowed::Groups(groups_above(
                        &model.predict_scores(&ctx),
                        groups,
                        thresholds,
                    ))),
                    None => Decision::Unscored,
                }
            }
            (FilterMode::Predicted, TypeSource::Scores { thresholds, .. }) => match score_index.get(&key) {
                Some(s) => Decision::Filter(Allowed::Groups(groups_above(s, groups, thresholds))),
                None => Decision::Unscored,
            },
            (FilterMode::OracleCoarse | FilterMode::OracleFine, _) => match gold_index.get(&key) {
                Some(g) => match oracle_allowed(&g.cui, mode, lexicon, type_map) {
                    Ok(a) => Decision::Filter(a),
                    Err(_) => {
                        warnings.push(Warning::UnresolvableCui { cui: g.cui.clone() });
                        Decision::Unaligned
                    }
                },
                None => Decision::Unaligned,
            },
            _ => unreachable!("inputs checked above"),
        }
    };

    let results: Vec<(LinkedMention, Vec<Warning>, Decision)> = candidate_sets
        .par_iter()
        .map(|cs| {
            let mut warnings = Vec::new();
            let decision = decide(cs, &mut warnings);
            let linked = match &decision {
                Decision::Filter(allowed) => {
                    let (surviving, w) = filter_candidates(cs, allowed, lexicon, type_map, policy);
                    warnings.extend(w);
                    LinkedMention::from_surviving(surviving, allowed.labels().clone(), cs.len())
                }
                _ => LinkedMention::from_surviving(cs.clone(), BTreeSet::new(), cs.len()),
            };
            (linked, warnings, decision)
        })
        .collect();

    let mut stats = LinkStats {
        mentions: results.len(),
        ..Default::default()
    };
    let mut warnings = Vec::new();
    let mut linked = Vec::with_capacity(results.len());
    for (l, w, d) in results {
        match d {
            Decision::Unaligned => stats.unaligned += 1,
            Decision::Unscored => stats.unscored += 1,
            _ => {}
        }
        if l.chosen_cui.is_none() && l.pre_filter_size > 0 {
            stats.dropped += 1;
        }
        warnings.extend(w);
        linked.push(l);
    }
    linked.sort_by(|a, b| {
        (a.mention.doc_id.as_str(), a.mention.start, a.mention.end).cmp(&(
            b.mention.doc_id.as_str(),
            b.mention.start,
            b.mention.end,
        ))
    });
    Ok(LinkOutput {
        linked,
        stats,
        warnings: warning::finish(warnings),
    })
}
