//! Semantic-group prediction for a mention from its surrounding tokens.
//!
//! The model is a per-group logistic regression over hashed bag-of-token
//! features ([`features`]). Scores from an external model can be fed in
//! through [`scores::import_scores`] instead.

pub mod auc;
pub mod features;
pub mod model;
pub mod scores;
pub mod thresholds;

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::annotation::GoldAnnotation;
use crate::io::JsonlError;
use crate::lexicon::{tokenize, Lexicon, Token};
use crate::matcher::Document;
use crate::type_system::TypeMap;
use crate::warning::{self, Warning};

pub use auc::{pr_auc, AucMode, ScoredExample};
pub use features::{featurize, HashDim, SparseVector};
pub use model::{loss_and_gradient, train, TrainConfig, TrainOutcome, TyperModel};
pub use scores::{import_scores, ScoreRecord};
pub use thresholds::{default_grid, predict_groups, tune_thresholds, Thresholds};

#[derive(Debug, Error)]
pub enum TyperError {
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("loss became non-finite in epoch {epoch}")]
    NumericalDivergence { epoch: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("init model does not match config: {0}")]
    ConfigMismatch(String),
    #[error("line {line}: unknown group {group:?}")]
    UnknownGroup { group: String, line: usize },
    #[error("line {line}: score {value} for {group:?} is outside [0, 1]")]
    RangeError { group: String, value: f64, line: usize },
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("metric undefined: no positive labels")]
    UndefinedMetric,
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Normalized tokens of a mention and up to `k` tokens on either side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MentionContext {
    pub left: Vec<String>,
    pub mention: Vec<String>,
    pub right: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    pub context: MentionContext,
    pub labels: BTreeSet<String>,
}

/// Builds the context of the character span `[start, end)` from a tokenized
/// document. Tokens fully inside the span form the mention; `None` if there
/// are none.
pub fn context_for_span(tokens: &[Token], start: usize, end: usize, k: usize) -> Option<MentionContext> {
    let first = tokens.partition_point(|t| t.end <= start);
    let inside: Vec<&Token> = tokens[first..].iter().take_while(|t| t.start < end).collect();
    let mention: Vec<String> = inside
        .iter()
        .filter(|t| t.start >= start && t.end <= end)
        .map(|t| t.text.clone())
        .collect();
    if mention.is_empty() {
        return None;
    }
    let last = first + inside.len();
    let left = tokens[first.saturating_sub(k)..first]
        .iter()
        .map(|t| t.text.clone())
        .collect();
    let right = tokens[last..(last + k).min(tokens.len())]
        .iter()
        .map(|t| t.text.clone())
        .collect();
    Some(MentionContext { left, mention, right })
}

/// Tokenized documents keyed by id.
pub struct TokenizedCorpus<'a> {
    docs: HashMap<&'a str, Vec<Token>>,
}

impl<'a> TokenizedCorpus<'a> {
    pub fn new(docs: &'a [Document]) -> Self {
        Self {
            docs: docs.iter().map(|d| (d.id.as_str(), tokenize(&d.text))).collect(),
        }
    }

    pub fn context(&self, doc_id: &str, start: usize, end: usize, k: usize) -> Option<MentionContext> {
        context_for_span(self.docs.get(doc_id)?, start, end, k)
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.docs.contains_key(doc_id)
    }
}

/// Joins annotations against documents and the lexicon. Each example's labels
/// are the groups of the annotated concept's fine types. Annotations that
/// cannot be resolved are skipped with a warning.
pub fn build_examples(
    docs: &[Document],
    annotations: &[GoldAnnotation],
    lexicon: &Lexicon,
    type_map: &TypeMap,
    k: usize,
) -> (Vec<TrainingExample>, Vec<Warning>) {
    let corpus = TokenizedCorpus::new(docs);
    let mut warnings = Vec::new();
    let mut examples = Vec::with_capacity(annotations.len());
    for ann in annotations {
        let skip = |reason: &str| Warning::SkippedAnnotation {
            doc_id: ann.doc_id.clone(),
            start: ann.start,
            end: ann.end,
            reason: reason.to_string(),
        };
        if !corpus.contains(&ann.doc_id) {
            warnings.push(skip("unknown document"));
            continue;
        }
        let Some(concept) = lexicon.get(&ann.cui) else {
            warnings.push(skip(&format!("cui {} not in lexicon", ann.cui)));
            continue;
        };
        let labels = match type_map.groups_of(&concept.fine_types) {
            Ok(l) => l,
            Err(e) => {
                warnings.push(skip(&e.to_string()));
                continue;
            }
        };
        let Some(context) = corpus.context(&ann.doc_id, ann.start, ann.end, k) else {
            warnings.push(skip("span covers no token"));
            continue;
        };
        examples.push(TrainingExample { context, labels });
    }
    (examples, warning::finish(warnings))
}
