//! Semantic-type prediction and type-based candidate filtering for
//! biomedical entity linking.
//!
//! The pipeline has three stages:
//!
//! 1. [`matcher`] detects mentions and produces ranked candidate concepts
//!    (or [`matcher::import_external_candidates`] reads them from another tool).
//! 2. [`typer`] predicts the semantic groups of each mention from its context.
//! 3. [`filter`] drops candidates whose groups do not intersect the prediction
//!    and links each mention to the best surviving candidate.
//!
//! [`metrics`] scores linked output against gold annotations and
//! [`corpus_builder`] produces silver training corpora.

pub mod annotation;
pub mod corpus_builder;
pub mod filter;
pub mod io;
pub mod lexicon;
pub mod matcher;
pub mod metrics;
pub mod synthetic;
pub mod type_system;
pub mod typer;
pub mod warning;

pub use annotation::GoldAnnotation;
pub use lexicon::{Concept, Lexicon};
pub use matcher::{Candidate, CandidateSet, Document, MatcherConfig, Mention, SpanKey};
pub use type_system::{TypeMap, NONE_GROUP};
pub use warning::Warning;
