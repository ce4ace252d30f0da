//! Non-fatal diagnostics collected while running a pipeline stage.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Warning {
    /// A candidate or prediction refers to a cui the lexicon does not know.
    UnresolvableCui { cui: String },
    /// A concept carries a fine type missing from the type map.
    UnknownFineType { cui: String, fine_type: String },
    /// No validation example carries this group; its threshold fell back to 0.5.
    GroupAbsentFromValidation { group: String },
    /// A document heading points at a cui outside the lexicon and was skipped.
    UnknownHeadingCui { doc_id: String, cui: String },
    /// A crosswalked cui is missing from the lexicon; its annotation is untyped.
    UntypedCui { doc_id: String, cui: String },
    /// An annotation could not be turned into a training example.
    SkippedAnnotation {
        doc_id: String,
        start: usize,
        end: usize,
        reason: String,
    },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::UnresolvableCui { cui } => write!(f, "cui {cui} is not in the lexicon"),
            Warning::UnknownFineType { cui, fine_type } => {
                write!(f, "cui {cui} has fine type {fine_type:?} missing from the type map")
            }
            Warning::GroupAbsentFromValidation { group } => {
                write!(
                    f,
                    "group {group:?} never appears in validation gold; threshold set to 0.5"
                )
            }
            Warning::UnknownHeadingCui { doc_id, cui } => {
                write!(f, "{doc_id}: heading cui {cui} is not in the lexicon; heading skipped")
            }
            Warning::UntypedCui { doc_id, cui } => {
                write!(
                    f,
                    "{doc_id}: crosswalked cui {cui} is not in the lexicon; annotation untyped"
                )
            }
            Warning::SkippedAnnotation {
                doc_id,
                start,
                end,
                reason,
            } => {
                write!(f, "{doc_id}[{start},{end}): skipped ({reason})")
            }
        }
    }
}

/// Logs every warning and returns them sorted and deduplicated.
pub(crate) fn finish(mut warnings: Vec<Warning>) -> Vec<Warning> {
    warnings.sort();
    warnings.dedup();
    for w in &warnings {
        log::warn!("{w}");
    }
    warnings
}
