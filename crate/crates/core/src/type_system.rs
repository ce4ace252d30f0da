//! Fine semantic types and their grouping into coarse semantic groups.
//!
//! A [`TypeMap`] is a total function from fine type names (127 in the bundled
//! inventory) to group names (24 in the bundled inventory). Groups are the
//! label space for type prediction; fine types are only used directly by the
//! fine-grained oracle filter.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use std::path::Path;

use thiserror::Error;

/// Reserved label for the abstain outcome of the typer. Never a group in a map.
pub const NONE_GROUP: &str = "None";

const BUNDLED_TYPE_MAP: &str = include_str!("../../../data/type_groups.tsv");

#[derive(Debug, Error)]
pub enum TypeMapError {
    #[error("line {line}: duplicate fine type {name:?}")]
    DuplicateFineType { name: String, line: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown fine type {0:?}")]
    UnknownFineType(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Total mapping from fine semantic types to semantic groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeMap {
    entries: BTreeMap<String, String>,
    groups: Vec<String>,
}

impl TypeMap {
    /// The map shipped with the crate (127 fine types, 24 groups).
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_TYPE_MAP.as_bytes()).expect("bundled type map is well formed")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TypeMapError> {
        let file = std::fs::File::open(path)?;
        Self::parse(std::io::BufReader::new(file))
    }

    /// Parses `fine_type<TAB>group` lines; `#` lines and blank lines are skipped.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self, TypeMapError> {
        let mut entries = BTreeMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let (fine, group) = match (fields.next(), fields.next(), fields.next()) {
                (Some(f), Some(g), None) => (f.trim(), g.trim()),
                _ => {
                    return Err(TypeMapError::Parse {
                        line: line_no,
                        msg: "expected exactly two tab-separated fields".into(),
                    })
                }
            };
            if fine.is_empty() || group.is_empty() {
                return Err(TypeMapError::Parse {
                    line: line_no,
                    msg: "empty field".into(),
                });
            }
            if group == NONE_GROUP {
                return Err(TypeMapError::Parse {
                    line: line_no,
                    msg: format!("{NONE_GROUP:?} is reserved and cannot name a group"),
                });
            }
            if entries.insert(fine.to_string(), group.to_string()).is_some() {
                return Err(TypeMapError::DuplicateFineType {
                    name: fine.to_string(),
                    line: line_no,
                });
            }
        }
        Ok(Self::from_entries(entries))
    }

    fn from_entries(entries: BTreeMap<String, String>) -> Self {
        let groups: BTreeSet<&String> = entries.values().collect();
        let groups = groups.into_iter().cloned().collect();
        Self { entries, groups }
    }

    pub fn group_of(&self, fine: &str) -> Result<&str, TypeMapError> {
        self.entries
            .get(fine.trim())
            .map(String::as_str)
            .ok_or_else(|| TypeMapError::UnknownFineType(fine.to_string()))
    }

    /// Union of the groups of every member of `fine_types`.
    pub fn groups_of<'a, I>(&self, fine_types: I) -> Result<BTreeSet<String>, TypeMapError>
    where
        I: IntoIterator<Item = &'a String>,
    {
        fine_types
            .into_iter()
            .map(|f| self.group_of(f).map(str::to_string))
            .collect()
    }

    /// Group names in canonical (sorted) order. The position of a group in
    /// this slice is its label index everywhere in the typer.
    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    pub fn group_index(&self, group: &str) -> Option<usize> {
        self.groups.binary_search_by(|g| g.as_str().cmp(group)).ok()
    }

    pub fn contains_fine(&self, fine: &str) -> bool {
        self.entries.contains_key(fine)
    }

    pub fn fine_types(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
