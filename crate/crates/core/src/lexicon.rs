//! Concept inventory with a normalized alias index.
//!
//! Normalization lowercases, splits on whitespace and strips punctuation from
//! both ends of every token. Internal punctuation survives ("non-small" stays
//! one token). The same tokenizer drives the matcher, so lexicon keys and text
//! n-grams are always comparable.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;
use std::path::Path;

use thiserror::Error;

use crate::type_system::TypeMap;
use crate::warning::Warning;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: duplicate cui {cui}")]
    DuplicateCui { cui: String, line: usize },
    #[error("line {line}: concept {cui} has no semantic types")]
    MissingTypes { cui: String, line: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A normalized token with its character span (Unicode scalar values) in the
/// source text. The span excludes any stripped edge punctuation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

fn is_edge_punct(c: char) -> bool {
    c.is_ascii_punctuation() || matches!(c, '‘' | '’' | '“' | '”' | '«' | '»' | '–' | '—' | '…' | '·' | '¿' | '¡')
}

pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < chars.len() && !chars[j].is_whitespace() {
            j += 1;
        }
        let (mut s, mut e) = (i, j);
        while s < e && is_edge_punct(chars[s]) {
            s += 1;
        }
        while e > s && is_edge_punct(chars[e - 1]) {
            e -= 1;
        }
        if s < e {
            let raw: String = chars[s..e].iter().collect();
            tokens.push(Token {
                text: raw.to_lowercase(),
                start: s,
                end: e,
            });
        }
        i = j;
    }
    tokens
}

pub fn normalize(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.text).collect()
}

/// The normalized tokens joined by single spaces; this is the alias index key.
pub fn normalized_key(text: &str) -> String {
    normalize(text).join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Concept {
    pub cui: String,
    pub preferred_name: String,
    pub aliases: Vec<String>,
    pub fine_types: BTreeSet<String>,
}

/// One distinct normalized surface form and the concepts carrying it.
#[derive(Debug, Clone)]
pub(crate) struct AliasEntry {
    pub(crate) tokens: Vec<String>,
    pub(crate) cuis: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    concepts: BTreeMap<String, Concept>,
    alias_index: HashMap<String, usize>,
    entries: Vec<AliasEntry>,
    postings: HashMap<String, Vec<usize>>,
}

impl Lexicon {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let file = std::fs::File::open(path)?;
        Self::parse(std::io::BufReader::new(file))
    }

    /// Parses `cui<TAB>preferred_name<TAB>alias|alias<TAB>type;type` lines.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self, LexiconError> {
        let mut concepts = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(LexiconError::Parse {
                    line: line_no,
                    msg: format!("expected 4 tab-separated fields, found {}", fields.len()),
                });
            }
            let concept = Concept {
                cui: fields[0].trim().to_string(),
                preferred_name: fields[1].trim().to_string(),
                aliases: fields[2]
                    .split('|')
                    .map(str::trim)
                    .filter(|a| !a.is_empty())
                    .map(String::from)
                    .collect(),
                fine_types: fields[3]
                    .split(';')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(String::from)
                    .collect(),
            };
            concepts.push((line_no, concept));
        }
        Self::build(concepts)
    }

    /// Builds a lexicon from in-memory concepts; error line numbers are 1-based positions.
    pub fn from_concepts(concepts: Vec<Concept>) -> Result<Self, LexiconError> {
        Self::build(concepts.into_iter().enumerate().map(|(i, c)| (i + 1, c)).collect())
    }

    fn build(concepts: Vec<(usize, Concept)>) -> Result<Self, LexiconError> {
        let mut lex = Lexicon::default();
        for (line, concept) in concepts {
            if concept.cui.is_empty() {
                return Err(LexiconError::Parse {
                    line,
                    msg: "empty cui".into(),
                });
            }
            if concept.fine_types.is_empty() {
                return Err(LexiconError::MissingTypes { cui: concept.cui, line });
            }
            if normalize(&concept.preferred_name).is_empty() {
                return Err(LexiconError::Parse {
                    line,
                    msg: format!("preferred name of {} normalizes to nothing", concept.cui),
                });
            }
            if lex.concepts.contains_key(&concept.cui) {
                return Err(LexiconError::DuplicateCui { cui: concept.cui, line });
            }
            let surfaces = std::iter::once(&concept.preferred_name).chain(concept.aliases.iter());
            for surface in surfaces {
                let tokens = normalize(surface);
                if tokens.is_empty() {
                    continue;
                }
                lex.index_alias(tokens, &concept.cui);
            }
            lex.concepts.insert(concept.cui.clone(), concept);
        }
        for entry in &mut lex.entries {
            entry.cuis.sort();
            entry.cuis.dedup();
        }
        Ok(lex)
    }

    fn index_alias(&mut self, tokens: Vec<String>, cui: &str) {
        let key = tokens.join(" ");
        let id = match self.alias_index.get(&key) {
            Some(&id) => id,
            None => {
                let id = self.entries.len();
                let mut set = tokens;
                set.sort();
                set.dedup();
                for tok in &set {
                    self.postings.entry(tok.clone()).or_default().push(id);
                }
                self.entries.push(AliasEntry {
                    tokens: set,
                    cuis: Vec::new(),
                });
                self.alias_index.insert(key, id);
                id
            }
        };
        self.entries[id].cuis.push(cui.to_string());
    }

    /// Concepts whose normalized alias equals the normalized surface, ascending by cui.
    pub fn lookup(&self, surface: &str) -> Vec<&Concept> {
        self.lookup_key(&normalized_key(surface))
    }

    pub(crate) fn lookup_key(&self, key: &str) -> Vec<&Concept> {
        match self.alias_index.get(key) {
            Some(&id) => self.entries[id].cuis.iter().map(|c| &self.concepts[c]).collect(),
            None => Vec::new(),
        }
    }

    pub(crate) fn exact_cuis(&self, key: &str) -> Option<&[String]> {
        self.alias_index.get(key).map(|&id| self.entries[id].cuis.as_slice())
    }

    pub(crate) fn entries(&self) -> &[AliasEntry] {
        &self.entries
    }

    pub(crate) fn postings(&self, token: &str) -> &[usize] {
        self.postings.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn get(&self, cui: &str) -> Option<&Concept> {
        self.concepts.get(cui)
    }

    pub fn contains(&self, cui: &str) -> bool {
        self.concepts.contains_key(cui)
    }

    /// Concepts in ascending cui order.
    pub fn concepts(&self) -> impl Iterator<Item = &Concept> {
        self.concepts.values()
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    /// Number of distinct normalized surface forms in the index.
    pub fn index_len(&self) -> usize {
        self.alias_index.len()
    }

    /// Every (concept, fine type) pair the type map cannot resolve.
    pub fn check_types(&self, type_map: &TypeMap) -> Vec<Warning> {
        self.concepts
            .values()
            .flat_map(|c| {
                c.fine_types
                    .iter()
                    .filter(|f| !type_map.contains_fine(f))
                    .map(|f| Warning::UnknownFineType {
                        cui: c.cui.clone(),
                        fine_type: f.clone(),
                    })
            })
            .collect()
    }
}
