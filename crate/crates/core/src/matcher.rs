//! Dictionary-based mention detection and ranked candidate generation.
//!
//! Every token n-gram (up to `max_ngram` tokens) is compared against the
//! lexicon's normalized aliases by Jaccard similarity of token sets. Exact
//! normalized matches score 1.0. Overlapping detections are resolved greedily,
//! longest first by default.

use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{read_jsonl, read_jsonl_file, JsonlError};
use crate::lexicon::{tokenize, Lexicon};

#[derive(Debug, Error)]
pub enum MatcherError {
    #[error("invalid matcher config: {0}")]
    Config(String),
    #[error("line {line}: span [{start},{end}) out of bounds for document {doc_id}")]
    SpanError {
        doc_id: String,
        start: usize,
        end: usize,
        line: usize,
    },
    #[error("line {line}: unknown document {doc_id}")]
    UnknownDocument { doc_id: String, line: usize },
    #[error("line {line}: duplicate candidate {cui}")]
    DuplicateCandidate { cui: String, line: usize },
    #[error("line {line}: {msg}")]
    Invalid { line: usize, msg: String },
    #[error("line {line}: duplicate document id {id}")]
    DuplicateDocument { id: String, line: usize },
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
        }
    }

    /// Length in Unicode scalar values.
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    /// `text[start..end]` in character offsets, or `None` for an invalid span.
    pub fn slice(&self, start: usize, end: usize) -> Option<String> {
        if start >= end {
            return None;
        }
        let s: String = self.text.chars().skip(start).take(end - start).collect();
        (s.chars().count() == end - start).then_some(s)
    }
}

/// Reads `{"id","text"}` JSONL; extra fields are ignored.
pub fn load_documents(path: impl AsRef<Path>) -> Result<Vec<Document>, MatcherError> {
    check_documents(read_jsonl_file(path)?)
}

pub fn parse_documents<R: BufRead>(reader: R) -> Result<Vec<Document>, MatcherError> {
    check_documents(read_jsonl(reader)?)
}

fn check_documents(records: Vec<(usize, Document)>) -> Result<Vec<Document>, MatcherError> {
    let mut seen = HashSet::new();
    let mut docs = Vec::with_capacity(records.len());
    for (line, doc) in records {
        if doc.id.is_empty() {
            return Err(MatcherError::Invalid {
                line,
                msg: "empty document id".into(),
            });
        }
        if !seen.insert(doc.id.clone()) {
            return Err(MatcherError::DuplicateDocument { id: doc.id, line });
        }
        docs.push(doc);
    }
    Ok(docs)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Mention {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

impl Mention {
    pub fn key(&self) -> SpanKey {
        SpanKey {
            doc_id: self.doc_id.clone(),
            start: self.start,
            end: self.end,
        }
    }
}

/// Document id plus character span; the join key between pipeline files.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpanKey {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub cui: String,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    #[serde(flatten)]
    pub mention: Mention,
    pub candidates: Vec<Candidate>,
}

impl CandidateSet {
    /// Renumbers ranks 1..n in current order.
    pub fn rerank(&mut self) {
        for (i, c) in self.candidates.iter_mut().enumerate() {
            c.rank = i + 1;
        }
    }

    pub fn top(&self) -> Option<&Candidate> {
        self.candidates.first()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// How overlapping detections are prioritised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OverlapCriterion {
    /// More tokens first, then higher top score, then leftmost start.
    #[default]
    Length,
    /// Higher top score first, then more tokens, then leftmost start.
    Score,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatcherConfig {
    pub max_ngram: usize,
    pub max_candidates: usize,
    pub min_score: f64,
    pub overlap: OverlapCriterion,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        // scispaCy caps its candidate lists at 5; we over-generate the same way.
        Self {
            max_ngram: 6,
            max_candidates: 5,
            min_score: 0.7,
            overlap: OverlapCriterion::Length,
        }
    }
}

impl MatcherConfig {
    pub fn validate(&self) -> Result<(), MatcherError> {
        if self.max_ngram < 1 {
            return Err(MatcherError::Config("max_ngram must be >= 1".into()));
        }
        if self.max_candidates < 1 {
            return Err(MatcherError::Config("max_candidates must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.min_score) {
            return Err(MatcherError::Config("min_score must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

struct Detection {
    first_tok: usize,
    end_tok: usize,
    top_score: f64,
    candidates: Vec<(String, f64)>,
}

fn jaccard_overlap(alias: &[String], gram: &[&str]) -> (usize, f64) {
    // both sides sorted and deduplicated
    let (mut i, mut j, mut inter) = (0, 0, 0);
    while i < alias.len() && j < gram.len() {
        match alias[i].as_str().cmp(gram[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = alias.len() + gram.len() - inter;
    (inter, inter as f64 / union as f64)
}

/// Detects mentions in one document and generates their ranked candidates.
///
/// The config is assumed valid (see [`MatcherConfig::validate`]).
pub fn detect_and_generate(lexicon: &Lexicon, doc: &Document, config: &MatcherConfig) -> Vec<CandidateSet> {
    let tokens = tokenize(&doc.text);
    let mut detections = Vec::new();
    let mut pool: Vec<usize> = Vec::new();

    for first in 0..tokens.len() {
        for end in first + 1..=(first + config.max_ngram).min(tokens.len()) {
            let gram = &tokens[first..end];
            let key = gram.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ");
            let mut scores: BTreeMap<&str, f64> = BTreeMap::new();
            if let Some(cuis) = lexicon.exact_cuis(&key) {
                for cui in cuis {
                    scores.insert(cui, 1.0);
                }
            }

            let mut set: Vec<&str> = gram.iter().map(|t| t.text.as_str()).collect();
            set.sort_unstable();
            set.dedup();
            pool.clear();
            for tok in &set {
                pool.extend_from_slice(lexicon.postings(tok));
            }
            pool.sort_unstable();
            pool.dedup();
            for &id in &pool {
                let entry = &lexicon.entries()[id];
                let (inter, sim) = jaccard_overlap(&entry.tokens, &set);
                if inter == 0 || sim < config.min_score {
                    continue;
                }
                for cui in &entry.cuis {
                    let slot = scores.entry(cui.as_str()).or_insert(0.0);
                    if sim > *slot {
                        *slot = sim;
                    }
                }
            }
            if scores.is_empty() {
                continue;
            }
            let mut candidates: Vec<(String, f64)> = scores.into_iter().map(|(c, s)| (c.to_string(), s)).collect();
            // BTreeMap order is cui-ascending; a stable sort keeps it within equal scores
            candidates.sort_by(|a, b| b.1.total_cmp(&a.1));
            let top_score = candidates[0].1;
            detections.push(Detection {
                first_tok: first,
                end_tok: end,
                top_score,
                candidates,
            });
        }
    }

    match config.overlap {
        OverlapCriterion::Length => detections.sort_by(|a, b| {
            (b.end_tok - b.first_tok)
                .cmp(&(a.end_tok - a.first_tok))
                .then(b.top_score.total_cmp(&a.top_score))
                .then(a.first_tok.cmp(&b.first_tok))
        }),
        OverlapCriterion::Score => detections.sort_by(|a, b| {
            b.top_score
                .total_cmp(&a.top_score)
                .then((b.end_tok - b.first_tok).cmp(&(a.end_tok - a.first_tok)))
                .then(a.first_tok.cmp(&b.first_tok))
        }),
    }

    let mut taken = vec![false; tokens.len()];
    let mut kept = Vec::new();
    for det in detections {
        if taken[det.first_tok..det.end_tok].iter().any(|&t| t) {
            continue;
        }
        taken[det.first_tok..det.end_tok].iter_mut().for_each(|t| *t = true);
        kept.push(det);
    }
    kept.sort_by_key(|d| d.first_tok);

    let chars: Vec<char> = doc.text.chars().collect();
    kept.into_iter()
        .map(|det| {
            let start = tokens[det.first_tok].start;
            let end = tokens[det.end_tok - 1].end;
            let candidates = det
                .candidates
                .into_iter()
                .take(config.max_candidates)
                .enumerate()
                .map(|(i, (cui, score))| Candidate {
                    cui,
                    score,
                    rank: i + 1,
                })
                .collect();
            CandidateSet {
                mention: Mention {
                    doc_id: doc.id.clone(),
                    start,
                    end,
                    surface: chars[start..end].iter().collect(),
                },
                candidates,
            }
        })
        .collect()
}

/// Runs [`detect_and_generate`] over a corpus on the current rayon pool.
/// Output is ordered by (doc_id, start) regardless of the degree of parallelism.
pub fn detect_corpus(lexicon: &Lexicon, docs: &[Document], config: &MatcherConfig) -> Vec<CandidateSet> {
    let mut out: Vec<CandidateSet> = docs
        .par_iter()
        .flat_map_iter(|doc| detect_and_generate(lexicon, doc, config))
        .collect();
    sort_canonical(&mut out);
    out
}

pub(crate) fn sort_canonical(sets: &mut [CandidateSet]) {
    sets.sort_by(|a, b| {
        (a.mention.doc_id.as_str(), a.mention.start, a.mention.end).cmp(&(
            b.mention.doc_id.as_str(),
            b.mention.start,
            b.mention.end,
        ))
    });
}

#[derive(Debug, Deserialize)]
struct ExternalCandidate {
    cui: String,
    score: f64,
}

#[derive(Debug, Deserialize)]
struct ExternalRecord {
    doc_id: String,
    start: usize,
    end: usize,
    candidates: Vec<ExternalCandidate>,
}

/// Imports candidates produced by an external linker.
///
/// Listed order is authoritative: ranks follow the file order even when the
/// external scores are not monotone. Records are never merged.
pub fn import_external_candidates<R: BufRead>(reader: R, docs: &[Document]) -> Result<Vec<CandidateSet>, MatcherError> {
    let by_id: BTreeMap<&str, &Document> = docs.iter().map(|d| (d.id.as_str(), d)).collect();
    let mut out = Vec::new();
    for (line, rec) in read_jsonl::<ExternalRecord, _>(reader)? {
        let doc = by_id
            .get(rec.doc_id.as_str())
            .ok_or_else(|| MatcherError::UnknownDocument {
                doc_id: rec.doc_id.clone(),
                line,
            })?;
        let surface = doc.slice(rec.start, rec.end).ok_or_else(|| MatcherError::SpanError {
            doc_id: rec.doc_id.clone(),
            start: rec.start,
            end: rec.end,
            line,
        })?;
        let mut seen = HashSet::new();
        let mut candidates = Vec::with_capacity(rec.candidates.len());
        for (i, c) in rec.candidates.into_iter().enumerate() {
            if !c.score.is_finite() {
                return Err(MatcherError::Invalid {
                    line,
                    msg: format!("non-finite score for {}", c.cui),
                });
            }
            if !seen.insert(c.cui.clone()) {
                return Err(MatcherError::DuplicateCandidate { cui: c.cui, line });
            }
            candidates.push(Candidate {
                cui: c.cui,
                score: c.score,
                rank: i + 1,
            });
        }
        out.push(CandidateSet {
            mention: Mention {
                doc_id: rec.doc_id,
                start: rec.start,
                end: rec.end,
                surface,
            },
            candidates,
        });
    }
    sort_canonical(&mut out);
    Ok(out)
}

/// Reads mention JSONL as written by the annotate stage.
pub fn read_candidate_sets<R: BufRead>(reader: R) -> Result<Vec<CandidateSet>, MatcherError> {
    let mut out = Vec::new();
    for (line, set) in read_jsonl::<CandidateSet, _>(reader)? {
        let mut seen = HashSet::new();
        for (i, c) in set.candidates.iter().enumerate() {
            if c.rank != i + 1 {
                return Err(MatcherError::Invalid {
                    line,
                    msg: format!("candidate {} has rank {}", c.cui, c.rank),
                });
            }
            if !seen.insert(c.cui.as_str()) {
                return Err(MatcherError::DuplicateCandidate {
                    cui: c.cui.clone(),
                    line,
                });
            }
        }
        if set.mention.start >= set.mention.end {
            return Err(MatcherError::Invalid {
                line,
                msg: "empty span".into(),
            });
        }
        out.push(set);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy() -> Lexicon {
        Lexicon::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/toy_lexicon.tsv")).unwrap()
    }

    fn run(text: &str) -> Vec<CandidateSet> {
        detect_and_generate(&toy(), &Document::new("d", text), &MatcherConfig::default())
    }

    #[test]
    fn test_cough_has_two_senses() {
        let out = run("a runny nose and cough");
        assert_eq!(out.len(), 1);
        let cs = &out[0];
        assert_eq!(
            (cs.mention.start, cs.mention.end, cs.mention.surface.as_str()),
            (17, 22, "cough")
        );
        let got: Vec<(&str, f64, usize)> = cs
            .candidates
            .iter()
            .map(|c| (c.cui.as_str(), c.score, c.rank))
            .collect();
        assert_eq!(got, vec![("C-cough", 1.0, 1), ("C-coughmed", 1.0, 2)]);
    }

    #[test]
    fn test_empty_text() {
        assert!(run("").is_empty());
        assert!(run("   ,,, ").is_empty());
    }

    #[test]
    fn test_head_cold_beats_cold() {
        // all matching spans: "cold" [17,21) {coldbrand, coldtemp, commoncold} and
        // "head cold" [12,21) {commoncold}; both exact, the 2-token span wins
        let out = run("He caught a head cold.");
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].mention.surface, "head cold");
        assert_eq!((out[0].mention.start, out[0].mention.end), (12, 21));
        assert_eq!(out[0].candidates.len(), 1);
        assert_eq!(out[0].candidates[0].cui, "C-commoncold");
    }

    #[test]
    fn test_jaccard_partial_match() {
        let lex = Lexicon::parse("X1\tacute kidney injury\t\tDisease or Syndrome\n".as_bytes()).unwrap();
        let cfg = MatcherConfig::default();
        let out = detect_and_generate(&lex, &Document::new("d", "kidney injury acute"), &cfg);
        assert_eq!(out[0].candidates[0].score, 1.0);
        let out = detect_and_generate(&lex, &Document::new("d", "acute injury"), &cfg);
        assert!(out.is_empty(), "2/3 is below 0.7");
        let loose = MatcherConfig { min_score: 0.6, ..cfg };
        let out = detect_and_generate(&lex, &Document::new("d", "acute injury"), &loose);
        assert!((out[0].candidates[0].score - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn test_score_criterion_prefers_exact() {
        let lex = Lexicon::parse("X1\tacute kidney injury\t\tDisease or Syndrome\n".as_bytes()).unwrap();
        let text = "severe acute kidney injury";
        let by_len = detect_and_generate(&lex, &Document::new("d", text), &MatcherConfig::default());
        assert_eq!(by_len[0].mention.surface, "severe acute kidney injury");
        let cfg = MatcherConfig {
            overlap: OverlapCriterion::Score,
            ..Default::default()
        };
        let by_score = detect_and_generate(&lex, &Document::new("d", text), &cfg);
        assert_eq!(by_score[0].mention.surface, "acute kidney injury");
    }

    #[test]
    fn test_truncation_and_ranks() {
        let cfg = MatcherConfig {
            max_candidates: 2,
            ..Default::default()
        };
        let out = detect_and_generate(&toy(), &Document::new("d", "cold"), &cfg);
        let cuis: Vec<_> = out[0].candidates.iter().map(|c| (c.cui.as_str(), c.rank)).collect();
        assert_eq!(cuis, vec![("C-coldbrand", 1), ("C-coldtemp", 2)]);
    }

    #[test]
    fn test_config_validation() {
        assert!(MatcherConfig::default().validate().is_ok());
        assert!(MatcherConfig {
            max_ngram: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(MatcherConfig {
            max_candidates: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(MatcherConfig {
            min_score: 1.5,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn test_import_external() {
        let docs = vec![Document::new("d1", "fever and cold")];
        let ok = r#"{"doc_id":"d1","start":10,"end":14,"candidates":[{"cui":"A","score":0.9},{"cui":"B","score":0.5},{"cui":"C","score":0.7}]}"#;
        let out = import_external_candidates(ok.as_bytes(), &docs).unwrap();
        assert_eq!(out[0].mention.surface, "cold");
        assert_eq!(
            out[0].candidates.iter().map(|c| c.rank).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
        assert_eq!(out[0].candidates[2].cui, "C");

        let oob = r#"{"doc_id":"d1","start":10,"end":15,"candidates":[]}"#;
        assert!(matches!(
            import_external_candidates(oob.as_bytes(), &docs),
            Err(MatcherError::SpanError { .. })
        ));
        let unk = r#"{"doc_id":"zz","start":0,"end":1,"candidates":[]}"#;
        assert!(matches!(
            import_external_candidates(unk.as_bytes(), &docs),
            Err(MatcherError::UnknownDocument { .. })
        ));
        let dup = r#"{"doc_id":"d1","start":0,"end":5,"candidates":[{"cui":"A","score":1},{"cui":"A","score":0.5}]}"#;
        assert!(matches!(
            import_external_candidates(dup.as_bytes(), &docs),
            Err(MatcherError::DuplicateCandidate { .. })
        ));
        let twice = format!("{ok}\n{ok}\n");
        assert_eq!(import_external_candidates(twice.as_bytes(), &docs).unwrap().len(), 2);
    }

    #[test]
    fn test_document_slice_counts_chars() {
        let d = Document::new("d", "naïve café");
        assert_eq!(d.char_len(), 10);
        assert_eq!(d.slice(6, 10).as_deref(), Some("café"));
        assert_eq!(d.slice(6, 11), None);
        assert_eq!(d.slice(3, 3), None);
    }

    #[test]
    fn test_candidate_set_json_shape() {
        let out = run("cough");
        let json = serde_json::to_string(&out[0]).unwrap();
        assert_eq!(
            json,
            r#"{"doc_id":"d","start":0,"end":5,"surface":"cough","candidates":[{"cui":"C-cough","score":1.0,"rank":1},{"cui":"C-coughmed","score":1.0,"rank":2}]}"#
        );
        let back = read_candidate_sets(json.as_bytes()).unwrap();
        assert_eq!(back[0], out[0]);
    }

    #[test]
    fn test_duplicate_document_ids() {
        let input = "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n";
        assert!(matches!(
            parse_documents(input.as_bytes()),
            Err(MatcherError::DuplicateDocument { line: 2, .. })
        ));
    }

    proptest! {
        #[test]
        fn prop_detections_are_valid(words in proptest::collection::vec(
            proptest::sample::select(vec!["cold", "head", "the", "cough", "syrup", "aspirin", "low-dose",
                "fever", "blood", "pressure", "and", "vitamin", "c", "Positive", "result,"]), 0..25)) {
            let lex = toy();
            let doc = Document::new("d", words.join(" "));
            let out = detect_and_generate(&lex, &doc, &MatcherConfig::default());
            for w in out.windows(2) {
                prop_assert!(w[0].mention.end <= w[1].mention.start);
            }
            for cs in &out {
                prop_assert_eq!(Some(cs.mention.surface.clone()), doc.slice(cs.mention.start, cs.mention.end));
                prop_assert!(!cs.candidates.is_empty() && cs.candidates.len() <= 5);
                for (i, c) in cs.candidates.iter().enumerate() {
                    prop_assert!(lex.contains(&c.cui));
                    prop_assert_eq!(c.rank, i + 1);
                    prop_assert!(c.score >= 0.7 && c.score <= 1.0);
                }
                for w in cs.candidates.windows(2) {
                    prop_assert!(w[0].score > w[1].score || (w[0].score == w[1].score && w[0].cui < w[1].cui));
                }
            }
        }
    }
}
