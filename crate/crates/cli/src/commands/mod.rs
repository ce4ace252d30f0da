pub mod annotate;
pub mod corpus;
pub mod evaluate;
pub mod link;
pub mod typing;

use std::fmt::Display;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;

use semtype::matcher::OverlapCriterion;
use semtype::{Lexicon, MatcherConfig, TypeMap, Warning};

/// Input and usage problems exit with 2, everything else with 1.
#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Internal(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Internal(_) => 1,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Input(e) | Failure::Internal(e) => e,
        }
    }

    pub fn input(msg: impl Display) -> Self {
        Failure::Input(anyhow::anyhow!("{msg}"))
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

pub trait Classify<T> {
    fn input_err(self, ctx: impl Display) -> CmdResult<T>;
    fn internal_err(self, ctx: impl Display) -> CmdResult<T>;
}

impl<T, E> Classify<T> for Result<T, E>
where
    E: std::error::Error + Send + Sync + 'static,
{
    fn input_err(self, ctx: impl Display) -> CmdResult<T> {
        self.map_err(|e| Failure::Input(anyhow::Error::new(e).context(ctx.to_string())))
    }

    fn internal_err(self, ctx: impl Display) -> CmdResult<T> {
        self.map_err(|e| Failure::Internal(anyhow::Error::new(e).context(ctx.to_string())))
    }
}

fn open(path: &Path) -> CmdResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .input_err(format_args!("opening {}", path.display()))
}

pub fn load_lexicon(path: &Path) -> CmdResult<Lexicon> {
    Lexicon::load(path).input_err(format_args!("reading lexicon {}", path.display()))
}

pub fn load_type_map(path: Option<&Path>) -> CmdResult<TypeMap> {
    match path {
        Some(p) => TypeMap::load(p).input_err(format_args!("reading type map {}", p.display())),
        None => Ok(TypeMap::bundled()),
    }
}

/// Lexicon and type map, with a warning per fine type the map lacks.
pub fn load_vocab(lexicon: &Path, typemap: Option<&Path>) -> CmdResult<(Lexicon, TypeMap)> {
    let lexicon = load_lexicon(lexicon)?;
    let type_map = load_type_map(typemap)?;
    log_warnings(&lexicon.check_types(&type_map));
    Ok((lexicon, type_map))
}

pub fn load_docs(path: &Path) -> CmdResult<Vec<semtype::Document>> {
    semtype::matcher::load_documents(path).input_err(format_args!("reading documents {}", path.display()))
}

pub fn load_gold(path: &Path) -> CmdResult<Vec<semtype::GoldAnnotation>> {
    semtype::annotation::load_annotations(path).input_err(format_args!("reading annotations {}", path.display()))
}

pub fn load_candidates(path: &Path) -> CmdResult<Vec<semtype::CandidateSet>> {
    semtype::matcher::read_candidate_sets(open(path)?).input_err(format_args!("reading candidates {}", path.display()))
}

pub fn log_warnings(warnings: &[Warning]) {
    for w in warnings {
        log::warn!("{w}");
    }
}

/// Output file, or stdout when no path is given.
pub fn create_output(path: Option<&Path>) -> CmdResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).input_err(format_args!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_records<'a, T: Serialize + 'a>(
    path: Option<&Path>,
    records: impl IntoIterator<Item = &'a T>,
) -> CmdResult {
    let writer = create_output(path)?;
    semtype::io::write_jsonl(writer, records).internal_err("writing output")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult {
    let mut w = create_output(Some(path))?;
    serde_json::to_writer_pretty(&mut w, value).internal_err("serializing output")?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .internal_err(format_args!("writing {}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Overlap {
    Length,
    Score,
}

#[derive(Debug, Clone, Args)]
pub struct MatcherArgs {
    /// Longest token n-gram considered as a mention.
    #[arg(long, default_value_t = MatcherConfig::default().max_ngram)]
    pub max_ngram: usize,
    #[arg(long, default_value_t = MatcherConfig::default().max_candidates)]
    pub max_candidates: usize,
    /// Minimum Jaccard similarity between mention and alias tokens.
    #[arg(long, default_value_t = MatcherConfig::default().min_score)]
    pub min_score: f64,
    /// Priority between overlapping detections.
    #[arg(long, value_enum, default_value_t = Overlap::Length)]
    pub overlap: Overlap,
}

impl MatcherArgs {
    pub fn config(&self) -> CmdResult<MatcherConfig> {
        let config = MatcherConfig {
            max_ngram: self.max_ngram,
            max_candidates: self.max_candidates,
            min_score: self.min_score,
            overlap: match self.overlap {
                Overlap::Length => OverlapCriterion::Length,
                Overlap::Score => OverlapCriterion::Score,
            },
        };
        config.validate().input_err("matcher flags")?;
        Ok(config)
    }
}

/// Lexicon plus optional type map, shared by most subcommands.
#[derive(Debug, Clone, Args)]
pub struct VocabArgs {
    /// Concept lexicon TSV.
    #[arg(long, value_parser = crate::config::resolve_input)]
    pub lexicon: PathBuf,
    /// Fine type to group TSV; the bundled map when omitted.
    #[arg(long, value_parser = crate::config::resolve_input)]
    pub typemap: Option<PathBuf>,
}

impl VocabArgs {
    pub fn load(&self) -> CmdResult<(Lexicon, TypeMap)> {
        load_vocab(&self.lexicon, self.typemap.as_deref())
    }
}
