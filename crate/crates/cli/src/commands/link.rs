use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use clap::Args;

use semtype::filter::{link_corpus, EmptyPolicy, FilterError, FilterMode, TypeSource};
use semtype::typer::thresholds::uniform_for;
use semtype::typer::{import_scores, Thresholds, TyperError, TyperModel};

use super::{load_candidates, load_docs, load_gold, write_records, Classify, CmdResult, Failure, VocabArgs};
use crate::config::resolve_input;

/// Filter candidates by semantic type and pick the top survivor.
#[derive(Debug, Args)]
pub struct LinkArgs {
    /// Mention JSONL from `annotate`.
    #[arg(long, value_parser = resolve_input)]
    pub candidates: PathBuf,
    /// none, predicted, oracle-coarse or oracle-fine.
    #[arg(long, default_value = "none")]
    pub mode: FilterMode,
    /// drop or passthrough.
    #[arg(long, default_value = "drop")]
    pub empty_policy: EmptyPolicy,
    /// Typer model; mentions are scored on the fly (predicted mode).
    #[arg(long, value_parser = resolve_input, conflicts_with = "scores")]
    pub model: Option<PathBuf>,
    /// Per-group thresholds JSON; 0.5 for every group when omitted.
    #[arg(long, value_parser = resolve_input)]
    pub thresholds: Option<PathBuf>,
    /// Group scores JSONL, e.g. from `predict-types` or an external model.
    #[arg(long, value_parser = resolve_input)]
    pub scores: Option<PathBuf>,
    /// Documents, needed to score mentions with --model.
    #[arg(long, value_parser = resolve_input)]
    pub docs: Option<PathBuf>,
    /// Gold annotations for the oracle modes.
    #[arg(long, value_parser = resolve_input)]
    pub gold: Option<PathBuf>,
    #[command(flatten)]
    pub vocab: VocabArgs,
    /// Linked JSONL; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn classify(e: FilterError) -> Failure {
    match e {
        FilterError::Typer(TyperError::Io(_)) => Failure::Internal(anyhow::Error::new(e).context("linking")),
        e => Failure::Input(anyhow::Error::new(e).context("linking")),
    }
}

pub fn run(args: &LinkArgs) -> CmdResult {
    let (lexicon, type_map) = args.vocab.load()?;
    let sets = load_candidates(&args.candidates)?;
    let thresholds = match &args.thresholds {
        Some(p) => Thresholds::load(p).input_err(format_args!("reading thresholds {}", p.display()))?,
        None => uniform_for(&type_map),
    };

    let (mut model, mut scores, mut docs, mut gold) = (None, None, None, None);
    match args.mode {
        FilterMode::None => {}
        FilterMode::Predicted => {
            if let Some(p) = &args.scores {
                let file = File::open(p).input_err(format_args!("opening {}", p.display()))?;
                scores = Some(
                    import_scores(BufReader::new(file), type_map.groups())
                        .input_err(format_args!("reading scores {}", p.display()))?,
                );
            } else if let Some(p) = &args.model {
                let Some(d) = &args.docs else {
                    return Err(Failure::input("--model needs --docs to build mention contexts"));
                };
                model = Some(TyperModel::load(p).input_err(format_args!("reading model {}", p.display()))?);
                docs = Some(load_docs(d)?);
            }
        }
        FilterMode::OracleCoarse | FilterMode::OracleFine => {
            gold = args.gold.as_deref().map(load_gold).transpose()?;
        }
    }
    let source = match (&model, &docs, &scores, &gold) {
        (Some(model), Some(docs), _, _) => TypeSource::Model {
            model,
            thresholds: &thresholds,
            docs,
        },
        (_, _, Some(scores), _) => TypeSource::Scores {
            scores,
            thresholds: &thresholds,
        },
        (_, _, _, Some(gold)) => TypeSource::Gold(gold),
        _ => TypeSource::None,
    };
    let out = link_corpus(&sets, args.mode, source, &lexicon, &type_map, args.empty_policy).map_err(classify)?;
    let s = &out.stats;
    log::info!(
        "mode {}: {} mentions, {} unaligned, {} unscored, {} emptied",
        args.mode,
        s.mentions,
        s.unaligned,
        s.unscored,
        s.dropped
    );
    write_records(args.out.as_deref(), &out.linked)
}
