use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;

use semtype::typer::thresholds::{score_examples, tune_thresholds_from_scores};
use semtype::typer::{
    build_examples, default_grid, pr_auc, train, AucMode, ScoreRecord, TokenizedCorpus, TrainConfig, TrainingExample,
    TyperError, TyperModel,
};
use semtype::{SpanKey, TypeMap};

use super::{load_candidates, load_docs, load_gold, write_json, write_records, CmdResult, Failure, VocabArgs};
use crate::config::resolve_input;

fn typer_err(e: TyperError, ctx: impl std::fmt::Display) -> Failure {
    let internal = matches!(e, TyperError::NumericalDivergence { .. } | TyperError::Io(_));
    let e = anyhow::Error::new(e).context(ctx.to_string());
    if internal {
        Failure::Internal(e)
    } else {
        Failure::Input(e)
    }
}

fn load_model(path: &Path) -> CmdResult<TyperModel> {
    TyperModel::load(path).map_err(|e| typer_err(e, format_args!("reading model {}", path.display())))
}

/// Annotated corpus: documents plus gold or silver annotations over them.
#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Annotation JSONL (`doc_id`, `start`, `end`, `cui`); silver output works too.
    #[arg(long, value_parser = resolve_input)]
    pub corpus: PathBuf,
    #[arg(long, value_parser = resolve_input)]
    pub docs: PathBuf,
    #[command(flatten)]
    pub vocab: VocabArgs,
}

impl CorpusArgs {
    fn examples(&self, k: usize) -> CmdResult<(Vec<TrainingExample>, TypeMap)> {
        let (lexicon, type_map) = self.vocab.load()?;
        let docs = load_docs(&self.docs)?;
        let gold = load_gold(&self.corpus)?;
        let (examples, skipped) = build_examples(&docs, &gold, &lexicon, &type_map, k);
        if !skipped.is_empty() {
            log::info!("{} annotations skipped", skipped.len());
        }
        Ok((examples, type_map))
    }
}

/// Train the semantic group classifier.
#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Start from this model (fine-tuning); its hash size and window are kept.
    #[arg(long, value_parser = resolve_input)]
    pub model_in: Option<PathBuf>,
    #[arg(long)]
    pub model_out: PathBuf,
    /// Context tokens on each side of the mention.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    pub lr: f64,
    #[arg(long, default_value_t = TrainConfig::default().l2)]
    pub l2: f64,
    /// Number of hashed features, a power of two.
    #[arg(long)]
    pub hash_dim: Option<u32>,
    #[arg(long, default_value_t = TrainConfig::default().batch_size)]
    pub batch_size: usize,
}

pub fn train_cmd(args: &TrainArgs, seed: u64) -> CmdResult {
    let init = args.model_in.as_deref().map(load_model).transpose()?;
    let defaults = TrainConfig::default();
    let config = TrainConfig {
        hash_dim: args
            .hash_dim
            .or(init.as_ref().map(|m| m.hash_dim))
            .unwrap_or(defaults.hash_dim),
        window_k: args
            .k
            .or(init.as_ref().map(|m| m.window_k))
            .unwrap_or(defaults.window_k),
        epochs: args.epochs,
        learning_rate: args.lr,
        l2: args.l2,
        seed,
        batch_size: args.batch_size,
    };
    config.validate().map_err(|e| typer_err(e, "training flags"))?;
    let (examples, type_map) = args.corpus.examples(config.window_k)?;
    log::info!("training on {} examples", examples.len());
    let outcome = train(&examples, type_map.groups(), &config, init.as_ref()).map_err(|e| typer_err(e, "training"))?;
    for (epoch, loss) in outcome.epoch_losses.iter().enumerate() {
        log::info!("epoch {:>3}  loss {loss:.6}", epoch + 1);
    }
    outcome
        .model
        .save(&args.model_out)
        .map_err(|e| typer_err(e, format_args!("writing {}", args.model_out.display())))
}

/// Pick per-group thresholds on a tuning split.
#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_parser = resolve_input)]
    pub model: PathBuf,
    /// Candidate thresholds, comma separated; a log-spaced grid with 0.5 when omitted.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// Thresholds JSON.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn tune_cmd(args: &TuneArgs) -> CmdResult {
    let model = load_model(&args.model)?;
    let (examples, type_map) = args.corpus.examples(model.window_k)?;
    model
        .check_groups(&type_map)
        .map_err(|e| typer_err(e, "model and type map disagree"))?;
    let grid = args.grid.clone().unwrap_or_else(default_grid);
    let scored = score_examples(&model, &examples);
    let groups = type_map.groups();
    let (thresholds, _) =
        tune_thresholds_from_scores(&scored, groups, &grid).map_err(|e| typer_err(e, "tuning thresholds"))?;
    match pr_auc(&scored, groups, AucMode::Micro) {
        Ok(auc) => println!("micro PR-AUC {auc:.4} on {} examples", examples.len()),
        Err(e) => log::warn!("PR-AUC not reported: {e}"),
    }
    for (g, t) in thresholds.iter() {
        println!("  {g:<40}{t:>10.4}");
    }
    write_json(&args.out, &thresholds)
}

/// Score mentions with the classifier.
#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("spans").required(true).args(["candidates", "corpus"])))]
pub struct PredictArgs {
    #[arg(long, value_parser = resolve_input)]
    pub model: PathBuf,
    #[arg(long, value_parser = resolve_input)]
    pub docs: PathBuf,
    /// Mention JSONL from `annotate`.
    #[arg(long, value_parser = resolve_input)]
    pub candidates: Option<PathBuf>,
    /// Annotation JSONL; its spans are scored.
    #[arg(long, value_parser = resolve_input)]
    pub corpus: Option<PathBuf>,
    /// Score JSONL; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn predict_cmd(args: &PredictArgs) -> CmdResult {
    let model = load_model(&args.model)?;
    let docs = load_docs(&args.docs)?;
    let keys: BTreeSet<SpanKey> = match (&args.candidates, &args.corpus) {
        (Some(p), _) => load_candidates(p)?.iter().map(|c| c.mention.key()).collect(),
        (None, Some(p)) => load_gold(p)?.iter().map(|g| g.key()).collect(),
        (None, None) => return Err(Failure::input("need --candidates or --corpus")),
    };
    let groups: Vec<String> = model.group_names().map(str::to_string).collect();
    let corpus = TokenizedCorpus::new(&docs);
    let keys: Vec<SpanKey> = keys.into_iter().collect();
    let scored: Vec<Option<ScoreRecord>> = keys
        .par_iter()
        .map(|k| {
            let ctx = corpus.context(&k.doc_id, k.start, k.end, model.window_k)?;
            Some(ScoreRecord::new(k, &groups, &model.predict_scores(&ctx)))
        })
        .collect();
    let missing = scored.iter().filter(|s| s.is_none()).count();
    if missing > 0 {
        log::warn!("{missing} spans could not be placed in the documents and were not scored");
    }
    write_records(args.out.as_deref(), scored.iter().flatten())?;
    log::info!("scored {} spans", keys.len() - missing);
    Ok(())
}
