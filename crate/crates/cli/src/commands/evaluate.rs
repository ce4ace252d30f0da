use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::Args;

use semtype::filter::{read_linked, LinkedMention};
use semtype::metrics::bootstrap::per_doc_counts;
use semtype::metrics::{evaluate, paired_bootstrap_f1, predictions};

use super::{load_candidates, load_docs, load_gold, write_json, Classify, CmdResult, VocabArgs};
use crate::config::resolve_input;

/// Score linked output against gold annotations.
#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Linked JSONL from `link`.
    #[arg(long, value_parser = resolve_input)]
    pub pred: PathBuf,
    #[arg(long, value_parser = resolve_input)]
    pub gold: PathBuf,
    #[command(flatten)]
    pub vocab: VocabArgs,
    /// A second system's linked output; runs a paired bootstrap against it.
    #[arg(long, value_parser = resolve_input)]
    pub compare: Option<PathBuf>,
    /// Bootstrap replicates.
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    /// Unfiltered candidates, for error analysis before filtering.
    #[arg(long, value_parser = resolve_input)]
    pub candidates: Option<PathBuf>,
    /// Documents to resample over; by default every document seen in the inputs.
    #[arg(long, value_parser = resolve_input)]
    pub docs: Option<PathBuf>,
    /// Also write the report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

fn load_linked(path: &Path) -> CmdResult<Vec<LinkedMention>> {
    let file = File::open(path).input_err(format_args!("opening {}", path.display()))?;
    read_linked(BufReader::new(file)).input_err(format_args!("reading linked output {}", path.display()))
}

pub fn run(args: &EvaluateArgs, seed: u64) -> CmdResult {
    let (lexicon, type_map) = args.vocab.load()?;
    let preds = load_linked(&args.pred)?;
    let gold = load_gold(&args.gold)?;
    let before = args.candidates.as_deref().map(load_candidates).transpose()?;
    let (mut report, _) = evaluate(&preds, &gold, &lexicon, &type_map, before.as_deref()).input_err("evaluating")?;

    if let Some(other) = &args.compare {
        let other = load_linked(other)?;
        let doc_ids: Vec<String> = match &args.docs {
            Some(p) => load_docs(p)?.into_iter().map(|d| d.id).collect(),
            None => {
                let ids: BTreeSet<&str> = preds
                    .iter()
                    .chain(&other)
                    .map(|m| m.mention.doc_id.as_str())
                    .chain(gold.iter().map(|g| g.doc_id.as_str()))
                    .collect();
                ids.into_iter().map(str::to_string).collect()
            }
        };
        let a = per_doc_counts(&predictions(&preds), &gold, &doc_ids);
        let b = per_doc_counts(&predictions(&other), &gold, &doc_ids);
        let result = paired_bootstrap_f1(&a, &b, args.bootstrap, seed).input_err("bootstrap")?;
        report = report.with_bootstrap(result);
    }

    print!("{report}");
    match &args.json {
        Some(p) => write_json(p, &report),
        None => Ok(()),
    }
}
