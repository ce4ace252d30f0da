use std::path::PathBuf;

use clap::Args;

use semtype::matcher::{detect_corpus, import_external_candidates};

use super::{load_docs, load_lexicon, write_records, Classify, CmdResult, MatcherArgs};
use crate::config::resolve_input;

/// Detect mentions and generate ranked candidates.
#[derive(Debug, Args)]
pub struct AnnotateArgs {
    #[arg(long, value_parser = resolve_input, required_unless_present = "import")]
    pub lexicon: Option<PathBuf>,
    /// Documents as JSONL with `id` and `text`.
    #[arg(long, value_parser = resolve_input)]
    pub docs: PathBuf,
    /// Take mentions and candidates from an external linker instead of the matcher.
    #[arg(long, value_parser = resolve_input)]
    pub import: Option<PathBuf>,
    /// Mention JSONL; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub matcher: MatcherArgs,
}

pub fn run(args: &AnnotateArgs) -> CmdResult {
    let config = args.matcher.config()?;
    let docs = load_docs(&args.docs)?;
    let sets = match &args.import {
        Some(path) => {
            let file = std::fs::File::open(path).input_err(format_args!("opening {}", path.display()))?;
            import_external_candidates(std::io::BufReader::new(file), &docs)
                .input_err(format_args!("reading external candidates {}", path.display()))?
        }
        None => {
            let lexicon = load_lexicon(args.lexicon.as_deref().expect("required by clap"))?;
            detect_corpus(&lexicon, &docs, &config)
        }
    };
    log::info!("{} documents, {} mentions", docs.len(), sets.len());
    write_records(args.out.as_deref(), &sets)
}
