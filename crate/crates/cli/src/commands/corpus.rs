use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;

use semtype::corpus_builder::{
    distant_supervise, map_links, parse_headed_documents, parse_linked_documents, quality_report, Crosswalk,
    MatchStrictness,
};
use semtype::metrics::Prf;

use super::{load_docs, load_gold, load_lexicon, write_records, Classify, CmdResult, Failure, MatcherArgs};
use crate::config::resolve_input;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BuildMode {
    /// Keep detected mentions that name one of the document's headings.
    Distant,
    /// Map hyperlink targets through a page-key crosswalk.
    Crosswalk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Strictness {
    Normalized,
    Raw,
}

/// Build a silver-standard corpus.
#[derive(Debug, Args)]
pub struct BuildCorpusArgs {
    #[arg(long, value_enum)]
    pub mode: BuildMode,
    /// Headed documents (distant) or linked documents (crosswalk), JSONL.
    #[arg(long, value_parser = resolve_input)]
    pub docs: PathBuf,
    #[arg(long, value_parser = resolve_input)]
    pub lexicon: PathBuf,
    /// `page_key<TAB>cui` table, crosswalk mode only.
    #[arg(long, value_parser = resolve_input, required_if_eq("mode", "crosswalk"))]
    pub crosswalk: Option<PathBuf>,
    /// How mention surfaces are compared with heading names.
    #[arg(long, value_enum, default_value_t = Strictness::Normalized)]
    pub strictness: Strictness,
    #[command(flatten)]
    pub matcher: MatcherArgs,
    /// Silver JSONL; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Gold annotations to audit the silver corpus against.
    #[arg(long, value_parser = resolve_input)]
    pub audit_gold: Option<PathBuf>,
    /// Documents the audit gold covers; all input documents when omitted.
    #[arg(long, value_parser = resolve_input, requires = "audit_gold")]
    pub audit_docs: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Audit {
    #[serde(flatten)]
    prf: Prf,
    silver: usize,
    discarded: usize,
}

fn reader(path: &Path) -> CmdResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .input_err(format_args!("opening {}", path.display()))
}

pub fn run(args: &BuildCorpusArgs) -> CmdResult {
    let lexicon = load_lexicon(&args.lexicon)?;
    let what = format!("reading documents {}", args.docs.display());
    let (silver, warnings) = match args.mode {
        BuildMode::Distant => {
            let docs = parse_headed_documents(reader(&args.docs)?).input_err(&what)?;
            let strictness = match args.strictness {
                Strictness::Normalized => MatchStrictness::Normalized,
                Strictness::Raw => MatchStrictness::Raw,
            };
            distant_supervise(&docs, &lexicon, &args.matcher.config()?, strictness)
        }
        BuildMode::Crosswalk => {
            let path = args
                .crosswalk
                .as_ref()
                .ok_or_else(|| Failure::input("crosswalk mode needs --crosswalk"))?;
            let crosswalk = Crosswalk::load(path).input_err(format_args!("reading crosswalk {}", path.display()))?;
            let docs = parse_linked_documents(reader(&args.docs)?).input_err(&what)?;
            map_links(&docs, &crosswalk, &lexicon).input_err("mapping links")?
        }
    };
    log::info!(
        "{} silver annotations over {} documents, {} discarded, {} warnings",
        silver.annotations.len(),
        silver.doc_ids.len(),
        silver.discarded,
        warnings.len()
    );
    write_records(args.out.as_deref(), &silver.annotations)?;

    if let Some(gold_path) = &args.audit_gold {
        let gold = load_gold(gold_path)?;
        let doc_ids = match &args.audit_docs {
            Some(p) => load_docs(p)?.into_iter().map(|d| d.id).collect(),
            None => silver.doc_ids.clone(),
        };
        let prf = quality_report(&silver, &gold, &doc_ids).input_err("auditing")?;
        let audit = Audit {
            prf,
            silver: silver.annotations.len(),
            discarded: silver.discarded,
        };
        // keep stdout free for the corpus when it is written there
        let line = serde_json::to_string(&audit).internal_err("serializing audit")?;
        if args.out.is_some() {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
    Ok(())
}
