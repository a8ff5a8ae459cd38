//! `conceptmatch`: one binary, one subcommand per pipeline step.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error. Every
//! run echoes its effective configuration as JSON on standard error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "conceptmatch",
    version,
    about = "Concept-pattern synonymous keyword retrieval"
)]
#[command(arg_required_else_help = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Global {
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Extra diagnostics on standard error.
    #[arg(long, short, global = true)]
    pub verbose: bool,
    /// Directory holding taxonomy.tsv and entities.tsv.
    #[arg(long, global = true)]
    pub kb_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and check a knowledge base.
    ValidateKb,
    /// Rewrite sentences as concept patterns with slot values.
    Conceptualize(commands::ConceptualizeArgs),
    /// Build the strictly aligned pattern-pair corpus from paraphrases.
    BuildCorpus(commands::BuildCorpusArgs),
    /// Train a phrase-based pattern translation model.
    TrainTranslator(commands::TrainTranslatorArgs),
    /// Conceptualize a keyword list into a pattern repository.
    BuildRepo(commands::BuildRepoArgs),
    /// Precompute retrievals for the most frequent query patterns.
    BuildCache(commands::BuildCacheArgs),
    /// Retrieve synonymous keywords for one query or a query file.
    Match(commands::MatchArgs),
    /// Train the synonymy classifier, optionally with augmentation.
    TrainDiscriminator(commands::TrainDiscriminatorArgs),
    /// Score query/keyword pairs with a trained classifier.
    Score(commands::ScoreArgs),
    /// Run the evaluation experiments and write a report.
    Evaluate(commands::EvaluateArgs),
    /// Generate a seeded synthetic world.
    GenWorld(commands::GenWorldArgs),
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(conceptmatch::Error),
}

impl From<conceptmatch::Error> for Failure {
    fn from(e: conceptmatch::Error) -> Self {
        Failure::Data(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
