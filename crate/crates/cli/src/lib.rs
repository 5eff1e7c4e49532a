//! The `cgraph` command line: concept-graph recovery, link-prediction
//! training, graph-grounded QA and evaluation as reproducible batch runs.
//!
//! Every run writes its outputs plus a `manifest.json` into
//! `--output-dir`. Exit codes: 0 success, 1 configuration error, 2 data
//! error, 3 oracle failure.

mod commands;
mod error;
mod manifest;
mod settings;
mod specs;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Serialize;

pub use commands::{
    AnswerLine, EvalArgs, EvalMode, FixturesArgs, JudgmentLine, ModelKind, QaArgs, RecoverArgs, TrainArgs,
};
pub use error::CliError;
pub use manifest::{sha256_hex, write_atomic, RunManifest, Session, MANIFEST_FILE};
pub use settings::Settings;
pub use specs::{AnswerSpec, CommandSpec, EmbedderSpec, JudgeSpec, PairSpec};

#[derive(Debug, Parser, Serialize)]
#[command(name = "cgraph", version, about, args_override_self = true)]
pub struct Cli {
    /// Seed for every random choice in the run.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// TOML file with endpoint, training and pipeline settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory receiving outputs and the run manifest.
    #[arg(long, global = true, default_value = "cgraph-out")]
    pub output_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Recover a concept graph from pairwise oracle judgments.
    Recover(RecoverArgs),
    /// Train a link predictor on concept embeddings.
    Train(TrainArgs),
    /// Score judgments or answers against gold labels.
    Eval(EvalArgs),
    /// Answer TutorQA-style questions grounded in a concept graph.
    Qa(QaArgs),
    /// Turn recorded judgments and traces into replay fixtures.
    Fixtures(FixturesArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Recover(_) => "recover",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Qa(_) => "qa",
            Command::Fixtures(_) => "fixtures",
        }
    }
}

/// Runs a parsed command line.
pub fn execute(cli: Cli, args: Vec<String>) -> Result<RunManifest, CliError> {
    let settings = Settings::load(cli.config.as_deref())?;
    let mut session = Session::new(cli.seed, cli.output_dir.clone(), args);
    let name = cli.command.name();
    let config = match &cli.command {
        Command::Recover(a) => commands::recover(a, &settings, &mut session)?,
        Command::Train(a) => commands::train(a, &settings, &mut session)?,
        Command::Eval(a) => commands::eval(a, &settings, &mut session)?,
        Command::Qa(a) => commands::qa(a, &settings, &mut session)?,
        Command::Fixtures(a) => commands::fixtures(a, &mut session)?,
    };
    let snapshot = serde_json::json!({
        "command": config,
        "settings": settings,
        "config_file": cli.config,
        "output_dir": cli.output_dir,
    });
    session.finish(name, snapshot)
}

/// Parses `argv` (program name first), runs it and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let _ = tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .try_init();
    let args = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli, args) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("cgraph: {e}");
            e.exit_code()
        }
    }
}
