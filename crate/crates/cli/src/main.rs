//! `ergokit` command-line runner.
//!
//! Exit codes: 0 pass, 1 fail or runtime error, 2 inconclusive under
//! `--strict`, 64 usage or validation error.

mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use ergokit::diagnostics::Verdict;

pub const EXIT_FAIL: u8 = 1;
pub const EXIT_INCONCLUSIVE: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "ergokit", version, about = "Ergodicity diagnostics and reproducible Markov chain experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GlobalArgs {
    /// Root seed; required for Monte Carlo runs. `reproduce` falls back to
    /// the fixed table seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo sample count (paths for `simulate`).
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Time horizon.
    #[arg(long, global = true)]
    pub horizon: Option<f64>,
    /// Directory for artifacts; without it results go to stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Exit with 2 on inconclusive verdicts.
    #[arg(long, global = true)]
    pub strict: bool,
    /// TOML experiment config; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overwrite artifacts written under a different configuration.
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample paths of a model.
    Simulate(commands::SimulateArgs),
    /// Distance between two finitely supported measures.
    Distance(commands::DistanceArgs),
    /// Run one diagnostic.
    Diagnose {
        #[command(subcommand)]
        which: commands::Diagnostic,
    },
    /// Stability report checking both sides of an equivalence.
    Report(commands::ReportArgs),
    /// Reproduce a table of computed values against closed forms.
    Reproduce {
        table: String,
    },
    /// Run the diagnostics listed in `--config`.
    Run,
    /// List registered models, function families or tables.
    List {
        #[arg(value_enum)]
        what: ListKind,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ListKind {
    Models,
    Families,
    Tables,
}

#[derive(Debug)]
pub struct UsageError(pub String);

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
    /// Refused overwrite of a foreign artifact.
    Conflict(String),
}

impl From<UsageError> for CliError {
    fn from(e: UsageError) -> Self {
        CliError::Usage(e.0)
    }
}

impl From<ergokit::Error> for CliError {
    fn from(e: ergokit::Error) -> Self {
        use ergokit::Error as E;
        match e {
            E::UnknownId { .. } | E::InvalidGrid { .. } | E::Parse(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

/// What a command concluded.
pub enum Status {
    Verdict(Verdict),
    /// Reproduction table: whether every row passed.
    Table(bool),
    Done,
}

fn exit_code(status: &Status, strict: bool) -> u8 {
    match status {
        Status::Verdict(Verdict::Pass) | Status::Table(true) | Status::Done => 0,
        Status::Verdict(Verdict::Fail) | Status::Table(false) => EXIT_FAIL,
        Status::Verdict(Verdict::Inconclusive) => {
            if strict {
                EXIT_INCONCLUSIVE
            } else {
                0
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let strict = cli.global.strict;
    match commands::execute(cli) {
        Ok(status) => ExitCode::from(exit_code(&status, strict)),
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Runtime(m) | CliError::Conflict(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_FAIL)
        }
    }
}
