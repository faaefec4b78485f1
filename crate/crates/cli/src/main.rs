//! `collapsar`: datasets, training, evaluation, encoding, analysis and
//! simulation from one binary.

mod analyze;
mod config;
mod run;
mod simulate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(collapsar::Error),
}

impl From<collapsar::Error> for CliError {
    fn from(e: collapsar::Error) -> Self {
        match e {
            collapsar::Error::Config(m) => CliError::Usage(m),
            other => CliError::Run(other),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Run(_) => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Run(e) => e.kind(),
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Run(e) => e.to_string(),
        }
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| collapsar::Error::io(path, e).into())
}

pub fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| collapsar::Error::io(path, e).into())
}

pub fn to_json<T: serde::Serialize>(v: &T) -> Result<String, CliError> {
    Ok(serde_json::to_string_pretty(v).map_err(collapsar::Error::from)? + "\n")
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Dotted `key=value` override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
}

impl Common {
    /// Config table with overrides applied; `seed_key` receives `--seed`.
    pub fn table(&self, seed_key: Option<&str>) -> Result<toml::Table, CliError> {
        let mut t = config::load_table(self.config.as_deref())?;
        for s in &self.sets {
            config::apply_set(&mut t, s)?;
        }
        if let (Some(seed), Some(key)) = (self.seed, seed_key) {
            config::apply_set(&mut t, &format!("{key}={seed}"))?;
        }
        ensure_dir(&self.out)?;
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    SyntheticCtr,
    Contradictory,
    CollapseProbe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnalyzeKind {
    Spectrum,
    Ia,
    Mi,
    Entangle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimKind {
    Bandit,
    DelayedFeedback,
}

#[derive(Debug, Parser)]
#[command(name = "collapsar", version, about = "Ads ranking model toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset with its manifest.
    Gen {
        kind: GenKind,
        #[command(flatten)]
        common: Common,
    },
    /// Train a model; writes a checkpoint and the epoch history.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a checkpoint on a dataset.
    Eval {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Print the multiple-numeral-system codes of a value.
    Encode {
        value: u64,
        #[arg(long, value_delimiter = ',', default_values_t = [2u32, 3])]
        systems: Vec<u32>,
        /// Digit positions per system; covering lengths when omitted.
        #[arg(long, value_delimiter = ',')]
        lengths: Vec<u32>,
        #[command(flatten)]
        common: Common,
    },
    /// Spectra, information abundance, MI grids and entanglement reports.
    Analyze {
        kind: AnalyzeKind,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        /// `panel=checkpoint_dir` for entanglement, repeatable.
        #[arg(long = "model", value_name = "NAME=DIR")]
        models: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Bandit and delayed-feedback simulations.
    Simulate {
        kind: SimKind,
        #[command(flatten)]
        common: Common,
    },
}

fn init_threads() -> Result<(), CliError> {
    let n = match std::env::var("COLLAPSAR_THREADS") {
        Ok(v) => v.parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| {
            CliError::Usage(format!("COLLAPSAR_THREADS={v:?} is not a positive integer"))
        })?,
        Err(_) => 1,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Gen { kind, common } => run::gen(kind, &common),
        Command::Train { common } => run::train(&common),
        Command::Eval {
            checkpoint,
            data,
            common,
        } => run::eval(checkpoint, data, &common),
        Command::Encode {
            value,
            systems,
            lengths,
            common,
        } => run::encode(value, &systems, &lengths, &common),
        Command::Analyze {
            kind,
            checkpoint,
            data,
            models,
            common,
        } => analyze::analyze(kind, checkpoint, data, &models, &common),
        Command::Simulate { kind, common } => simulate::simulate(kind, &common),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            let trailer = serde_json::json!({
                "error": { "kind": e.kind(), "message": e.message(), "exit_code": e.code() }
            });
            eprintln!("{trailer}");
            ExitCode::from(e.code())
        }
    }
}
