//! `rfa`: batch rhythm formant analysis.
//!
//! Exit codes: 0 on success, 1 for usage or configuration errors, 2 for
//! data errors (unreadable inputs, empty results, schema mismatches).

mod config;
mod extract;
mod learn;
mod plot;
mod synth;

use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use config::{parse_assignment, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "rfa", version, about = "Rhythm formant analysis for spoken language identification")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML file of `key = value` settings.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one setting, e.g. `--set hop_s=0.2` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract the feature CSV from a directory of WAV files.
    Extract(extract::ExtractArgs),
    /// Split a feature CSV, grid-search the SVM and save the model.
    Train(learn::TrainArgs),
    /// Evaluate a saved model on a feature CSV.
    Evaluate(learn::EvaluateArgs),
    /// Rank features by permutation importance on a feature CSV.
    Importance(learn::ImportanceArgs),
    /// Write the CSV data behind the eight analysis panels of one file.
    PlotData(plot::PlotArgs),
    /// Generate a synthetic test signal.
    Synth(synth::SynthArgs),
}

/// Error classified by exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
        }
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

pub trait Classify<T> {
    fn usage_err(self) -> CmdResult<T>;
    fn data_err(self) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage_err(self) -> CmdResult<T> {
        self.map_err(|e| Failure::Usage(e.into()))
    }
    fn data_err(self) -> CmdResult<T> {
        self.map_err(|e| Failure::Data(e.into()))
    }
}

impl Common {
    /// Resolves the run configuration with `flags` applied after `--set`.
    fn resolve(&self, flags: Vec<(&str, Option<toml::Value>)>) -> CmdResult<RunConfig> {
        let mut overrides = self
            .set
            .iter()
            .map(|s| parse_assignment(s))
            .collect::<anyhow::Result<Vec<_>>>()
            .usage_err()?;
        if let Some(j) = self.jobs {
            overrides.push(("jobs".into(), toml::Value::Integer(j as i64)));
        }
        for (k, v) in flags {
            if let Some(v) = v {
                overrides.push((k.to_string(), v));
            }
        }
        RunConfig::resolve(self.config.as_deref(), overrides).usage_err()
    }
}

fn thread_pool(jobs: usize) -> CmdResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build().usage_err()
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Extract(a) => extract::run(a),
        Command::Train(a) => learn::train(a),
        Command::Evaluate(a) => learn::evaluate(a),
        Command::Importance(a) => learn::importance(a),
        Command::PlotData(a) => plot::run(a),
        Command::Synth(a) => synth::run(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(level));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .with_target(false)
        .init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(e) | Failure::Data(e)) = &f;
            eprintln!("error: {e:#}");
            ExitCode::from(f.exit_code())
        }
    }
}
