//! Library side of the `qfi` command-line tool: argument parsing, run
//! configuration, subcommands and SVG output.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error.

pub mod commands;
pub mod config;
pub mod svg;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use qfi_core::ObjectiveMode;

pub use commands::Failure;
use commands::default_out;
use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "qfi", version, about = "Quantum functional information pipeline")]
pub struct Cli {
    /// Run configuration JSON; omitted sections take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample random circuits; writes samples.csv, bins.csv, summary.json.
    Sample {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n_qubits: Option<usize>,
        #[arg(long)]
        samples: Option<u64>,
    },
    /// Fit a QFI curve to a bins CSV; writes qfi.csv, curve.json, qfi.svg.
    Fit {
        bins_csv: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Qubit count recorded in the curve (else read from summary.json
        /// beside the bins file).
        #[arg(long)]
        n_qubits: Option<usize>,
    },
    /// Evolve circuits; writes history.csv, samples.csv, best.json, evolution.svg.
    Evolve {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n_qubits: Option<usize>,
        #[arg(long, default_value = "fidelity", value_parser = parse_mode)]
        objective: ObjectiveMode,
        /// Curve JSON from `fit`; required with `--objective qfi`.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Run both objectives over several seeds; writes comparison.csv,
    /// boxplot.svg, scatter.svg.
    Compare {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        curve: Option<PathBuf>,
        /// Comma-separated seeds (default: compare.seeds from the config).
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        n_qubits: Option<usize>,
    },
}

fn parse_mode(s: &str) -> Result<ObjectiveMode, String> {
    s.parse().map_err(|e: qfi_core::Error| e.to_string())
}

/// Runs a parsed command line, on a dedicated pool of `--threads` workers
/// when given.
pub fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.threads {
        None => dispatch(cli),
        Some(0) => Err(Failure::Config(anyhow::anyhow!("--threads must be at least 1"))),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build().map_err(|e| Failure::Runtime(e.into()))?;
            pool.install(|| dispatch(cli))
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let mut cfg = RunConfig::load(cli.config.as_deref()).map_err(Failure::Config)?;
    match cli.command {
        Command::Sample { out, seed, n_qubits, samples } => {
            let s = &mut cfg.sampler;
            s.seed = seed.unwrap_or(s.seed);
            s.n_qubits = n_qubits.unwrap_or(s.n_qubits);
            s.num_samples = samples.unwrap_or(s.num_samples);
            commands::sample(&cfg, &out.unwrap_or_else(|| default_out("sample")))
        }
        Command::Fit { bins_csv, out, n_qubits } => {
            commands::fit(&cfg, &bins_csv, n_qubits, &out.unwrap_or_else(|| default_out("fit")))
        }
        Command::Evolve { out, seed, n_qubits, objective, curve } => {
            let e = &mut cfg.evolution;
            e.seed = seed.unwrap_or(e.seed);
            e.n_qubits = n_qubits.unwrap_or(e.n_qubits);
            commands::evolve_cmd(&cfg, objective, curve.as_deref(), &out.unwrap_or_else(|| default_out("evolve")))
        }
        Command::Compare { out, curve, seeds, n_qubits } => {
            cfg.evolution.n_qubits = n_qubits.unwrap_or(cfg.evolution.n_qubits);
            commands::compare(&cfg, curve.as_deref(), seeds, &out.unwrap_or_else(|| default_out("compare")))
        }
    }
}


/// Parses `args` (program name first) and runs them; usage errors are
/// configuration failures.
pub fn run_args<I, T>(args: I) -> Result<(), Failure>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    execute(Cli::try_parse_from(args).map_err(|e| Failure::Config(e.into()))?)
}
