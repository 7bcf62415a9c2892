use clap::{Parser, Subcommand};
use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;
use wpcn::experiment::{emit_csv, run_experiment, ExperimentError, ExperimentSpec, MonteCarloSpec};

#[derive(Parser)]
#[command(name = "wpcn", version, about = "Rate control sweeps for wireless-powered links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config and write CSV.
    Run {
        config: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Monte Carlo seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Monte Carlo trials per point; enables simulation columns.
        #[arg(long)]
        mc: Option<u64>,
    },
}

fn run(config: PathBuf, out: Option<PathBuf>, seed: Option<u64>, mc: Option<u64>) -> Result<(), ExperimentError> {
    let mut spec = ExperimentSpec::from_path(&config)?;
    if mc.is_some() || seed.is_some() {
        let m = spec.montecarlo.get_or_insert_with(MonteCarloSpec::default);
        if let Some(trials) = mc {
            m.trials = Some(trials);
        }
        if let Some(seed) = seed {
            m.seed = Some(seed);
        }
    }
    let resolved = spec.resolve()?;
    log::info!("{} points, sweep {}", resolved.grid.len(), resolved.var.name());
    let result = run_experiment(&resolved)?;
    match out {
        Some(path) => emit_csv(&result, BufWriter::new(File::create(path)?)),
        None => emit_csv(&result, io::stdout().lock()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let Command::Run { config, out, seed, mc } = Cli::parse().command;
    match run(config, out, seed, mc) {
        Ok(()) => ExitCode::SUCCESS,
        Err(ExperimentError::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
