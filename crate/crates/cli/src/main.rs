use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ris_pdpr::Execution;
use ris_pdpr_cli::{execute, Experiment, ExperimentConfig};

/// RIS pilot/data power-ratio experiments.
#[derive(Debug, Parser)]
#[command(name = "ris-pdpr", version)]
struct Args {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the Monte Carlo trial count.
    #[arg(long)]
    trials: Option<u64>,
    /// Overrides the output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// fig1, fig2, optimize-ris or validate; overrides the config.
    #[arg(long)]
    experiment: Option<Experiment>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (mut config, source) = match &args.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok((c, text)) => (c, Some(text)),
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        None => (ExperimentConfig::default(), None),
    };
    config.seed = args.seed.or(config.seed);
    config.trials = args.trials.or(config.trials);
    config.output_path = args.out.or(config.output_path);
    config.experiment = args.experiment.or(config.experiment);
    let settings = match config.resolve(source.as_deref()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    match execute(&settings, Execution::default()) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("validation failed; see {}", settings.output_path.display());
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
