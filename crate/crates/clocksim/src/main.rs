use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use clocksim::config::{ConfigError, RunConfig};
use clocksim::run::{run_sweep, Experiment, RunError};

/// Clock-interferometer sweep runner: writes one CSV table per sweep block
/// plus a JSON sidecar with the resolved configuration.
#[derive(Parser, Debug)]
#[command(name = "clocksim", version, about)]
struct Cli {
    /// Experiment name: population-transfer, clockness, visibility-vs-tg,
    /// d-i-vs-tg, complementarity-grid, multilevel-clockness,
    /// toy-postquantum, single-run
    experiment: String,

    /// Config file (key = value with [section] headers); defaults apply when
    /// omitted
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override the RNG seed from the config
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory for CSV/JSON tables
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Override the number of Monte Carlo shots per sweep point
    #[arg(long)]
    shots: Option<usize>,

    /// Disable all noise sources (analytic patterns, exact populations)
    #[arg(long)]
    noiseless: bool,
}

fn load_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(shots) = cli.shots {
        cfg.shots = shots;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let cfg = match load_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };

    let exp: Experiment = match cli.experiment.parse() {
        Ok(exp) => exp,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };

    match run_sweep(&cfg, exp, cli.noiseless, Some(&cli.out)) {
        Ok(out) => {
            for file in &out.files {
                println!("wrote {}", file.display());
            }
            if out.any_nonconverged {
                eprintln!("warning: at least one fit did not converge");
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(RunError::UnknownExperiment(name)) => {
            eprintln!("config error: unknown experiment `{name}`");
            ExitCode::from(2)
        }
        Err(RunError::Fit(e)) => {
            eprintln!("fit error: {e}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
