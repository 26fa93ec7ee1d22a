//! Command-line front end of the library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use muskat::config::{RunConfig, StationaryConfig};
use muskat::run::{run, run_stationary, ExitStatus};
use muskat::verify::{lemma_checks, spectral_checks, Check};
use muskat::MuskatError;

#[derive(Parser)]
#[command(name = "muskat", version, about = "Muskat contour solver with analyticity diagnostics")]
struct Cli {
    /// Directory for outputs (overrides the configuration).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the complexified family described by a JSON configuration.
    Run { config: PathBuf },
    /// Check the spectral identities on a 256-point grid.
    VerifySpectral,
    /// Check the two commutation identities of the Cauchy–Riemann operator.
    VerifyLemmas,
    /// Continue a stationary solution into complex time.
    Stationary { config: PathBuf },
}

fn report(checks: &[Check]) -> ExitStatus {
    for c in checks {
        println!("{c}");
    }
    if checks.iter().all(|c| c.passed) {
        ExitStatus::Ok
    } else {
        ExitStatus::NumericalFailure
    }
}

fn execute(cli: Cli) -> Result<ExitStatus, MuskatError> {
    match cli.command {
        Command::Run { config } => {
            let cfg = RunConfig::from_path(&config)?;
            let dir = cli.output_dir.or(cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
            let outcome = run(&cfg, &dir)?;
            println!(
                "stop_reason={:?} steps={} t={} outputs={}",
                outcome.summary.stop_reason,
                outcome.summary.steps,
                outcome.summary.t_reached,
                dir.display()
            );
            Ok(outcome.status)
        }
        Command::VerifySpectral => Ok(report(&spectral_checks(256, 1e-11)?)),
        Command::VerifyLemmas => Ok(report(&lemma_checks(1e-6)?)),
        Command::Stationary { config } => {
            let cfg = StationaryConfig::from_path(&config)?;
            let dir = cli.output_dir.unwrap_or_else(|| PathBuf::from("out"));
            let (summary, status) = run_stationary(&cfg, &dir)?;
            println!(
                "max_residual={:.3e} hypotheses_ok={} gronwall_ok={}",
                summary.max_residual,
                summary.hypotheses.all_ok(),
                summary.gronwall_ok
            );
            Ok(status)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(ExitStatus::ConfigError.code() as u8);
        }
    }
    let status = match execute(cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            ExitStatus::from_error(&e)
        }
    };
    ExitCode::from(status.code() as u8)
}
