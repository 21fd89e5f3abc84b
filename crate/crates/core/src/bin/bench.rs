use std::path::PathBuf;
use std::process::ExitCode;

use bregman_bench::bench::{self, check, load_synth_config, ExperimentConfig};
use bregman_bench::data::{generate_synthetic, save_dataset};
use bregman_bench::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bench", about = "Compare distribution-target objectives on soft-label data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a loss-comparison sweep described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Generate a synthetic crowd dataset.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the numerical self-check suite.
    Check,
}

const CONFIG_ERROR: u8 = 1;
const PARTIAL_FAILURE: u8 = 2;
const TOTAL_FAILURE: u8 = 3;

fn failure_code(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config(_) => ExitCode::from(CONFIG_ERROR),
        _ => ExitCode::from(TOTAL_FAILURE),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => {
            let cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return failure_code(&e),
            };
            let started = std::time::Instant::now();
            let (report, files) = match bench::run_experiment(&cfg) {
                Ok(r) => r,
                Err(e) => return failure_code(&e),
            };
            print!("{}", bench::emit_comparison(&report, cfg.convergence_threshold));
            for f in &files {
                eprintln!("wrote {}", f.display());
            }
            eprintln!("sweep took {:.1}s", started.elapsed().as_secs_f64());
            match report.failed_cells() {
                0 => ExitCode::SUCCESS,
                n if n == report.cells.len() => ExitCode::from(TOTAL_FAILURE),
                _ => ExitCode::from(PARTIAL_FAILURE),
            }
        }
        Command::Gen { config, out } => {
            let result = load_synth_config(&config)
                .and_then(|c| generate_synthetic(&c))
                .and_then(|ds| save_dataset(&ds, &out).map(|_| ds.len()));
            match result {
                Ok(n) => {
                    eprintln!("wrote {n} instances to {}", out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => failure_code(&e),
            }
        }
        Command::Check => match check::run_checks() {
            Ok(outcomes) => {
                for o in &outcomes {
                    println!("[{}] {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
                }
                let failed = outcomes.iter().filter(|o| !o.passed).count();
                println!("{} passed, {failed} failed", outcomes.len() - failed);
                if failed == 0 {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(TOTAL_FAILURE)
                }
            }
            Err(e) => failure_code(&e),
        },
    }
}
