//! A small nine-objective sweep run in memory, printed as the comparison
//! summary and the test macro-F1 table.
//!
//! cargo run --release --example loss_sweep -- [config.toml]

use bregman_bench::bench::{emit_comparison, render_table, sweep, ExperimentConfig, Metric};

const DEFAULT: &str = include_str!("../configs/quick.toml");

fn main() -> bregman_bench::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::load(path.as_ref())?,
        None => ExperimentConfig::from_toml_str(DEFAULT)?,
    };
    let report = sweep(&cfg)?;
    print!("{}", emit_comparison(&report, cfg.convergence_threshold));
    println!();
    print!("{}", render_table(&report, Metric::MacroF1));
    Ok(())
}
