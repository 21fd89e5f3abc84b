//! The loss-comparison harness: sweep every objective over repeated seeds,
//! aggregate the metrics, and write report files.

pub mod check;
mod config;
mod render;
mod sweep;

pub use config::{load_synth_config, DataSource, ExperimentConfig};
pub use render::{emit_comparison, output_files, render_convergence, render_table};
pub use sweep::{
    run_experiment, sweep, CellReport, DatasetInfo, ExperimentReport, LossSummary, Metric,
    MetricSummary, PairGap, Stat,
};
