use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{generate_synthetic, load_dataset, split, LabeledDataset};
use crate::divergence::LossId;
use crate::error::{Error, Result};
use crate::metrics::{convergence_delta, epochs_to_converge, LossHistory};
use crate::trainer::{evaluate, train, MetricBundle, TrainReport};

use super::config::ExperimentConfig;
use super::render;

/// The three reported ranking metrics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MacroF1,
    Ndcg,
    AccRank,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::MacroF1, Metric::Ndcg, Metric::AccRank];

    pub fn name(self) -> &'static str {
        match self {
            Metric::MacroF1 => "macro_f1",
            Metric::Ndcg => "ndcg",
            Metric::AccRank => "acc_rank",
        }
    }

    pub fn of(self, bundle: &MetricBundle) -> f64 {
        match self {
            Metric::MacroF1 => bundle.macro_f1,
            Metric::Ndcg => bundle.ndcg,
            Metric::AccRank => bundle.acc_rank,
        }
    }
}

/// Result of one (loss, repetition) training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub loss: LossId,
    pub repetition: usize,
    pub seed: u64,
    pub train_report: Option<TrainReport>,
    pub train_metrics: Option<MetricBundle>,
    pub test_metrics: Option<MetricBundle>,
    /// Per-epoch convergence delta of the training loss.
    pub delta_convergence: Option<Vec<f64>>,
    pub converged_epoch: Option<usize>,
    pub error: Option<String>,
}

impl CellReport {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Population standard deviation across repetitions.
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Some(Stat { mean, std: var.sqrt() })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: Metric,
    pub train: Stat,
    pub test: Stat,
}

/// Aggregates for one loss over its successful repetitions. Statistic fields
/// are `None` when every repetition failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossSummary {
    pub loss: LossId,
    pub is_bregman: bool,
    pub successful_repetitions: usize,
    pub metrics: Vec<MetricSummary>,
    pub final_train_loss: Option<Stat>,
    /// Mean training-loss curve over successful repetitions.
    pub mean_curve: Option<Vec<f64>>,
    /// `epochs_to_converge` on the mean curve.
    pub converged_epoch: Option<usize>,
}

impl LossSummary {
    pub fn metric(&self, m: Metric) -> Option<&MetricSummary> {
        self.metrics.iter().find(|s| s.metric == m)
    }
}

/// Final-parameter gap between two analytically related objectives trained
/// from the same seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairGap {
    pub first: LossId,
    pub second: LossId,
    pub repetition: usize,
    pub max_abs_param_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub dataset: DatasetInfo,
    pub cells: Vec<CellReport>,
    pub summaries: Vec<LossSummary>,
    pub pair_gaps: Vec<PairGap>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub n: usize,
    pub d: usize,
    pub k: usize,
}

impl ExperimentReport {
    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| !c.succeeded()).count()
    }

    pub fn summary(&self, loss: LossId) -> Option<&LossSummary> {
        self.summaries.iter().find(|s| s.loss == loss)
    }

    pub fn cell(&self, loss: LossId, repetition: usize) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.loss == loss && c.repetition == repetition)
    }
}

fn load_source(cfg: &ExperimentConfig) -> Result<LabeledDataset> {
    match (&cfg.data.synthetic, &cfg.data.path) {
        (Some(s), _) => generate_synthetic(s),
        (None, Some(path)) => load_dataset(path),
        (None, None) => Err(Error::Config("no data source".into())),
    }
}

fn run_cell(
    cfg: &ExperimentConfig,
    loss: LossId,
    repetition: usize,
    train_set: &LabeledDataset,
    test_set: &LabeledDataset,
) -> CellReport {
    let seed = cfg.seed_for(repetition);
    let mut cell = CellReport {
        loss,
        repetition,
        seed,
        train_report: None,
        train_metrics: None,
        test_metrics: None,
        delta_convergence: None,
        converged_epoch: None,
        error: None,
    };
    let outcome = (|| -> Result<()> {
        let mut tc = cfg.train.clone();
        tc.loss = loss;
        tc.seed = seed;
        let report = train(train_set, &tc)?;
        let clip = tc.clip();
        cell.train_metrics = Some(evaluate(&report.final_params, train_set, &clip)?);
        cell.test_metrics = Some(evaluate(&report.final_params, test_set, &clip)?);
        if report.loss_history.len() >= 2 {
            cell.delta_convergence = convergence_delta(&report.loss_history).ok();
            cell.converged_epoch =
                epochs_to_converge(&report.loss_history, cfg.convergence_threshold).ok().flatten();
        }
        cell.train_report = Some(report);
        Ok(())
    })();
    if let Err(e) = outcome {
        cell = CellReport { error: Some(e.to_string()), ..cell };
        cell.train_report = None;
        cell.train_metrics = None;
        cell.test_metrics = None;
        cell.delta_convergence = None;
        cell.converged_epoch = None;
    }
    cell
}

fn summarize(cfg: &ExperimentConfig, loss: LossId, cells: &[CellReport]) -> LossSummary {
    let ok: Vec<&CellReport> = cells.iter().filter(|c| c.loss == loss && c.succeeded()).collect();
    let metric_values = |m: Metric, pick: fn(&CellReport) -> Option<&MetricBundle>| -> Vec<f64> {
        ok.iter().filter_map(|c| pick(c)).map(|b| m.of(b)).collect()
    };
    let metrics = Metric::ALL
        .into_iter()
        .filter_map(|m| {
            Some(MetricSummary {
                metric: m,
                train: Stat::of(&metric_values(m, |c| c.train_metrics.as_ref()))?,
                test: Stat::of(&metric_values(m, |c| c.test_metrics.as_ref()))?,
            })
        })
        .collect();
    let histories: Vec<&LossHistory> =
        ok.iter().filter_map(|c| c.train_report.as_ref().map(|r| &r.loss_history)).collect();
    let final_losses: Vec<f64> = histories.iter().filter_map(|h| h.last()).collect();
    let mean_curve = (!histories.is_empty()).then(|| {
        let epochs = histories[0].len();
        (0..epochs)
            .map(|t| histories.iter().map(|h| h.values()[t]).sum::<f64>() / histories.len() as f64)
            .collect::<Vec<f64>>()
    });
    let converged_epoch = mean_curve.as_ref().and_then(|curve| {
        let h = LossHistory::new(curve.clone()).ok()?;
        epochs_to_converge(&h, cfg.convergence_threshold).ok().flatten()
    });
    LossSummary {
        loss,
        is_bregman: loss.is_bregman(),
        successful_repetitions: ok.len(),
        metrics,
        final_train_loss: Stat::of(&final_losses),
        mean_curve,
        converged_epoch,
    }
}

/// Objective pairs whose trajectories coincide in exact arithmetic:
/// cross-entropy and forward KL share every gradient; squared Euclidean is
/// `K` times MSE, which Adam's normalization cancels up to its epsilon.
const RELATED_PAIRS: [(LossId, LossId); 2] =
    [(LossId::CrossEntropy, LossId::ForwardKl), (LossId::Mse, LossId::SquaredEuclidean)];

fn pair_gaps(cfg: &ExperimentConfig, cells: &[CellReport]) -> Vec<PairGap> {
    let params = |loss: LossId, rep: usize| {
        cells
            .iter()
            .find(|c| c.loss == loss && c.repetition == rep)
            .and_then(|c| c.train_report.as_ref())
            .map(|r| &r.final_params)
    };
    let mut gaps = Vec::new();
    for (a, b) in RELATED_PAIRS {
        for rep in 0..cfg.repetitions {
            if let (Some(pa), Some(pb)) = (params(a, rep), params(b, rep)) {
                if let Some(diff) = pa.max_abs_diff(pb) {
                    gaps.push(PairGap { first: a, second: b, repetition: rep, max_abs_param_diff: diff });
                }
            }
        }
    }
    gaps
}

/// Runs the sweep without touching the filesystem (beyond reading `data.path`).
pub fn sweep(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let ds = load_source(cfg)?;
    let splits = (0..cfg.repetitions)
        .map(|rep| split(&ds, cfg.train_fraction, cfg.seed_for(rep)))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(LossId, usize)> = cfg
        .losses
        .iter()
        .flat_map(|&loss| (0..cfg.repetitions).map(move |rep| (loss, rep)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", cfg.workers)))?;
    let cells: Vec<CellReport> = pool.install(|| {
        jobs.par_iter()
            .map(|&(loss, rep)| {
                let (tr, te) = &splits[rep];
                run_cell(cfg, loss, rep, tr, te)
            })
            .collect()
    });
    let summaries = cfg.losses.iter().map(|&loss| summarize(cfg, loss, &cells)).collect();
    let pair_gaps = pair_gaps(cfg, &cells);
    Ok(ExperimentReport {
        config: cfg.clone(),
        dataset: DatasetInfo { n: ds.len(), d: ds.d(), k: ds.k() },
        cells,
        summaries,
        pair_gaps,
    })
}

/// Runs the sweep and writes tables, curves, convergence epochs, the text
/// summary and the JSON report into `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(ExperimentReport, Vec<PathBuf>)> {
    let report = sweep(cfg)?;
    fs::create_dir_all(&cfg.output_dir)?;
    let mut written = Vec::new();
    for (name, contents) in render::output_files(&report)? {
        let path = cfg.output_dir.join(name);
        fs::write(&path, contents)?;
        written.push(path);
    }
    Ok((report, written))
}
