//! Text outputs of a sweep: percentage tables, per-epoch curves, convergence
//! epochs, a narrative summary and the JSON report.

use std::fmt::Write as _;

use crate::data::fmt_real;
use crate::error::{Error, Result};

use super::sweep::{ExperimentReport, LossSummary, Metric};

const ABSENT: &str = "absent";

fn pct(v: f64) -> String {
    format!("{:.3}", 100.0 * v)
}

/// Rows = losses, columns = train/test mean and std in percent. The best mean
/// of each column is marked `*`.
pub fn render_table(report: &ExperimentReport, metric: Metric) -> String {
    let means = |pick: fn(&super::sweep::MetricSummary) -> f64| -> Vec<Option<f64>> {
        report.summaries.iter().map(|s| s.metric(metric).map(pick)).collect()
    };
    let train = means(|m| m.train.mean);
    let test = means(|m| m.test.mean);
    let top = |col: &[Option<f64>]| col.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let (train_top, test_top) = (top(&train), top(&test));

    let mut out = format!(
        "#meta,metric={},repetitions={},units=percent\nloss,bregman,train_mean,train_std,test_mean,test_std,train_top,test_top\n",
        metric.name(),
        report.config.repetitions
    );
    for s in &report.summaries {
        match s.metric(metric) {
            Some(m) => {
                let flag = |v: f64, best: f64| if v == best { "*" } else { "" };
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    s.loss,
                    s.is_bregman,
                    pct(m.train.mean),
                    pct(m.train.std),
                    pct(m.test.mean),
                    pct(m.test.std),
                    flag(m.train.mean, train_top),
                    flag(m.test.mean, test_top)
                )
            }
            None => writeln!(out, "{},{},{ABSENT},{ABSENT},{ABSENT},{ABSENT},,", s.loss, s.is_bregman),
        }
        .expect("writing to a String cannot fail");
    }
    out
}

fn render_curves(report: &ExperimentReport, name: &str, pick: impl Fn(&super::sweep::CellReport) -> Option<Vec<f64>>) -> String {
    let mut out = format!("#meta,curve={name}\nloss,repetition,epoch,value\n");
    for cell in &report.cells {
        for (t, v) in pick(cell).unwrap_or_default().into_iter().enumerate() {
            writeln!(out, "{},{},{},{}", cell.loss, cell.repetition, t, fmt_real(v))
                .expect("writing to a String cannot fail");
        }
    }
    out
}

fn epoch_or_none(e: Option<usize>) -> String {
    e.map_or_else(|| "none".to_string(), |t| t.to_string())
}

/// One row for the mean curve of each loss, then one per repetition.
pub fn render_convergence(report: &ExperimentReport) -> String {
    let mut out = format!(
        "#meta,threshold={}\nloss,scope,epoch\n",
        report.config.convergence_threshold
    );
    for s in &report.summaries {
        let mean = if s.successful_repetitions == 0 { ABSENT.to_string() } else { epoch_or_none(s.converged_epoch) };
        writeln!(out, "{},mean,{mean}", s.loss).expect("writing to a String cannot fail");
        for cell in report.cells.iter().filter(|c| c.loss == s.loss) {
            let e = if cell.succeeded() { epoch_or_none(cell.converged_epoch) } else { ABSENT.to_string() };
            writeln!(out, "{},rep{},{e}", cell.loss, cell.repetition).expect("writing to a String cannot fail");
        }
    }
    out
}

fn ranked<'a>(items: impl Iterator<Item = (&'a LossSummary, f64)>) -> Vec<(&'a LossSummary, f64)> {
    let mut v: Vec<_> = items.collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.loss.name().cmp(b.0.loss.name())));
    v
}

/// Human-readable ranking of the losses per metric and their convergence order.
pub fn emit_comparison(report: &ExperimentReport, threshold: f64) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(
        w,
        "Loss comparison: {} loss(es) x {} repetition(s), N={} d={} K={}",
        report.summaries.len(),
        report.config.repetitions,
        report.dataset.n,
        report.dataset.d,
        report.dataset.k
    );
    let failed: Vec<String> = report
        .summaries
        .iter()
        .filter(|s| s.successful_repetitions == 0)
        .map(|s| s.loss.to_string())
        .collect();

    for metric in Metric::ALL {
        let _ = writeln!(w, "\n{} (test mean %, best first):", metric.name());
        let rows = ranked(report.summaries.iter().filter_map(|s| s.metric(metric).map(|m| (s, m.test.mean))));
        for (rank, (s, v)) in rows.iter().enumerate() {
            let b = if s.is_bregman { " [B]" } else { "" };
            let _ = writeln!(w, "  {:>2}. {:<18} {:>8}{b}", rank + 1, s.loss.name(), pct(*v));
        }
    }

    let _ = writeln!(w, "\nConvergence order (first epoch after which delta stays below {threshold}):");
    let mut converged: Vec<(&LossSummary, usize)> = report
        .summaries
        .iter()
        .filter(|s| s.successful_repetitions > 0)
        .filter_map(|s| s.converged_epoch.map(|e| (s, e)))
        .collect();
    converged.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.loss.name().cmp(b.0.loss.name())));
    for (rank, (s, e)) in converged.iter().enumerate() {
        let _ = writeln!(w, "  {:>2}. {:<18} epoch {e}", rank + 1, s.loss.name());
    }
    let mut not_converged: Vec<&str> = report
        .summaries
        .iter()
        .filter(|s| s.successful_repetitions > 0 && s.converged_epoch.is_none())
        .map(|s| s.loss.name())
        .collect();
    not_converged.sort_unstable();
    if !not_converged.is_empty() {
        let _ = writeln!(w, "  not converged: {}", not_converged.join(", "));
    }
    if !failed.is_empty() {
        let _ = writeln!(w, "  failed: {}", failed.join(", "));
    }

    if !report.pair_gaps.is_empty() {
        let _ = writeln!(w, "\nFinal-parameter gaps between related objectives (same seed):");
        for g in &report.pair_gaps {
            let _ = writeln!(
                w,
                "  {} vs {} (rep {}): max |diff| = {:.3e}",
                g.first, g.second, g.repetition, g.max_abs_param_diff
            );
        }
    }
    if report.failed_cells() > 0 {
        let _ = writeln!(w, "\nFailed cells:");
        for c in report.cells.iter().filter(|c| !c.succeeded()) {
            let _ = writeln!(w, "  {} rep {}: {}", c.loss, c.repetition, c.error.as_deref().unwrap_or(""));
        }
    }
    out
}

/// Every output file of a sweep as `(file name, contents)`.
pub fn output_files(report: &ExperimentReport) -> Result<Vec<(&'static str, String)>> {
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::NumericDomain(format!("report is not serializable: {e}")))?;
    Ok(vec![
        ("table_macro_f1.csv", render_table(report, Metric::MacroF1)),
        ("table_ndcg.csv", render_table(report, Metric::Ndcg)),
        ("table_acc_rank.csv", render_table(report, Metric::AccRank)),
        (
            "curves_loss.csv",
            render_curves(report, "loss", |c| c.train_report.as_ref().map(|r| r.loss_history.values().to_vec())),
        ),
        ("curves_delta.csv", render_curves(report, "delta_convergence", |c| c.delta_convergence.clone())),
        ("convergence.csv", render_convergence(report)),
        ("summary.txt", emit_comparison(report, report.config.convergence_threshold)),
        ("report.json", json + "\n"),
    ])
}
