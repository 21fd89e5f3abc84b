//! Objectives that differ by a parameter-free term train identically.
//! Cross entropy and forward KL differ by the target entropy; squared
//! Euclidean is K times MSE, which plain gradient descent absorbs with lr / K
//! but Adam absorbs at the unchanged rate.
//!
//! cargo run --release --example ce_vs_kl_trajectories

use bregman_bench::data::{generate_synthetic, LabeledDataset, SynthConfig};
use bregman_bench::divergence::LossId;
use bregman_bench::trainer::{train, Optimizer, TrainConfig};

fn gap(ds: &LabeledDataset, a: &TrainConfig, b: &TrainConfig) -> bregman_bench::Result<f64> {
    let pa = train(ds, a)?.final_params;
    let pb = train(ds, b)?.final_params;
    Ok(pa.max_abs_diff(&pb).expect("same architecture"))
}

fn main() -> bregman_bench::Result<()> {
    let ds = generate_synthetic(&SynthConfig { n: 500, ..SynthConfig::default() })?;
    let k = ds.k() as f64;
    let base = TrainConfig { deterministic_full_batch: true, epochs: 20, seed: 11, ..TrainConfig::default() };
    let with = |loss, f: &dyn Fn(&mut TrainConfig)| {
        let mut c = TrainConfig { loss, ..base.clone() };
        f(&mut c);
        c
    };
    let same = |_: &mut TrainConfig| {};

    println!("max |theta_a - theta_b| after {} full-batch epochs", base.epochs);
    let rows: Vec<(&str, TrainConfig, TrainConfig)> = vec![
        ("CE vs forward KL (Adam)", with(LossId::CrossEntropy, &same), with(LossId::ForwardKl, &same)),
        ("MSE vs SSE, same lr (Adam)", with(LossId::Mse, &same), with(LossId::SquaredEuclidean, &same)),
        (
            "MSE vs SSE, same lr, eps x K",
            with(LossId::Mse, &same),
            with(LossId::SquaredEuclidean, &|c| c.adam_epsilon *= k),
        ),
        (
            "MSE vs SSE, lr / K (Adam)",
            with(LossId::Mse, &same),
            with(LossId::SquaredEuclidean, &|c| c.learning_rate /= k),
        ),
        (
            "MSE vs SSE, lr / K (SGD)",
            with(LossId::Mse, &|c| {
                c.optimizer = Optimizer::Sgd;
                c.learning_rate = 0.5;
            }),
            with(LossId::SquaredEuclidean, &|c| {
                c.optimizer = Optimizer::Sgd;
                c.learning_rate = 0.5 / k;
            }),
        ),
    ];
    for (label, a, b) in rows {
        println!("  {label:<30} {:.3e}", gap(&ds, &a, &b)?);
    }

    let mini = TrainConfig { deterministic_full_batch: false, ..base.clone() };
    let d = gap(
        &ds,
        &TrainConfig { loss: LossId::CrossEntropy, ..mini.clone() },
        &TrainConfig { loss: LossId::ForwardKl, ..mini },
    )?;
    println!("  {:<30} {d:.3e}", "CE vs forward KL, mini-batch");
    Ok(())
}
