//! Train the MLP on synthetic crowd data with one objective and report the
//! held-out metrics.
//!
//! cargo run --release --example train_mlp -- [loss]   (default cross_entropy)

use bregman_bench::data::{generate_synthetic, split, SynthConfig};
use bregman_bench::divergence::LossId;
use bregman_bench::trainer::{evaluate, train, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let loss: LossId = std::env::args().nth(1).as_deref().unwrap_or("cross_entropy").parse()?;
    let ds = generate_synthetic(&SynthConfig { n: 1000, ..SynthConfig::default() })?;
    let (train_set, test_set) = split(&ds, 0.8, 1)?;

    let cfg = TrainConfig { loss, epochs: 15, ..TrainConfig::default() };
    let report = train(&train_set, &cfg)?;
    for (epoch, v) in report.loss_history.values().iter().enumerate() {
        println!("epoch {epoch:>2}  {loss} {v:.6}");
    }
    println!("trained in {:.2}s", report.wall_time);

    let clip = cfg.clip();
    for (name, part) in [("train", &train_set), ("test", &test_set)] {
        let m = evaluate(&report.final_params, part, &clip)?;
        println!(
            "{name:<5} macroF1 {:.4}  NDCG {:.4}  acc_rank {:.4}  forward KL {:.4}",
            m.macro_f1, m.ndcg, m.acc_rank, m.losses[&LossId::ForwardKl]
        );
    }
    Ok(())
}
