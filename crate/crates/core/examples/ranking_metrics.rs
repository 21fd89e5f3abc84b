//! Macro F1, NDCG and the accuracy-of-ranking-decrease metric on hand-made
//! predictions.
//!
//! cargo run --example ranking_metrics

use bregman_bench::metrics::{
    accuracy_ranking_decrease, convergence_delta, epochs_to_converge, macro_f1,
    max_accuracy_ranking_decrease, ndcg, rank_categories, LossHistory,
};
use bregman_bench::ProbVector;

fn pv(v: &[f64]) -> ProbVector {
    ProbVector::new(v.to_vec()).expect("literal lies on the simplex")
}

fn main() -> bregman_bench::Result<()> {
    let targets = vec![pv(&[0.6, 0.3, 0.1]), pv(&[0.1, 0.2, 0.7]), pv(&[0.2, 0.5, 0.3])];
    let candidates = [
        ("exact", targets.clone()),
        ("right top, wrong tail", vec![pv(&[0.5, 0.1, 0.4]), pv(&[0.3, 0.2, 0.5]), pv(&[0.1, 0.6, 0.3])]),
        ("reversed", vec![pv(&[0.1, 0.3, 0.6]), pv(&[0.7, 0.2, 0.1]), pv(&[0.3, 0.2, 0.5])]),
        ("uniform", vec![ProbVector::uniform(3)?; 3]),
    ];

    println!("ranking of the first target: {:?}", rank_categories(&targets[0]).order());
    println!("best possible acc_rank for K=3: {:.4}\n", max_accuracy_ranking_decrease(3));
    println!("{:<22} {:>8} {:>8} {:>8}", "prediction", "macroF1", "NDCG", "acc_rank");
    for (name, preds) in &candidates {
        println!(
            "{name:<22} {:>8.4} {:>8.4} {:>8.4}",
            macro_f1(&targets, preds, 3)?,
            ndcg(&targets, preds)?,
            accuracy_ranking_decrease(&targets, preds)?
        );
    }

    let history = LossHistory::new(vec![1.0, 0.6, 0.45, 0.43, 0.50, 0.49, 0.485])?;
    println!("\nloss history   {:?}", history.values());
    println!("relative delta {:.4?}", convergence_delta(&history)?);
    for threshold in [0.2, 0.05, 0.01] {
        println!("converged at threshold {threshold}: {:?}", epochs_to_converge(&history, threshold)?);
    }
    Ok(())
}
