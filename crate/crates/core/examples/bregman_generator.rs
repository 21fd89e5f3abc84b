//! Building a divergence from a user-supplied convex generator, and checking
//! the right-centroid property numerically for the built-in ones.
//!
//! cargo run --example bregman_generator

use bregman_bench::divergence::{
    bregman_from_phi, evaluate_loss, numerical_centroid, CentroidOptions, ClipPolicy,
    ConvexGenerator, LossId,
};
use bregman_bench::ProbVector;

/// `phi(x) = sum w_i x_i^2`: a weighted squared Euclidean distance.
struct WeightedSquares(Vec<f64>);

impl ConvexGenerator for WeightedSquares {
    fn name(&self) -> &str {
        "weighted_squares"
    }

    fn value(&self, x: &[f64], _clip: Option<&ClipPolicy>) -> f64 {
        x.iter().zip(&self.0).map(|(v, w)| w * v * v).sum()
    }

    fn gradient(&self, y: &[f64], _clip: Option<&ClipPolicy>) -> Vec<f64> {
        y.iter().zip(&self.0).map(|(v, w)| 2.0 * w * v).collect()
    }
}

fn main() -> bregman_bench::Result<()> {
    let clip = ClipPolicy::default();
    let p = ProbVector::new(vec![0.5, 0.25, 0.25])?;
    let q = ProbVector::new(vec![0.2, 0.3, 0.5])?;

    let weighted = WeightedSquares(vec![3.0, 1.0, 1.0]);
    let d = bregman_from_phi(&weighted, &p, &q, None)?;
    let by_hand: f64 = p.iter().zip(q.iter()).zip(&weighted.0).map(|((a, b), w)| w * (a - b).powi(2)).sum();
    println!("{}: {d:.6} (closed form {by_hand:.6})\n", weighted.name());

    for id in LossId::ALL.into_iter().filter(|id| id.is_bregman()) {
        let g = id.generator().expect("Bregman losses carry a generator");
        let built = bregman_from_phi(g.as_ref(), &p, &q, Some(&clip))?;
        let direct = evaluate_loss(id, &p, &q, &clip)?;
        println!("{:<18} via {:<30} {built:.12}  direct {direct:.12}", id.name(), g.name());
    }

    let points: Vec<ProbVector> = [[0.7, 0.2, 0.1], [0.1, 0.8, 0.1], [0.3, 0.3, 0.4], [0.2, 0.1, 0.7]]
        .iter()
        .map(|v| ProbVector::new(v.to_vec()))
        .collect::<Result<_, _>>()?;
    let mean: Vec<f64> = (0..3).map(|j| points.iter().map(|p| p[j]).sum::<f64>() / points.len() as f64).collect();
    println!("\narithmetic mean {mean:.5?}");
    for id in [LossId::SquaredEuclidean, LossId::ForwardKl, LossId::ItakuraSaito, LossId::ReverseKl] {
        let c = numerical_centroid(id, &points, &clip, CentroidOptions::default())?;
        println!("argmin_c sum {:<18} {:.5?}", id.name(), c.as_slice());
    }
    Ok(())
}
