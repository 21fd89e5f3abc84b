//! Numerical right-centroid `argmin_y sum_i d(x_i, y)` over the simplex.

use crate::error::{Error, Result};
use crate::simplex::ProbVector;

use super::{loss_value, prediction_gradient, ClipPolicy, LossId};

/// Euclidean projection onto the probability simplex (sort-and-threshold).
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

#[derive(Clone, Copy, Debug)]
pub struct CentroidOptions {
    /// Stop once a projected step moves no coordinate by more than this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for CentroidOptions {
    fn default() -> Self {
        CentroidOptions { tolerance: 1e-8, max_iterations: 200_000 }
    }
}

fn objective(id: LossId, points: &[ProbVector], y: &[f64], clip: &ClipPolicy) -> f64 {
    points.iter().map(|x| loss_value(id, x, y, clip)).sum::<f64>() / points.len() as f64
}

/// Minimizes the mean divergence `d(x_i, y)` over `y` on the simplex by
/// projected gradient descent with backtracking, starting from uniform.
pub fn numerical_centroid(
    id: LossId,
    points: &[ProbVector],
    clip: &ClipPolicy,
    options: CentroidOptions,
) -> Result<ProbVector> {
    let k = points.first().ok_or_else(|| Error::invalid("no points"))?.k();
    if let Some(p) = points.iter().find(|p| p.k() != k) {
        return Err(Error::shape(k, p.k()));
    }
    let n = points.len() as f64;
    let mut y = vec![1.0 / k as f64; k];
    let mut f = objective(id, points, &y, clip);
    let mut step = 1.0;
    for _ in 0..options.max_iterations {
        let mut grad = vec![0.0; k];
        for x in points {
            let g = prediction_gradient(id, x, &y, clip, None)?;
            for (acc, gj) in grad.iter_mut().zip(g) {
                *acc += gj / n;
            }
        }
        loop {
            let trial: Vec<f64> = y.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
            let next = project_to_simplex(&trial);
            let delta: Vec<f64> = next.iter().zip(&y).map(|(a, b)| a - b).collect();
            let moved = delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
            let f_next = objective(id, points, &next, clip);
            let linear: f64 = grad.iter().zip(&delta).map(|(g, d)| g * d).sum();
            let quad: f64 = delta.iter().map(|d| d * d).sum::<f64>() / (2.0 * step);
            if f_next <= f + linear + quad || moved == 0.0 {
                y = next;
                f = f_next;
                if moved < options.tolerance {
                    return ProbVector::with_tolerance(y, 1e-9);
                }
                step *= 1.5;
                break;
            }
            step *= 0.5;
            if step < 1e-300 {
                return Err(Error::NumericDomain("centroid line search collapsed".into()));
            }
        }
    }
    Err(Error::NumericDomain(format!(
        "centroid search for {id} did not converge in {} iterations",
        options.max_iterations
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_fixes_simplex_points() {
        let p = [0.2, 0.3, 0.5];
        let got = project_to_simplex(&p);
        for (a, b) in got.iter().zip(p) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn projection_clamps_and_renormalizes() {
        let got = project_to_simplex(&[2.0, 0.0, -1.0]);
        assert_eq!(got, vec![1.0, 0.0, 0.0]);
        let got = project_to_simplex(&[0.5, 0.5, 0.5]);
        for v in got {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn centroid_of_two_points_is_their_mean() {
        let pts = vec![
            ProbVector::new(vec![0.7, 0.2, 0.1]).unwrap(),
            ProbVector::new(vec![0.1, 0.4, 0.5]).unwrap(),
        ];
        for id in [LossId::SquaredEuclidean, LossId::ForwardKl, LossId::ItakuraSaito, LossId::GeneralizedI] {
            let c = numerical_centroid(id, &pts, &ClipPolicy::default(), CentroidOptions::default()).unwrap();
            for (got, want) in c.iter().zip([0.4, 0.3, 0.3]) {
                assert!((got - want).abs() < 1e-5, "{id}: {c:?}");
            }
        }
    }
}
