#![allow(dead_code)]

use bregman_bench::divergence::{evaluate_loss, ClipPolicy, LossId};
use bregman_bench::{softmax, Logits, ProbVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

pub const FD_STEP: f64 = 1e-5;

/// Uniform draw from the simplex (Dirichlet(1) via normalized exponentials).
pub fn dirichlet(rng: &mut ChaCha8Rng, k: usize) -> ProbVector {
    let raw: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    ProbVector::with_tolerance(raw.iter().map(|v| v / total).collect(), 1e-9).unwrap()
}

/// Simplex point with every entry at least `0.2 / k`.
pub fn interior(rng: &mut ChaCha8Rng, k: usize) -> ProbVector {
    let p = dirichlet(rng, k);
    ProbVector::with_tolerance(p.iter().map(|v| 0.8 * v + 0.2 / k as f64).collect(), 1e-9).unwrap()
}

pub fn pv(v: &[f64]) -> ProbVector {
    ProbVector::new(v.to_vec()).unwrap()
}

/// Central differences of `f` at `x`.
pub fn central_diff(x: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    (0..x.len())
        .map(|j| {
            let mut plus = x.to_vec();
            let mut minus = x.to_vec();
            plus[j] += FD_STEP;
            minus[j] -= FD_STEP;
            (f(&plus) - f(&minus)) / (2.0 * FD_STEP)
        })
        .collect()
}

/// Loss as a function of the raw prediction coordinates, which may leave
/// the simplex under perturbation.
pub fn raw_loss(id: LossId, p: &ProbVector, q: &[f64], clip: &ClipPolicy) -> f64 {
    let q = ProbVector::with_tolerance(q.to_vec(), 1.0).unwrap();
    evaluate_loss(id, p, &q, clip).unwrap()
}

pub fn logit_loss(id: LossId, p: &ProbVector, z: &[f64], clip: &ClipPolicy) -> f64 {
    evaluate_loss(id, p, &softmax(&Logits::new(z.to_vec()).unwrap()), clip).unwrap()
}

/// Max absolute difference scaled by the larger vector's max magnitude.
pub fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff = analytic.iter().zip(numeric).fold(0.0f64, |m, (a, n)| m.max((a - n).abs()));
    let scale = analytic.iter().chain(numeric).fold(0.0f64, |m, v| m.max(v.abs()));
    diff / scale.max(1e-6)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
