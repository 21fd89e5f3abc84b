//! Convex generators and the generic Bregman construction
//! `d(x, y) = phi(x) - phi(y) - <x - y, grad phi(y)>`.

use crate::error::{Error, Result};
use crate::simplex::ProbVector;

use super::ClipPolicy;

/// A strictly convex, differentiable function on (part of) the positive orthant.
///
/// `clip`, when given, guards logarithms and reciprocals. Implementations must
/// not otherwise alter their argument.
pub trait ConvexGenerator: Send + Sync {
    fn name(&self) -> &str;

    fn value(&self, x: &[f64], clip: Option<&ClipPolicy>) -> f64;

    fn gradient(&self, y: &[f64], clip: Option<&ClipPolicy>) -> Vec<f64>;

    /// True when the generator is undefined at zero coordinates, in which
    /// case both arguments are clipped before any evaluation.
    fn open_domain(&self) -> bool {
        false
    }
}

fn guarded_ln(v: f64, clip: Option<&ClipPolicy>) -> f64 {
    match clip {
        Some(c) => c.clip(v).ln(),
        None => v.ln(),
    }
}

/// `phi(x) = ||x||^2`, generating the squared Euclidean distance.
#[derive(Clone, Copy, Debug, Default)]
pub struct SquaredNorm;

impl ConvexGenerator for SquaredNorm {
    fn name(&self) -> &str {
        "squared_norm"
    }

    fn value(&self, x: &[f64], _clip: Option<&ClipPolicy>) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    fn gradient(&self, y: &[f64], _clip: Option<&ClipPolicy>) -> Vec<f64> {
        y.iter().map(|v| 2.0 * v).collect()
    }
}

/// `phi(x) = sum x ln x`, generating forward KL on the simplex.
#[derive(Clone, Copy, Debug, Default)]
pub struct NegativeEntropy;

impl ConvexGenerator for NegativeEntropy {
    fn name(&self) -> &str {
        "negative_entropy"
    }

    fn value(&self, x: &[f64], clip: Option<&ClipPolicy>) -> f64 {
        x.iter().map(|&v| v * guarded_ln(v, clip)).sum()
    }

    fn gradient(&self, y: &[f64], clip: Option<&ClipPolicy>) -> Vec<f64> {
        y.iter().map(|&v| guarded_ln(v, clip) + 1.0).collect()
    }
}

/// `phi(x) = sum (x ln x - x)`, generating the generalized I-divergence on
/// the positive reals.
#[derive(Clone, Copy, Debug, Default)]
pub struct GeneralizedIGenerator;

impl ConvexGenerator for GeneralizedIGenerator {
    fn name(&self) -> &str {
        "unnormalized_negative_entropy"
    }

    fn value(&self, x: &[f64], clip: Option<&ClipPolicy>) -> f64 {
        x.iter().map(|&v| v * guarded_ln(v, clip) - v).sum()
    }

    fn gradient(&self, y: &[f64], clip: Option<&ClipPolicy>) -> Vec<f64> {
        y.iter().map(|&v| guarded_ln(v, clip)).collect()
    }
}

/// `phi(x) = -sum ln x` (Burg entropy), generating the Itakura-Saito distance.
#[derive(Clone, Copy, Debug, Default)]
pub struct NegativeLog;

impl ConvexGenerator for NegativeLog {
    fn name(&self) -> &str {
        "negative_log"
    }

    fn value(&self, x: &[f64], clip: Option<&ClipPolicy>) -> f64 {
        x.iter().map(|&v| -guarded_ln(v, clip)).sum()
    }

    fn gradient(&self, y: &[f64], _clip: Option<&ClipPolicy>) -> Vec<f64> {
        y.iter().map(|&v| -1.0 / v).collect()
    }

    fn open_domain(&self) -> bool {
        true
    }
}

/// Bregman divergence of `x` from `y` under generator `phi`.
///
/// Without a clip policy, a `y` on the simplex boundary drives the generator
/// outside its domain and yields [`Error::NumericDomain`].
pub fn bregman_from_phi<G: ConvexGenerator + ?Sized>(
    phi: &G,
    x: &ProbVector,
    y: &ProbVector,
    clip: Option<&ClipPolicy>,
) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::shape(x.len(), y.len()));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = match clip {
        Some(c) if phi.open_domain() => (
            x.iter().map(|&v| c.clip(v)).collect(),
            y.iter().map(|&v| c.clip(v)).collect(),
        ),
        _ => (x.to_vec(), y.to_vec()),
    };
    let grad = phi.gradient(&y, clip);
    let inner: f64 = x.iter().zip(&y).zip(&grad).map(|((a, b), g)| (a - b) * g).sum();
    let d = phi.value(&x, clip) - phi.value(&y, clip) - inner;
    if !d.is_finite() {
        return Err(Error::NumericDomain(format!(
            "bregman divergence under {} evaluated to {d}; clip boundary points",
            phi.name()
        )));
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::{evaluate_loss, LossId};

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn squared_norm_example() {
        let d = bregman_from_phi(&SquaredNorm, &pv(&[1.0, 0.0]), &pv(&[0.5, 0.5]), None).unwrap();
        assert_eq!(d, 0.5);
    }

    #[test]
    fn negative_entropy_matches_forward_kl_example() {
        let clip = ClipPolicy::default();
        let d = bregman_from_phi(&NegativeEntropy, &pv(&[0.8, 0.2]), &pv(&[0.5, 0.5]), Some(&clip)).unwrap();
        assert!((d - 0.192745).abs() < 1e-6);
        let kl = evaluate_loss(LossId::ForwardKl, &pv(&[0.8, 0.2]), &pv(&[0.5, 0.5]), &clip).unwrap();
        assert!((d - kl).abs() < 1e-12);
    }

    #[test]
    fn self_divergence_is_exactly_zero() {
        let x = pv(&[0.1, 0.2, 0.7]);
        let clip = ClipPolicy::default();
        let gens: [&dyn ConvexGenerator; 4] =
            [&SquaredNorm, &NegativeEntropy, &GeneralizedIGenerator, &NegativeLog];
        for g in gens {
            assert_eq!(bregman_from_phi(g, &x, &x, Some(&clip)).unwrap(), 0.0, "{}", g.name());
        }
    }

    #[test]
    fn boundary_without_clipping_is_a_domain_error() {
        let x = pv(&[0.5, 0.5]);
        let y = pv(&[1.0, 0.0]);
        for g in [&NegativeEntropy as &dyn ConvexGenerator, &NegativeLog, &GeneralizedIGenerator] {
            assert!(matches!(bregman_from_phi(g, &x, &y, None), Err(Error::NumericDomain(_))));
            assert!(bregman_from_phi(g, &x, &y, Some(&ClipPolicy::default())).is_ok());
        }
    }

    #[test]
    fn registry_agreement_on_boundary_points() {
        let clip = ClipPolicy::default();
        let x = pv(&[0.0, 0.25, 0.75]);
        let y = pv(&[0.6, 0.4, 0.0]);
        for id in LossId::ALL.into_iter().filter(|id| id.is_bregman()) {
            let g = id.generator().unwrap();
            let d = bregman_from_phi(g.as_ref(), &x, &y, Some(&clip)).unwrap();
            let l = evaluate_loss(id, &x, &y, &clip).unwrap();
            assert!((d - l).abs() <= 1e-9 * l.abs().max(1.0), "{id}: {d} vs {l}");
        }
    }
}
