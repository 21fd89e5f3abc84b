//! The nine distribution-target objectives and their closed-form gradients.
//!
//! Five objectives are ad-hoc (MSE, RMSE, cross-entropy, reverse KL,
//! Jensen-Shannon); four are Bregman divergences (forward KL, Itakura-Saito,
//! generalized I, squared Euclidean) which can also be built from a
//! [`ConvexGenerator`] with [`bregman_from_phi`].
//!
//! All logarithms are natural. Zeros are handled by a [`ClipPolicy`] that
//! clamps operands into `[epsilon, 1]` inside log and division terms only;
//! difference terms always see the raw values. Clipping acts as a
//! stop-gradient: a clipped coordinate contributes no derivative through
//! the clipped term.

mod centroid;
mod generator;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{softmax_slice, softmax_vjp, Logits, ProbVector};

pub use centroid::{numerical_centroid, project_to_simplex, CentroidOptions};
pub use generator::{
    bregman_from_phi, ConvexGenerator, GeneralizedIGenerator, NegativeEntropy, NegativeLog,
    SquaredNorm,
};

/// Floor placed under the RMSE square root by the trainer.
pub const RMSE_FLOOR: f64 = 1e-12;

/// Identifies one of the nine objectives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossId {
    Mse,
    Rmse,
    ReverseKl,
    CrossEntropy,
    JensenShannon,
    ForwardKl,
    ItakuraSaito,
    GeneralizedI,
    SquaredEuclidean,
}

impl LossId {
    /// Every objective, in the order used for report tables.
    pub const ALL: [LossId; 9] = [
        LossId::Mse,
        LossId::Rmse,
        LossId::ReverseKl,
        LossId::CrossEntropy,
        LossId::JensenShannon,
        LossId::ForwardKl,
        LossId::ItakuraSaito,
        LossId::GeneralizedI,
        LossId::SquaredEuclidean,
    ];

    pub fn is_bregman(self) -> bool {
        matches!(
            self,
            LossId::ForwardKl | LossId::ItakuraSaito | LossId::GeneralizedI | LossId::SquaredEuclidean
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            LossId::Mse => "mse",
            LossId::Rmse => "rmse",
            LossId::ReverseKl => "reverse_kl",
            LossId::CrossEntropy => "cross_entropy",
            LossId::JensenShannon => "jensen_shannon",
            LossId::ForwardKl => "forward_kl",
            LossId::ItakuraSaito => "itakura_saito",
            LossId::GeneralizedI => "generalized_i",
            LossId::SquaredEuclidean => "squared_euclidean",
        }
    }

    /// The generator whose Bregman divergence equals this objective, if any.
    pub fn generator(self) -> Option<Box<dyn ConvexGenerator>> {
        match self {
            LossId::ForwardKl => Some(Box::new(NegativeEntropy)),
            LossId::ItakuraSaito => Some(Box::new(NegativeLog)),
            LossId::GeneralizedI => Some(Box::new(GeneralizedIGenerator)),
            LossId::SquaredEuclidean => Some(Box::new(SquaredNorm)),
            _ => None,
        }
    }
}

impl fmt::Display for LossId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown loss `{s}`")))
    }
}

/// Lower clamp applied inside log and ratio terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ClipPolicy {
    epsilon: f64,
}

impl ClipPolicy {
    pub const DEFAULT_EPSILON: f64 = 1e-7;

    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1e-4) {
            return Err(Error::invalid(format!(
                "clip epsilon must lie in (0, 1e-4], got {epsilon}"
            )));
        }
        Ok(ClipPolicy { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    #[inline]
    pub fn clip(&self, v: f64) -> f64 {
        v.clamp(self.epsilon, 1.0)
    }

    /// Derivative of [`ClipPolicy::clip`]: one inside `[epsilon, 1]`, zero outside.
    #[inline]
    pub(crate) fn pass(&self, v: f64) -> f64 {
        if v >= self.epsilon && v <= 1.0 {
            1.0
        } else {
            0.0
        }
    }
}

impl Default for ClipPolicy {
    fn default() -> Self {
        ClipPolicy { epsilon: Self::DEFAULT_EPSILON }
    }
}

impl TryFrom<f64> for ClipPolicy {
    type Error = Error;

    fn try_from(epsilon: f64) -> Result<Self> {
        ClipPolicy::new(epsilon)
    }
}

impl From<ClipPolicy> for f64 {
    fn from(c: ClipPolicy) -> f64 {
        c.epsilon
    }
}

fn check_pair(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::shape(p.len(), q.len()));
    }
    Ok(())
}

fn finite(id: LossId, v: f64) -> Result<f64> {
    if v.is_nan() || v.is_infinite() {
        return Err(Error::NumericDomain(format!("{id} evaluated to {v}")));
    }
    Ok(v)
}

fn mean_squared(p: &[f64], q: &[f64]) -> f64 {
    let sse: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
    sse / p.len() as f64
}

pub(crate) fn loss_value(id: LossId, p: &[f64], q: &[f64], clip: &ClipPolicy) -> f64 {
    let c = |v: f64| clip.clip(v);
    let pairs = p.iter().copied().zip(q.iter().copied());
    match id {
        LossId::Mse => mean_squared(p, q),
        LossId::Rmse => mean_squared(p, q).sqrt(),
        LossId::SquaredEuclidean => pairs.map(|(a, b)| (a - b) * (a - b)).sum(),
        LossId::CrossEntropy => pairs.map(|(a, b)| -a * c(b).ln()).sum(),
        LossId::ForwardKl => pairs.map(|(a, b)| a * (c(a).ln() - c(b).ln())).sum(),
        LossId::GeneralizedI => pairs
            .map(|(a, b)| a * (c(a).ln() - c(b).ln()) - (a - b))
            .sum(),
        LossId::ReverseKl => pairs.map(|(a, b)| b * (c(b).ln() - c(a).ln())).sum(),
        LossId::JensenShannon => {
            let total: f64 = pairs
                .map(|(a, b)| {
                    let lm = c(0.5 * (a + b)).ln();
                    a * (c(a).ln() - lm) + b * (c(b).ln() - lm)
                })
                .sum();
            0.5 * total
        }
        LossId::ItakuraSaito => pairs
            .map(|(a, b)| {
                let ratio = c(a) / c(b);
                ratio - ratio.ln() - 1.0
            })
            .sum(),
    }
}

/// Per-example value of objective `id` for target `p` and prediction `q`.
pub fn evaluate_loss(id: LossId, p: &ProbVector, q: &ProbVector, clip: &ClipPolicy) -> Result<f64> {
    check_pair(p, q)?;
    finite(id, loss_value(id, p, q, clip))
}

/// Shannon entropy `-sum p ln p` with clipped logs.
pub fn entropy(p: &ProbVector, clip: &ClipPolicy) -> f64 {
    p.iter().map(|&v| -v * clip.clip(v).ln()).sum()
}

/// Arithmetic mean of per-example losses over a batch.
pub fn batch_loss(
    id: LossId,
    targets: &[ProbVector],
    predictions: &[ProbVector],
    clip: &ClipPolicy,
) -> Result<f64> {
    if targets.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    if targets.len() != predictions.len() {
        return Err(Error::shape(targets.len(), predictions.len()));
    }
    let mut total = 0.0;
    for (p, q) in targets.iter().zip(predictions) {
        total += evaluate_loss(id, p, q, clip)?;
    }
    Ok(total / targets.len() as f64)
}

pub(crate) fn prediction_gradient(
    id: LossId,
    p: &[f64],
    q: &[f64],
    clip: &ClipPolicy,
    rmse_floor: Option<f64>,
) -> Result<Vec<f64>> {
    let k = p.len() as f64;
    let c = |v: f64| clip.clip(v);
    let pass = |v: f64| clip.pass(v);
    let pairs = p.iter().copied().zip(q.iter().copied());
    let grad: Vec<f64> = match id {
        LossId::Mse => pairs.map(|(a, b)| 2.0 * (b - a) / k).collect(),
        LossId::SquaredEuclidean => pairs.map(|(a, b)| 2.0 * (b - a)).collect(),
        LossId::Rmse => {
            let mse = mean_squared(p, q);
            let root = match rmse_floor {
                Some(floor) => mse.max(floor).sqrt(),
                None if mse > 0.0 => mse.sqrt(),
                None => {
                    return Err(Error::SingularGradient(
                        "rmse derivative is unbounded where prediction equals target".into(),
                    ))
                }
            };
            pairs.map(|(a, b)| (b - a) / (k * root)).collect()
        }
        LossId::CrossEntropy | LossId::ForwardKl => {
            pairs.map(|(a, b)| -a / c(b) * pass(b)).collect()
        }
        LossId::GeneralizedI => pairs.map(|(a, b)| -a / c(b) * pass(b) + 1.0).collect(),
        LossId::ReverseKl => pairs
            .map(|(a, b)| c(b).ln() - c(a).ln() + b / c(b) * pass(b))
            .collect(),
        LossId::JensenShannon => pairs
            .map(|(a, b)| {
                let m = 0.5 * (a + b);
                let through_m = (a + b) / (2.0 * c(m)) * pass(m);
                0.5 * (c(b).ln() + b / c(b) * pass(b) - c(m).ln() - through_m)
            })
            .collect(),
        LossId::ItakuraSaito => pairs
            .map(|(a, b)| {
                let cb = c(b);
                (1.0 / cb - c(a) / (cb * cb)) * pass(b)
            })
            .collect(),
    };
    if let Some(v) = grad.iter().find(|v| !v.is_finite()) {
        return Err(Error::NumericDomain(format!("{id} gradient component is {v}")));
    }
    Ok(grad)
}

/// Partial derivatives of `evaluate_loss(id, p, q)` with respect to each `q_j`.
pub fn gradient_wrt_prediction(
    id: LossId,
    p: &ProbVector,
    q: &ProbVector,
    clip: &ClipPolicy,
) -> Result<Vec<f64>> {
    check_pair(p, q)?;
    prediction_gradient(id, p, q, clip, None)
}

/// Gradient of `evaluate_loss(id, p, softmax(z))` with respect to the logits `z`.
///
/// For cross-entropy and forward KL this is `softmax(z) - p` up to rounding.
pub fn gradient_wrt_logits(
    id: LossId,
    p: &ProbVector,
    z: &Logits,
    clip: &ClipPolicy,
) -> Result<Vec<f64>> {
    check_pair(p, z)?;
    let s = softmax_slice(z);
    let g = prediction_gradient(id, p, &s, clip, None)?;
    Ok(softmax_vjp(&s, &g))
}

/// Loss value and logit-space gradient for the probabilities `s = softmax(z)`,
/// with the RMSE root floored at `rmse_floor`.
pub(crate) fn loss_and_logit_gradient(
    id: LossId,
    p: &[f64],
    s: &[f64],
    clip: &ClipPolicy,
    rmse_floor: f64,
) -> Result<(f64, Vec<f64>)> {
    let value = finite(id, loss_value(id, p, s, clip))?;
    let g = prediction_gradient(id, p, s, clip, Some(rmse_floor))?;
    Ok((value, softmax_vjp(s, &g)))
}
