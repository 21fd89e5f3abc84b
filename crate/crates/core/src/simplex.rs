//! Points on the probability simplex and the softmax map onto it.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|sum - 1|` accepted by [`ProbVector::new`].
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// A length-`K` probability vector (`K >= 2`, entries in `[0, 1]`, summing to one).
///
/// Used both for annotation-derived targets and for model predictions.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(values, SIMPLEX_TOLERANCE)
    }

    /// Validates with a caller-chosen tolerance on the total mass.
    pub fn with_tolerance(values: Vec<f64>, tolerance: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid(format!(
                "probability vector needs at least 2 categories, got {}",
                values.len()
            )));
        }
        if let Some((j, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(Error::invalid(format!("entry {j} = {v} is outside [0, 1]")));
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > tolerance {
            return Err(Error::invalid(format!(
                "entries sum to {total}, not 1"
            )));
        }
        Ok(ProbVector(values))
    }

    /// The uniform distribution over `k` categories.
    pub fn uniform(k: usize) -> Result<Self> {
        Self::new(vec![1.0 / k as f64; k])
    }

    /// Point mass on `category`.
    pub fn one_hot(k: usize, category: usize) -> Result<Self> {
        if category >= k {
            return Err(Error::invalid(format!("category {category} out of range for K={k}")));
        }
        let mut v = vec![0.0; k];
        v[category] = 1.0;
        Self::new(v)
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ProbVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        ProbVector::new(values)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Vec<f64> {
        p.0
    }
}

impl fmt::Debug for ProbVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("ProbVector").field(&self.0).finish()
    }
}

/// Unconstrained pre-softmax scores.
#[derive(Clone, Debug, PartialEq)]
pub struct Logits(Vec<f64>);

impl Logits {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((j, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid(format!("logit {j} is not finite ({v})")));
        }
        if values.len() < 2 {
            return Err(Error::invalid("logits need at least 2 categories"));
        }
        Ok(Logits(values))
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Logits {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Maps logits onto the simplex, subtracting the max first so large logits cannot overflow.
pub fn softmax(z: &Logits) -> ProbVector {
    ProbVector(softmax_slice(z))
}

pub(crate) fn softmax_slice(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = out.iter().sum();
    for v in &mut out {
        *v /= total;
    }
    out
}

/// Pulls a vector-Jacobian product back through softmax: returns `J^T g`
/// where `J = diag(s) - s s^T` is the Jacobian of `s = softmax(z)`.
pub(crate) fn softmax_vjp(s: &[f64], g: &[f64]) -> Vec<f64> {
    let dot: f64 = s.iter().zip(g).map(|(a, b)| a * b).sum();
    s.iter().zip(g).map(|(si, gi)| si * (gi - dot)).collect()
}
