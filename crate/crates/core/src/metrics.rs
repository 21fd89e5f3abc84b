//! Evaluation metrics over probability-vector predictions: convergence delta,
//! macro F1 on argmax categories, NDCG over the predicted ordering, and
//! accuracy on ranking decrease.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::ProbVector;

/// Per-epoch training losses, indexed from epoch 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LossHistory(Vec<f64>);

impl LossHistory {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((t, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid(format!("loss at epoch {t} is not finite ({v})")));
        }
        Ok(LossHistory(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.0.last().copied()
    }
}

/// Category indices sorted by probability, highest first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankPermutation(Vec<usize>);

impl RankPermutation {
    pub fn order(&self) -> &[usize] {
        &self.0
    }

    /// The argmax category.
    pub fn top(&self) -> usize {
        self.0[0]
    }
}

/// Orders categories by descending probability. Ties keep ascending index order.
pub fn rank_categories(p: &ProbVector) -> RankPermutation {
    let mut order: Vec<usize> = (0..p.k()).collect();
    // stable sort: equal probabilities stay in index order
    order.sort_by(|&a, &b| p[b].total_cmp(&p[a]));
    RankPermutation(order)
}

/// Relative epoch-to-epoch change `|l(t) - l(t+1)| / l(t)`.
pub fn convergence_delta(h: &LossHistory) -> Result<Vec<f64>> {
    let v = h.values();
    if v.len() < 2 {
        return Err(Error::invalid("convergence delta needs at least two epochs"));
    }
    v.windows(2)
        .enumerate()
        .map(|(t, w)| {
            if w[0] <= 0.0 {
                Err(Error::DivisionDomain { epoch: t })
            } else {
                Ok((w[0] - w[1]).abs() / w[0])
            }
        })
        .collect()
}

/// First epoch from which every remaining delta stays below `threshold`.
pub fn epochs_to_converge(h: &LossHistory, threshold: f64) -> Result<Option<usize>> {
    if !(threshold > 0.0) {
        return Err(Error::invalid(format!("threshold must be positive, got {threshold}")));
    }
    let deltas = convergence_delta(h)?;
    let tail = deltas.iter().rev().take_while(|d| **d < threshold).count();
    Ok(if tail == 0 { None } else { Some(deltas.len() - tail) })
}

/// True-positive, false-positive and false-negative counts per category.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_positive: Vec<usize>,
    pub false_positive: Vec<usize>,
    pub false_negative: Vec<usize>,
}

impl ConfusionCounts {
    pub fn from_labels(actual: &[usize], predicted: &[usize], k: usize) -> Result<Self> {
        if actual.len() != predicted.len() {
            return Err(Error::shape(actual.len(), predicted.len()));
        }
        let mut c = ConfusionCounts {
            true_positive: vec![0; k],
            false_positive: vec![0; k],
            false_negative: vec![0; k],
        };
        for (&a, &p) in actual.iter().zip(predicted) {
            if a >= k || p >= k {
                return Err(Error::invalid(format!("label out of range for K={k}")));
            }
            if a == p {
                c.true_positive[a] += 1;
            } else {
                c.false_positive[p] += 1;
                c.false_negative[a] += 1;
            }
        }
        Ok(c)
    }

    pub fn k(&self) -> usize {
        self.true_positive.len()
    }

    /// F1 of one category; zero when precision and recall are both zero.
    pub fn f1(&self, j: usize) -> f64 {
        let tp = self.true_positive[j] as f64;
        let ratio = |den: usize| if den == 0 { 0.0 } else { tp / den as f64 };
        let precision = ratio(self.true_positive[j] + self.false_positive[j]);
        let recall = ratio(self.true_positive[j] + self.false_negative[j]);
        if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        }
    }

    pub fn macro_f1(&self) -> f64 {
        (0..self.k()).map(|j| self.f1(j)).sum::<f64>() / self.k() as f64
    }
}

fn check_batch(targets: &[ProbVector], predictions: &[ProbVector]) -> Result<usize> {
    if targets.is_empty() {
        return Err(Error::invalid("metrics need at least one instance"));
    }
    if targets.len() != predictions.len() {
        return Err(Error::shape(targets.len(), predictions.len()));
    }
    let k = targets[0].k();
    for v in targets.iter().chain(predictions) {
        if v.k() != k {
            return Err(Error::shape(k, v.k()));
        }
    }
    Ok(k)
}

/// Uniform mean over all `k` categories of the argmax F1 scores.
pub fn macro_f1(targets: &[ProbVector], predictions: &[ProbVector], k: usize) -> Result<f64> {
    let found = check_batch(targets, predictions)?;
    if found != k {
        return Err(Error::shape(k, found));
    }
    let actual: Vec<usize> = targets.iter().map(|p| rank_categories(p).top()).collect();
    let predicted: Vec<usize> = predictions.iter().map(|p| rank_categories(p).top()).collect();
    Ok(ConfusionCounts::from_labels(&actual, &predicted, k)?.macro_f1())
}

fn dcg(gains: &[f64], order: &[usize]) -> f64 {
    order
        .iter()
        .enumerate()
        .map(|(rank, &j)| gains[j] / ((rank + 2) as f64).log2())
        .sum()
}

/// NDCG of the predicted ordering with the true probabilities as linear gains.
pub fn ndcg(targets: &[ProbVector], predictions: &[ProbVector]) -> Result<f64> {
    check_batch(targets, predictions)?;
    let total: f64 = targets
        .iter()
        .zip(predictions)
        .map(|(p, q)| {
            let ideal = dcg(p, rank_categories(p).order());
            dcg(p, rank_categories(q).order()) / ideal
        })
        .sum();
    Ok(total / targets.len() as f64)
}

/// Position-discounted agreement between true and predicted rankings.
///
/// Scores `1/k` for each rank `k` (1-based) where the categories agree,
/// averaged over ranks and instances, so its maximum is `H_K / K`.
pub fn accuracy_ranking_decrease(targets: &[ProbVector], predictions: &[ProbVector]) -> Result<f64> {
    let k = check_batch(targets, predictions)?;
    let total: f64 = targets
        .iter()
        .zip(predictions)
        .map(|(p, q)| {
            let truth = rank_categories(p);
            let guess = rank_categories(q);
            truth
                .order()
                .iter()
                .zip(guess.order())
                .enumerate()
                .filter(|(_, (a, b))| a == b)
                .map(|(rank, _)| 1.0 / (rank + 1) as f64)
                .sum::<f64>()
                / k as f64
        })
        .sum();
    Ok(total / targets.len() as f64)
}

/// `H_K / K`, the best attainable accuracy on ranking decrease.
pub fn max_accuracy_ranking_decrease(k: usize) -> f64 {
    (1..=k).map(|i| 1.0 / i as f64).sum::<f64>() / k as f64
}
