//! A small deterministic MLP trainer: Glorot initialization, ReLU hidden
//! layers, softmax output, Adam (or plain gradient descent), trained under
//! any [`LossId`] against probability-vector targets.

mod adam;
mod mlp;

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::divergence::{batch_loss, ClipPolicy, LossId};
use crate::error::{Error, Result};
use crate::metrics::{accuracy_ranking_decrease, macro_f1, ndcg, LossHistory};
use crate::simplex::ProbVector;

pub use adam::{adam_step, sgd_step, AdamHyper, AdamState};
pub use mlp::{backward, example_loss, forward, glorot_init, Dense, MlpParams};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    #[default]
    Adam,
    /// Full-step gradient descent; no moment estimates.
    Sgd,
}

fn default_hidden() -> Vec<usize> {
    vec![64]
}

/// Training hyperparameters. Every field has a default, so config files
/// only need to name what they change.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub loss: LossId,
    pub hidden_sizes: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
    /// One full-batch step per epoch in dataset order, with no shuffling.
    pub deterministic_full_batch: bool,
    pub optimizer: Optimizer,
    pub clip_epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss: LossId::CrossEntropy,
            hidden_sizes: default_hidden(),
            epochs: 20,
            batch_size: 128,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
            deterministic_full_batch: false,
            optimizer: Optimizer::Adam,
            clip_epsilon: ClipPolicy::DEFAULT_EPSILON,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.hidden_sizes.contains(&0) {
            return bad("hidden_sizes entries must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be a non-negative real");
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0 && self.beta2 > 0.0 && self.beta2 < 1.0) {
            return bad("beta1 and beta2 must lie in (0, 1)");
        }
        if !(self.adam_epsilon > 0.0) {
            return bad("adam_epsilon must be positive");
        }
        ClipPolicy::new(self.clip_epsilon).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn clip(&self) -> ClipPolicy {
        ClipPolicy::new(self.clip_epsilon).unwrap_or_default()
    }

    pub fn adam(&self) -> AdamHyper {
        AdamHyper {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.adam_epsilon,
        }
    }

    pub fn layer_sizes(&self, d: usize, k: usize) -> Vec<usize> {
        std::iter::once(d).chain(self.hidden_sizes.iter().copied()).chain(std::iter::once(k)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-example training loss of each epoch, accumulated while training.
    pub loss_history: LossHistory,
    pub final_params: MlpParams,
    /// Seconds; left out of serialized reports so they stay reproducible.
    #[serde(skip)]
    pub wall_time: f64,
    pub epochs_run: usize,
}

/// Trains a fresh network on `ds`. Fully determined by `(ds, cfg)`.
pub fn train(ds: &LabeledDataset, cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    let started = Instant::now();
    let clip = cfg.clip();
    let mut params = glorot_init(&cfg.layer_sizes(ds.d(), ds.k()), cfg.seed)?;
    let mut state = AdamState::new(params.num_params());
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_rng.set_stream(1);

    let instances = ds.instances();
    let mut order: Vec<usize> = (0..instances.len()).collect();
    let batch_size = if cfg.deterministic_full_batch { instances.len() } else { cfg.batch_size };
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut grads = MlpParams::zeros(&params.layer_sizes())?;

    for epoch in 0..cfg.epochs {
        if !cfg.deterministic_full_batch {
            order.shuffle(&mut shuffle_rng);
        }
        let mut epoch_total = 0.0;
        for (batch, idx) in order.chunks(batch_size).enumerate() {
            grads.values_mut().for_each(|g| *g = 0.0);
            let weight = 1.0 / idx.len() as f64;
            for &i in idx {
                let inst = &instances[i];
                epoch_total += mlp::accumulate_gradient(
                    &params,
                    &inst.features,
                    &inst.target,
                    cfg.loss,
                    &clip,
                    weight,
                    &mut grads,
                )
                .map_err(|e| Error::Training { epoch, batch, source: Box::new(e) })?;
            }
            match cfg.optimizer {
                Optimizer::Adam => adam_step(&mut params, &grads, &mut state, &cfg.adam()),
                Optimizer::Sgd => sgd_step(&mut params, &grads, cfg.learning_rate),
            }
            if let Some(v) = params.values().find(|v| !v.is_finite()) {
                return Err(Error::Training {
                    epoch,
                    batch,
                    source: Box::new(Error::NumericDomain(format!("parameter diverged to {v}"))),
                });
            }
        }
        history.push(epoch_total / instances.len() as f64);
    }

    Ok(TrainReport {
        loss_history: LossHistory::new(history)?,
        final_params: params,
        wall_time: started.elapsed().as_secs_f64(),
        epochs_run: cfg.epochs,
    })
}

/// Metrics for one split: the ranking metrics plus the mean of every objective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricBundle {
    pub macro_f1: f64,
    pub ndcg: f64,
    pub acc_rank: f64,
    pub losses: BTreeMap<LossId, f64>,
}

pub fn predict(params: &MlpParams, ds: &LabeledDataset) -> Result<Vec<ProbVector>> {
    ds.instances().iter().map(|i| forward(params, &i.features).map(|(_, q)| q)).collect()
}

/// Scores arbitrary predictions against targets.
pub fn evaluate_predictions(
    targets: &[ProbVector],
    predictions: &[ProbVector],
    clip: &ClipPolicy,
) -> Result<MetricBundle> {
    let k = targets.first().ok_or_else(|| Error::invalid("nothing to evaluate"))?.k();
    let losses = LossId::ALL
        .into_iter()
        .map(|id| batch_loss(id, targets, predictions, clip).map(|v| (id, v)))
        .collect::<Result<_>>()?;
    Ok(MetricBundle {
        macro_f1: macro_f1(targets, predictions, k)?,
        ndcg: ndcg(targets, predictions)?,
        acc_rank: accuracy_ranking_decrease(targets, predictions)?,
        losses,
    })
}

pub fn evaluate(params: &MlpParams, ds: &LabeledDataset, clip: &ClipPolicy) -> Result<MetricBundle> {
    if params.input_dim() != ds.d() {
        return Err(Error::shape(params.input_dim(), ds.d()));
    }
    if params.output_dim() != ds.k() {
        return Err(Error::shape(params.output_dim(), ds.k()));
    }
    evaluate_predictions(&ds.targets(), &predict(params, ds)?, clip)
}
