use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::divergence::{loss_and_logit_gradient, ClipPolicy, LossId, RMSE_FLOOR};
use crate::error::{Error, Result};
use crate::simplex::{softmax_slice, Logits, ProbVector};

/// A fully connected layer; `weights` is row-major `outputs x inputs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense { inputs, outputs, weights: vec![0.0; inputs * outputs], bias: vec![0.0; outputs] }
    }

    #[inline]
    pub fn weight(&self, out: usize, inp: usize) -> f64 {
        self.weights[out * self.inputs + inp]
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }
}

/// Weights and biases of a ReLU MLP with a softmax output layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    layers: Vec<Dense>,
}

impl MlpParams {
    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("network needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::shape(pair[0].outputs, pair[1].inputs));
            }
        }
        for l in &layers {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::invalid("layer buffers do not match their declared sizes"));
            }
        }
        if layers.last().map(|l| l.outputs) < Some(2) {
            return Err(Error::invalid("output layer needs at least 2 categories"));
        }
        Ok(MlpParams { layers })
    }

    /// A network of the given sizes with every parameter zero.
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        check_sizes(layer_sizes)?;
        Self::from_layers(layer_sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect())
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    /// `[d, h1, ..., K]`.
    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].inputs).chain(self.layers.iter().map(|l| l.outputs)).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// All parameters in a fixed order: per layer, weights then biases.
    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias))
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    /// Largest absolute coordinate difference; `None` when shapes differ.
    pub fn max_abs_diff(&self, other: &MlpParams) -> Option<f64> {
        if self.layer_sizes() != other.layer_sizes() {
            return None;
        }
        Some(self.values().zip(other.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    }
}

fn check_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::invalid("layer sizes need at least input and output"));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::invalid("layer sizes must be positive"));
    }
    Ok(())
}

/// Glorot-uniform weights in `+-sqrt(6 / (fan_in + fan_out))`, zero biases.
pub fn glorot_init(layer_sizes: &[usize], seed: u64) -> Result<MlpParams> {
    check_sizes(layer_sizes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = layer_sizes
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut layer = Dense::zeros(fan_in, fan_out);
            for v in &mut layer.weights {
                *v = rng.random_range(-limit..limit);
            }
            layer
        })
        .collect();
    MlpParams::from_layers(layers)
}

struct Trace {
    /// Input followed by each hidden layer's ReLU output.
    activations: Vec<Vec<f64>>,
    /// Hidden pre-activations, one per hidden layer.
    pre: Vec<Vec<f64>>,
    logits: Vec<f64>,
}

fn trace(params: &MlpParams, x: &[f64]) -> Result<Trace> {
    if x.len() != params.input_dim() {
        return Err(Error::shape(params.input_dim(), x.len()));
    }
    let n = params.layers.len();
    let mut activations = vec![x.to_vec()];
    let mut pre = Vec::with_capacity(n - 1);
    for layer in &params.layers[..n - 1] {
        let z = layer.apply(activations.last().expect("input is always present"));
        activations.push(z.iter().map(|v| v.max(0.0)).collect());
        pre.push(z);
    }
    let logits = params.layers[n - 1].apply(activations.last().expect("input is always present"));
    Ok(Trace { activations, pre, logits })
}

/// Pre-softmax logits and output probabilities for one input.
pub fn forward(params: &MlpParams, x: &[f64]) -> Result<(Logits, ProbVector)> {
    let t = trace(params, x)?;
    let logits = Logits::new(t.logits)?;
    let probs = ProbVector::with_tolerance(softmax_slice(&logits), 1e-9)?;
    Ok((logits, probs))
}

/// Adds this example's parameter gradient into `acc`, scaled by `weight`, and
/// returns the example's loss.
pub(crate) fn accumulate_gradient(
    params: &MlpParams,
    x: &[f64],
    p: &ProbVector,
    loss: LossId,
    clip: &ClipPolicy,
    weight: f64,
    acc: &mut MlpParams,
) -> Result<f64> {
    let t = trace(params, x)?;
    if p.k() != params.output_dim() {
        return Err(Error::shape(params.output_dim(), p.k()));
    }
    if let Some(v) = t.logits.iter().find(|v| !v.is_finite()) {
        return Err(Error::NumericDomain(format!("logit diverged to {v}")));
    }
    let s = softmax_slice(&t.logits);
    let (value, mut delta) = loss_and_logit_gradient(loss, p, &s, clip, RMSE_FLOOR)?;
    for l in (0..params.layers.len()).rev() {
        let layer = &params.layers[l];
        let input = &t.activations[l];
        let grad = &mut acc.layers[l];
        for (i, &di) in delta.iter().enumerate() {
            let dw = di * weight;
            grad.bias[i] += dw;
            let row = &mut grad.weights[i * layer.inputs..(i + 1) * layer.inputs];
            for (g, a) in row.iter_mut().zip(input) {
                *g += dw * a;
            }
        }
        if l > 0 {
            let pre = &t.pre[l - 1];
            delta = (0..layer.inputs)
                .map(|j| {
                    // ReLU derivative, taken as 0 at exactly 0
                    if pre[j] > 0.0 {
                        delta.iter().enumerate().map(|(i, di)| layer.weight(i, j) * di).sum()
                    } else {
                        0.0
                    }
                })
                .collect();
        }
    }
    Ok(value)
}

/// Gradient of the per-example loss with respect to every parameter.
pub fn backward(
    params: &MlpParams,
    x: &[f64],
    p: &ProbVector,
    loss: LossId,
    clip: &ClipPolicy,
) -> Result<MlpParams> {
    let mut grads = MlpParams::zeros(&params.layer_sizes())?;
    accumulate_gradient(params, x, p, loss, clip, 1.0, &mut grads)?;
    Ok(grads)
}

/// Per-example loss of the network output, for finite-difference checks.
pub fn example_loss(
    params: &MlpParams,
    x: &[f64],
    p: &ProbVector,
    loss: LossId,
    clip: &ClipPolicy,
) -> Result<f64> {
    let (_, q) = forward(params, x)?;
    crate::divergence::evaluate_loss(loss, p, &q, clip)
}
