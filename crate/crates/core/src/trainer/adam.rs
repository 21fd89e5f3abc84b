use serde::{Deserialize, Serialize};

use super::MlpParams;

/// First and second moment estimates plus the step counter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub timestep: u64,
}

impl AdamState {
    pub fn new(num_params: usize) -> Self {
        AdamState { m: vec![0.0; num_params], v: vec![0.0; num_params], timestep: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(params: &mut MlpParams, grads: &MlpParams, state: &mut AdamState, hyper: &AdamHyper) {
    assert_eq!(state.m.len(), params.num_params(), "adam state does not match parameter count");
    state.timestep += 1;
    let t = state.timestep as i32;
    let correct1 = 1.0 - hyper.beta1.powi(t);
    let correct2 = 1.0 - hyper.beta2.powi(t);
    let moments = state.m.iter_mut().zip(state.v.iter_mut());
    for ((theta, g), (m, v)) in params.values_mut().zip(grads.values()).zip(moments) {
        *m = hyper.beta1 * *m + (1.0 - hyper.beta1) * g;
        *v = hyper.beta2 * *v + (1.0 - hyper.beta2) * g * g;
        let m_hat = *m / correct1;
        let v_hat = *v / correct2;
        *theta -= hyper.learning_rate * m_hat / (v_hat.sqrt() + hyper.epsilon);
    }
}

/// Plain gradient descent, `theta -= lr * g`.
pub fn sgd_step(params: &mut MlpParams, grads: &MlpParams, learning_rate: f64) {
    for (theta, g) in params.values_mut().zip(grads.values()) {
        *theta -= learning_rate * g;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::glorot_init;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut params = glorot_init(&[3, 2], 1).unwrap();
        let before = params.clone();
        let zeros = MlpParams::zeros(&[3, 2]).unwrap();
        let mut state = AdamState::new(params.num_params());
        adam_step(&mut params, &zeros, &mut state, &AdamHyper::default());
        assert_eq!(params, before);
        assert_eq!(state.timestep, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut params = MlpParams::zeros(&[2, 2]).unwrap();
        let mut grads = MlpParams::zeros(&[2, 2]).unwrap();
        let g = [0.3, -2.0, 1e-3, -5e-2, 7.0, -0.9];
        grads.values_mut().zip(g).for_each(|(a, b)| *a = b);
        let hyper = AdamHyper { learning_rate: 0.01, ..AdamHyper::default() };
        let mut state = AdamState::new(6);
        adam_step(&mut params, &grads, &mut state, &hyper);
        for (theta, gi) in params.values().zip(g) {
            // m_hat = g, v_hat = g^2: step = lr * g / (|g| + eps)
            let want = -0.01 * gi / (gi.abs() + 1e-8);
            assert!((theta - want).abs() < 1e-15);
            assert!((theta.abs() - 0.01).abs() < 1e-6);
        }
    }

    #[test]
    fn identical_inputs_identical_outputs() {
        let start = glorot_init(&[4, 3], 5).unwrap();
        let grads = glorot_init(&[4, 3], 6).unwrap();
        let run = || {
            let mut p = start.clone();
            let mut s = AdamState::new(p.num_params());
            adam_step(&mut p, &grads, &mut s, &AdamHyper::default());
            adam_step(&mut p, &grads, &mut s, &AdamHyper::default());
            (p, s)
        };
        assert_eq!(run(), run());
    }
}
