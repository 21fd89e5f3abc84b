//! Self-check suite run by `bench check`: numerical invariants of the
//! objectives, gradients, metrics and trainer, each reported pass/fail.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::data::{generate_synthetic, SynthConfig};
use crate::divergence::{
    bregman_from_phi, entropy, evaluate_loss, gradient_wrt_logits, gradient_wrt_prediction,
    numerical_centroid, CentroidOptions, ClipPolicy, LossId,
};
use crate::error::Result;
use crate::metrics::{
    accuracy_ranking_decrease, convergence_delta, epochs_to_converge, macro_f1,
    max_accuracy_ranking_decrease, ndcg, LossHistory,
};
use crate::simplex::{softmax, Logits, ProbVector};
use crate::trainer::{backward, example_loss, glorot_init, train, Optimizer, TrainConfig};

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        CheckOutcome { name, passed, detail }
    }
}

fn dirichlet(rng: &mut ChaCha8Rng, k: usize) -> ProbVector {
    let raw: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    ProbVector::with_tolerance(raw.iter().map(|v| v / total).collect(), 1e-9).expect("normalized")
}

/// Dirichlet(1) mixed with uniform so every entry is at least `0.2 / k`.
fn interior(rng: &mut ChaCha8Rng, k: usize) -> ProbVector {
    let p = dirichlet(rng, k);
    ProbVector::with_tolerance(p.iter().map(|v| 0.8 * v + 0.2 / k as f64).collect(), 1e-9).expect("normalized")
}

fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff = analytic.iter().zip(numeric).fold(0.0f64, |m, (a, n)| m.max((a - n).abs()));
    let scale = analytic.iter().chain(numeric).fold(0.0f64, |m, v| m.max(v.abs()));
    diff / scale.max(1e-6)
}

const FD_STEP: f64 = 1e-5;

fn fd_prediction(id: LossId, p: &[f64], q: &[f64], clip: &ClipPolicy) -> Vec<f64> {
    (0..q.len())
        .map(|j| {
            let mut plus = q.to_vec();
            let mut minus = q.to_vec();
            plus[j] += FD_STEP;
            minus[j] -= FD_STEP;
            let f = |v: &[f64]| crate::divergence::loss_value(id, p, v, clip);
            (f(&plus) - f(&minus)) / (2.0 * FD_STEP)
        })
        .collect()
}

fn fd_logits(id: LossId, p: &ProbVector, z: &[f64], clip: &ClipPolicy) -> Vec<f64> {
    (0..z.len())
        .map(|j| {
            let f = |delta: f64| {
                let mut v = z.to_vec();
                v[j] += delta;
                let q = softmax(&Logits::new(v).expect("finite"));
                evaluate_loss(id, p, &q, clip).expect("finite loss")
            };
            (f(FD_STEP) - f(-FD_STEP)) / (2.0 * FD_STEP)
        })
        .collect()
}

fn divergence_suite(rng: &mut ChaCha8Rng, clip: &ClipPolicy) -> Result<CheckOutcome> {
    let mut worst_negative = 0.0f64;
    let mut worst_identity = 0.0f64;
    let mut worst_generator = 0.0f64;
    for _ in 0..10_000 {
        let k = rng.random_range(2..=10);
        let p = dirichlet(rng, k);
        let q = dirichlet(rng, k);
        for id in LossId::ALL {
            worst_negative = worst_negative.min(evaluate_loss(id, &p, &q, clip)?);
            if id != LossId::CrossEntropy {
                worst_identity = worst_identity.max(evaluate_loss(id, &p, &p, clip)?.abs());
            }
            if let Some(g) = id.generator() {
                let d = bregman_from_phi(g.as_ref(), &p, &q, Some(clip))?;
                let l = evaluate_loss(id, &p, &q, clip)?;
                worst_generator = worst_generator.max((d - l).abs() / l.abs().max(1.0));
            }
        }
    }
    let passed = worst_negative >= -1e-12 && worst_identity <= 1e-8 && worst_generator <= 1e-9;
    Ok(CheckOutcome::new(
        "divergences: non-negativity, identity, generator equivalence",
        passed,
        format!("min value {worst_negative:.2e}, max d(p,p) {worst_identity:.2e}, max generator gap {worst_generator:.2e}"),
    ))
}

fn entropy_decomposition(rng: &mut ChaCha8Rng, clip: &ClipPolicy) -> Result<CheckOutcome> {
    let mut worst_value = 0.0f64;
    for _ in 0..10_000 {
        let k = rng.random_range(2..=10);
        let (p, q) = (dirichlet(rng, k), dirichlet(rng, k));
        let ce = evaluate_loss(LossId::CrossEntropy, &p, &q, clip)?;
        let kl = evaluate_loss(LossId::ForwardKl, &p, &q, clip)?;
        worst_value = worst_value.max((ce - kl - entropy(&p, clip)).abs());
    }
    let mut worst_grad = 0.0f64;
    for _ in 0..1_000 {
        let k = rng.random_range(2..=10);
        let p = dirichlet(rng, k);
        let z = Logits::new((0..k).map(|_| rng.random_range(-4.0..4.0)).collect())?;
        let a = gradient_wrt_logits(LossId::CrossEntropy, &p, &z, clip)?;
        let b = gradient_wrt_logits(LossId::ForwardKl, &p, &z, clip)?;
        worst_grad = a.iter().zip(&b).fold(worst_grad, |m, (x, y)| m.max((x - y).abs()));
    }
    Ok(CheckOutcome::new(
        "cross-entropy = entropy + forward KL",
        worst_value <= 1e-9 && worst_grad <= 1e-9,
        format!("max value gap {worst_value:.2e}, max logit-gradient gap {worst_grad:.2e}"),
    ))
}

fn gradient_checks(rng: &mut ChaCha8Rng, clip: &ClipPolicy) -> Result<Vec<CheckOutcome>> {
    let mut worst_pred = 0.0f64;
    let mut worst_logit = 0.0f64;
    for id in LossId::ALL {
        for _ in 0..200 {
            let k = rng.random_range(2..=6);
            let p = interior(rng, k);
            let q = interior(rng, k);
            let a = gradient_wrt_prediction(id, &p, &q, clip)?;
            worst_pred = worst_pred.max(rel_err(&a, &fd_prediction(id, &p, &q, clip)));
            let z: Vec<f64> = q.iter().map(|v| v.ln()).collect();
            let a = gradient_wrt_logits(id, &p, &Logits::new(z.clone())?, clip)?;
            worst_logit = worst_logit.max(rel_err(&a, &fd_logits(id, &p, &z, clip)));
        }
    }
    let mut worst_mlp = 0.0f64;
    for id in LossId::ALL {
        let mut done = 0;
        while done < 20 {
            let params = glorot_init(&[3, 4, 2], rng.random())?;
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            // skip points sitting on a ReLU kink
            let near_kink = params.layers()[0].weights.chunks(3).zip(&params.layers()[0].bias).any(|(row, b)| {
                (row.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>() + b).abs() < 1e-3
            });
            if near_kink {
                continue;
            }
            let p = interior(rng, 2);
            let g = backward(&params, &x, &p, id, clip)?;
            let analytic: Vec<f64> = g.values().copied().collect();
            let numeric: Vec<f64> = (0..params.num_params())
                .map(|i| {
                    let f = |delta: f64| {
                        let mut moved = params.clone();
                        *moved.values_mut().nth(i).expect("index in range") += delta;
                        example_loss(&moved, &x, &p, id, clip).expect("finite loss")
                    };
                    (f(FD_STEP) - f(-FD_STEP)) / (2.0 * FD_STEP)
                })
                .collect();
            worst_mlp = worst_mlp.max(rel_err(&analytic, &numeric));
            done += 1;
        }
    }
    Ok(vec![
        CheckOutcome::new("prediction-space gradients vs finite differences", worst_pred < 1e-4, format!("max rel err {worst_pred:.2e}")),
        CheckOutcome::new("logit-space gradients vs finite differences", worst_logit < 1e-4, format!("max rel err {worst_logit:.2e}")),
        CheckOutcome::new("3-4-2 MLP backprop vs finite differences", worst_mlp < 1e-4, format!("max rel err {worst_mlp:.2e}")),
    ])
}

fn convexity_and_minimizer(rng: &mut ChaCha8Rng, clip: &ClipPolicy) -> Result<Vec<CheckOutcome>> {
    let bregman: Vec<LossId> = LossId::ALL.into_iter().filter(|id| id.is_bregman()).collect();
    let mut worst_convexity = f64::NEG_INFINITY;
    for &id in &bregman {
        for _ in 0..2_000 {
            let k = rng.random_range(2..=8);
            let (a, b, q) = (interior(rng, k), interior(rng, k), interior(rng, k));
            let mid = ProbVector::with_tolerance(a.iter().zip(b.iter()).map(|(x, y)| 0.5 * (x + y)).collect(), 1e-9)?;
            let lhs = evaluate_loss(id, &mid, &q, clip)?;
            let rhs = 0.5 * (evaluate_loss(id, &a, &q, clip)? + evaluate_loss(id, &b, &q, clip)?);
            worst_convexity = worst_convexity.max(lhs - rhs);
        }
    }
    let mut worst_centroid = 0.0f64;
    for &id in &bregman {
        let k = 5;
        let points: Vec<ProbVector> = (0..50).map(|_| dirichlet(rng, k)).collect();
        let mean: Vec<f64> = (0..k).map(|j| points.iter().map(|p| p[j]).sum::<f64>() / 50.0).collect();
        let c = numerical_centroid(id, &points, clip, CentroidOptions::default())?;
        worst_centroid = c.iter().zip(&mean).fold(worst_centroid, |m, (a, b)| m.max((a - b).abs()));
    }
    Ok(vec![
        CheckOutcome::new(
            "Bregman divergences convex in first argument",
            worst_convexity <= 1e-12,
            format!("max midpoint excess {worst_convexity:.2e}"),
        ),
        CheckOutcome::new(
            "right centroid of Bregman divergences is the arithmetic mean",
            worst_centroid <= 1e-3,
            format!("max coordinate gap {worst_centroid:.2e}"),
        ),
    ])
}

fn metric_examples(rng: &mut ChaCha8Rng, clip: &ClipPolicy) -> Result<CheckOutcome> {
    let pv = |v: &[f64]| ProbVector::new(v.to_vec());
    let one_hots = |labels: &[usize]| labels.iter().map(|&c| ProbVector::one_hot(2, c)).collect::<Result<Vec<_>>>();
    let mut failures = Vec::new();
    let expect = |failures: &mut Vec<String>, name: &str, got: f64, want: f64, tol: f64| {
        if (got - want).abs() > tol {
            failures.push(format!("{name}: {got} != {want}"));
        }
    };
    let t = one_hots(&[0, 0, 1, 1])?;
    let p = one_hots(&[0, 1, 1, 1])?;
    expect(&mut failures, "macro_f1", macro_f1(&t, &p, 2)?, 0.733333, 1e-6);
    expect(&mut failures, "macro_f1 perfect", macro_f1(&t, &t, 2)?, 1.0, 0.0);
    let target = vec![pv(&[0.8, 0.2])?];
    expect(&mut failures, "ndcg reversed", ndcg(&target, &[pv(&[0.2, 0.8])?])?, 0.76091, 1e-5);
    expect(&mut failures, "ndcg perfect", ndcg(&target, &target)?, 1.0, 0.0);
    expect(&mut failures, "acc_rank perfect K=2", accuracy_ranking_decrease(&target, &target)?, 0.75, 0.0);
    expect(&mut failures, "acc_rank reversed", accuracy_ranking_decrease(&target, &[pv(&[0.2, 0.8])?])?, 0.0, 0.0);
    expect(
        &mut failures, "acc_rank K=3",
        accuracy_ranking_decrease(&[pv(&[0.5, 0.3, 0.2])?], &[pv(&[0.5, 0.2, 0.3])?])?,
        1.0 / 3.0,
        1e-15,
    );
    for k in 2..=9 {
        let ps: Vec<ProbVector> = (0..20).map(|_| dirichlet(rng, k)).collect();
        let qs: Vec<ProbVector> = (0..20).map(|_| dirichlet(rng, k)).collect();
        let bound = max_accuracy_ranking_decrease(k);
        let a = accuracy_ranking_decrease(&ps, &qs)?;
        if !(0.0..=bound + 1e-15).contains(&a) {
            failures.push(format!("acc_rank {a} outside [0, H_K/K] for K={k}"));
        }
        expect(&mut failures, "acc_rank self", accuracy_ranking_decrease(&ps, &ps)?, bound, 1e-15);
    }
    let h = LossHistory::new(vec![10.0, 5.0, 4.0])?;
    let d = convergence_delta(&h)?;
    expect(&mut failures, "delta 0", d[0], 0.5, 0.0);
    expect(&mut failures, "delta 1", d[1], 0.2, 1e-16);
    if epochs_to_converge(&LossHistory::new(vec![10.0, 5.0, 4.9, 4.85])?, 0.05)? != Some(1) {
        failures.push("epochs_to_converge example".into());
    }
    let mut worst_geni = 0.0f64;
    for _ in 0..10_000 {
        let k = rng.random_range(2..=10);
        let (p, q) = (dirichlet(rng, k), dirichlet(rng, k));
        let a = evaluate_loss(LossId::GeneralizedI, &p, &q, clip)?;
        let b = evaluate_loss(LossId::ForwardKl, &p, &q, clip)?;
        worst_geni = worst_geni.max((a - b).abs());
    }
    if worst_geni > 1e-12 {
        failures.push(format!("generalized I vs forward KL gap {worst_geni:.2e}"));
    }
    let passed = failures.is_empty();
    let detail = if passed { format!("generalized I vs forward KL max gap {worst_geni:.2e}") } else { failures.join("; ") };
    Ok(CheckOutcome::new("metric examples and generalized I on the simplex", passed, detail))
}

fn trajectory_checks() -> Result<Vec<CheckOutcome>> {
    let data = SynthConfig { n: 500, ..SynthConfig::default() };
    let ds = generate_synthetic(&data)?;
    let k = ds.k() as f64;
    let base = TrainConfig { deterministic_full_batch: true, seed: 3, ..TrainConfig::default() };
    let run = |loss: LossId, tweak: &dyn Fn(&mut TrainConfig)| {
        let mut cfg = TrainConfig { loss, ..base.clone() };
        tweak(&mut cfg);
        train(&ds, &cfg).map(|r| r.final_params)
    };
    let keep = |_: &mut TrainConfig| {};
    let ce = run(LossId::CrossEntropy, &keep)?;
    let kl = run(LossId::ForwardKl, &keep)?;
    let ce_gap = ce.max_abs_diff(&kl).unwrap_or(f64::INFINITY);

    let mse = run(LossId::Mse, &keep)?;
    let sse_scaled = run(LossId::SquaredEuclidean, &|c| c.learning_rate /= k)?;
    let sse_equal = run(LossId::SquaredEuclidean, &keep)?;
    let sse_eps = run(LossId::SquaredEuclidean, &|c| c.adam_epsilon *= k)?;
    let scaled_gap = mse.max_abs_diff(&sse_scaled).unwrap_or(f64::INFINITY);
    let equal_gap = mse.max_abs_diff(&sse_equal).unwrap_or(f64::INFINITY);
    let eps_gap = mse.max_abs_diff(&sse_eps).unwrap_or(f64::INFINITY);

    let sgd = |c: &mut TrainConfig| {
        c.optimizer = Optimizer::Sgd;
        c.learning_rate = 0.5;
    };
    let mse_sgd = run(LossId::Mse, &sgd)?;
    let sse_sgd = run(LossId::SquaredEuclidean, &|c| {
        sgd(c);
        c.learning_rate /= k;
    })?;
    let sgd_gap = mse_sgd.max_abs_diff(&sse_sgd).unwrap_or(f64::INFINITY);

    Ok(vec![
        CheckOutcome::new(
            "full-batch trajectories: cross-entropy = forward KL",
            ce_gap <= 1e-6,
            format!("max |param diff| {ce_gap:.2e}"),
        ),
        CheckOutcome::new(
            "full-batch Adam trajectories: SSE at lr/K = MSE",
            scaled_gap <= 1e-6,
            format!("max |param diff| {scaled_gap:.2e} (equal-rate gap {equal_gap:.2e})"),
        ),
        CheckOutcome::new(
            "full-batch Adam trajectories: SSE at equal lr and K x adam_epsilon = MSE",
            eps_gap <= 1e-6,
            format!("max |param diff| {eps_gap:.2e}"),
        ),
        CheckOutcome::new(
            "full-batch gradient descent: SSE at lr/K = MSE",
            sgd_gap <= 1e-6,
            format!("max |param diff| {sgd_gap:.2e}"),
        ),
    ])
}

/// Runs every check with a fixed seed.
pub fn run_checks() -> Result<Vec<CheckOutcome>> {
    let clip = ClipPolicy::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut out = vec![divergence_suite(&mut rng, &clip)?, entropy_decomposition(&mut rng, &clip)?];
    out.extend(gradient_checks(&mut rng, &clip)?);
    out.extend(convexity_and_minimizer(&mut rng, &clip)?);
    out.push(metric_examples(&mut rng, &clip)?);
    out.extend(trajectory_checks()?);
    Ok(out)
}
