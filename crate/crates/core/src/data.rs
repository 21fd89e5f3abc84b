//! Soft-label datasets built from crowd annotation counts.
//!
//! Targets are normalized "repeats" vectors: `p_j = r_j / sum_l r_l`. The
//! synthetic generator simulates a crowd by drawing a fixed number of
//! annotations per item from a hidden ground-truth distribution produced by a
//! random teacher network.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{softmax_slice, ProbVector};

/// Off-simplex tolerance accepted when loading targets from disk.
pub const LOAD_TOLERANCE: f64 = 1e-6;

/// Annotation counts per category for one item.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepeatsVector(Vec<u64>);

impl RepeatsVector {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::invalid("repeats need at least 2 categories"));
        }
        Ok(RepeatsVector(counts))
    }

    /// Accepts signed counts, rejecting negatives.
    pub fn from_signed(counts: &[i64]) -> Result<Self> {
        let unsigned = counts
            .iter()
            .map(|&c| {
                u64::try_from(c).map_err(|_| Error::invalid(format!("negative annotation count {c}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(unsigned)
    }

    pub fn counts(&self) -> &[u64] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

/// Turns annotation counts into a probability target. Zeros are kept as zeros.
pub fn normalize_repeats(r: &RepeatsVector) -> Result<ProbVector> {
    let total = r.total();
    if total == 0 {
        return Err(Error::invalid("repeats vector has no annotations"));
    }
    let total = total as f64;
    ProbVector::new(r.counts().iter().map(|&c| c as f64 / total).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledInstance {
    pub features: Vec<f64>,
    pub target: ProbVector,
    /// Raw counts the target was normalized from, when known.
    pub repeats: Option<RepeatsVector>,
    /// Distribution the annotations were sampled from (synthetic data only).
    pub ground_truth: Option<ProbVector>,
}

impl LabeledInstance {
    pub fn new(features: Vec<f64>, target: ProbVector) -> Self {
        LabeledInstance { features, target, repeats: None, ground_truth: None }
    }

    pub fn from_repeats(features: Vec<f64>, repeats: RepeatsVector) -> Result<Self> {
        let target = normalize_repeats(&repeats)?;
        Ok(LabeledInstance { features, target, repeats: Some(repeats), ground_truth: None })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    instances: Vec<LabeledInstance>,
    k: usize,
    d: usize,
}

impl LabeledDataset {
    pub fn new(instances: Vec<LabeledInstance>) -> Result<Self> {
        let first = instances.first().ok_or_else(|| Error::invalid("dataset has no instances"))?;
        let (k, d) = (first.target.k(), first.features.len());
        for inst in &instances {
            if inst.target.k() != k {
                return Err(Error::shape(k, inst.target.k()));
            }
            if inst.features.len() != d {
                return Err(Error::shape(d, inst.features.len()));
            }
            if let Some(r) = &inst.repeats {
                let expected = normalize_repeats(r)?;
                if expected.iter().zip(inst.target.iter()).any(|(a, b)| (a - b).abs() > 1e-12) {
                    return Err(Error::invalid("target disagrees with its repeats"));
                }
            }
        }
        Ok(LabeledDataset { instances, k, d })
    }

    pub fn instances(&self) -> &[LabeledInstance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn targets(&self) -> Vec<ProbVector> {
        self.instances.iter().map(|i| i.target.clone()).collect()
    }

    /// Ground-truth distributions, if every instance carries one.
    pub fn ground_truths(&self) -> Option<Vec<ProbVector>> {
        self.instances.iter().map(|i| i.ground_truth.clone()).collect()
    }

    /// Drops repeats and ground truths, keeping what the file format stores.
    pub fn features_and_targets(&self) -> LabeledDataset {
        let instances = self
            .instances
            .iter()
            .map(|i| LabeledInstance::new(i.features.clone(), i.target.clone()))
            .collect();
        LabeledDataset { instances, k: self.k, d: self.d }
    }
}

/// Parameters of the synthetic crowd.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Number of items.
    pub n: usize,
    /// Feature dimension.
    pub d: usize,
    /// Number of categories.
    pub k: usize,
    /// Annotations drawn per item.
    pub annotators_per_item: usize,
    pub teacher_hidden: usize,
    /// Softmax temperature applied to teacher logits; small values sharpen.
    pub temperature: f64,
    pub seed: u64,
    /// Optional per-category offset added to teacher logits to unbalance classes.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub logit_bias: Vec<f64>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n: 2000,
            d: 20,
            k: 5,
            annotators_per_item: 50,
            teacher_hidden: 32,
            temperature: 0.3,
            seed: 7,
            logit_bias: Vec::new(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n", self.n),
            ("d", self.d),
            ("annotators_per_item", self.annotators_per_item),
            ("teacher_hidden", self.teacher_hidden),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("synthetic.{name} must be positive")));
        }
        if self.k < 2 {
            return Err(Error::Config("synthetic.k must be at least 2".into()));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config("synthetic.temperature must be positive".into()));
        }
        if !self.logit_bias.is_empty() && self.logit_bias.len() != self.k {
            return Err(Error::Config(format!(
                "synthetic.logit_bias has {} entries, expected k = {}",
                self.logit_bias.len(),
                self.k
            )));
        }
        Ok(())
    }
}

fn normal_vec(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| rng.sample::<f64, _>(StandardNormal) * scale).collect()
}

fn draw_category(rng: &mut ChaCha8Rng, dist: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    for (j, &p) in dist.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return j;
        }
    }
    // rounding left u above the final cumulative sum
    dist.iter().rposition(|&p| p > 0.0).unwrap_or(dist.len() - 1)
}

/// Simulates a crowdsourced soft-label dataset. Deterministic in `cfg.seed`.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<LabeledDataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (d, h, k) = (cfg.d, cfg.teacher_hidden, cfg.k);
    let w1 = normal_vec(&mut rng, h * d, 1.0 / (d as f64).sqrt());
    let b1 = normal_vec(&mut rng, h, 0.5);
    let w2 = normal_vec(&mut rng, k * h, 1.0 / (h as f64).sqrt());

    let mut instances = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let x = normal_vec(&mut rng, d, 1.0);
        let hidden: Vec<f64> = (0..h)
            .map(|i| {
                let row = &w1[i * d..(i + 1) * d];
                (row.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>() + b1[i]).tanh()
            })
            .collect();
        let logits: Vec<f64> = (0..k)
            .map(|j| {
                let row = &w2[j * h..(j + 1) * h];
                let bias = cfg.logit_bias.get(j).copied().unwrap_or(0.0);
                (row.iter().zip(&hidden).map(|(w, v)| w * v).sum::<f64>() + bias) / cfg.temperature
            })
            .collect();
        let truth = softmax_slice(&logits);
        let mut counts = vec![0u64; k];
        for _ in 0..cfg.annotators_per_item {
            counts[draw_category(&mut rng, &truth)] += 1;
        }
        let mut inst = LabeledInstance::from_repeats(x, RepeatsVector::new(counts)?)?;
        inst.ground_truth = Some(ProbVector::with_tolerance(truth, 1e-9)?);
        instances.push(inst);
    }
    LabeledDataset::new(instances)
}

/// Seeded shuffle, then the first `floor(n * train_fraction)` instances form the
/// training side.
pub fn split(
    ds: &LabeledDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    let n_train = (ds.len() as f64 * train_fraction).floor() as usize;
    if n_train == 0 || n_train == ds.len() {
        return Err(Error::invalid(format!(
            "splitting {} instances at {train_fraction} leaves one side empty",
            ds.len()
        )));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let pick = |idx: &[usize]| {
        let instances = idx.iter().map(|&i| ds.instances[i].clone()).collect();
        LabeledDataset { instances, k: ds.k, d: ds.d }
    };
    Ok((pick(&order[..n_train]), pick(&order[n_train..])))
}

/// Formats a real with 17 significant digits, enough to round-trip any `f64`.
pub(crate) fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `#meta,d=..,K=..,N=..` followed by one `x_1..x_d,p_1..p_K` row per instance.
/// Repeats and ground truths are not stored.
pub fn save_dataset(ds: &LabeledDataset, path: &Path) -> Result<()> {
    let mut out = format!("#meta,d={},K={},N={}\n", ds.d, ds.k, ds.len());
    for inst in &ds.instances {
        let row: Vec<String> = inst.features.iter().chain(inst.target.iter()).map(|&v| fmt_real(v)).collect();
        writeln!(out, "{}", row.join(",")).expect("writing to a String cannot fail");
    }
    fs::write(path, out)?;
    Ok(())
}

fn parse_meta(line: &str) -> Option<(usize, usize, usize)> {
    let mut fields = line.split(',');
    if fields.next()? != "#meta" {
        return None;
    }
    let mut get = |key: &str| -> Option<usize> { fields.next()?.strip_prefix(key)?.parse().ok() };
    let d = get("d=")?;
    let k = get("K=")?;
    let n = get("N=")?;
    if fields.next().is_some() {
        return None;
    }
    Some((d, k, n))
}

pub fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    let text = fs::read_to_string(path)?;
    let fail = |line: usize, message: String| Error::Format { path: path.to_path_buf(), line, message };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| fail(1, "empty file".into()))?;
    let (d, k, n) = parse_meta(header)
        .ok_or_else(|| fail(1, format!("expected `#meta,d=<d>,K=<K>,N=<N>`, found `{header}`")))?;
    if k < 2 || d == 0 {
        return Err(fail(1, format!("need d >= 1 and K >= 2, found d={d}, K={k}")));
    }
    let mut instances = Vec::with_capacity(n);
    for (line_no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let values = line
            .split(',')
            .map(|f| f.trim().parse::<f64>().map_err(|_| fail(line_no, format!("non-numeric field `{f}`"))))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != d + k {
            return Err(fail(line_no, format!("expected {} fields, found {}", d + k, values.len())));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(fail(line_no, format!("non-finite value {v}")));
        }
        let mut target = values[d..].to_vec();
        let total: f64 = target.iter().sum();
        if (total - 1.0).abs() > LOAD_TOLERANCE {
            return Err(fail(line_no, format!("target sums to {total}, not 1")));
        }
        if (total - 1.0).abs() > crate::simplex::SIMPLEX_TOLERANCE {
            target.iter_mut().for_each(|v| *v /= total);
        }
        let target = ProbVector::with_tolerance(target, LOAD_TOLERANCE)
            .map_err(|e| fail(line_no, e.to_string()))?;
        instances.push(LabeledInstance::new(values[..d].to_vec(), target));
    }
    if instances.len() != n {
        return Err(fail(1, format!("header declares N={n} but file has {} rows", instances.len())));
    }
    LabeledDataset::new(instances).map_err(|e| fail(1, e.to_string()))
}
