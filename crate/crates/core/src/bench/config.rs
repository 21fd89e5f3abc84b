use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::SynthConfig;
use crate::divergence::LossId;
use crate::error::{Error, Result};
use crate::trainer::TrainConfig;

/// Where the sweep's data comes from: exactly one of `synthetic` or `path`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSource {
    pub synthetic: Option<SynthConfig>,
    pub path: Option<PathBuf>,
}

fn default_repetitions() -> usize {
    4
}

fn default_threshold() -> f64 {
    0.05
}

fn default_train_fraction() -> f64 {
    0.7
}

fn default_workers() -> usize {
    1
}

fn default_losses() -> Vec<LossId> {
    LossId::ALL.to_vec()
}

/// A loss-comparison sweep, as read from a TOML file.
///
/// ```toml
/// output_dir = "out/desk"
/// repetitions = 4
///
/// [data.synthetic]
/// n = 2000
/// d = 20
/// k = 5
/// annotators_per_item = 50
/// teacher_hidden = 32
/// temperature = 0.3
/// seed = 7
///
/// [train]
/// hidden_sizes = [64]
/// epochs = 20
/// batch_size = 128
/// seed = 1
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSource,
    /// Template for every cell; its `loss` is replaced per cell.
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_losses")]
    pub losses: Vec<LossId>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    /// Use `train.seed` for every repetition instead of `train.seed + r`.
    #[serde(default)]
    pub fixed_seed: bool,
    #[serde(default = "default_threshold")]
    pub convergence_threshold: f64,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.data.synthetic, &self.data.path) {
            (Some(s), None) => s.validate()?,
            (None, Some(_)) => {}
            _ => return Err(Error::Config("set exactly one of data.synthetic or data.path".into())),
        }
        self.train.validate()?;
        if self.losses.is_empty() {
            return Err(Error::Config("losses must not be empty".into()));
        }
        let mut seen = self.losses.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.losses.len() {
            return Err(Error::Config("losses contains duplicates".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if !(self.convergence_threshold > 0.0) {
            return Err(Error::Config("convergence_threshold must be positive".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config("train_fraction must lie in (0, 1)".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn seed_for(&self, repetition: usize) -> u64 {
        if self.fixed_seed {
            self.train.seed
        } else {
            self.train.seed.wrapping_add(repetition as u64)
        }
    }
}

/// Reads a bare synthetic-data config (the fields of [`SynthConfig`] at top level).
pub fn load_synth_config(path: &Path) -> Result<SynthConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg: SynthConfig = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
output_dir = "out"
[data.synthetic]
n = 100
d = 4
k = 3
annotators_per_item = 10
teacher_hidden = 8
temperature = 0.5
seed = 1
"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.losses.len(), 9);
        assert_eq!(cfg.repetitions, 4);
        assert_eq!(cfg.convergence_threshold, 0.05);
        assert_eq!(cfg.train.batch_size, 128);
        assert_eq!(cfg.train.epochs, 20);
        assert_eq!(cfg.seed_for(2), 2);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let text = format!("{MINIMAL}\n[train]\nlearnin_rate = 0.1\n");
        assert!(matches!(ExperimentConfig::from_toml_str(&text), Err(Error::Config(_))));
        let text = MINIMAL.replace("seed = 1", "seed = 1\nnoise = 2");
        assert!(matches!(ExperimentConfig::from_toml_str(&text), Err(Error::Config(_))));
        let text = format!("colour = 1\n{MINIMAL}");
        assert!(matches!(ExperimentConfig::from_toml_str(&text), Err(Error::Config(_))));
    }

    #[test]
    fn loss_names_parse() {
        let text = format!("losses = [\"forward_kl\", \"itakura_saito\"]\n{MINIMAL}");
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg.losses, vec![LossId::ForwardKl, LossId::ItakuraSaito]);
        let text = format!("losses = [\"kl\"]\n{MINIMAL}");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn data_source_must_be_unique() {
        let text = MINIMAL.replace("[data.synthetic]", "[data]\npath = \"x.csv\"\n[data.synthetic]");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
        assert!(ExperimentConfig::from_toml_str("output_dir = \"o\"\n[data]\n").is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        for (from, to) in [("n = 100", "n = 0"), ("temperature = 0.5", "temperature = -1.0")] {
            assert!(ExperimentConfig::from_toml_str(&MINIMAL.replace(from, to)).is_err());
        }
        assert!(ExperimentConfig::from_toml_str(&format!("repetitions = 0\n{MINIMAL}")).is_err());
        assert!(ExperimentConfig::from_toml_str(&format!("losses = []\n{MINIMAL}")).is_err());
    }
}
