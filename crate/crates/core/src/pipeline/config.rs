use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frozen_clip::DEFAULT_TAU;
use crate::ftcp::FtcpConfig;
use crate::gtcp::{DEFAULT_ALPHA, DEFAULT_BETA};
use crate::prompting::{PromptMode, DEFAULT_MAX_LEN};

/// Shape of the generated few-shot task used when no dataset files are given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticTaskSpec {
    pub classes: usize,
    pub test_per_class: usize,
    /// Std of the per-dimension class means in image space.
    pub cluster_spread: f64,
    /// Std of samples around their class mean.
    pub cluster_std: f64,
    /// Class-unique neighbors reached by the signal relation.
    pub signal_per_class: usize,
    /// Neighbors reached by the noise relation, drawn from a pool shared by all classes.
    pub noise_per_class: usize,
    /// Distractor entities added to the noise pool next to the class traits.
    pub noise_pool: usize,
}

impl Default for SyntheticTaskSpec {
    fn default() -> Self {
        Self {
            classes: 5,
            test_per_class: 40,
            cluster_spread: 1.0,
            cluster_std: 1.0,
            signal_per_class: 2,
            noise_per_class: 4,
            noise_pool: 6,
        }
    }
}

impl SyntheticTaskSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::Parameter(format!(
                "need at least two classes, got {}",
                self.classes
            )));
        }
        if self.test_per_class == 0 {
            return Err(Error::Parameter("test_per_class must be positive".into()));
        }
        if !(self.cluster_spread > 0.0) || !(self.cluster_std >= 0.0) {
            return Err(Error::Parameter(
                "cluster spread must be positive and std nonnegative".into(),
            ));
        }
        if self.noise_per_class > 0 && self.noise_pool + self.classes * self.signal_per_class == 0 {
            return Err(Error::Parameter("noise neighbors need a nonempty pool".into()));
        }
        Ok(())
    }
}

/// Files for a non-synthetic run. Relative paths resolve against the config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub kg: PathBuf,
    pub labels: PathBuf,
    pub train: PathBuf,
    pub test: PathBuf,
    pub vocab: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub shots: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: usize,
    pub gamma: f64,
    pub tau: f64,
    pub pi: f64,
    pub epsilon: f64,
    pub mode: PromptMode,
    /// Number of learnable context rows.
    pub context_len: usize,
    pub d_g: usize,
    pub d_tok: usize,
    pub d_emb: usize,
    pub d_img: usize,
    pub gnn_layers: usize,
    pub max_len: usize,
    pub data: Option<DataPaths>,
    pub synthetic: SyntheticTaskSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            shots: 4,
            batch_size: 10,
            epochs: 200,
            learning_rate: 0.003,
            lambda: 1.0,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            gamma: 1.0,
            tau: DEFAULT_TAU,
            pi: 0.1,
            epsilon: 1.0,
            mode: PromptMode::LabelSpecific,
            context_len: 4,
            d_g: 8,
            d_tok: 16,
            d_emb: 16,
            d_img: 16,
            gnn_layers: 1,
            max_len: DEFAULT_MAX_LEN,
            data: None,
            synthetic: SyntheticTaskSpec::default(),
        }
    }
}

const SHOTS: [usize; 5] = [1, 2, 4, 8, 16];

impl ExperimentConfig {
    pub fn ftcp(&self) -> FtcpConfig {
        FtcpConfig {
            epsilon: self.epsilon,
            pi: self.pi,
            gamma: self.gamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !SHOTS.contains(&self.shots) {
            return bad(format!("shots must be one of {SHOTS:?}, got {}", self.shots));
        }
        for (name, v) in [
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
            ("beta", self.beta),
            ("context_len", self.context_len),
            ("d_g", self.d_g),
            ("d_tok", self.d_tok),
            ("d_emb", self.d_emb),
            ("d_img", self.d_img),
            ("gnn_layers", self.gnn_layers),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        for (name, v) in [
            ("learning_rate", self.learning_rate),
            ("tau", self.tau),
            ("pi", self.pi),
            ("epsilon", self.epsilon),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.lambda >= 0.0) || !(self.gamma >= 0.0) {
            return bad("lambda and gamma must be nonnegative".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.epochs < self.beta {
            return bad(format!(
                "epochs ({}) must be at least beta ({})",
                self.epochs, self.beta
            ));
        }
        if self.data.is_none() {
            self.synthetic.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a TOML config; data paths become relative to its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if let (Some(data), Some(dir)) = (cfg.data.as_mut(), path.parent()) {
            for p in [&mut data.kg, &mut data.labels, &mut data.train, &mut data.test] {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
            if let Some(v) = data.vocab.as_mut() {
                if v.is_relative() {
                    *v = dir.join(&*v);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}
