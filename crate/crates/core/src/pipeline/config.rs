use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::SynthConfig;
use crate::dsp::PreprocessConfig;
use crate::error::{Error, Result};
use crate::models::DEFAULT_BUDGETS;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    /// Empty means every subject directory found under `data_dir`.
    pub subjects: Vec<String>,
    pub window_seconds: f64,
    pub overlap: f64,
    pub budgets: Vec<usize>,
    pub folds: usize,
    /// Train, validation, test.
    pub split: [f64; 3],
    /// Split whole trials instead of windows.
    pub split_by_trial: bool,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub background_size: usize,
    pub explain_size: usize,
    pub seed: u64,
    pub preprocess: PreprocessConfig,
    /// Number of subjects written by `synth`.
    pub synth_subjects: usize,
    pub synth: SynthConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data_dir: "data".into(),
            out_dir: "out".into(),
            subjects: Vec::new(),
            window_seconds: 10.0,
            overlap: 0.5,
            budgets: DEFAULT_BUDGETS.to_vec(),
            folds: 10,
            split: [0.8, 0.1, 0.1],
            split_by_trial: false,
            learning_rate: 3e-4,
            weight_decay: 3e-4,
            batch_size: 32,
            max_epochs: 200,
            patience: 20,
            background_size: 200,
            explain_size: 100,
            seed: 0,
            preprocess: PreprocessConfig::default(),
            synth_subjects: 1,
            synth: SynthConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.split.iter().any(|f| !(0.0..=1.0).contains(f)) || (self.split.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad(format!("split fractions {:?} must be in [0,1] and sum to 1", self.split));
        }
        if self.budgets.is_empty() || self.budgets.iter().any(|&k| k == 0 || k > 64) {
            return bad(format!("budgets {:?} must lie in 1..=64", self.budgets));
        }
        if self.patience == 0 || self.folds == 0 || self.max_epochs == 0 {
            return bad("patience, folds and max_epochs must be >= 1".into());
        }
        if self.batch_size < 2 {
            return bad("batch size must be >= 2 (BatchNorm)".into());
        }
        if self.background_size == 0 || self.explain_size == 0 {
            return bad("background and explain sizes must be >= 1".into());
        }
        if !(self.window_seconds > 0.0) || !(0.0..1.0).contains(&self.overlap) {
            return bad("window must be positive and overlap in [0, 1)".into());
        }
        if !(self.learning_rate > 0.0) || self.weight_decay < 0.0 {
            return bad("learning rate must be positive, weight decay non-negative".into());
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// SHA-256 of the canonical TOML rendering, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
