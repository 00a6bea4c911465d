use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::eegb::read_trial;
use crate::dsp::{ChannelRoles, Label};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelRole {
    Eeg,
    Mastoid,
    Eog,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelInfo {
    pub name: String,
    pub role: ChannelRole,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialEntry {
    /// Relative to the manifest's directory.
    pub file: PathBuf,
    pub n_samples: usize,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectManifest {
    pub subject_id: String,
    pub sample_rate: f64,
    pub channels: Vec<ChannelInfo>,
    pub trials: Vec<TrialEntry>,
    #[serde(default)]
    pub notes: String,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl SubjectManifest {
    pub fn validate(&self) -> Result<()> {
        if self.trials.is_empty() {
            return Err(Error::Input(format!("subject {} has no trials", self.subject_id)));
        }
        let left = self.trials.iter().filter(|t| t.label == Label::Left).count();
        let right = self.trials.len() - left;
        if left.abs_diff(right) > 1 {
            return Err(Error::Input(format!(
                "subject {}: labels unbalanced ({left} left, {right} right)",
                self.subject_id
            )));
        }
        Ok(())
    }

    pub fn channel_names(&self, role: ChannelRole) -> Vec<&str> {
        self.channels.iter().filter(|c| c.role == role).map(|c| c.name.as_str()).collect()
    }

    pub fn roles(&self) -> Result<ChannelRoles> {
        let idx = |role| -> Vec<usize> {
            self.channels.iter().enumerate().filter(|(_, c)| c.role == role).map(|(i, _)| i).collect()
        };
        let m = idx(ChannelRole::Mastoid);
        if m.len() != 2 {
            return Err(Error::Input(format!("expected 2 mastoid channels, found {}", m.len())));
        }
        Ok(ChannelRoles {
            eeg: idx(ChannelRole::Eeg),
            mastoids: (m[0], m[1]),
            eog: idx(ChannelRole::Eog),
        })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: Self = serde_json::from_str(&text)?;
        m.validate()?;
        Ok(m)
    }

    /// Every listed trial exists and has the declared dimensions.
    pub fn check_files(&self, dir: &Path) -> Result<()> {
        for t in &self.trials {
            let sig = read_trial(&dir.join(&t.file))?;
            if sig.n_channels() != self.channels.len() || sig.n_samples() != t.n_samples {
                return Err(Error::Input(format!(
                    "{}: file is {}x{}, manifest declares {}x{}",
                    t.file.display(),
                    sig.n_channels(),
                    sig.n_samples(),
                    self.channels.len(),
                    t.n_samples
                )));
            }
        }
        Ok(())
    }
}
