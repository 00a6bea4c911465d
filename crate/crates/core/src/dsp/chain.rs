use log::warn;
use serde::{Deserialize, Serialize};

use super::fir::{bandpass_zero_phase, decimate};
use super::preprocess::{regress_out_eog, rereference_mastoids, zscore_per_trial};
use super::signal::Signal;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub decimation: usize,
    pub band_lo_hz: f64,
    pub band_hi_hz: f64,
    pub bandpass_taps: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            decimation: 4,
            band_lo_hz: 1.0,
            band_hi_hz: 45.0,
            bandpass_taps: 513,
        }
    }
}

/// Row indices of each channel kind in a raw recording.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChannelRoles {
    pub eeg: Vec<usize>,
    pub mastoids: (usize, usize),
    pub eog: Vec<usize>,
}

impl ChannelRoles {
    fn check(&self, n: usize) -> Result<()> {
        let all = self
            .eeg
            .iter()
            .chain([&self.mastoids.0, &self.mastoids.1])
            .chain(&self.eog);
        for &i in all {
            if i >= n {
                return Err(Error::Input(format!("channel index {i} out of range for {n} rows")));
            }
        }
        if self.eeg.is_empty() {
            return Err(Error::Input("no EEG channels".into()));
        }
        Ok(())
    }
}

/// Full per-trial chain: decimate, band-pass, EOG regression, mastoid
/// re-reference, keep EEG rows, z-score. Output rows follow `roles.eeg`.
pub fn preprocess_trial(raw: &Signal, roles: &ChannelRoles, cfg: &PreprocessConfig) -> Result<Signal> {
    roles.check(raw.n_channels())?;
    let down = if cfg.decimation > 1 {
        decimate(raw, cfg.decimation)?
    } else {
        raw.clone()
    };
    let filtered = bandpass_zero_phase(&down, cfg.band_lo_hz, cfg.band_hi_hz, cfg.bandpass_taps)?;

    let mut keep = roles.eeg.clone();
    keep.push(roles.mastoids.0);
    keep.push(roles.mastoids.1);
    let scalp = filtered.select(&keep)?;
    let cleaned = if roles.eog.is_empty() {
        scalp
    } else {
        let (s, ridged) = regress_out_eog(&scalp, &filtered.select(&roles.eog)?)?;
        if ridged {
            warn!("EOG covariance near-singular; ridge applied");
        }
        s
    };
    let n_eeg = roles.eeg.len();
    let rereferenced = rereference_mastoids(&cleaned, (n_eeg, n_eeg + 1))?;
    let eeg = rereferenced.select(&(0..n_eeg).collect::<Vec<_>>())?;
    Ok(zscore_per_trial(&eeg)?.0)
}
