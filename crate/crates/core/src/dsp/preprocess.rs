//! Artifact removal, re-referencing, normalisation and windowing.

use log::warn;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::signal::Signal;
use crate::error::{Error, Result};

/// Attended side; also the binary training target (left = 0, right = 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Left,
    Right,
}

impl Label {
    pub fn target(self) -> f64 {
        match self {
            Label::Left => 0.0,
            Label::Right => 1.0,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Regress the EOG channels out of every EEG channel by least squares.
///
/// Returns the cleaned signal and whether the EOG Gram matrix had to be
/// ridge-regularised.
pub fn regress_out_eog(eeg: &Signal, eog: &Signal) -> Result<(Signal, bool)> {
    if eog.n_channels() == 0 {
        return Err(Error::Input("EOG regression needs at least one EOG channel".into()));
    }
    if eeg.n_samples() != eog.n_samples() {
        return Err(Error::Input(format!(
            "EEG has {} samples but EOG has {}",
            eeg.n_samples(),
            eog.n_samples()
        )));
    }
    let k = eog.n_channels();
    let mut gram = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let v: f64 = eog.row(i).iter().zip(eog.row(j)).map(|(a, b)| a * b).sum();
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e.abs())));
    let ridged = lo <= 1e-12 * hi;
    if ridged {
        let ridge = 1e-8 * gram.trace();
        warn!("EOG covariance is rank deficient; adding ridge {ridge:e}");
        for i in 0..k {
            gram[(i, i)] += ridge.max(f64::MIN_POSITIVE);
        }
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Input("EOG Gram matrix is not positive definite".into()))?;
    let rows = eeg
        .rows()
        .iter()
        .map(|x| {
            let rhs = DVector::from_iterator(
                k,
                (0..k).map(|j| x.iter().zip(eog.row(j)).map(|(a, b)| a * b).sum::<f64>()),
            );
            let b = chol.solve(&rhs);
            let mut out = x.clone();
            for j in 0..k {
                for (o, e) in out.iter_mut().zip(eog.row(j)) {
                    *o -= b[j] * e;
                }
            }
            out
        })
        .collect();
    Ok((Signal::new(rows, eeg.sample_rate())?, ridged))
}

/// Subtract the average of the two mastoid channels from every channel.
pub fn rereference_mastoids(sig: &Signal, mastoids: (usize, usize)) -> Result<Signal> {
    let n = sig.n_channels();
    if mastoids.0 >= n || mastoids.1 >= n {
        return Err(Error::Input(format!("mastoid indices {mastoids:?} out of range for {n} channels")));
    }
    let reference: Vec<f64> = sig
        .row(mastoids.0)
        .iter()
        .zip(sig.row(mastoids.1))
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    let rows = sig
        .rows()
        .iter()
        .map(|r| r.iter().zip(&reference).map(|(v, m)| v - m).collect())
        .collect();
    Signal::new(rows, sig.sample_rate())
}

/// Per-channel z-score over the whole trial. Zero-variance channels are only
/// centred; their indices are returned (and logged).
pub fn zscore_per_trial(sig: &Signal) -> Result<(Signal, Vec<usize>)> {
    let mut flat = Vec::new();
    let rows = sig
        .rows()
        .iter()
        .enumerate()
        .map(|(c, r)| {
            let n = r.len() as f64;
            let mean = r.iter().sum::<f64>() / n;
            let centred: Vec<f64> = r.iter().map(|v| v - mean).collect();
            let std = (centred.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
            if std > 0.0 && std.is_finite() {
                centred.into_iter().map(|v| v / std).collect()
            } else {
                flat.push(c);
                vec![0.0; r.len()]
            }
        })
        .collect();
    if !flat.is_empty() {
        warn!("zero-variance channels left centred: {flat:?}");
    }
    Ok((Signal::new(rows, sig.sample_rate())?, flat))
}

/// A labelled, fixed-length segment of one trial (channel-major samples).
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionWindow {
    pub data: Vec<f64>,
    pub n_channels: usize,
    pub n_samples: usize,
    pub label: Label,
    pub trial_id: usize,
    pub subject_id: String,
    pub start_sample: usize,
}

impl DecisionWindow {
    pub fn channel(&self, c: usize) -> &[f64] {
        &self.data[c * self.n_samples..(c + 1) * self.n_samples]
    }

    /// Time-major (samples x selected channels) copy, the TCN input layout.
    pub fn time_major(&self, channels: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_samples * channels.len());
        for t in 0..self.n_samples {
            for &c in channels {
                out.push(self.data[c * self.n_samples + t]);
            }
        }
        out
    }
}

/// Number of samples in a window of `seconds`, which must be a whole number.
pub fn window_samples(seconds: f64, sample_rate: f64) -> Result<usize> {
    let w = seconds * sample_rate;
    if !(w >= 1.0) || (w - w.round()).abs() > 1e-9 {
        return Err(Error::Input(format!(
            "window of {seconds} s is not a whole number of samples at {sample_rate} Hz"
        )));
    }
    Ok(w.round() as usize)
}

/// Hop between consecutive window starts.
pub fn window_hop(window: usize, overlap: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::Input(format!("overlap {overlap} outside [0, 1)")));
    }
    Ok(((window as f64 * (1.0 - overlap)).round() as usize).max(1))
}

/// Cut a trial into windows starting at 0, hop, 2*hop, ... while they fit.
pub fn segment_windows(
    trial: &Signal,
    window_seconds: f64,
    overlap: f64,
    label: Label,
    trial_id: usize,
    subject_id: &str,
) -> Result<Vec<DecisionWindow>> {
    let w = window_samples(window_seconds, trial.sample_rate())?;
    let hop = window_hop(w, overlap)?;
    let len = trial.n_samples();
    if len < w {
        warn!("trial {trial_id} has {len} samples, shorter than one {w}-sample window");
        return Ok(Vec::new());
    }
    let count = (len - w) / hop + 1;
    Ok((0..count)
        .map(|i| {
            let start = i * hop;
            let mut data = Vec::with_capacity(w * trial.n_channels());
            for r in trial.rows() {
                data.extend_from_slice(&r[start..start + w]);
            }
            DecisionWindow {
                data,
                n_channels: trial.n_channels(),
                n_samples: w,
                label,
                trial_id,
                subject_id: subject_id.to_string(),
                start_sample: start,
            }
        })
        .collect())
}
