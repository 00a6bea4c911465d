//! Synthetic multichannel recordings with planted, lateralised alpha activity.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::eegb::write_trial;
use super::manifest::{ChannelInfo, ChannelRole, SubjectManifest, TrialEntry};
use super::{EOG_NAMES, MASTOID_NAMES};
use crate::dsp::{Label, Signal};
use crate::error::{Error, Result};
use crate::topomap::ElectrodeLayout;

pub const SYNTH_SAMPLE_RATE: f64 = 512.0;
pub const ALPHA_HZ: f64 = 10.0;
pub const EOG_LEAK: f64 = 0.1;
const MASTOID_GAIN: f64 = 0.5;
const BLINK_RATE_HZ: f64 = 0.25;
const BLINK_AMPLITUDE: f64 = 8.0;
const BLINK_WIDTH_S: f64 = 0.08;

pub const DEFAULT_INFORMATIVE: [&str; 8] = ["P7", "P8", "PO7", "PO8", "O1", "O2", "TP7", "TP8"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub subject_id: String,
    pub n_trials: usize,
    pub trial_seconds: f64,
    pub informative: Vec<String>,
    /// Alpha modulation depth, in (0, 1).
    pub depth: f64,
    /// Exponent of the 1/f^a background spectrum.
    pub noise_exponent: f64,
    /// RMS of the unmodulated alpha relative to the unit-RMS background.
    pub snr: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            subject_id: "S01".into(),
            n_trials: 60,
            trial_seconds: 50.0,
            informative: DEFAULT_INFORMATIVE.iter().map(|s| s.to_string()).collect(),
            depth: 0.5,
            noise_exponent: 1.0,
            snr: 1.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn n_samples(&self) -> usize {
        (self.trial_seconds * SYNTH_SAMPLE_RATE).round() as usize
    }

    pub fn validate(&self, layout: &ElectrodeLayout) -> Result<()> {
        if !(self.depth > 0.0 && self.depth < 1.0) {
            return Err(Error::Config(format!("modulation depth {} outside (0, 1)", self.depth)));
        }
        if self.n_trials == 0 || self.n_samples() < 2 {
            return Err(Error::Config("synthetic subject needs at least one non-trivial trial".into()));
        }
        if !(self.snr >= 0.0 && self.noise_exponent.is_finite()) {
            return Err(Error::Config("snr must be >= 0 and the noise exponent finite".into()));
        }
        for name in &self.informative {
            if layout.index_of(name).is_none() {
                return Err(Error::Config(format!("informative channel {name} not in layout")));
            }
        }
        Ok(())
    }
}

/// Trials alternate left, right, left, ...
pub fn trial_label(i: usize) -> Label {
    if i.is_multiple_of(2) {
        Label::Left
    } else {
        Label::Right
    }
}

/// Unit-RMS noise with a 1/f^exponent power spectrum.
pub fn colored_noise(n: usize, exponent: f64, sample_rate: f64, rng: &mut impl Rng) -> Vec<f64> {
    let mut buf: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, z) in buf.iter_mut().enumerate() {
        let bin = k.min(n - k);
        if bin == 0 {
            *z = Complex64::new(0.0, 0.0);
        } else {
            let f = bin as f64 * sample_rate / n as f64;
            *z *= f.powf(-exponent / 2.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let re: Vec<f64> = buf.iter().map(|z| z.re).collect();
    let rms = (re.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    if rms > 0.0 {
        re.into_iter().map(|v| v / rms).collect()
    } else {
        re
    }
}

fn is_frontal(name: &str) -> bool {
    name.starts_with("Fp") || name.starts_with("AF")
}

/// Raw trial `index`: 64 EEG rows in layout order, then M1, M2, EOG1, EOG2.
pub fn synth_trial(cfg: &SynthConfig, layout: &ElectrodeLayout, index: usize) -> Result<(Signal, Label)> {
    cfg.validate(layout)?;
    let n = cfg.n_samples();
    let fs = SYNTH_SAMPLE_RATE;
    let label = trial_label(index);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(
        cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64),
    );

    let mut rows: Vec<Vec<f64>> = (0..layout.len())
        .map(|_| colored_noise(n, cfg.noise_exponent, fs, &mut rng))
        .collect();

    let amp = cfg.snr * std::f64::consts::SQRT_2;
    for name in &cfg.informative {
        let c = layout.index_of(name).expect("validated");
        let v = layout.get(c).position[1];
        let left_side = v > 1e-9;
        let right_side = v < -1e-9;
        let gain = match (label, left_side, right_side) {
            (Label::Left, true, _) | (Label::Right, _, true) => 1.0 + cfg.depth,
            (_, true, _) | (_, _, true) => 1.0 - cfg.depth,
            _ => 1.0,
        };
        let phase: f64 = rng.gen_range(0.0..2.0 * PI);
        for (t, x) in rows[c].iter_mut().enumerate() {
            *x += amp * gain * (2.0 * PI * ALPHA_HZ * t as f64 / fs + phase).sin();
        }
    }

    for _ in MASTOID_NAMES {
        let m = colored_noise(n, cfg.noise_exponent, fs, &mut rng);
        rows.push(m.into_iter().map(|v| MASTOID_GAIN * v).collect());
    }

    let mut blink = vec![0.0; n];
    let n_blinks = (cfg.trial_seconds * BLINK_RATE_HZ).round() as usize;
    let width = BLINK_WIDTH_S * fs;
    for _ in 0..n_blinks {
        let centre = rng.gen_range(0.0..n as f64);
        let lo = (centre - 5.0 * width).max(0.0) as usize;
        let hi = ((centre + 5.0 * width) as usize).min(n);
        for (t, b) in blink.iter_mut().enumerate().take(hi).skip(lo) {
            *b += BLINK_AMPLITUDE * (-0.5 * ((t as f64 - centre) / width).powi(2)).exp();
        }
    }
    let drift: Vec<f64> = colored_noise(n, 2.0, fs, &mut rng).into_iter().map(|v| 2.0 * v).collect();
    let eog1: Vec<f64> = blink.iter().map(|b| b + 0.2 * rng.sample::<f64, _>(StandardNormal)).collect();
    let eog2: Vec<f64> = drift.iter().map(|d| d + 0.2 * rng.sample::<f64, _>(StandardNormal)).collect();

    for (c, e) in layout.electrodes().iter().enumerate() {
        if is_frontal(&e.name) {
            for t in 0..n {
                rows[c][t] += EOG_LEAK * (eog1[t] + eog2[t]);
            }
        }
    }
    rows.push(eog1);
    rows.push(eog2);
    Ok((Signal::new(rows, fs)?, label))
}

pub fn channel_infos(layout: &ElectrodeLayout) -> Vec<ChannelInfo> {
    let eeg = layout.names().into_iter().map(|n| (n, ChannelRole::Eeg));
    let mastoid = MASTOID_NAMES.iter().map(|&n| (n, ChannelRole::Mastoid));
    let eog = EOG_NAMES.iter().map(|&n| (n, ChannelRole::Eog));
    eeg.chain(mastoid)
        .chain(eog)
        .map(|(name, role)| ChannelInfo { name: name.to_string(), role })
        .collect()
}

/// Write `cfg.n_trials` EEGB files plus `manifest.json` into `dir`.
pub fn synth_generate(cfg: &SynthConfig, layout: &ElectrodeLayout, dir: &Path) -> Result<SubjectManifest> {
    cfg.validate(layout)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut trials = Vec::with_capacity(cfg.n_trials);
    for i in 0..cfg.n_trials {
        let (sig, label) = synth_trial(cfg, layout, i)?;
        let file = format!("trial_{i:03}.eegb");
        write_trial(&dir.join(&file), &sig)?;
        trials.push(TrialEntry { file: file.into(), n_samples: sig.n_samples(), label });
    }
    let manifest = SubjectManifest {
        subject_id: cfg.subject_id.clone(),
        sample_rate: SYNTH_SAMPLE_RATE,
        channels: channel_infos(layout),
        trials,
        notes: format!(
            "synthetic; attended-left trials carry stronger {ALPHA_HZ} Hz activity on left-hemisphere planted channels \
             (gain 1+d) and weaker on right-hemisphere ones (1-d), mirrored for attended-right; d={}, planted={}",
            cfg.depth,
            cfg.informative.join(",")
        ),
    };
    manifest.save(dir)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::biosemi64_layout;
    use crate::dsp::band_power;

    #[test]
    fn noise_is_unit_rms_and_pink() {
        let mut r = Xoshiro256PlusPlus::seed_from_u64(3);
        let x = colored_noise(8192, 1.0, 512.0, &mut r);
        let rms = (x.iter().map(|v| v * v).sum::<f64>() / 8192.0).sqrt();
        assert!((rms - 1.0).abs() < 1e-12);
        // mean bin power scales as 1/f: octave 4-8 Hz vs 32-64 Hz is ~8x
        let lo = band_power(&x, 512.0, 4.0, 8.0);
        let hi = band_power(&x, 512.0, 32.0, 64.0);
        assert!((lo / hi) > 5.0 && (lo / hi) < 12.0, "{}", lo / hi);
    }

    #[test]
    fn layout_and_labels() {
        let layout = biosemi64_layout();
        let cfg = SynthConfig { n_trials: 3, trial_seconds: 2.0, ..Default::default() };
        let (sig, label) = synth_trial(&cfg, &layout, 1).unwrap();
        assert_eq!(sig.n_channels(), 68);
        assert_eq!(sig.n_samples(), 1024);
        assert_eq!(label, Label::Right);
        let again = synth_trial(&cfg, &layout, 1).unwrap().0;
        assert_eq!(sig, again);
    }

    #[test]
    fn bad_configs() {
        let layout = biosemi64_layout();
        let bad_depth = SynthConfig { depth: 1.0, ..Default::default() };
        assert!(bad_depth.validate(&layout).is_err());
        let bad_name = SynthConfig { informative: vec!["Q9".into()], ..Default::default() };
        assert!(bad_name.validate(&layout).is_err());
    }
}
