//! Windowed-sinc FIR design and the two ways the preprocessing chain applies it.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::signal::Signal;
use crate::error::{Error, Result};

/// Linear-phase FIR filter (odd length, symmetric taps).
#[derive(Clone, Debug, PartialEq)]
pub struct FirFilter {
    taps: Vec<f64>,
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn hamming(n: usize, len: usize) -> f64 {
    0.54 - 0.46 * (2.0 * PI * n as f64 / (len - 1) as f64).cos()
}

impl FirFilter {
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Delay of the causal filter in samples.
    pub fn group_delay(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    /// Magnitude of the frequency response at `freq_hz`.
    pub fn gain(&self, freq_hz: f64, sample_rate: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / sample_rate;
        let (mut re, mut im) = (0.0, 0.0);
        for (n, h) in self.taps.iter().enumerate() {
            re += h * (w * n as f64).cos();
            im -= h * (w * n as f64).sin();
        }
        re.hypot(im)
    }
}

/// Hamming-windowed sinc low-pass, normalised to unit DC gain.
pub fn design_lowpass(cutoff_hz: f64, taps: usize, sample_rate: f64) -> Result<FirFilter> {
    if !(cutoff_hz > 0.0 && cutoff_hz < sample_rate / 2.0) {
        return Err(Error::Input(format!(
            "low-pass cutoff {cutoff_hz} Hz must lie in (0, {})",
            sample_rate / 2.0
        )));
    }
    if taps.is_multiple_of(2) || taps < 3 {
        return Err(Error::Input(format!("FIR length must be odd and >= 3, got {taps}")));
    }
    let fc = cutoff_hz / sample_rate;
    let mid = (taps - 1) / 2;
    // Build one half and mirror it so the taps are exactly symmetric.
    let mut h = vec![0.0; taps];
    for n in 0..=mid {
        let v = 2.0 * fc * sinc(2.0 * fc * (n as f64 - mid as f64)) * hamming(n, taps);
        h[n] = v;
        h[taps - 1 - n] = v;
    }
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= sum);
    Ok(FirFilter { taps: h })
}

/// Band-pass as the difference of two unit-DC low-passes.
pub fn design_bandpass(lo_hz: f64, hi_hz: f64, taps: usize, sample_rate: f64) -> Result<FirFilter> {
    if !(lo_hz < hi_hz) {
        return Err(Error::Input(format!("band-pass edges out of order: {lo_hz} >= {hi_hz}")));
    }
    let hi = design_lowpass(hi_hz, taps, sample_rate)?;
    let lo = design_lowpass(lo_hz, taps, sample_rate)?;
    Ok(FirFilter {
        taps: hi.taps.iter().zip(&lo.taps).map(|(a, b)| a - b).collect(),
    })
}

/// Mirror-extend by `pad` samples on each side without repeating the edge sample.
fn reflect_pad(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n + 2 * pad);
    out.extend((1..=pad).rev().map(|i| x[i]));
    out.extend_from_slice(x);
    out.extend((0..pad).map(|i| x[n - 2 - i]));
    out
}

/// Point-symmetric extension about the edge samples; keeps value and slope
/// continuous, which matters for filters that pass DC.
fn odd_reflect_pad(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n + 2 * pad);
    let (first, last) = (x[0], x[n - 1]);
    out.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
    out.extend_from_slice(x);
    out.extend((0..pad).map(|i| 2.0 * last - x[n - 2 - i]));
    out
}

/// Causal convolution, output the same length as the input (zero initial state).
fn causal(taps: &[f64], x: &[f64]) -> Vec<f64> {
    if taps.len() > 64 {
        return causal_fft(taps, x);
    }
    let mut y = vec![0.0; x.len()];
    for (n, out) in y.iter_mut().enumerate() {
        let kmax = taps.len().min(n + 1);
        let mut acc = 0.0;
        for k in 0..kmax {
            acc += taps[k] * x[n - k];
        }
        *out = acc;
    }
    y
}

fn causal_fft(taps: &[f64], x: &[f64]) -> Vec<f64> {
    let n = (x.len() + taps.len() - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let lift = |v: &[f64]| {
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (b, &s) in buf.iter_mut().zip(v) {
            b.re = s;
        }
        buf
    };
    let mut a = lift(x);
    let mut b = lift(taps);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (p, q) in a.iter_mut().zip(&b) {
        *p *= q;
    }
    inv.process(&mut a);
    let scale = 1.0 / n as f64;
    a[..x.len()].iter().map(|z| z.re * scale).collect()
}

/// Forward-backward filtering of one row with reflection padding of `filter.len()`.
pub fn filtfilt(filter: &FirFilter, x: &[f64]) -> Result<Vec<f64>> {
    let pad = filter.len();
    if x.len() < 3 * pad {
        return Err(Error::Input(format!(
            "signal of {} samples is shorter than 3x the filter length {pad}",
            x.len()
        )));
    }
    let ext = reflect_pad(x, pad);
    let mut y = causal(&filter.taps, &ext);
    y.reverse();
    let mut y = causal(&filter.taps, &y);
    y.reverse();
    Ok(y[pad..pad + x.len()].to_vec())
}

/// Zero-phase band-pass of every channel.
pub fn bandpass_zero_phase(sig: &Signal, lo_hz: f64, hi_hz: f64, taps: usize) -> Result<Signal> {
    let fs = sig.sample_rate();
    if !(hi_hz < fs / 2.0) {
        return Err(Error::Input(format!("upper edge {hi_hz} Hz is not below Nyquist {}", fs / 2.0)));
    }
    let filter = design_bandpass(lo_hz, hi_hz, taps, fs)?;
    let rows = sig
        .rows()
        .iter()
        .map(|r| filtfilt(&filter, r))
        .collect::<Result<Vec<_>>>()?;
    Signal::new(rows, fs)
}

/// Anti-aliased integer downsampling: centred (delay-compensated) low-pass
/// at `0.4 * fs / factor`, then every `factor`-th sample.
pub fn decimate(sig: &Signal, factor: usize) -> Result<Signal> {
    let fs = sig.sample_rate();
    if factor == 0 || (fs / factor as f64).fract() != 0.0 || fs.fract() != 0.0 {
        return Err(Error::Input(format!("sample rate {fs} is not divisible by {factor}")));
    }
    if factor == 1 {
        return Ok(sig.clone());
    }
    let out_rate = fs / factor as f64;
    let filter = design_lowpass(0.4 * out_rate, 32 * factor - 1, fs)?;
    let delay = filter.group_delay();
    let rows = sig
        .rows()
        .iter()
        .map(|x| {
            if x.len() <= delay {
                return Err(Error::Input(format!(
                    "signal of {} samples too short to decimate",
                    x.len()
                )));
            }
            let ext = odd_reflect_pad(x, delay);
            Ok((0..x.len())
                .step_by(factor)
                .map(|n| {
                    // output n is centred on ext[n + delay]
                    filter
                        .taps
                        .iter()
                        .enumerate()
                        .map(|(k, h)| h * ext[n + 2 * delay - k])
                        .sum()
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Signal::new(rows, out_rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_convolution_matches_direct() {
        let taps: Vec<f64> = (0..101).map(|i| ((i * 13 % 7) as f64 - 3.0) / 10.0).collect();
        let x: Vec<f64> = (0..500).map(|i| (i as f64 * 0.37).sin()).collect();
        let fast = causal_fft(&taps, &x);
        for (n, f) in fast.iter().enumerate() {
            let direct: f64 = (0..taps.len().min(n + 1)).map(|k| taps[k] * x[n - k]).sum();
            assert!((f - direct).abs() < 1e-12);
        }
    }

    fn sine(freq: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (2.0 * PI * freq * i as f64 / fs).sin()).collect()
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn lowpass_unit_dc_and_symmetric() {
        for (fc, n, fs) in [(51.2, 127, 512.0), (10.0, 31, 100.0), (45.0, 513, 128.0)] {
            let f = design_lowpass(fc, n, fs).unwrap();
            assert!((f.taps().iter().sum::<f64>() - 1.0).abs() <= 1e-6);
            for i in 0..n {
                assert_eq!(f.taps()[i], f.taps()[n - 1 - i]);
            }
        }
    }

    #[test]
    fn lowpass_minus_6db_at_cutoff() {
        let f = design_lowpass(51.2, 127, 512.0).unwrap();
        let g = f.gain(51.2, 512.0);
        assert!((g - 0.5).abs() < 0.05, "gain at cutoff {g}");
    }

    #[test]
    fn lowpass_stopband_at_64hz() {
        let f = design_lowpass(51.2, 127, 512.0).unwrap();
        let db = 20.0 * f.gain(64.0, 512.0).log10();
        assert!(db <= -40.0, "attenuation {db} dB");
    }

    #[test]
    fn lowpass_rejects_bad_parameters() {
        assert!(design_lowpass(300.0, 127, 512.0).is_err());
        assert!(design_lowpass(0.0, 127, 512.0).is_err());
        assert!(design_lowpass(50.0, 128, 512.0).is_err());
    }

    #[test]
    fn decimate_lengths_and_dc() {
        let sig = Signal::new(vec![vec![3.25; 6400]], 512.0).unwrap();
        let out = decimate(&sig, 4).unwrap();
        assert_eq!(out.n_samples(), 1600);
        assert_eq!(out.sample_rate(), 128.0);
        assert!(out.row(0).iter().all(|v| (v - 3.25).abs() <= 1e-9));
        assert!(decimate(&Signal::new(vec![vec![0.0; 100]], 500.0).unwrap(), 3).is_err());
    }

    #[test]
    fn decimate_suppresses_70hz() {
        let x = sine(70.0, 512.0, 6400);
        let out = decimate(&Signal::new(vec![x.clone()], 512.0).unwrap(), 4).unwrap();
        assert!(rms(out.row(0)) <= 0.01 * rms(&x), "ratio {}", rms(out.row(0)) / rms(&x));
    }

    #[test]
    fn bandpass_probes() {
        let fs = 128.0;
        let n = 7680;
        let run = |x: Vec<f64>| {
            let s = Signal::new(vec![x], fs).unwrap();
            bandpass_zero_phase(&s, 1.0, 45.0, 513).unwrap().into_rows().remove(0)
        };
        let ten = sine(10.0, fs, n);
        let amp_ratio = rms(&run(ten.clone())) / rms(&ten);
        assert!((amp_ratio - 1.0).abs() <= 0.02, "10 Hz ratio {amp_ratio}");
        let sixty = sine(60.0, fs, n);
        assert!(rms(&run(sixty.clone())) <= 0.01 * rms(&sixty));
        let slow = sine(0.1, fs, n);
        assert!(rms(&run(slow.clone())) <= 0.01 * rms(&slow));
    }

    #[test]
    fn bandpass_removes_ramp_mean() {
        let n = 3000;
        let ramp: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let s = Signal::new(vec![ramp], 128.0).unwrap();
        let y = bandpass_zero_phase(&s, 1.0, 45.0, 513).unwrap();
        let mean = y.row(0).iter().sum::<f64>() / n as f64;
        assert!(mean.abs() <= 0.01, "mean {mean}");
    }

    #[test]
    fn bandpass_is_zero_phase() {
        // band-limited probe: sum of in-band sines
        let fs = 128.0;
        let n = 4096;
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                (2.0 * PI * 7.0 * t).sin() + 0.5 * (2.0 * PI * 13.0 * t + 0.3).sin()
            })
            .collect();
        let y = bandpass_zero_phase(&Signal::new(vec![x.clone()], fs).unwrap(), 1.0, 45.0, 513)
            .unwrap()
            .into_rows()
            .remove(0);
        let xcorr = |lag: isize| -> f64 {
            (1000..n - 1000)
                .map(|i| x[i] * y[(i as isize + lag) as usize])
                .sum()
        };
        let best = (-5..=5).max_by(|&a, &b| xcorr(a).total_cmp(&xcorr(b))).unwrap();
        assert_eq!(best, 0);
    }

    #[test]
    fn short_signal_rejected() {
        let s = Signal::new(vec![vec![0.0; 1000]], 128.0).unwrap();
        assert!(matches!(bandpass_zero_phase(&s, 1.0, 45.0, 513), Err(Error::Input(_))));
    }
}
