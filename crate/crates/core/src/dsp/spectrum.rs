use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Complex spectrum of `x` zero-padded to `n_fft` points.
pub fn spectrum(x: &[f64], n_fft: usize) -> Vec<Complex64> {
    assert!(n_fft >= x.len(), "n_fft shorter than input");
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(n_fft, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n_fft).process(&mut buf);
    buf
}

/// FFT length used for a real frame: the next power of two.
pub fn fft_len(n: usize) -> usize {
    n.next_power_of_two()
}

/// One-sided power spectrum `|X[k]|^2`, `k = 0..=n_fft/2`, with `n_fft` the
/// next power of two at or above the frame length.
pub fn fft_power(x: &[f64]) -> Vec<f64> {
    let n_fft = fft_len(x.len());
    spectrum(x, n_fft)[..=n_fft / 2]
        .iter()
        .map(|c| c.norm_sqr())
        .collect()
}

/// Inclusive bin range `[ceil(lo/df), floor(hi/df)]` of a band.
pub fn band_bins(lo_hz: f64, hi_hz: f64, sample_rate: f64, n_fft: usize) -> (usize, usize) {
    let df = sample_rate / n_fft as f64;
    ((lo_hz / df).ceil() as usize, (hi_hz / df).floor() as usize)
}

/// Mean power over the bins of `[lo_hz, hi_hz]`.
pub fn band_power(x: &[f64], sample_rate: f64, lo_hz: f64, hi_hz: f64) -> f64 {
    let power = fft_power(x);
    let (a, b) = band_bins(lo_hz, hi_hz, sample_rate, fft_len(x.len()));
    power[a..=b].iter().sum::<f64>() / (b - a + 1) as f64
}

pub const ALPHA_BAND: (f64, f64) = (8.0, 14.0);

pub fn alpha_power_of(x: &[f64], sample_rate: f64) -> f64 {
    band_power(x, sample_rate, ALPHA_BAND.0, ALPHA_BAND.1)
}
