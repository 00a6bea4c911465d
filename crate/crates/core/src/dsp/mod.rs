//! EEG preprocessing: anti-aliased downsampling, zero-phase band-pass, EOG
//! regression, mastoid re-referencing, per-trial z-scoring, windowing and
//! FFT band power.

mod chain;
mod fir;
mod preprocess;
mod signal;
mod spectrum;

pub use chain::{preprocess_trial, ChannelRoles, PreprocessConfig};
pub use fir::{bandpass_zero_phase, decimate, design_bandpass, design_lowpass, filtfilt, FirFilter};
pub use preprocess::{
    regress_out_eog, rereference_mastoids, segment_windows, window_hop, window_samples,
    zscore_per_trial, DecisionWindow, Label,
};
pub use signal::Signal;
pub use spectrum::{
    alpha_power_of, band_bins, band_power, fft_len, fft_power, spectrum, ALPHA_BAND,
};

/// Alpha-band (8-14 Hz) power of every channel of a window.
pub fn alpha_power(window: &DecisionWindow, sample_rate: f64) -> Vec<f64> {
    (0..window.n_channels)
        .map(|c| alpha_power_of(window.channel(c), sample_rate))
        .collect()
}
