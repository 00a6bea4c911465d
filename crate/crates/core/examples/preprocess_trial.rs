//! Synthesise one raw trial, run the preprocessing chain and compare alpha
//! power over the two hemispheres.

use eegsel::data::{biosemi64_layout, synth_trial, SynthConfig};
use eegsel::dsp::{alpha_power, preprocess_trial, segment_windows, ChannelRoles, PreprocessConfig};

fn main() -> eegsel::Result<()> {
    let layout = biosemi64_layout();
    let cfg = SynthConfig { trial_seconds: 30.0, ..Default::default() };
    let (raw, label) = synth_trial(&cfg, &layout, 0)?;
    println!("raw: {} channels x {} samples at {} Hz, label {label:?}", raw.n_channels(), raw.n_samples(), raw.sample_rate());

    let roles = ChannelRoles { eeg: (0..64).collect(), mastoids: (64, 65), eog: vec![66, 67] };
    let clean = preprocess_trial(&raw, &roles, &PreprocessConfig::default())?;
    println!("clean: {} channels x {} samples at {} Hz", clean.n_channels(), clean.n_samples(), clean.sample_rate());

    let windows = segment_windows(&clean, 10.0, 0.5, label, 0, &cfg.subject_id)?;
    println!("{} windows of 10 s with 50% overlap", windows.len());
    let power = alpha_power(&windows[0], clean.sample_rate());
    for (l, r) in [("P7", "P8"), ("PO7", "PO8"), ("O1", "O2"), ("C3", "C4")] {
        let p = |n: &str| power[layout.index_of(n).unwrap()];
        println!("{l:>4} {:8.1}   {r:>4} {:8.1}", p(l), p(r));
    }
    Ok(())
}
