//! Write a synthetic subject (EEGB trials and manifest) to a directory.
//!
//! ```text
//! cargo run --example synth_subject -- data/S01 20
//! ```

use std::path::PathBuf;

use eegsel::data::{biosemi64_layout, synth_generate, SynthConfig};

fn main() -> eegsel::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "data/S01".into()));
    let n_trials = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);
    let cfg = SynthConfig { n_trials, trial_seconds: 15.0, ..Default::default() };
    let manifest = synth_generate(&cfg, &biosemi64_layout(), &dir)?;
    println!("{} trials, {} channels at {} Hz in {}", manifest.trials.len(), manifest.channels.len(), manifest.sample_rate, dir.display());
    println!("{}", manifest.notes);
    Ok(())
}
