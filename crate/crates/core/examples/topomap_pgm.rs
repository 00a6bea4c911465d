//! Render the alpha-power topography of a synthetic window and write it as PGM.
//!
//! ```text
//! cargo run --example topomap_pgm -- topo.pgm
//! ```

use std::fs::File;
use std::io::BufWriter;

use eegsel::data::{biosemi64_layout, synth_trial, SynthConfig};
use eegsel::dsp::{alpha_power, preprocess_trial, segment_windows, ChannelRoles, PreprocessConfig};
use eegsel::topomap::{write_pgm, TopoRenderer, GRID};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "topo.pgm".into());
    let layout = biosemi64_layout();
    let cfg = SynthConfig { trial_seconds: 15.0, ..Default::default() };
    let (raw, label) = synth_trial(&cfg, &layout, 0)?;
    let roles = ChannelRoles { eeg: (0..64).collect(), mastoids: (64, 65), eog: vec![66, 67] };
    let clean = preprocess_trial(&raw, &roles, &PreprocessConfig::default())?;
    let window = &segment_windows(&clean, 10.0, 0.5, label, 0, "S01")?[0];

    let renderer = TopoRenderer::new(&layout)?;
    let image = renderer.render(&alpha_power(window, clean.sample_rate()))?;
    let mut w = BufWriter::new(File::create(&path)?);
    write_pgm(&mut w, &image.pixels, GRID, GRID)?;
    println!("{label:?} window -> {path}");
    for i in (0..GRID).step_by(2) {
        let line: String = (0..GRID)
            .map(|j| match (image.mask[i * GRID + j], image.at(i, j)) {
                (false, _) => ' ',
                (true, v) if v > 1.0 => '#',
                (true, v) if v > 0.0 => '+',
                _ => '.',
            })
            .collect();
        println!("{line}");
    }
    Ok(())
}
