//! On-disk trial format, subject manifests, the bundled BioSemi-64 layout
//! and the synthetic recording generator.

mod eegb;
mod manifest;
mod synth;

pub use eegb::{decode_trial, encode_trial, read_trial, write_trial};
pub use manifest::{ChannelInfo, ChannelRole, SubjectManifest, TrialEntry, MANIFEST_FILE};
pub use synth::{
    channel_infos, colored_noise, synth_generate, synth_trial, trial_label, SynthConfig,
    ALPHA_HZ, DEFAULT_INFORMATIVE, EOG_LEAK, SYNTH_SAMPLE_RATE,
};

use crate::topomap::ElectrodeLayout;

pub const MASTOID_NAMES: [&str; 2] = ["M1", "M2"];
pub const EOG_NAMES: [&str; 2] = ["EOG1", "EOG2"];

const BIOSEMI64: &str = include_str!("../../assets/biosemi64.txt");

/// The standard 64-electrode BioSemi cap.
pub fn biosemi64_layout() -> ElectrodeLayout {
    ElectrodeLayout::parse(BIOSEMI64).expect("bundled layout table is valid")
}
