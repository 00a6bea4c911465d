//! EEG channel selection for auditory attention detection.
//!
//! Multichannel EEG is turned into alpha-power scalp images, a small CNN is
//! trained on them, DeepSHAP attributions rank the electrodes, and a compact
//! dilated TCN is trained on the raw signals of the top-k channels only.

pub mod attribution;
pub mod data;
pub mod dsp;
pub mod error;
pub mod models;
pub mod nn;
pub mod pipeline;
pub mod topomap;

pub use error::{Error, Result};
