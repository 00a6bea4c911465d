//! The whole two-stage pipeline on a small synthetic cohort, driven through
//! the same file-backed steps as the command-line tool.
//!
//! ```text
//! cargo run --release --example pipeline_quick -- /tmp/eegsel-quick
//! ```

use std::path::PathBuf;

use eegsel::data::SynthConfig;
use eegsel::pipeline::{commands, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "quick".into()));
    let cfg = ExperimentConfig {
        data_dir: root.join("data"),
        out_dir: root.join("out"),
        budgets: vec![64, 16, 8],
        folds: 2,
        batch_size: 8,
        max_epochs: 3,
        patience: 3,
        background_size: 32,
        explain_size: 12,
        synth: SynthConfig { n_trials: 30, trial_seconds: 15.0, ..Default::default() },
        ..Default::default()
    };
    for path in commands::all(&cfg)? {
        println!("{}", path.display());
    }
    print!("{}", std::fs::read_to_string(commands::report_dir(&cfg).join("summary.csv"))?);
    Ok(())
}
