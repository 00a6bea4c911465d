//! Two-stage experiment orchestration: cross-validated CNN training on
//! topographic images, DeepSHAP aggregation and channel ranking, then TCN
//! training at each channel budget, plus report emission.

pub mod commands;
mod config;
mod report;
mod split;
mod stages;
mod train;

pub use config::ExperimentConfig;
pub use report::{
    accuracy_csv, map_csv, parse_map_csv, pgm_bytes, summarize, summary_csv, write_report, SubjectArtifacts,
    SummaryRow,
};
pub use split::{fold_seed, stratified_split, stratified_trial_split, Split};
pub use stages::{
    check_channels, cnn_for_fold, fold_attributions, fold_splits, load_subject_windows, preprocess_subject,
    run_stage1, run_stage2, shap_over_folds, tcn_samples, topo_samples, train_cnn_folds, windows_from_trials,
    FoldResult, ShapSummary, Stage, Stage1Output, SubjectWindows,
};
pub use train::{evaluate, make_batches, train_with_early_stopping, EpochStats, Samples, TrainOutcome, TrainSettings};
