//! The two experiment stages: image CNN + DeepSHAP channel ranking, then
//! TCN training on the top-ranked channels.

use std::fs;
use std::path::Path;

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::split::{fold_seed, stratified_split, stratified_trial_split, Split};
use super::train::{evaluate, train_with_early_stopping, EpochStats, Samples, TrainSettings};
use crate::attribution::{global_importance, rank_channels, ChannelRanking, DeepShapExplainer};
use crate::data::{read_trial, write_trial, ChannelInfo, ChannelRole, SubjectManifest, TrialEntry};
use crate::dsp::{alpha_power, preprocess_trial, segment_windows, DecisionWindow, Label, PreprocessConfig, Signal};
use crate::error::{Error, Result};
use crate::models::{build_cnn, build_tcn, IMAGE_SIZE};
use crate::nn::{Network, Tensor};
use crate::topomap::{ElectrodeLayout, TopoRenderer};

// stream tags mixed into per-fold seeds
const SPLIT_STREAM: u64 = 0x5EED_0001;
const CNN_INIT_STREAM: u64 = 0x5EED_0002;
const CNN_TRAIN_STREAM: u64 = 0x5EED_0003;
const BACKGROUND_STREAM: u64 = 0x5EED_0004;
const TCN_INIT_STREAM: u64 = 0x5EED_0005;
const TCN_TRAIN_STREAM: u64 = 0x5EED_0006;

fn seed_for(cfg: &ExperimentConfig, stream: u64, fold: usize) -> u64 {
    fold_seed(cfg.seed ^ stream, fold)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Cnn,
    Tcn,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub subject: String,
    pub fold: usize,
    pub stage: Stage,
    /// Number of EEG channels the model saw.
    pub budget: usize,
    pub test_accuracy: f64,
    pub n_test: usize,
    pub epochs_trained: usize,
    pub best_epoch: usize,
    /// Best validation accuracy did not exceed chance.
    pub flagged: bool,
    pub history: Vec<EpochStats>,
}

/// Preprocessed, windowed recordings of one subject.
#[derive(Clone, Debug)]
pub struct SubjectWindows {
    pub subject_id: String,
    pub sample_rate: f64,
    pub channel_names: Vec<String>,
    pub windows: Vec<DecisionWindow>,
}

impl SubjectWindows {
    pub fn labels(&self) -> Vec<Label> {
        self.windows.iter().map(|w| w.label).collect()
    }
}

/// Run the preprocessing chain on every trial of a raw subject directory and
/// write 64-channel EEGB trials plus a manifest into `out_dir`.
pub fn preprocess_subject(raw_dir: &Path, out_dir: &Path, cfg: &PreprocessConfig) -> Result<SubjectManifest> {
    let raw = SubjectManifest::load(raw_dir)?;
    let roles = raw.roles()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut trials = Vec::new();
    let mut fs_out = raw.sample_rate;
    for t in &raw.trials {
        let sig = read_trial(&raw_dir.join(&t.file))?;
        let clean = preprocess_trial(&sig, &roles, cfg)?;
        fs_out = clean.sample_rate();
        write_trial(&out_dir.join(&t.file), &clean)?;
        trials.push(TrialEntry { file: t.file.clone(), n_samples: clean.n_samples(), label: t.label });
    }
    let manifest = SubjectManifest {
        subject_id: raw.subject_id.clone(),
        sample_rate: fs_out,
        channels: roles
            .eeg
            .iter()
            .map(|&i| ChannelInfo { name: raw.channels[i].name.clone(), role: ChannelRole::Eeg })
            .collect(),
        trials,
        notes: format!("preprocessed; source notes: {}", raw.notes),
    };
    manifest.save(out_dir)?;
    Ok(manifest)
}

/// Cut preprocessed trials into labelled decision windows.
pub fn windows_from_trials(
    subject_id: &str,
    trials: &[(Signal, Label)],
    window_seconds: f64,
    overlap: f64,
) -> Result<Vec<DecisionWindow>> {
    let mut out = Vec::new();
    for (i, (sig, label)) in trials.iter().enumerate() {
        out.extend(segment_windows(sig, window_seconds, overlap, *label, i, subject_id)?);
    }
    Ok(out)
}

pub fn load_subject_windows(prep_dir: &Path, window_seconds: f64, overlap: f64) -> Result<SubjectWindows> {
    let m = SubjectManifest::load(prep_dir)?;
    m.check_files(prep_dir)?;
    let trials = m
        .trials
        .iter()
        .map(|t| Ok((read_trial(&prep_dir.join(&t.file))?, t.label)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SubjectWindows {
        windows: windows_from_trials(&m.subject_id, &trials, window_seconds, overlap)?,
        subject_id: m.subject_id,
        sample_rate: m.sample_rate,
        channel_names: m.channels.into_iter().map(|c| c.name).collect(),
    })
}

/// Check the subject's channels follow the electrode layout order.
pub fn check_channels(subject: &SubjectWindows, layout: &ElectrodeLayout) -> Result<()> {
    let names = layout.names();
    if subject.channel_names.len() != names.len()
        || subject.channel_names.iter().zip(&names).any(|(a, b)| !a.eq_ignore_ascii_case(b))
    {
        return Err(Error::Input(format!(
            "subject {} channels do not match the {}-electrode layout",
            subject.subject_id,
            names.len()
        )));
    }
    Ok(())
}

/// One split per fold, all derived from the experiment seed.
pub fn fold_splits(cfg: &ExperimentConfig, windows: &[DecisionWindow]) -> Result<Vec<Split>> {
    let labels: Vec<Label> = windows.iter().map(|w| w.label).collect();
    let trial_ids: Vec<usize> = windows.iter().map(|w| w.trial_id).collect();
    (0..cfg.folds)
        .map(|f| {
            let seed = seed_for(cfg, SPLIT_STREAM, f);
            let s = if cfg.split_by_trial {
                stratified_trial_split(&labels, &trial_ids, cfg.split, seed)?
            } else {
                stratified_split(&labels, cfg.split, seed)?
            };
            if s.train.len() < 2 || s.val.is_empty() || s.test.is_empty() {
                return Err(Error::Input(format!(
                    "fold {f}: split {}/{}/{} leaves an empty subset",
                    s.train.len(),
                    s.val.len(),
                    s.test.len()
                )));
            }
            Ok(s)
        })
        .collect()
}

/// Alpha-power topographic image of every window, shape `(1, 32, 32)`.
pub fn topo_samples(subject: &SubjectWindows, renderer: &TopoRenderer) -> Result<Samples> {
    let mut s = Samples::new(vec![1, IMAGE_SIZE, IMAGE_SIZE]);
    for w in &subject.windows {
        let img = renderer.render(&alpha_power(w, subject.sample_rate))?;
        s.push(&img.pixels, w.label.target())?;
    }
    Ok(s)
}

/// Time-major windows restricted to `channels`, shape `(T, k)`.
pub fn tcn_samples(subject: &SubjectWindows, channels: &[usize]) -> Result<Samples> {
    let t = subject.windows.first().map(|w| w.n_samples).unwrap_or(0);
    let mut s = Samples::new(vec![t, channels.len()]);
    for w in &subject.windows {
        s.push(&w.time_major(channels), w.label.target())?;
    }
    Ok(s)
}

fn settings(cfg: &ExperimentConfig, seed: u64) -> TrainSettings {
    TrainSettings {
        learning_rate: cfg.learning_rate,
        weight_decay: cfg.weight_decay,
        batch_size: cfg.batch_size,
        max_epochs: cfg.max_epochs,
        patience: cfg.patience,
        seed,
    }
}

#[allow(clippy::too_many_arguments)]
fn fit_fold(
    cfg: &ExperimentConfig,
    subject: &str,
    stage: Stage,
    budget: usize,
    fold: usize,
    net: Network,
    data: &Samples,
    split: &Split,
    train_seed: u64,
) -> Result<(Network, FoldResult)> {
    let out = train_with_early_stopping(net, data, &split.train, &split.val, &settings(cfg, train_seed))?;
    let (_, test_accuracy) = evaluate(&out.net, data, &split.test, cfg.batch_size)?;
    let flagged = out.best().val_accuracy <= 0.5;
    if flagged {
        warn!("{subject} {stage:?} k={budget} fold {fold}: validation accuracy never beat chance");
    }
    info!(
        "{subject} {stage:?} k={budget} fold {fold}: test accuracy {test_accuracy:.4} after {} epochs (best {})",
        out.epochs_trained, out.best_epoch
    );
    let result = FoldResult {
        subject: subject.to_string(),
        fold,
        stage,
        budget,
        test_accuracy,
        n_test: split.test.len(),
        epochs_trained: out.epochs_trained,
        best_epoch: out.best_epoch,
        flagged,
        history: out.history,
    };
    Ok((out.net, result))
}

/// Fresh CNN for fold `fold` (also used to rebuild saved networks).
pub fn cnn_for_fold(cfg: &ExperimentConfig, fold: usize) -> Network {
    build_cnn(seed_for(cfg, CNN_INIT_STREAM, fold))
}

pub fn train_cnn_folds(
    cfg: &ExperimentConfig,
    subject: &str,
    images: &Samples,
    splits: &[Split],
) -> Result<Vec<(Network, FoldResult)>> {
    splits
        .iter()
        .enumerate()
        .map(|(f, split)| {
            let seed = seed_for(cfg, CNN_TRAIN_STREAM, f);
            fit_fold(cfg, subject, Stage::Cnn, 64, f, cnn_for_fold(cfg, f), images, split, seed)
        })
        .collect()
}

/// Attribution maps of one fold: `min(explain_size, |test|)` test images
/// against `min(background_size, |train|)` seeded training backgrounds.
pub fn fold_attributions(
    cfg: &ExperimentConfig,
    fold: usize,
    net: &Network,
    images: &Samples,
    split: &Split,
) -> Result<Vec<Vec<f64>>> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed_for(cfg, BACKGROUND_STREAM, fold));
    let mut pool = split.train.clone();
    pool.shuffle(&mut rng);
    pool.truncate(cfg.background_size);
    let (backgrounds, _) = images.batch(&pool)?;
    let mut explainer = DeepShapExplainer::new(net, &backgrounds)?;
    split
        .test
        .iter()
        .take(cfg.explain_size)
        .map(|&i| {
            let x = Tensor::new([&[1][..], images.sample_shape()].concat(), images.sample(i).to_vec())?;
            Ok(explainer.attribute(&x)?.into_data())
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct ShapSummary {
    pub global_map: Vec<f64>,
    pub maps_per_fold: Vec<usize>,
}

pub fn shap_over_folds(cfg: &ExperimentConfig, nets: &[Network], images: &Samples, splits: &[Split]) -> Result<ShapSummary> {
    let mut all = Vec::new();
    let mut counts = Vec::new();
    for (f, (net, split)) in nets.iter().zip(splits).enumerate() {
        let maps = fold_attributions(cfg, f, net, images, split)?;
        counts.push(maps.len());
        all.extend(maps);
    }
    Ok(ShapSummary {
        global_map: global_importance(all.iter().map(|m| m.as_slice()))?,
        maps_per_fold: counts,
    })
}

#[derive(Clone, Debug)]
pub struct Stage1Output {
    pub folds: Vec<FoldResult>,
    pub nets: Vec<Network>,
    pub shap: ShapSummary,
    pub ranking: ChannelRanking,
}

pub fn run_stage1(cfg: &ExperimentConfig, subject: &SubjectWindows, layout: &ElectrodeLayout) -> Result<Stage1Output> {
    check_channels(subject, layout)?;
    let renderer = TopoRenderer::new(layout)?;
    let images = topo_samples(subject, &renderer)?;
    let splits = fold_splits(cfg, &subject.windows)?;
    let (nets, folds): (Vec<_>, Vec<_>) = train_cnn_folds(cfg, &subject.subject_id, &images, &splits)?.into_iter().unzip();
    let shap = shap_over_folds(cfg, &nets, &images, &splits)?;
    let ranking = rank_channels(&shap.global_map, layout, renderer.mask())?;
    Ok(Stage1Output { folds, nets, shap, ranking })
}

/// Train and test a TCN per (budget, fold) on the top-k ranked channels,
/// reusing the stage-1 splits.
pub fn run_stage2(cfg: &ExperimentConfig, subject: &SubjectWindows, ranking: &ChannelRanking) -> Result<Vec<FoldResult>> {
    let splits = fold_splits(cfg, &subject.windows)?;
    let mut results = Vec::new();
    for &k in &cfg.budgets {
        let channels = ranking.top_indices(k)?;
        let data = tcn_samples(subject, &channels)?;
        for (f, split) in splits.iter().enumerate() {
            let net = build_tcn(k, seed_for(cfg, TCN_INIT_STREAM, f))?;
            let seed = seed_for(cfg, TCN_TRAIN_STREAM, f);
            results.push(fit_fold(cfg, &subject.subject_id, Stage::Tcn, k, f, net, &data, split, seed)?.1);
        }
    }
    Ok(results)
}
