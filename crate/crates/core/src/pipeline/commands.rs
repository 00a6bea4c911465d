//! File-backed steps behind the command-line subcommands. Each step reads the
//! previous step's outputs from the experiment's output directory.
//!
//! ```text
//! <data_dir>/<subject>/            raw EEGB trials + manifest.json
//! <out_dir>/prep/<subject>/        preprocessed trials + manifest.json
//! <out_dir>/stage1/<subject>/      cnn_fold<k>.nets, cnn_results.json,
//!                                  global_shap.csv, shap_counts.json, ranking.csv
//! <out_dir>/stage2/<subject>/      tcn_results.json
//! <out_dir>/report/                CSV + PGM artifacts
//! <out_dir>/journal.txt            one line per command
//! ```

use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use log::info;

use super::config::ExperimentConfig;
use super::report::{map_csv, parse_map_csv, write_report, SubjectArtifacts};
use super::stages::{
    cnn_for_fold, fold_splits, load_subject_windows, preprocess_subject, run_stage2, shap_over_folds,
    topo_samples, train_cnn_folds, FoldResult, SubjectWindows,
};
use crate::attribution::{rank_channels, ChannelRanking};
use crate::data::{biosemi64_layout, synth_generate, SynthConfig, MANIFEST_FILE};
use crate::dsp::alpha_power;
use crate::error::{Error, Result};
use crate::models::{complexity_csv, complexity_table};
use crate::nn::{Mode, Network};
use crate::topomap::TopoRenderer;

pub fn prep_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out_dir.join("prep")
}

pub fn stage1_dir(cfg: &ExperimentConfig, subject: &str) -> PathBuf {
    cfg.out_dir.join("stage1").join(subject)
}

pub fn stage2_dir(cfg: &ExperimentConfig, subject: &str) -> PathBuf {
    cfg.out_dir.join("stage2").join(subject)
}

pub fn report_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out_dir.join("report")
}

fn mkdir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

fn read_text(p: &Path) -> Result<String> {
    fs::read_to_string(p).map_err(|e| Error::io(p, e))
}

fn write_text(p: &Path, text: &str) -> Result<()> {
    fs::write(p, text).map_err(|e| Error::io(p, e))
}

/// Configured subjects, or every directory under `base` holding a manifest.
pub fn subjects_in(cfg: &ExperimentConfig, base: &Path) -> Result<Vec<String>> {
    if !cfg.subjects.is_empty() {
        return Ok(cfg.subjects.clone());
    }
    let mut found = Vec::new();
    for entry in fs::read_dir(base).map_err(|e| Error::io(base, e))? {
        let entry = entry.map_err(|e| Error::io(base, e))?;
        if entry.path().join(MANIFEST_FILE).is_file() {
            found.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    found.sort();
    if found.is_empty() {
        return Err(Error::Input(format!("no subject directories under {}", base.display())));
    }
    Ok(found)
}

/// Append a line with the command, config hash and seed to the run journal.
pub fn journal(cfg: &ExperimentConfig, command: &str, note: &str) -> Result<()> {
    mkdir(&cfg.out_dir)?;
    let path = cfg.out_dir.join("journal.txt");
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|e| Error::io(&path, e))?;
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    writeln!(f, "{now} {command} config_sha256={} seed={} {note}", cfg.hash(), cfg.seed).map_err(|e| Error::io(&path, e))
}

pub fn synth(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let layout = biosemi64_layout();
    let mut ids = Vec::new();
    for i in 0..cfg.synth_subjects {
        let sc = SynthConfig {
            subject_id: format!("S{:02}", i + 1),
            seed: cfg.synth.seed.wrapping_add(i as u64),
            ..cfg.synth.clone()
        };
        let dir = cfg.data_dir.join(&sc.subject_id);
        synth_generate(&sc, &layout, &dir)?;
        info!("wrote {} trials to {}", sc.n_trials, dir.display());
        ids.push(sc.subject_id);
    }
    Ok(ids)
}

pub fn preprocess(cfg: &ExperimentConfig) -> Result<()> {
    for s in subjects_in(cfg, &cfg.data_dir)? {
        let m = preprocess_subject(&cfg.data_dir.join(&s), &prep_dir(cfg).join(&s), &cfg.preprocess)?;
        info!("{s}: preprocessed {} trials at {} Hz", m.trials.len(), m.sample_rate);
    }
    Ok(())
}

fn load_windows(cfg: &ExperimentConfig, subject: &str) -> Result<SubjectWindows> {
    load_subject_windows(&prep_dir(cfg).join(subject), cfg.window_seconds, cfg.overlap)
}

fn save_results(path: &Path, results: &[FoldResult]) -> Result<()> {
    write_text(path, &serde_json::to_string_pretty(results)?)
}

fn load_results(path: &Path) -> Result<Vec<FoldResult>> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

pub fn train_cnn(cfg: &ExperimentConfig) -> Result<()> {
    let layout = biosemi64_layout();
    let renderer = TopoRenderer::new(&layout)?;
    for s in subjects_in(cfg, &prep_dir(cfg))? {
        let subject = load_windows(cfg, &s)?;
        let images = topo_samples(&subject, &renderer)?;
        let splits = fold_splits(cfg, &subject.windows)?;
        let dir = stage1_dir(cfg, &s);
        mkdir(&dir)?;
        let mut results = Vec::new();
        for (f, (net, result)) in train_cnn_folds(cfg, &s, &images, &splits)?.into_iter().enumerate() {
            let path = dir.join(format!("cnn_fold{f}.nets"));
            let mut w = BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
            net.write_state(&mut w).map_err(|e| Error::io(&path, e))?;
            results.push(result);
        }
        save_results(&dir.join("cnn_results.json"), &results)?;
    }
    Ok(())
}

fn load_cnns(cfg: &ExperimentConfig, subject: &str) -> Result<Vec<Network>> {
    let dir = stage1_dir(cfg, subject);
    (0..cfg.folds)
        .map(|f| {
            let path = dir.join(format!("cnn_fold{f}.nets"));
            let mut net = cnn_for_fold(cfg, f);
            let mut r = BufReader::new(File::open(&path).map_err(|e| Error::io(&path, e))?);
            net.read_state(&mut r)?;
            net.set_mode(Mode::Eval);
            Ok(net)
        })
        .collect()
}

pub fn shap(cfg: &ExperimentConfig) -> Result<()> {
    let layout = biosemi64_layout();
    let renderer = TopoRenderer::new(&layout)?;
    for s in subjects_in(cfg, &prep_dir(cfg))? {
        let subject = load_windows(cfg, &s)?;
        let images = topo_samples(&subject, &renderer)?;
        let splits = fold_splits(cfg, &subject.windows)?;
        let nets = load_cnns(cfg, &s)?;
        let summary = shap_over_folds(cfg, &nets, &images, &splits)?;
        let dir = stage1_dir(cfg, &s);
        write_text(&dir.join("global_shap.csv"), &map_csv(&summary.global_map))?;
        write_text(&dir.join("shap_counts.json"), &serde_json::to_string(&summary.maps_per_fold)?)?;
        info!("{s}: aggregated {} attribution maps", summary.maps_per_fold.iter().sum::<usize>());
    }
    Ok(())
}

pub fn select(cfg: &ExperimentConfig) -> Result<()> {
    let layout = biosemi64_layout();
    let renderer = TopoRenderer::new(&layout)?;
    for s in subjects_in(cfg, &prep_dir(cfg))? {
        let dir = stage1_dir(cfg, &s);
        let global = parse_map_csv(&read_text(&dir.join("global_shap.csv"))?)?;
        let ranking = rank_channels(&global, &layout, renderer.mask())?;
        let mut buf = Vec::new();
        ranking.write_csv(&mut buf).map_err(|e| Error::io(&dir, e))?;
        fs::write(dir.join("ranking.csv"), buf).map_err(|e| Error::io(&dir, e))?;
        let top: Vec<&str> = ranking.entries().iter().take(8).map(|e| e.name.as_str()).collect();
        info!("{s}: top channels {top:?}");
    }
    Ok(())
}

fn load_ranking(cfg: &ExperimentConfig, subject: &str) -> Result<ChannelRanking> {
    ChannelRanking::read_csv(&read_text(&stage1_dir(cfg, subject).join("ranking.csv"))?, &biosemi64_layout())
}

pub fn train_tcn(cfg: &ExperimentConfig) -> Result<()> {
    for s in subjects_in(cfg, &prep_dir(cfg))? {
        let subject = load_windows(cfg, &s)?;
        let ranking = load_ranking(cfg, &s)?;
        let results = run_stage2(cfg, &subject, &ranking)?;
        let dir = stage2_dir(cfg, &s);
        mkdir(&dir)?;
        save_results(&dir.join("tcn_results.json"), &results)?;
    }
    Ok(())
}

/// The complexity table for the configured budgets at the configured window length.
pub fn complexity(cfg: &ExperimentConfig) -> Result<String> {
    let steps = (cfg.window_seconds * 128.0).round() as usize;
    Ok(complexity_csv(&complexity_table(&cfg.budgets, steps)?))
}

pub fn report(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let layout = biosemi64_layout();
    let renderer = TopoRenderer::new(&layout)?;
    let mut results = Vec::new();
    let mut subjects = Vec::new();
    for s in subjects_in(cfg, &prep_dir(cfg))? {
        results.extend(load_results(&stage1_dir(cfg, &s).join("cnn_results.json"))?);
        results.extend(load_results(&stage2_dir(cfg, &s).join("tcn_results.json"))?);
        let windows = load_windows(cfg, &s)?;
        let first = windows
            .windows
            .first()
            .ok_or_else(|| Error::Input(format!("{s} has no windows")))?;
        subjects.push(SubjectArtifacts {
            ranking: load_ranking(cfg, &s)?,
            global_map: parse_map_csv(&read_text(&stage1_dir(cfg, &s).join("global_shap.csv"))?)?,
            example_image: renderer.render(&alpha_power(first, windows.sample_rate))?.pixels,
            subject: s,
        });
    }
    let steps = (cfg.window_seconds * 128.0).round() as usize;
    write_report(&report_dir(cfg), &results, &subjects, &complexity_table(&cfg.budgets, steps)?)
}

/// Every step from preprocessing to the report (synthesising data first when
/// `data_dir` holds no subjects).
pub fn all(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    if subjects_in(cfg, &cfg.data_dir).is_err() {
        synth(cfg)?;
    }
    preprocess(cfg)?;
    train_cnn(cfg)?;
    shap(cfg)?;
    select(cfg)?;
    train_tcn(cfg)?;
    report(cfg)
}
