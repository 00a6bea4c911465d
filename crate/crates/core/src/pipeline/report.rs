use std::fs;
use std::path::{Path, PathBuf};

use super::stages::{FoldResult, Stage};
use crate::attribution::ChannelRanking;
use crate::error::{Error, Result};
use crate::models::{complexity_csv, ComplexityRow};
use crate::topomap::{write_pgm, GRID};

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub budget: usize,
    pub mean: f64,
    /// Sample standard deviation over subject-folds (0 for a single fold).
    pub std: f64,
    pub n: usize,
}

/// TCN accuracy per budget, budgets in order of first appearance.
pub fn summarize(results: &[FoldResult]) -> Vec<SummaryRow> {
    let mut budgets: Vec<usize> = Vec::new();
    for r in results.iter().filter(|r| r.stage == Stage::Tcn) {
        if !budgets.contains(&r.budget) {
            budgets.push(r.budget);
        }
    }
    budgets
        .into_iter()
        .map(|k| {
            let acc: Vec<f64> = results
                .iter()
                .filter(|r| r.stage == Stage::Tcn && r.budget == k)
                .map(|r| r.test_accuracy)
                .collect();
            let n = acc.len();
            let mean = acc.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                (acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            SummaryRow { budget: k, mean, std, n }
        })
        .collect()
}

pub fn accuracy_csv(results: &[FoldResult], stage: Stage) -> String {
    let mut out = String::from("subject,budget,fold,accuracy\n");
    for r in results.iter().filter(|r| r.stage == stage) {
        out.push_str(&format!("{},{},{},{:.6}\n", r.subject, r.budget, r.fold, r.test_accuracy));
    }
    out
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("budget,mean,std\n");
    for r in rows {
        out.push_str(&format!("{},{:.6},{:.6}\n", r.budget, r.mean, r.std));
    }
    out
}

/// A 32x32 map as 32 comma-separated rows.
pub fn map_csv(map: &[f64]) -> String {
    map.chunks(GRID)
        .map(|row| row.iter().map(|v| format!("{v:.12e}")).collect::<Vec<_>>().join(",") + "\n")
        .collect()
}

pub fn parse_map_csv(text: &str) -> Result<Vec<f64>> {
    let vals = text
        .split([',', '\n'])
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Input(format!("bad map value {s:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if vals.len() != GRID * GRID {
        return Err(Error::Input(format!("map has {} values, expected {}", vals.len(), GRID * GRID)));
    }
    Ok(vals)
}

pub fn pgm_bytes(map: &[f64]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_pgm(&mut buf, map, GRID, GRID).expect("in-memory write");
    buf
}

/// Per-subject inputs for the report.
#[derive(Clone, Debug)]
pub struct SubjectArtifacts {
    pub subject: String,
    pub ranking: ChannelRanking,
    pub global_map: Vec<f64>,
    pub example_image: Vec<f64>,
}

fn put(path: PathBuf, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Write every report artifact under `dir`; returns the files written.
pub fn write_report(
    dir: &Path,
    results: &[FoldResult],
    subjects: &[SubjectArtifacts],
    complexity: &[ComplexityRow],
) -> Result<Vec<PathBuf>> {
    if results.is_empty() {
        return Err(Error::Input("nothing to report".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    put(dir.join("accuracy.csv"), accuracy_csv(results, Stage::Tcn).as_bytes(), &mut written)?;
    put(dir.join("cnn_accuracy.csv"), accuracy_csv(results, Stage::Cnn).as_bytes(), &mut written)?;
    put(dir.join("summary.csv"), summary_csv(&summarize(results)).as_bytes(), &mut written)?;
    put(dir.join("complexity.csv"), complexity_csv(complexity).as_bytes(), &mut written)?;
    let flagged: Vec<String> = results
        .iter()
        .filter(|r| r.flagged)
        .map(|r| format!("{},{:?},{},{}", r.subject, r.stage, r.budget, r.fold))
        .collect();
    put(
        dir.join("flagged.csv"),
        (String::from("subject,stage,budget,fold\n") + &flagged.iter().map(|l| l.to_lowercase() + "\n").collect::<String>())
            .as_bytes(),
        &mut written,
    )?;
    for s in subjects {
        let sub = dir.join(&s.subject);
        fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
        let mut ranking = Vec::new();
        s.ranking.write_csv(&mut ranking).map_err(|e| Error::io(&sub, e))?;
        put(sub.join("ranking.csv"), &ranking, &mut written)?;
        put(sub.join("global_shap.csv"), map_csv(&s.global_map).as_bytes(), &mut written)?;
        put(sub.join("global_shap.pgm"), &pgm_bytes(&s.global_map), &mut written)?;
        put(sub.join("topo_example.pgm"), &pgm_bytes(&s.example_image), &mut written)?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(budget: usize, fold: usize, acc: f64) -> FoldResult {
        FoldResult {
            subject: "S01".into(),
            fold,
            stage: Stage::Tcn,
            budget,
            test_accuracy: acc,
            n_test: 10,
            epochs_trained: 3,
            best_epoch: 2,
            flagged: false,
            history: Vec::new(),
        }
    }

    #[test]
    fn one_summary_row_per_budget() {
        let rs = vec![result(64, 0, 0.9), result(64, 1, 0.8), result(8, 0, 0.7), result(8, 1, 0.7)];
        let s = summarize(&rs);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].budget, 64);
        assert!((s[0].mean - 0.85).abs() < 1e-12);
        assert!((s[0].std - (0.005f64).sqrt()).abs() < 1e-12);
        assert_eq!(s[1].std, 0.0);
        let csv = summary_csv(&s);
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn map_csv_round_trip() {
        let m: Vec<f64> = (0..GRID * GRID).map(|i| (i as f64).sqrt() - 3.0).collect();
        let back = parse_map_csv(&map_csv(&m)).unwrap();
        for (a, b) in m.iter().zip(&back) {
            assert!((a - b).abs() <= 1e-11 * a.abs().max(1.0));
        }
    }
}
