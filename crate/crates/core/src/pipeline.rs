//! File-level stages: each reads the previous stage's artifact and writes
//! its own, embedding the resolved configuration (minus paths) and the
//! upstream configuration chain.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::classifier::{KernelConfig, KernelKind, ModelFile};
use crate::error::{EntryError, Error, Result};
use crate::eval::{
    evaluate_protocol, format_percent, run_protocol, train_protocol, ConfusionMatrix, CvSummary,
    EvaluationReport, ProtocolConfig,
};
use crate::features::{
    read_feature_matrix, write_feature_matrix, FeatureConfig, FeatureExtractor, FeatureMatrix,
};
use crate::ingest::{build_dataset, write_recording, ManifestEntry, ManifestStage, SessionManifest};
use crate::preprocess::{preprocess_trial, PreprocessConfig};
use crate::synth::{generate_dataset, SynthConfig};
use crate::types::{FeatureRow, Trial};

/// Resolved settings for every stage after synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct PipelineConfig {
    pub preprocess: PreprocessConfig,
    pub features: FeatureConfig,
    pub protocol: ProtocolConfig,
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn base_dir(manifest_path: &Path) -> PathBuf {
    manifest_path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn pretty(v: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// `# config: {...}` line prepended to text and CSV outputs.
fn config_header(config: &Value) -> Result<String> {
    Ok(format!("# config: {}\n", serde_json::to_string(config)?))
}

/// Preprocesses every trial, keeping manifest order and collecting all
/// failures.
fn preprocess_all(trials: &[Trial], entries: &[ManifestEntry], cfg: &PreprocessConfig) -> Result<Vec<Trial>> {
    let results: Vec<Result<Trial>> = trials.par_iter().map(|t| preprocess_trial(t, cfg)).collect();
    collect_entries(results, entries)
}

fn collect_entries<T>(results: Vec<Result<T>>, entries: &[ManifestEntry]) -> Result<Vec<T>> {
    let mut ok = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, (r, e)) in results.into_iter().zip(entries).enumerate() {
        match r {
            Ok(v) => ok.push(v),
            Err(err) => failures.push(EntryError {
                entry: i,
                subject_id: e.subject_id.clone(),
                video_id: e.video_id.clone(),
                message: err.to_string(),
            }),
        }
    }
    if failures.is_empty() {
        Ok(ok)
    } else {
        Err(Error::Dataset(failures))
    }
}

pub fn synth_stage(cfg: &SynthConfig, out_dir: &Path) -> Result<SessionManifest> {
    generate_dataset(cfg, out_dir)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestSummary {
    pub trials: usize,
    pub imputed_cells: usize,
    pub manifest: PathBuf,
}

/// Truncates, imputes and smooths every trial of a raw manifest into
/// `out_dir/trials/` and writes a preprocessed manifest next to them.
pub fn ingest_stage(manifest_path: &Path, out_dir: &Path, cfg: &PreprocessConfig) -> Result<IngestSummary> {
    cfg.savgol.validate()?;
    let manifest = SessionManifest::load(manifest_path)?;
    if manifest.stage != ManifestStage::Raw {
        return Err(Error::Config("ingest expects a raw manifest".into()));
    }
    let dataset = build_dataset(&manifest, &base_dir(manifest_path))?;
    let imputed_cells = dataset.items.iter().map(|t| t.recording.missing_count()).sum();
    let trials = preprocess_all(&dataset.items, &manifest.entries, cfg)?;

    let trial_dir = out_dir.join("trials");
    fs::create_dir_all(&trial_dir).map_err(|e| Error::io(&trial_dir, e))?;
    let entries = trials
        .par_iter()
        .zip(&manifest.entries)
        .enumerate()
        .map(|(i, (t, e))| {
            let rel = PathBuf::from("trials").join(format!("{:04}_{}_{}.csv", i, e.subject_id, e.video_id));
            let path = out_dir.join(&rel);
            fs::write(&path, write_recording(&t.recording)).map_err(|err| Error::io(&path, err))?;
            Ok(ManifestEntry { onset: 0, recording: rel, ..e.clone() })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = SessionManifest::new(ManifestStage::Preprocessed, manifest.provenance.clone(), entries);
    out.config = Some(json!({
        "stage": "ingest",
        "preprocess": cfg,
        "imputed_cells": imputed_cells,
        "upstream": manifest.config,
    }));
    let path = out_dir.join("manifest.json");
    write_file(&path, &out.to_json()?)?;
    Ok(IngestSummary { trials: trials.len(), imputed_cells, manifest: path })
}

/// Extracts one feature row per trial. Raw manifests are preprocessed with
/// `pre` first; preprocessed manifests must have been produced with the
/// same `pre`.
pub fn features_stage(
    manifest_path: &Path,
    out_file: &Path,
    pre: &PreprocessConfig,
    feat: &FeatureConfig,
) -> Result<FeatureMatrix> {
    pre.savgol.validate()?;
    feat.welch.validate()?;
    let manifest = SessionManifest::load(manifest_path)?;
    let dataset = build_dataset(&manifest, &base_dir(manifest_path))?;
    let trials = match manifest.stage {
        ManifestStage::Raw => preprocess_all(&dataset.items, &manifest.entries, pre)?,
        ManifestStage::Preprocessed => {
            let upstream = manifest.config.as_ref().and_then(|c| c.get("preprocess"));
            if upstream != Some(&serde_json::to_value(pre)?) {
                return Err(Error::Config(
                    "preprocessed manifest was produced with different preprocessing settings".into(),
                ));
            }
            dataset.items
        }
    };
    let fs_hz = trials[0].recording.sample_rate_hz;
    let extractor = FeatureExtractor::new(*feat, fs_hz)?;
    let results: Vec<Result<FeatureRow>> = trials
        .par_iter()
        .map(|t| {
            Ok(FeatureRow {
                features: extractor.extract(t)?,
                label: t.label,
                subject_id: t.recording.subject_id.clone(),
            })
        })
        .collect();
    let rows = collect_entries(results, &manifest.entries)?;

    let matrix = FeatureMatrix {
        provenance: manifest.provenance.clone(),
        config: json!({
            "stage": "features",
            "preprocess": pre,
            "features": feat,
            "sample_rate_hz": fs_hz,
            "upstream": manifest.config,
        }),
        rows,
    };
    write_file(out_file, &write_feature_matrix(&matrix)?)?;
    Ok(matrix)
}

pub fn load_features(path: &Path) -> Result<FeatureMatrix> {
    read_feature_matrix(&read_file(path)?)
}

fn train_config(matrix: &FeatureMatrix, protocol: &ProtocolConfig, cv: &CvSummary) -> Value {
    json!({
        "stage": "train",
        "provenance": matrix.provenance,
        "protocol": protocol,
        "cv": cv,
        "upstream": matrix.config,
    })
}

fn cv_text(cv: &CvSummary, protocol: &ProtocolConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "kernel: {}  C: {}  folds: {}  seed: {}", protocol.kernel.kind, protocol.smo.c, protocol.folds, protocol.seed);
    let _ = writeln!(s, "train/test: {}/{}", cv.train_size, cv.test_size);
    for (i, a) in cv.fold_accuracies.iter().enumerate() {
        let mark = if i == cv.best_fold { "  (best)" } else { "" };
        let _ = writeln!(s, "fold {:>2}: {}{mark}", i + 1, format_percent(*a));
    }
    let _ = writeln!(s, "average accuracy across {} folds: {}", protocol.folds, format_percent(cv.mean_accuracy));
    let _ = writeln!(s, "maximum accuracy on the best fold: {}", format_percent(cv.best_fold_accuracy));
    s
}

/// Cross-validates on the training split and writes `model.json`,
/// `cv_report.txt` and `cv_report.json` into `out_dir`.
pub fn train_stage(features_path: &Path, out_dir: &Path, protocol: &ProtocolConfig) -> Result<ModelFile> {
    let matrix = load_features(features_path)?;
    let trained = train_protocol(&matrix.rows, protocol)?;
    let config = train_config(&matrix, protocol, &trained.cv);
    let file = ModelFile::new(trained.model, config.clone());
    write_file(&out_dir.join("model.json"), &file.to_json()?)?;
    write_file(
        &out_dir.join("cv_report.txt"),
        &(config_header(&config)? + &cv_text(&trained.cv, protocol)),
    )?;
    write_file(&out_dir.join("cv_report.json"), &pretty(&json!({ "config": config, "cv": trained.cv }))?)?;
    Ok(file)
}

fn write_report_files(out_dir: &Path, config: &Value, report: &EvaluationReport) -> Result<()> {
    write_file(&out_dir.join("report.txt"), &(config_header(config)? + &report.to_text()))?;
    write_file(&out_dir.join("report.json"), &pretty(&json!({ "config": config, "report": report }))?)?;
    write_file(&out_dir.join("confusion.csv"), &(config_header(config)? + &report.confusion.to_csv()))
}

/// Scores a trained model on the test split of the feature matrix it was
/// trained from; writes `report.txt`, `report.json` and `confusion.csv`.
pub fn evaluate_stage(features_path: &Path, model_path: &Path, out_dir: &Path) -> Result<EvaluationReport> {
    let matrix = load_features(features_path)?;
    let file = ModelFile::load(model_path)?;
    let protocol: ProtocolConfig = serde_json::from_value(
        file.config.get("protocol").cloned().ok_or_else(|| Error::Format("model file lacks protocol config".into()))?,
    )?;
    let cv: CvSummary = serde_json::from_value(
        file.config.get("cv").cloned().ok_or_else(|| Error::Format("model file lacks cv summary".into()))?,
    )?;
    if cv.train_size + cv.test_size != matrix.rows.len() {
        return Err(Error::Config(format!(
            "model was trained on {} rows, feature matrix has {}",
            cv.train_size + cv.test_size,
            matrix.rows.len()
        )));
    }
    let report = evaluate_protocol(&matrix.rows, &file.model, &protocol, cv)?;
    let config = json!({
        "stage": "evaluate",
        "provenance": matrix.provenance,
        "protocol": protocol,
        "upstream": file.config,
    });
    write_report_files(out_dir, &config, &report)?;
    Ok(report)
}

/// Train + evaluate in one step (no model file round trip).
pub fn train_evaluate(matrix: &FeatureMatrix, protocol: &ProtocolConfig) -> Result<EvaluationReport> {
    Ok(run_protocol(&matrix.rows, protocol)?.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelRow {
    pub kernel: KernelConfig,
    pub average_cv_accuracy: f64,
    pub best_fold_accuracy: f64,
    pub test_accuracy: f64,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelComparison {
    pub folds: usize,
    pub rows: Vec<KernelRow>,
}

impl KernelComparison {
    pub fn column_names(&self) -> [String; 4] {
        [
            "Kernel Function".into(),
            format!("Average accuracy across {} folds", self.folds),
            "Maximum Accuracy on the best fold".into(),
            "Test Accuracy on Best Fold".into(),
        ]
    }

    pub fn to_text(&self) -> String {
        let cols = self.column_names();
        let widths: Vec<usize> = cols.iter().map(|c| c.len().max(12)).collect();
        let mut s = String::new();
        let line = |s: &mut String, cells: &[String]| {
            let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            let _ = writeln!(s, "| {} |", parts.join(" | "));
        };
        line(&mut s, &cols);
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        let _ = writeln!(s, "|-{}-|", rule.join("-|-"));
        for r in &self.rows {
            line(&mut s, &[
                r.kernel.kind.display_name().to_string(),
                format_percent(r.average_cv_accuracy),
                format_percent(r.best_fold_accuracy),
                format_percent(r.test_accuracy),
            ]);
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.column_names().join(",");
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{}", r.kernel.kind.display_name(), format_percent(r.average_cv_accuracy),
                format_percent(r.best_fold_accuracy), format_percent(r.test_accuracy));
        }
        s
    }
}

/// Runs the full protocol once per kernel family (same split, folds and
/// seeds; kernel parameters from `base.kernel`), writing
/// `kernel_comparison.{txt,csv,json}` and `confusion_<kernel>.csv`.
pub fn report_stage(features_path: &Path, out_dir: &Path, base: &ProtocolConfig) -> Result<KernelComparison> {
    let matrix = load_features(features_path)?;
    let mut rows = Vec::new();
    for kind in KernelKind::REPORT_ORDER {
        let protocol = ProtocolConfig { kernel: KernelConfig { kind, ..base.kernel }, ..*base };
        let (report, _) = run_protocol(&matrix.rows, &protocol)?;
        rows.push(KernelRow {
            kernel: protocol.kernel,
            average_cv_accuracy: report.cv.mean_accuracy,
            best_fold_accuracy: report.cv.best_fold_accuracy,
            test_accuracy: report.test_accuracy,
            confusion: report.confusion,
        });
    }
    let comparison = KernelComparison { folds: base.folds, rows };
    let config = json!({
        "stage": "report",
        "provenance": matrix.provenance,
        "protocol": base,
        "upstream": matrix.config,
    });
    let header = config_header(&config)?;
    write_file(&out_dir.join("kernel_comparison.txt"), &(header.clone() + &comparison.to_text()))?;
    write_file(&out_dir.join("kernel_comparison.csv"), &(header.clone() + &comparison.to_csv()))?;
    write_file(
        &out_dir.join("kernel_comparison.json"),
        &pretty(&json!({ "config": config, "comparison": comparison }))?,
    )?;
    for r in &comparison.rows {
        write_file(
            &out_dir.join(format!("confusion_{}.csv", r.kernel.kind.as_str())),
            &(header.clone() + &r.confusion.to_csv()),
        )?;
    }
    Ok(comparison)
}
