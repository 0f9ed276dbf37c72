//! Train/test splitting, k-fold cross-validation with best-fold model
//! selection, confusion matrices and precision/recall/F1.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{train_multiclass, KernelConfig, MulticlassModel, SmoParams};
use crate::error::{Error, Result};
use crate::seed;
use crate::types::{label_counts, EmotionLabel, FeatureRow, LABEL_COUNT};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn indices_by_label(labels: &[EmotionLabel]) -> [Vec<usize>; LABEL_COUNT] {
    let mut by: [Vec<usize>; LABEL_COUNT] = Default::default();
    for (i, l) in labels.iter().enumerate() {
        by[l.index()].push(i);
    }
    by
}

/// Per-label shuffled split. Each label keeps `round(n * train_frac)`
/// items for training (at least one on each side). Index lists are sorted.
pub fn stratified_split(labels: &[EmotionLabel], train_frac: f64, seed: u64) -> Result<Split> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::Config(format!("train fraction {train_frac} outside (0, 1)")));
    }
    let mut split = Split { train: Vec::new(), test: Vec::new() };
    for (li, mut idx) in indices_by_label(labels).into_iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        if idx.len() < 2 {
            return Err(Error::Training(format!(
                "label {} has {} sample(s); splitting needs at least 2",
                EmotionLabel::ALL[li],
                idx.len()
            )));
        }
        idx.shuffle(&mut seed::rng(seed::derive(seed, &[li as u64])));
        let n_train = ((idx.len() as f64 * train_frac).round() as usize).clamp(1, idx.len() - 1);
        split.train.extend_from_slice(&idx[..n_train]);
        split.test.extend_from_slice(&idx[n_train..]);
    }
    split.train.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

/// Stratified k-fold partition of `0..labels.len()`.
///
/// Labels are shuffled within class, concatenated in quadrant order and
/// dealt round-robin, so overall fold sizes and per-label counts each
/// differ by at most one. Folds are returned sorted.
pub fn kfold_partition(labels: &[EmotionLabel], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = labels.len();
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    if k > n {
        return Err(Error::Config(format!("{k} folds for {n} samples")));
    }
    let mut folds = vec![Vec::new(); k];
    let mut t = 0;
    for (li, mut idx) in indices_by_label(labels).into_iter().enumerate() {
        idx.shuffle(&mut seed::rng(seed::derive(seed, &[li as u64])));
        for i in idx {
            folds[t % k].push(i);
            t += 1;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

pub fn accuracy(truths: &[EmotionLabel], preds: &[EmotionLabel]) -> f64 {
    let hits = truths.iter().zip(preds).filter(|(a, b)| a == b).count();
    hits as f64 / truths.len().max(1) as f64
}

pub struct CvOutcome {
    pub fold_accuracies: Vec<f64>,
    pub best_fold: usize,
    pub best_model: MulticlassModel,
}

fn pick(rows: &[FeatureRow], idx: &[usize]) -> Vec<FeatureRow> {
    idx.iter().map(|&i| rows[i].clone()).collect()
}

/// k-fold cross-validation. Fold `f` trains on the other folds and is
/// scored on itself; the best fold is the highest accuracy, ties to the
/// lowest index, and its model is returned.
pub fn cross_validate(
    rows: &[FeatureRow],
    kernel: &KernelConfig,
    params: &SmoParams,
    k: usize,
    seed: u64,
) -> Result<CvOutcome> {
    let labels: Vec<_> = rows.iter().map(|r| r.label).collect();
    let folds = kfold_partition(&labels, k, seed::derive(seed, &[seed::stream::KFOLD]))?;
    let results: Vec<(f64, MulticlassModel)> = folds
        .par_iter()
        .enumerate()
        .map(|(f, held)| {
            let mut in_held = vec![false; rows.len()];
            held.iter().for_each(|&i| in_held[i] = true);
            let train: Vec<usize> = (0..rows.len()).filter(|&i| !in_held[i]).collect();
            let fold_params =
                SmoParams { seed: seed::derive(seed, &[seed::stream::SMO, f as u64]), ..*params };
            let model = train_multiclass(&pick(rows, &train), kernel, &fold_params)
                .map_err(|e| Error::Fold { fold: f, source: Box::new(e) })?;
            let held_rows = pick(rows, held);
            let preds = model.predict_many(&held_rows)?;
            let truths: Vec<_> = held_rows.iter().map(|r| r.label).collect();
            Ok((accuracy(&truths, &preds), model))
        })
        .collect::<Result<_>>()?;

    let fold_accuracies: Vec<f64> = results.iter().map(|r| r.0).collect();
    let mut best_fold = 0;
    for (f, &a) in fold_accuracies.iter().enumerate() {
        if a > fold_accuracies[best_fold] {
            best_fold = f;
        }
    }
    let best_model = results.into_iter().nth(best_fold).expect("k >= 2").1;
    Ok(CvOutcome { fold_accuracies, best_fold, best_model })
}

/// Rows are true labels, columns predictions, both in quadrant order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct ConfusionMatrix {
    pub counts: [[usize; LABEL_COUNT]; LABEL_COUNT],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    /// Column empty (label never predicted); precision reported as 0.
    pub precision_undefined: bool,
    /// Row empty (label absent from truths); recall reported as 0.
    pub recall_undefined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub per_class: [ClassMetrics; LABEL_COUNT],
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

impl ConfusionMatrix {
    pub fn from_predictions(truths: &[EmotionLabel], preds: &[EmotionLabel]) -> Result<Self> {
        if truths.len() != preds.len() {
            return Err(Error::Length(format!(
                "{} truths but {} predictions",
                truths.len(),
                preds.len()
            )));
        }
        if truths.is_empty() {
            return Err(Error::Length("no predictions".into()));
        }
        let mut cm = ConfusionMatrix::default();
        for (t, p) in truths.iter().zip(preds) {
            cm.counts[t.index()][p.index()] += 1;
        }
        Ok(cm)
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..LABEL_COUNT).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total().max(1) as f64
    }

    pub fn metrics(&self) -> Metrics {
        let per_class: [ClassMetrics; LABEL_COUNT] = std::array::from_fn(|c| {
            let tp = self.counts[c][c] as f64;
            let col: usize = (0..LABEL_COUNT).map(|r| self.counts[r][c]).sum();
            let row: usize = self.counts[c].iter().sum();
            let precision = if col == 0 { 0.0 } else { tp / col as f64 };
            let recall = if row == 0 { 0.0 } else { tp / row as f64 };
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                precision,
                recall,
                f1,
                support: row,
                precision_undefined: col == 0,
                recall_undefined: row == 0,
            }
        });
        let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / LABEL_COUNT as f64;
        Metrics {
            macro_precision: mean(|m| m.precision),
            macro_recall: mean(|m| m.recall),
            macro_f1: mean(|m| m.f1),
            per_class,
        }
    }

    /// 4x4 comma-separated grid with a header row and a label column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\pred");
        for l in EmotionLabel::ALL {
            let _ = write!(out, ",{l}");
        }
        out.push('\n');
        for l in EmotionLabel::ALL {
            let _ = write!(out, "{l}");
            for c in self.counts[l.index()] {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }
}

/// `0.8203125 -> "82.03%"`
pub fn format_percent(fraction: f64) -> String {
    format!("{:.2}%", 100.0 * fraction)
}

/// Protocol knobs (everything except the data).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub kernel: KernelConfig,
    pub smo: SmoParams,
    pub folds: usize,
    pub train_frac: f64,
    pub seed: u64,
    /// Retrain on the whole training split instead of reusing the best
    /// fold's model.
    pub refit_full_train: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            kernel: KernelConfig::default(),
            smo: SmoParams::default(),
            folds: 10,
            train_frac: 0.8,
            seed: 42,
            refit_full_train: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub best_fold: usize,
    pub best_fold_accuracy: f64,
    pub train_size: usize,
    pub test_size: usize,
}

pub struct Trained {
    pub model: MulticlassModel,
    pub cv: CvSummary,
    pub split: Split,
}

pub fn protocol_split(rows: &[FeatureRow], cfg: &ProtocolConfig) -> Result<Split> {
    let labels: Vec<_> = rows.iter().map(|r| r.label).collect();
    stratified_split(&labels, cfg.train_frac, seed::derive(cfg.seed, &[seed::stream::SPLIT]))
}

/// Split, cross-validate on the training part and pick the model that the
/// test set will be scored with.
pub fn train_protocol(rows: &[FeatureRow], cfg: &ProtocolConfig) -> Result<Trained> {
    let counts = label_counts(rows.iter().map(|r| r.label));
    if let Some(i) = counts.iter().position(|&n| n == 0) {
        return Err(Error::Training(format!("label {} has no samples", EmotionLabel::ALL[i])));
    }
    let split = protocol_split(rows, cfg)?;
    let train = pick(rows, &split.train);
    let cv = cross_validate(&train, &cfg.kernel, &cfg.smo, cfg.folds, cfg.seed)?;
    let model = if cfg.refit_full_train {
        let params = SmoParams { seed: seed::derive(cfg.seed, &[seed::stream::SMO, u64::MAX]), ..cfg.smo };
        train_multiclass(&train, &cfg.kernel, &params)?
    } else {
        cv.best_model
    };
    let mean_accuracy = cv.fold_accuracies.iter().sum::<f64>() / cv.fold_accuracies.len() as f64;
    let summary = CvSummary {
        best_fold_accuracy: cv.fold_accuracies[cv.best_fold],
        fold_accuracies: cv.fold_accuracies,
        mean_accuracy,
        best_fold: cv.best_fold,
        train_size: split.train.len(),
        test_size: split.test.len(),
    };
    Ok(Trained { model, cv: summary, split })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub protocol: ProtocolConfig,
    pub cv: CvSummary,
    pub test_accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    /// Label pairs whose solver did not reach the KKT tolerance.
    pub unconverged_pairs: Vec<(EmotionLabel, EmotionLabel)>,
}

/// Scores `model` on the protocol's test split.
pub fn evaluate_protocol(
    rows: &[FeatureRow],
    model: &MulticlassModel,
    cfg: &ProtocolConfig,
    cv: CvSummary,
) -> Result<EvaluationReport> {
    let split = protocol_split(rows, cfg)?;
    let test = pick(rows, &split.test);
    let preds = model.predict_many(&test)?;
    let truths: Vec<_> = test.iter().map(|r| r.label).collect();
    let confusion = ConfusionMatrix::from_predictions(&truths, &preds)?;
    Ok(EvaluationReport {
        protocol: *cfg,
        cv,
        test_accuracy: confusion.accuracy(),
        metrics: confusion.metrics(),
        confusion,
        unconverged_pairs: model.unconverged_pairs(),
    })
}

pub fn run_protocol(rows: &[FeatureRow], cfg: &ProtocolConfig) -> Result<(EvaluationReport, MulticlassModel)> {
    let trained = train_protocol(rows, cfg)?;
    let report = evaluate_protocol(rows, &trained.model, cfg, trained.cv)?;
    Ok((report, trained.model))
}

impl EvaluationReport {
    pub fn to_text(&self) -> String {
        let p = &self.protocol;
        let mut s = String::new();
        let _ = writeln!(s, "kernel: {}  C: {}  folds: {}  split: {}  seed: {}  refit-full-train: {}",
            p.kernel.kind, p.smo.c, p.folds, p.train_frac, p.seed, p.refit_full_train);
        let _ = writeln!(s, "train/test: {}/{}", self.cv.train_size, self.cv.test_size);
        let _ = writeln!(s);
        for (i, a) in self.cv.fold_accuracies.iter().enumerate() {
            let mark = if i == self.cv.best_fold { "  (best)" } else { "" };
            let _ = writeln!(s, "fold {:>2}: {}{mark}", i + 1, format_percent(*a));
        }
        let _ = writeln!(s, "average accuracy across {} folds: {}", p.folds, format_percent(self.cv.mean_accuracy));
        let _ = writeln!(s, "maximum accuracy on the best fold: {}", format_percent(self.cv.best_fold_accuracy));
        let _ = writeln!(s, "test accuracy: {}", format_percent(self.test_accuracy));
        let _ = writeln!(s);
        let _ = writeln!(s, "confusion matrix (rows true, columns predicted):");
        let _ = write!(s, "{:>9}", "");
        for l in EmotionLabel::ALL {
            let _ = write!(s, "{:>9}", l.name());
        }
        let _ = writeln!(s);
        for l in EmotionLabel::ALL {
            let _ = write!(s, "{:>9}", l.name());
            for c in self.confusion.counts[l.index()] {
                let _ = write!(s, "{c:>9}");
            }
            let _ = writeln!(s);
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:>9}{:>11}{:>9}{:>9}{:>9}", "class", "precision", "recall", "f1", "support");
        for l in EmotionLabel::ALL {
            let m = &self.metrics.per_class[l.index()];
            let flag = if m.precision_undefined { " (never predicted)" } else { "" };
            let _ = writeln!(s, "{:>9}{:>11.2}{:>9.2}{:>9.2}{:>9}{flag}", l.name(), m.precision, m.recall, m.f1, m.support);
        }
        let _ = writeln!(s, "{:>9}{:>11.2}{:>9.2}{:>9.2}", "macro", self.metrics.macro_precision, self.metrics.macro_recall, self.metrics.macro_f1);
        if !self.unconverged_pairs.is_empty() {
            let _ = writeln!(s, "warning: {} pair model(s) stopped above the KKT tolerance", self.unconverged_pairs.len());
        }
        s
    }
}
