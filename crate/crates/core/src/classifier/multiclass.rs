//! One-vs-one reduction over the four emotion labels.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::kernel::KernelConfig;
use crate::classifier::smo::{smo_train_binary, BinaryModel, SmoParams};
use crate::error::{Error, Result};
use crate::features::Standardizer;
use crate::seed;
use crate::types::{label_counts, EmotionLabel, FeatureRow, LABEL_COUNT};

pub const MODEL_FORMAT: &str = "eeg-emotion-model";
pub const MODEL_VERSION: u32 = 1;

/// Binary model for one label pair; positive scores vote for `positive`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    pub positive: EmotionLabel,
    pub negative: EmotionLabel,
    pub model: BinaryModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassModel {
    pub kernel: KernelConfig,
    pub params: SmoParams,
    pub standardizer: Standardizer,
    pub pairs: Vec<PairModel>,
}

/// Votes and summed |score| of the votes won, per label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ballot {
    pub votes: [usize; LABEL_COUNT],
    pub margins: [f64; LABEL_COUNT],
}

/// The six unordered label pairs, lower quadrant first.
pub fn label_pairs() -> Vec<(EmotionLabel, EmotionLabel)> {
    let mut out = Vec::with_capacity(6);
    for a in 0..LABEL_COUNT {
        for b in a + 1..LABEL_COUNT {
            out.push((EmotionLabel::ALL[a], EmotionLabel::ALL[b]));
        }
    }
    out
}

/// Majority vote; ties go to the largest aggregate margin, then to the
/// lowest quadrant.
pub fn resolve_votes(votes: &[usize; LABEL_COUNT], margins: &[f64; LABEL_COUNT]) -> EmotionLabel {
    let mut best = 0;
    for i in 1..LABEL_COUNT {
        let better = votes[i] > votes[best] || (votes[i] == votes[best] && margins[i] > margins[best]);
        if better {
            best = i;
        }
    }
    EmotionLabel::ALL[best]
}

pub fn train_multiclass(
    rows: &[FeatureRow],
    kernel: &KernelConfig,
    params: &SmoParams,
) -> Result<MulticlassModel> {
    kernel.validate()?;
    params.validate()?;
    let counts = label_counts(rows.iter().map(|r| r.label));
    if let Some(i) = counts.iter().position(|&n| n == 0) {
        return Err(Error::Training(format!(
            "label {} missing from training data",
            EmotionLabel::ALL[i]
        )));
    }
    let raw: Vec<&[f64]> = rows.iter().map(|r| r.features.as_slice()).collect();
    let standardizer = Standardizer::fit(&raw)?;
    let scaled: Vec<Vec<f64>> = raw
        .iter()
        .map(|r| standardizer.transform(r))
        .collect::<Result<_>>()?;

    let pairs = label_pairs()
        .into_par_iter()
        .enumerate()
        .map(|(k, (pos, neg))| {
            let (mut x, mut y) = (Vec::new(), Vec::new());
            for (row, v) in rows.iter().zip(&scaled) {
                if row.label == pos || row.label == neg {
                    x.push(v.clone());
                    y.push(if row.label == pos { 1.0 } else { -1.0 });
                }
            }
            let pair_params =
                SmoParams { seed: seed::derive(params.seed, &[seed::stream::SMO, k as u64]), ..*params };
            let model = smo_train_binary(&x, &y, kernel, &pair_params)?;
            Ok(PairModel { positive: pos, negative: neg, model })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(MulticlassModel { kernel: *kernel, params: *params, standardizer, pairs })
}

impl MulticlassModel {
    pub fn ballot(&self, x: &[f64]) -> Result<Ballot> {
        let z = self.standardizer.transform(x)?;
        Ok(self.ballot_standardized(&z))
    }

    fn ballot_standardized(&self, z: &[f64]) -> Ballot {
        let mut votes = [0; LABEL_COUNT];
        let mut margins = [0.0; LABEL_COUNT];
        for p in &self.pairs {
            let score = p.model.decision_value(z);
            let winner = if score >= 0.0 { p.positive } else { p.negative };
            votes[winner.index()] += 1;
            margins[winner.index()] += score.abs();
        }
        Ballot { votes, margins }
    }

    /// Predicts the label of a raw (unstandardized) feature vector.
    pub fn predict(&self, x: &[f64]) -> Result<EmotionLabel> {
        let b = self.ballot(x)?;
        Ok(resolve_votes(&b.votes, &b.margins))
    }

    pub fn predict_many(&self, rows: &[FeatureRow]) -> Result<Vec<EmotionLabel>> {
        rows.iter().map(|r| self.predict(r.features.as_slice())).collect()
    }

    /// Label pairs whose solver stopped before meeting the KKT tolerance.
    pub fn unconverged_pairs(&self) -> Vec<(EmotionLabel, EmotionLabel)> {
        self.pairs
            .iter()
            .filter(|p| !p.model.converged)
            .map(|p| (p.positive, p.negative))
            .collect()
    }
}

/// Versioned model file; `config` carries the resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub config: serde_json::Value,
    pub model: MulticlassModel,
}

impl ModelFile {
    pub fn new(model: MulticlassModel, config: serde_json::Value) -> ModelFile {
        ModelFile { format: MODEL_FORMAT.into(), version: MODEL_VERSION, config, model }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<ModelFile> {
        let f: ModelFile = serde_json::from_str(text)?;
        if f.format != MODEL_FORMAT || f.version != MODEL_VERSION {
            return Err(Error::Format(format!("unsupported model file {} v{}", f.format, f.version)));
        }
        if f.model.pairs.len() != 6 {
            return Err(Error::Format(format!("model has {} pair models, expected 6", f.model.pairs.len())));
        }
        Ok(f)
    }

    pub fn load(path: &Path) -> Result<ModelFile> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ModelFile::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{FeatureVector, FEATURE_COUNT};
    use EmotionLabel::*;

    fn row(label: EmotionLabel, offset: f64, jitter: f64) -> FeatureRow {
        let mut v = [0.0; FEATURE_COUNT];
        for (j, x) in v.iter_mut().enumerate() {
            *x = jitter * ((j as f64 + offset * 7.0).sin());
        }
        v[label.index()] += 5.0;
        FeatureRow { features: FeatureVector(v), label, subject_id: "s".into() }
    }

    fn clusters() -> Vec<FeatureRow> {
        let mut rows = Vec::new();
        for i in 0..10 {
            for l in EmotionLabel::ALL {
                rows.push(row(l, i as f64, 0.3));
            }
        }
        rows
    }

    #[test]
    fn six_pairs_each_once() {
        let pairs = label_pairs();
        assert_eq!(pairs.len(), 6);
        assert_eq!(pairs[0], (Happy, Angry));
        assert_eq!(pairs[5], (Sad, Relaxed));
    }

    #[test]
    fn tie_break_by_margin_then_quadrant() {
        assert_eq!(resolve_votes(&[2, 2, 1, 1], &[3.1, 2.0, 0.5, 0.5]), Happy);
        assert_eq!(resolve_votes(&[2, 2, 1, 1], &[1.0, 2.0, 0.5, 0.5]), Angry);
        assert_eq!(resolve_votes(&[1, 2, 2, 1], &[0.0, 1.0, 1.0, 0.0]), Angry);
        assert_eq!(resolve_votes(&[0, 1, 2, 3], &[0.0; 4]), Relaxed);
    }

    #[test]
    fn separated_clusters_are_learned() {
        let rows = clusters();
        for kernel in [KernelConfig::linear(), KernelConfig::default(), KernelConfig::rbf(1.0 / 34.0)] {
            let m = train_multiclass(&rows, &kernel, &SmoParams::default()).unwrap();
            assert_eq!(m.pairs.len(), 6);
            let pred = m.predict_many(&rows).unwrap();
            assert!(pred.iter().zip(&rows).all(|(p, r)| *p == r.label), "{kernel:?}");
        }
    }

    #[test]
    fn missing_label_is_rejected() {
        let rows: Vec<_> = clusters().into_iter().filter(|r| r.label != Sad).collect();
        assert!(matches!(
            train_multiclass(&rows, &KernelConfig::default(), &SmoParams::default()),
            Err(Error::Training(_))
        ));
    }

    #[test]
    fn identical_rows_train_without_panicking() {
        let rows: Vec<_> = EmotionLabel::ALL
            .iter()
            .flat_map(|&l| (0..3).map(move |_| FeatureRow {
                features: FeatureVector([1.0; FEATURE_COUNT]),
                label: l,
                subject_id: "s".into(),
            }))
            .collect();
        let params = SmoParams { max_passes: 2, ..SmoParams::default() };
        let m = train_multiclass(&rows, &KernelConfig::default(), &params).unwrap();
        assert_eq!(m.standardizer.passthrough.len(), FEATURE_COUNT);
        assert_eq!(m.unconverged_pairs().len(), 6);
        m.predict(&[1.0; FEATURE_COUNT]).unwrap();
    }

    #[test]
    fn model_file_round_trip_predicts_identically() {
        let rows = clusters();
        let m = train_multiclass(&rows, &KernelConfig::default(), &SmoParams::default()).unwrap();
        let file = ModelFile::new(m, serde_json::json!({"seed": 0}));
        let text = file.to_json().unwrap();
        let back = ModelFile::from_json(&text).unwrap();
        assert_eq!(back, file);
        for r in &rows {
            let a = file.model.ballot(r.features.as_slice()).unwrap();
            let b = back.model.ballot(r.features.as_slice()).unwrap();
            assert_eq!(a.margins.map(f64::to_bits), b.margins.map(f64::to_bits));
        }
        assert!(ModelFile::from_json(&text.replace(MODEL_FORMAT, "other")).is_err());
    }
}
