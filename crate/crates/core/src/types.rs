//! Domain types shared by every pipeline stage.
//!
//! Channel order is fixed as `TP9, AF7, AF8, TP10` everywhere: in sample
//! rows, in recording files and in the feature vector layout.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CHANNEL_COUNT: usize = 4;
pub const LABEL_COUNT: usize = 4;
pub const BAND_COUNT: usize = 5;
pub const FEATURE_COUNT: usize = 34;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChannelId {
    TP9,
    AF7,
    AF8,
    TP10,
}

impl ChannelId {
    pub const ALL: [ChannelId; CHANNEL_COUNT] =
        [ChannelId::TP9, ChannelId::AF7, ChannelId::AF8, ChannelId::TP10];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<ChannelId> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ChannelId::TP9 => "TP9",
            ChannelId::AF7 => "AF7",
            ChannelId::AF8 => "AF8",
            ChannelId::TP10 => "TP10",
        }
    }

    pub fn is_left(self) -> bool {
        matches!(self, ChannelId::TP9 | ChannelId::AF7)
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Hemispheric electrode pairs, left member first.
pub const HEMISPHERIC_PAIRS: [(ChannelId, ChannelId); 2] = [
    (ChannelId::TP9, ChannelId::TP10),
    (ChannelId::AF7, ChannelId::AF8),
];

/// Emotion class, one per valence-arousal quadrant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmotionLabel {
    Happy,
    Angry,
    Sad,
    Relaxed,
}

impl EmotionLabel {
    pub const ALL: [EmotionLabel; LABEL_COUNT] = [
        EmotionLabel::Happy,
        EmotionLabel::Angry,
        EmotionLabel::Sad,
        EmotionLabel::Relaxed,
    ];

    /// Zero-based position (Q1 -> 0).
    pub fn index(self) -> usize {
        self as usize
    }

    /// Valence-arousal quadrant, 1..=4.
    pub fn quadrant(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_quadrant(quadrant: u8) -> Option<EmotionLabel> {
        match quadrant {
            1..=4 => Some(Self::ALL[usize::from(quadrant - 1)]),
            _ => None,
        }
    }

    pub fn from_index(index: usize) -> Option<EmotionLabel> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            EmotionLabel::Happy => "happy",
            EmotionLabel::Angry => "angry",
            EmotionLabel::Sad => "sad",
            EmotionLabel::Relaxed => "relaxed",
        }
    }

    /// Positive valence quadrants (Q1, Q4).
    pub fn is_positive_valence(self) -> bool {
        matches!(self, EmotionLabel::Happy | EmotionLabel::Relaxed)
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EmotionLabel {
    type Err = Error;

    /// Accepts the label name, `Q1`..`Q4`, or a bare quadrant digit.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let by_quadrant = t
            .strip_prefix('q')
            .unwrap_or(&t)
            .parse::<u8>()
            .ok()
            .and_then(EmotionLabel::from_quadrant);
        if let Some(label) = by_quadrant {
            return Ok(label);
        }
        EmotionLabel::ALL
            .into_iter()
            .find(|l| l.name() == t)
            .ok_or_else(|| Error::Format(format!("unknown emotion label {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandName {
    Delta,
    Theta,
    Alpha,
    Beta,
    Gamma,
}

impl BandName {
    pub fn as_str(self) -> &'static str {
        match self {
            BandName::Delta => "delta",
            BandName::Theta => "theta",
            BandName::Alpha => "alpha",
            BandName::Beta => "beta",
            BandName::Gamma => "gamma",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandDefinition {
    pub name: BandName,
    pub low_hz: f64,
    pub high_hz: f64,
}

impl BandDefinition {
    pub fn center_hz(&self) -> f64 {
        0.5 * (self.low_hz + self.high_hz)
    }
}

/// The five canonical bands. The 7-8 Hz gap between theta and alpha is
/// intentional.
pub const BANDS: [BandDefinition; BAND_COUNT] = [
    BandDefinition { name: BandName::Delta, low_hz: 0.0, high_hz: 4.0 },
    BandDefinition { name: BandName::Theta, low_hz: 4.0, high_hz: 7.0 },
    BandDefinition { name: BandName::Alpha, low_hz: 8.0, high_hz: 12.0 },
    BandDefinition { name: BandName::Beta, low_hz: 12.0, high_hz: 30.0 },
    BandDefinition { name: BandName::Gamma, low_hz: 30.0, high_hz: 50.0 },
];

/// A multichannel EEG recording in microvolts.
///
/// Rows are samples; each row should hold exactly [`CHANNEL_COUNT`] values
/// in [`ChannelId::ALL`] order. Rows are kept as vectors so malformed input
/// can be represented and reported by [`validate_recording`].
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub subject_id: String,
    pub sample_rate_hz: f64,
    pub samples: Vec<Vec<f64>>,
    pub missing: Vec<Vec<bool>>,
}

impl Recording {
    /// Builds a complete (no missing cells) recording from rows.
    pub fn from_rows(
        subject_id: impl Into<String>,
        sample_rate_hz: f64,
        rows: Vec<[f64; CHANNEL_COUNT]>,
    ) -> Recording {
        let missing = vec![vec![false; CHANNEL_COUNT]; rows.len()];
        Recording {
            subject_id: subject_id.into(),
            sample_rate_hz,
            samples: rows.into_iter().map(|r| r.to_vec()).collect(),
            missing,
        }
    }

    /// Builds a complete recording from per-channel series of equal length.
    pub fn from_channels(
        subject_id: impl Into<String>,
        sample_rate_hz: f64,
        channels: &[Vec<f64>; CHANNEL_COUNT],
    ) -> Recording {
        let n = channels.iter().map(Vec::len).min().unwrap_or(0);
        let rows = (0..n)
            .map(|i| std::array::from_fn(|c| channels[c][i]))
            .collect();
        Recording::from_rows(subject_id, sample_rate_hz, rows)
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    /// Values of one channel. Callers should validate arity first; short
    /// rows yield NaN.
    pub fn channel(&self, ch: ChannelId) -> Vec<f64> {
        self.samples
            .iter()
            .map(|row| row.get(ch.index()).copied().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn channel_mask(&self, ch: ChannelId) -> Vec<bool> {
        self.missing
            .iter()
            .map(|row| row.get(ch.index()).copied().unwrap_or(true))
            .collect()
    }

    pub fn channels(&self) -> [Vec<f64>; CHANNEL_COUNT] {
        ChannelId::ALL.map(|c| self.channel(c))
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().flatten().filter(|&&m| m).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationRule {
    EmptyRecording,
    SampleRate,
    ChannelArity,
    MaskShape,
    NonFiniteSample,
    UnimputedSample,
}

impl ViolationRule {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationRule::EmptyRecording => "empty recording",
            ViolationRule::SampleRate => "sample rate",
            ViolationRule::ChannelArity => "channel arity",
            ViolationRule::MaskShape => "mask shape",
            ViolationRule::NonFiniteSample => "non-finite sample",
            ViolationRule::UnimputedSample => "unimputed sample",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub rule: ViolationRule,
    /// First offending sample row, when the rule is row-scoped.
    pub row: Option<usize>,
    pub channel: Option<ChannelId>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.rule.as_str())?;
        if let Some(row) = self.row {
            write!(f, " at row {row}")?;
        }
        if let Some(ch) = self.channel {
            write!(f, " ({ch})")?;
        }
        Ok(())
    }
}

/// Checks the recording invariants and reports one violation per broken
/// rule, naming its first offending index. `preprocessed` additionally
/// requires that no cell is still marked missing.
pub fn validate_recording(rec: &Recording, preprocessed: bool) -> Vec<Violation> {
    let mut out = Vec::new();
    if rec.samples.is_empty() {
        out.push(Violation { rule: ViolationRule::EmptyRecording, row: None, channel: None });
    }
    if !(rec.sample_rate_hz.is_finite() && rec.sample_rate_hz > 0.0) {
        out.push(Violation { rule: ViolationRule::SampleRate, row: None, channel: None });
    }
    if let Some(i) = rec.samples.iter().position(|r| r.len() != CHANNEL_COUNT) {
        out.push(Violation { rule: ViolationRule::ChannelArity, row: Some(i), channel: None });
    }
    let mask_bad = if rec.missing.len() != rec.samples.len() {
        Some(rec.missing.len().min(rec.samples.len()))
    } else {
        rec.missing
            .iter()
            .zip(&rec.samples)
            .position(|(m, s)| m.len() != s.len())
    };
    if let Some(i) = mask_bad {
        out.push(Violation { rule: ViolationRule::MaskShape, row: Some(i), channel: None });
    }

    let missing_at = |i: usize, c: usize| {
        rec.missing.get(i).and_then(|r| r.get(c)).copied().unwrap_or(false)
    };
    let first_cell = |pred: &dyn Fn(usize, usize, f64) -> bool| {
        rec.samples.iter().enumerate().find_map(|(i, row)| {
            row.iter()
                .enumerate()
                .find(|&(c, &v)| pred(i, c, v))
                .map(|(c, _)| (i, c))
        })
    };
    if let Some((i, c)) = first_cell(&|i, c, v| !missing_at(i, c) && !v.is_finite()) {
        out.push(Violation {
            rule: ViolationRule::NonFiniteSample,
            row: Some(i),
            channel: ChannelId::from_index(c),
        });
    }
    if preprocessed {
        let unimputed = rec.missing.iter().enumerate().find_map(|(i, row)| {
            row.iter().position(|&m| m).map(|c| (i, c))
        });
        if let Some((i, c)) = unimputed {
            out.push(Violation {
                rule: ViolationRule::UnimputedSample,
                row: Some(i),
                channel: ChannelId::from_index(c),
            });
        }
    }
    out
}

/// A recording segment aligned to one stimulus video.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub recording: Recording,
    pub label: EmotionLabel,
    pub video_id: String,
    pub duration_s: f64,
}

impl Trial {
    pub fn subject_id(&self) -> &str {
        &self.recording.subject_id
    }
}

/// Names of the 34 features, in vector order.
pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(FEATURE_COUNT);
    for ch in ChannelId::ALL {
        names.push(format!("psd_mean_{ch}"));
        names.push(format!("psd_var_{ch}"));
    }
    for prefix in ["corr", "dasm", "rasm"] {
        for (l, r) in HEMISPHERIC_PAIRS {
            names.push(format!("{prefix}_{l}_{r}"));
        }
    }
    for ch in ChannelId::ALL {
        for band in BANDS {
            names.push(format!("power_{}_{ch}", band.name.as_str()));
        }
    }
    names
}

/// The per-trial feature vector.
///
/// Layout: `[0..8]` PSD mean and variance per channel, `[8..10]` pair
/// correlations, `[10..12]` DASM, `[12..14]` RASM, `[14..34]` band power
/// (channel-major, bands delta..gamma).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(#[serde(with = "feature_array")] pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub const PSD_STATS: std::ops::Range<usize> = 0..8;
    pub const CORRELATION: std::ops::Range<usize> = 8..10;
    pub const DASM: std::ops::Range<usize> = 10..12;
    pub const RASM: std::ops::Range<usize> = 12..14;
    pub const BAND_POWER: std::ops::Range<usize> = 14..34;

    pub fn psd_mean_index(ch: ChannelId) -> usize {
        2 * ch.index()
    }

    pub fn psd_var_index(ch: ChannelId) -> usize {
        2 * ch.index() + 1
    }

    pub fn band_power_index(ch: ChannelId, band: usize) -> usize {
        14 + BAND_COUNT * ch.index() + band
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn from_slice(values: &[f64]) -> Result<FeatureVector> {
        let arr: [f64; FEATURE_COUNT] = values.try_into().map_err(|_| Error::Dimension {
            expected: FEATURE_COUNT,
            actual: values.len(),
        })?;
        Ok(FeatureVector(arr))
    }
}

mod feature_array {
    use super::FEATURE_COUNT;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64; FEATURE_COUNT], s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[f64; FEATURE_COUNT], D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        v.try_into()
            .map_err(|v: Vec<f64>| serde::de::Error::invalid_length(v.len(), &"34 features"))
    }
}

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Provenance {
    Recorded,
    Synthetic { seed: u64 },
}

/// One labeled feature row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub features: FeatureVector,
    pub label: EmotionLabel,
    pub subject_id: String,
}

pub trait Labeled {
    fn label(&self) -> EmotionLabel;
}

impl Labeled for Trial {
    fn label(&self) -> EmotionLabel {
        self.label
    }
}

impl Labeled for FeatureRow {
    fn label(&self) -> EmotionLabel {
        self.label
    }
}

/// An ordered collection of labeled items with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub items: Vec<T>,
    pub provenance: Provenance,
}

impl<T: Labeled> Dataset<T> {
    pub fn labels(&self) -> Vec<EmotionLabel> {
        self.items.iter().map(Labeled::label).collect()
    }

    pub fn label_counts(&self) -> [usize; LABEL_COUNT] {
        label_counts(self.items.iter().map(Labeled::label))
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Fails if the dataset is empty or some label has no items.
    pub fn check_trainable(&self) -> Result<()> {
        if self.items.is_empty() {
            return Err(Error::Training("empty dataset".into()));
        }
        let counts = self.label_counts();
        if let Some(i) = counts.iter().position(|&n| n == 0) {
            return Err(Error::Training(format!(
                "label {} has no samples",
                EmotionLabel::ALL[i]
            )));
        }
        Ok(())
    }
}

pub fn label_counts(labels: impl IntoIterator<Item = EmotionLabel>) -> [usize; LABEL_COUNT] {
    let mut counts = [0; LABEL_COUNT];
    for l in labels {
        counts[l.index()] += 1;
    }
    counts
}
