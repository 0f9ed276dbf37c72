//! Recording files, session manifests and raw trial assembly.
//!
//! Recording file format (UTF-8, LF line endings):
//!
//! ```text
//! # muse-eeg v1, rate=256
//! 0,12.5,-3.25,4,8.125
//! 1,12.75,,4.5,8
//! ```
//!
//! Each data row is `index,TP9,AF7,AF8,TP10`. The index is an integer that
//! must strictly increase. An empty or non-numeric channel field marks the
//! sample as missing. Values are written in the shortest decimal form that
//! parses back to the same `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EntryError, Error, Result};
use crate::types::{
    validate_recording, Dataset, EmotionLabel, Provenance, Recording, Trial, CHANNEL_COUNT,
};

pub const RECORDING_MAGIC: &str = "# muse-eeg v1";
pub const MANIFEST_FORMAT: &str = "eeg-emotion-manifest";
pub const MANIFEST_VERSION: u32 = 1;

/// Parses a recording file. `subject_id` is attached to the result.
pub fn parse_recording(bytes: &[u8], subject_id: &str) -> Result<Recording> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 1,
        message: format!("not UTF-8: {e}"),
    })?;
    let mut lines = text.split('\n').enumerate().map(|(i, l)| (i + 1, l));

    let (_, header) = lines.next().ok_or(Error::Parse { line: 1, message: "empty file".into() })?;
    let sample_rate_hz = parse_header(header)?;

    let mut samples = Vec::new();
    let mut missing = Vec::new();
    let mut last_index: Option<i64> = None;
    for (line_no, line) in lines {
        if line.is_empty() {
            continue;
        }
        if line.contains('\r') {
            return Err(Error::Parse { line: line_no, message: "CR in line (LF endings required)".into() });
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != CHANNEL_COUNT + 1 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {} columns, found {}", CHANNEL_COUNT + 1, fields.len()),
            });
        }
        let index: i64 = fields[0].trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("bad sample index {:?}", fields[0]),
        })?;
        if last_index.is_some_and(|prev| index <= prev) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("sample index {index} not increasing"),
            });
        }
        last_index = Some(index);

        let mut row = Vec::with_capacity(CHANNEL_COUNT);
        let mut mask = Vec::with_capacity(CHANNEL_COUNT);
        for field in &fields[1..] {
            match field.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => {
                    row.push(v);
                    mask.push(false);
                }
                _ => {
                    row.push(0.0);
                    mask.push(true);
                }
            }
        }
        samples.push(row);
        missing.push(mask);
    }
    if samples.is_empty() {
        return Err(Error::Parse { line: 2, message: "no samples".into() });
    }
    Ok(Recording { subject_id: subject_id.to_string(), sample_rate_hz, samples, missing })
}

fn parse_header(line: &str) -> Result<f64> {
    let bad = |m: &str| Error::Parse { line: 1, message: format!("{m}: {line:?}") };
    let rest = line
        .strip_prefix(RECORDING_MAGIC)
        .ok_or_else(|| bad("missing header"))?;
    let rate = rest
        .trim_start_matches(',')
        .trim()
        .strip_prefix("rate=")
        .ok_or_else(|| bad("missing rate"))?;
    let rate: f64 = rate.trim().parse().map_err(|_| bad("bad rate"))?;
    if !(rate.is_finite() && rate > 0.0) {
        return Err(bad("non-positive rate"));
    }
    Ok(rate)
}

/// Serializes a recording in the file format above. Missing cells become
/// empty fields and rows are indexed from zero.
pub fn write_recording(rec: &Recording) -> String {
    let mut out = String::with_capacity(rec.n_samples() * 32 + 32);
    let _ = writeln!(out, "{RECORDING_MAGIC}, rate={}", rec.sample_rate_hz);
    for (i, (row, mask)) in rec.samples.iter().zip(&rec.missing).enumerate() {
        let _ = write!(out, "{i}");
        for (v, m) in row.iter().zip(mask) {
            out.push(',');
            if !m {
                let _ = write!(out, "{v}");
            }
        }
        out.push('\n');
    }
    out
}

/// Number of samples a stimulus of `duration_s` spans at `fs`.
///
/// Fractional trailing samples are dropped. A 1e-9 guard absorbs binary
/// rounding in products such as `0.1 * 2560`.
pub fn stimulus_samples(duration_s: f64, fs: f64) -> usize {
    (duration_s * fs + 1e-9).floor().max(0.0) as usize
}

/// Cuts the window `[onset, onset + floor(duration_s * fs))` out of `rec`.
pub fn truncate_to_stimulus(rec: &Recording, onset: usize, duration_s: f64) -> Result<Recording> {
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(Error::Range(format!("duration {duration_s} s must be positive")));
    }
    let len = stimulus_samples(duration_s, rec.sample_rate_hz);
    let end = onset.checked_add(len).filter(|&e| len > 0 && e <= rec.n_samples());
    let end = end.ok_or_else(|| {
        Error::Range(format!(
            "window {onset}+{len} exceeds recording length {}",
            rec.n_samples()
        ))
    })?;
    Ok(Recording {
        subject_id: rec.subject_id.clone(),
        sample_rate_hz: rec.sample_rate_hz,
        samples: rec.samples[onset..end].to_vec(),
        missing: rec.missing[onset..end].to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ManifestStage {
    /// Untruncated device recordings.
    #[default]
    Raw,
    /// Truncated, imputed and smoothed trials (onset 0).
    Preprocessed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub video_id: String,
    #[serde(default)]
    pub session: u32,
    pub label: EmotionLabel,
    /// Stimulus onset, in samples from the start of the recording.
    pub onset: usize,
    pub duration_s: f64,
    /// Recording path, relative to the manifest's directory.
    pub recording: PathBuf,
}

/// Machine-readable session structure: one entry per (subject, video).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionManifest {
    pub format: String,
    pub version: u32,
    #[serde(default)]
    pub stage: ManifestStage,
    pub provenance: Provenance,
    /// Resolved configuration of the stage that produced this manifest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
    pub entries: Vec<ManifestEntry>,
}

impl SessionManifest {
    pub fn new(stage: ManifestStage, provenance: Provenance, entries: Vec<ManifestEntry>) -> Self {
        SessionManifest {
            format: MANIFEST_FORMAT.to_string(),
            version: MANIFEST_VERSION,
            stage,
            provenance,
            config: None,
            entries,
        }
    }

    pub fn from_json(text: &str) -> Result<SessionManifest> {
        let m: SessionManifest = serde_json::from_str(text)?;
        if m.format != MANIFEST_FORMAT || m.version != MANIFEST_VERSION {
            return Err(Error::Format(format!(
                "unsupported manifest {} v{}",
                m.format, m.version
            )));
        }
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<SessionManifest> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SessionManifest::from_json(&text)
    }
}

fn load_entry(entry: &ManifestEntry, base_dir: &Path) -> Result<Trial> {
    if !(entry.duration_s.is_finite() && entry.duration_s > 0.0) {
        return Err(Error::Range(format!("duration {} s", entry.duration_s)));
    }
    let path = base_dir.join(&entry.recording);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let rec = parse_recording(&bytes, &entry.subject_id)?;
    let violations = validate_recording(&rec, false);
    if let Some(v) = violations.first() {
        return Err(Error::Format(format!("{}: {v}", path.display())));
    }
    let recording = truncate_to_stimulus(&rec, entry.onset, entry.duration_s)?;
    Ok(Trial {
        recording,
        label: entry.label,
        video_id: entry.video_id.clone(),
        duration_s: entry.duration_s,
    })
}

/// Loads every manifest entry into a raw (truncated, unimputed) trial.
///
/// Output order follows the manifest. All failing entries are collected
/// into one [`Error::Dataset`].
pub fn build_dataset(manifest: &SessionManifest, base_dir: &Path) -> Result<Dataset<Trial>> {
    if manifest.entries.is_empty() {
        return Err(Error::Format("manifest has no entries".into()));
    }
    let results: Vec<Result<Trial>> = manifest
        .entries
        .par_iter()
        .map(|e| load_entry(e, base_dir))
        .collect();

    let mut trials = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, (r, entry)) in results.into_iter().zip(&manifest.entries).enumerate() {
        match r {
            Ok(t) => trials.push(t),
            Err(e) => failures.push(EntryError {
                entry: i,
                subject_id: entry.subject_id.clone(),
                video_id: entry.video_id.clone(),
                message: e.to_string(),
            }),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Dataset(failures));
    }
    Ok(Dataset { items: trials, provenance: manifest.provenance.clone() })
}
