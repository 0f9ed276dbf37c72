//! Imputation, Savitzky-Golay smoothing and five-band decomposition.
//!
//! Pipeline order: impute -> (truncate, done at ingest) -> smooth -> split
//! into bands.

pub mod butterworth;
pub mod impute;
pub mod savgol;

use serde::{Deserialize, Serialize};

pub use butterworth::{Biquad, SosFilter, DEFAULT_FILTER_ORDER};
pub use impute::{impute_missing, DEFAULT_IMPUTE_RADIUS};
pub use savgol::{savgol_coefficients, savgol_smooth, savgol_weights_at, SavGolSpec};

use crate::error::{Error, Result};
use crate::types::{
    validate_recording, BandDefinition, ChannelId, Recording, Trial, BANDS, BAND_COUNT,
    CHANNEL_COUNT,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub impute_radius: usize,
    pub savgol: SavGolSpec,
    pub filter_order: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            impute_radius: DEFAULT_IMPUTE_RADIUS,
            savgol: SavGolSpec::default(),
            filter_order: DEFAULT_FILTER_ORDER,
        }
    }
}

/// Imputes then smooths each channel of a recording.
pub fn preprocess_recording(rec: &Recording, cfg: &PreprocessConfig) -> Result<Recording> {
    if let Some(v) = validate_recording(rec, false).first() {
        return Err(Error::Format(format!("invalid recording: {v}")));
    }
    let mut channels: [Vec<f64>; CHANNEL_COUNT] = Default::default();
    for ch in ChannelId::ALL {
        let filled = impute_missing(&rec.channel(ch), &rec.channel_mask(ch), cfg.impute_radius)
            .map_err(|e| Error::Imputation(format!("{ch}: {e}")))?;
        channels[ch.index()] = savgol_smooth(&filled, &cfg.savgol)?;
    }
    Ok(Recording::from_channels(rec.subject_id.clone(), rec.sample_rate_hz, &channels))
}

pub fn preprocess_trial(trial: &Trial, cfg: &PreprocessConfig) -> Result<Trial> {
    Ok(Trial {
        recording: preprocess_recording(&trial.recording, cfg)?,
        label: trial.label,
        video_id: trial.video_id.clone(),
        duration_s: trial.duration_s,
    })
}

/// Zero-phase filtering of a single band. Delta (starting at 0 Hz) is a
/// low-pass.
pub fn bandpass(signal: &[f64], band: &BandDefinition, fs: f64) -> Result<Vec<f64>> {
    SosFilter::for_band(band, fs, DEFAULT_FILTER_ORDER)?.filtfilt(signal)
}

/// Designed filters for the five bands at one sample rate.
#[derive(Debug, Clone)]
pub struct BandFilterBank {
    pub sample_rate_hz: f64,
    pub filters: [SosFilter; BAND_COUNT],
}

impl BandFilterBank {
    pub fn new(sample_rate_hz: f64, order: usize) -> Result<BandFilterBank> {
        let mut filters = Vec::with_capacity(BAND_COUNT);
        for band in &BANDS {
            filters.push(SosFilter::for_band(band, sample_rate_hz, order)?);
        }
        let filters = filters.try_into().expect("five bands");
        Ok(BandFilterBank { sample_rate_hz, filters })
    }

    pub fn split(&self, signal: &[f64]) -> Result<[Vec<f64>; BAND_COUNT]> {
        let mut out: [Vec<f64>; BAND_COUNT] = Default::default();
        for (slot, f) in out.iter_mut().zip(&self.filters) {
            *slot = f.filtfilt(signal)?;
        }
        Ok(out)
    }
}

/// Per channel (outer, `ChannelId` order), the five band-limited series
/// (inner, delta..gamma).
#[derive(Debug, Clone, PartialEq)]
pub struct BandSignals {
    pub series: [[Vec<f64>; BAND_COUNT]; CHANNEL_COUNT],
}

impl BandSignals {
    pub fn get(&self, ch: ChannelId, band: usize) -> &[f64] {
        &self.series[ch.index()][band]
    }

    pub fn count(&self) -> usize {
        self.series.iter().map(|c| c.len()).sum()
    }
}

pub fn decompose_bands(trial: &Trial, bank: &BandFilterBank) -> Result<BandSignals> {
    decompose_recording(&trial.recording, bank)
}

pub fn decompose_recording(rec: &Recording, bank: &BandFilterBank) -> Result<BandSignals> {
    if rec.sample_rate_hz != bank.sample_rate_hz {
        return Err(Error::Config(format!(
            "filter bank designed for {} Hz, recording is {} Hz",
            bank.sample_rate_hz, rec.sample_rate_hz
        )));
    }
    let mut series: [[Vec<f64>; BAND_COUNT]; CHANNEL_COUNT] = Default::default();
    for ch in ChannelId::ALL {
        series[ch.index()] = bank.split(&rec.channel(ch))?;
    }
    Ok(BandSignals { series })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::EmotionLabel;

    #[test]
    fn preprocess_fills_gaps_and_keeps_length() {
        let mut rec = Recording::from_rows(
            "s",
            256.0,
            (0..64).map(|i| [i as f64, 1.0, 2.0, (i % 3) as f64]).collect(),
        );
        rec.missing[10][1] = true;
        rec.samples[10][1] = 1e6;
        let out = preprocess_recording(&rec, &PreprocessConfig::default()).unwrap();
        assert_eq!(out.n_samples(), 64);
        assert!(validate_recording(&out, true).is_empty());
        assert!((out.samples[10][1] - 1.0).abs() < 1e-9);
        // a ramp is a polynomial, reproduced exactly
        for (i, row) in out.samples.iter().enumerate() {
            assert!((row[0] - i as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn decompose_gives_twenty_full_length_series() {
        let n = 1024;
        let channels: [Vec<f64>; 4] =
            std::array::from_fn(|c| (0..n).map(|i| ((i * (c + 1)) as f64 * 0.1).sin()).collect());
        let trial = Trial {
            recording: Recording::from_channels("s", 256.0, &channels),
            label: EmotionLabel::Sad,
            video_id: "v".into(),
            duration_s: 4.0,
        };
        let bank = BandFilterBank::new(256.0, 4).unwrap();
        let bands = decompose_bands(&trial, &bank).unwrap();
        assert_eq!(bands.count(), 20);
        assert!(bands.series.iter().flatten().all(|s| s.len() == n));

        let other = BandFilterBank::new(512.0, 4).unwrap();
        assert!(decompose_bands(&trial, &other).is_err());
    }
}
