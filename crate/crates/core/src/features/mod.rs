//! Frequency-domain features: PSD statistics, hemispheric correlation,
//! DASM/RASM asymmetry and per-band power, assembled into a
//! [`FeatureVector`].

pub mod matrix;
pub mod standardize;
pub mod welch;

use serde::{Deserialize, Serialize};

pub use matrix::{read_feature_matrix, write_feature_matrix, FeatureMatrix};
pub use standardize::Standardizer;
pub use welch::{welch_psd, Spectrum, WelchEstimator, WelchSpec};

use crate::error::{Error, Result};
use crate::types::{
    BandDefinition, ChannelId, FeatureVector, Recording, Trial, BANDS, CHANNEL_COUNT,
    FEATURE_COUNT, HEMISPHERIC_PAIRS,
};

/// Mean and population variance of the PSD values whose bins fall in
/// `[lo, hi]`.
pub fn psd_stats(spec: &Spectrum, range_hz: (f64, f64)) -> Result<(f64, f64)> {
    let (lo, hi) = range_hz;
    let values: Vec<f64> = spec
        .freqs
        .iter()
        .zip(&spec.power)
        .filter(|(&f, _)| f >= lo && f <= hi)
        .map(|(_, &p)| p)
        .collect();
    if values.is_empty() {
        return Err(Error::Range(format!("no spectrum bins in {lo}..{hi} Hz")));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok((mean, var))
}

pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Length(format!("series lengths {} and {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::Length("correlation needs at least 2 samples".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant series".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Mean squared amplitude, µV².
pub fn absolute_power(signal: &[f64]) -> f64 {
    if signal.is_empty() {
        return 0.0;
    }
    signal.iter().map(|v| v * v).sum::<f64>() / signal.len() as f64
}

/// Differential asymmetry, left minus right.
pub fn dasm(left_power: f64, right_power: f64) -> f64 {
    left_power - right_power
}

/// Rational asymmetry, left over right.
pub fn rasm(left_power: f64, right_power: f64) -> Result<f64> {
    if right_power <= 0.0 {
        return Err(Error::Division(format!("right-channel power {right_power}")));
    }
    Ok(left_power / right_power)
}

/// Integrated PSD over the band edges.
pub fn band_power(spec: &Spectrum, band: &BandDefinition) -> Result<f64> {
    spec.integrate(band.low_hz, band.high_hz)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct FeatureConfig {
    pub welch: WelchSpec,
}

/// Extracts feature vectors for trials sharing one sample rate.
///
/// Every feature derives from the smoothed broadband channels. Band power
/// `(channel, band)` integrates the channel's PSD over the band edges, so
/// the five bands partition (up to the 7-8 Hz gap) the 0-50 Hz power.
pub struct FeatureExtractor {
    cfg: FeatureConfig,
    welch: WelchEstimator,
    sample_rate_hz: f64,
}

impl FeatureExtractor {
    pub fn new(cfg: FeatureConfig, sample_rate_hz: f64) -> Result<FeatureExtractor> {
        let top = BANDS[BANDS.len() - 1].high_hz;
        if !(sample_rate_hz > 2.0 * top) {
            return Err(Error::Config(format!(
                "sample rate {sample_rate_hz} Hz cannot resolve bands up to {top} Hz"
            )));
        }
        Ok(FeatureExtractor { cfg, welch: WelchEstimator::new(cfg.welch)?, sample_rate_hz })
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn extract(&self, trial: &Trial) -> Result<FeatureVector> {
        self.extract_recording(&trial.recording)
    }

    pub fn extract_recording(&self, rec: &Recording) -> Result<FeatureVector> {
        if rec.missing_count() > 0 {
            return Err(Error::Format("recording still has missing samples".into()));
        }
        let fs = rec.sample_rate_hz;
        if fs != self.sample_rate_hz {
            return Err(Error::Config(format!(
                "recording at {fs} Hz given to an extractor built for {} Hz",
                self.sample_rate_hz
            )));
        }
        let channels = rec.channels();
        let mut v = [0.0; FEATURE_COUNT];

        for ch in ChannelId::ALL {
            let spec = self.welch.estimate(&channels[ch.index()], fs)?;
            let (mean, var) = psd_stats(&spec, self.cfg.welch.stats_range_hz)?;
            v[FeatureVector::psd_mean_index(ch)] = mean;
            v[FeatureVector::psd_var_index(ch)] = var;
            for (b, band) in BANDS.iter().enumerate() {
                v[FeatureVector::band_power_index(ch, b)] = band_power(&spec, band)?;
            }
        }

        let power: [f64; CHANNEL_COUNT] = std::array::from_fn(|c| absolute_power(&channels[c]));
        for (k, (l, r)) in HEMISPHERIC_PAIRS.into_iter().enumerate() {
            v[FeatureVector::CORRELATION.start + k] =
                pearson_correlation(&channels[l.index()], &channels[r.index()])
                    .map_err(|e| Error::UndefinedCorrelation(format!("{l}/{r}: {e}")))?;
            let (pl, pr) = (power[l.index()], power[r.index()]);
            v[FeatureVector::DASM.start + k] = dasm(pl, pr);
            v[FeatureVector::RASM.start + k] =
                rasm(pl, pr).map_err(|e| Error::Division(format!("{l}/{r}: {e}")))?;
        }
        Ok(FeatureVector(v))
    }
}

/// One-shot extraction with default spectral settings.
pub fn extract_features(trial: &Trial) -> Result<FeatureVector> {
    FeatureExtractor::new(FeatureConfig::default(), trial.recording.sample_rate_hz)?.extract(trial)
}
