//! Seeded synthetic EEG sessions in the recording/manifest file formats.
//!
//! Each trial channel is a sum of one sinusoid per band (at the band
//! center, random phase) scaled by a per-label amplitude profile, with a
//! per-label hemispheric power offset, plus 1/f noise and random sample
//! dropout. The stimulus window is preceded and followed by noise-only
//! rest segments, which the manifest onset/duration cut away.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{stimulus_samples, write_recording, ManifestEntry, ManifestStage, SessionManifest};
use crate::seed;
use crate::types::{ChannelId, EmotionLabel, Provenance, Recording, BANDS, BAND_COUNT, CHANNEL_COUNT, LABEL_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassProfile {
    /// Sinusoid amplitude per band (delta..gamma), µV.
    pub amplitudes: [f64; BAND_COUNT],
    /// Hemispheric power offset `a`: left channels carry `1 + a` and right
    /// channels `1 - a` times the nominal signal power.
    pub asymmetry: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_subjects: usize,
    pub videos_per_quadrant: usize,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    /// Indexed by label (quadrant order).
    pub profiles: [ClassProfile; LABEL_COUNT],
    /// Standard deviation of the 1/f noise, µV.
    pub noise_std: f64,
    /// Per-cell dropout probability.
    pub missing_rate: f64,
    /// Log-normal sigma of the per-subject gain.
    pub subject_gain_jitter: f64,
    /// Relative jitter of each band amplitude per trial.
    pub trial_jitter: f64,
    pub lead_in_s: f64,
    pub tail_s: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_subjects: 40,
            videos_per_quadrant: 4,
            duration_s: 30.0,
            sample_rate_hz: 256.0,
            profiles: [
                ClassProfile { amplitudes: [4.0, 3.0, 12.0, 4.0, 2.0], asymmetry: 0.3 },
                ClassProfile { amplitudes: [4.0, 3.0, 4.0, 12.0, 4.0], asymmetry: -0.3 },
                ClassProfile { amplitudes: [10.0, 6.0, 6.0, 3.0, 1.5], asymmetry: -0.3 },
                ClassProfile { amplitudes: [5.0, 9.0, 8.0, 3.0, 1.5], asymmetry: 0.3 },
            ],
            noise_std: 2.0,
            missing_rate: 0.001,
            subject_gain_jitter: 0.15,
            trial_jitter: 0.1,
            lead_in_s: 1.0,
            tail_s: 0.5,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_subjects == 0 || self.videos_per_quadrant == 0 {
            return bad("need at least one subject and one video per quadrant".into());
        }
        if !(self.duration_s > 0.0 && self.lead_in_s >= 0.0 && self.tail_s >= 0.0) {
            return bad("durations must be positive".into());
        }
        if BANDS.iter().any(|b| b.high_hz >= self.sample_rate_hz / 2.0) {
            return bad(format!("sample rate {} Hz too low for the gamma band", self.sample_rate_hz));
        }
        if !(0.0..0.1).contains(&self.missing_rate) {
            return bad(format!("missing rate {} outside [0, 0.1)", self.missing_rate));
        }
        for p in &self.profiles {
            if p.amplitudes.iter().any(|&a| !(a >= 0.0)) {
                return bad("band amplitudes must be non-negative".into());
            }
            if !(p.asymmetry > -1.0 && p.asymmetry < 1.0) {
                return bad(format!("asymmetry {} outside (-1, 1)", p.asymmetry));
            }
        }
        if !(self.noise_std >= 0.0 && self.subject_gain_jitter >= 0.0 && self.trial_jitter >= 0.0) {
            return bad("noise and jitter scales must be non-negative".into());
        }
        Ok(())
    }

    pub fn trial_count(&self) -> usize {
        self.n_subjects * LABEL_COUNT * self.videos_per_quadrant
    }
}

pub fn subject_id(subject: usize) -> String {
    format!("s{:02}", subject + 1)
}

pub fn video_id(label: EmotionLabel, video: usize) -> String {
    format!("q{}v{}", label.quadrant(), video + 1)
}

/// Gaussian noise with a 1/f power spectrum, scaled to `std`.
fn pink_noise(n: usize, fs: f64, std: f64, rng: &mut impl Rng) -> Vec<f64> {
    if std == 0.0 || n < 2 {
        return vec![0.0; n];
    }
    let mut buf: Vec<Complex64> =
        (0..n).map(|_| Complex64::new(StandardNormal.sample(rng), 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    buf[0] = Complex64::new(0.0, 0.0);
    for k in 1..n {
        let bin = k.min(n - k);
        let f = (bin as f64 * fs / n as f64).max(0.5);
        buf[k] *= 1.0 / f.sqrt();
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let x: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let mean = x.iter().sum::<f64>() / n as f64;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    x.iter().map(|v| (v - mean) * std / sd).collect()
}

fn quantize(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

/// One raw recording plus its manifest entry. Deterministic in
/// `(cfg.seed, subject, label, video)`.
pub fn generate_trial(
    label: EmotionLabel,
    subject: usize,
    video: usize,
    cfg: &SynthConfig,
) -> Result<(Recording, ManifestEntry)> {
    cfg.validate()?;
    let fs = cfg.sample_rate_hz;
    let lead = (cfg.lead_in_s * fs).round() as usize;
    let tail = (cfg.tail_s * fs).round() as usize;
    let n_stim = stimulus_samples(cfg.duration_s, fs);
    let total = lead + n_stim + tail;

    let subject_seed = seed::derive(cfg.seed, &[seed::stream::SYNTH, subject as u64, u64::MAX]);
    let mut srng = seed::rng(subject_seed);
    let gain = Normal::new(0.0, cfg.subject_gain_jitter)
        .map(|d| d.sample(&mut srng).exp())
        .unwrap_or(1.0);

    let trial_seed = seed::derive(
        cfg.seed,
        &[seed::stream::SYNTH, subject as u64, label.index() as u64, video as u64],
    );
    let mut rng = seed::rng(trial_seed);
    let profile = &cfg.profiles[label.index()];
    let mut amps = [0.0; BAND_COUNT];
    let mut phases = [0.0; BAND_COUNT];
    for b in 0..BAND_COUNT {
        let jitter: f64 = StandardNormal.sample(&mut rng);
        amps[b] = (profile.amplitudes[b] * gain * (1.0 + cfg.trial_jitter * jitter)).max(0.0);
        phases[b] = rng.random_range(0.0..2.0 * PI);
    }

    let mut channels: [Vec<f64>; CHANNEL_COUNT] = Default::default();
    for ch in ChannelId::ALL {
        let side = if ch.is_left() { 1.0 + profile.asymmetry } else { 1.0 - profile.asymmetry };
        let scale = side.sqrt();
        let offsets: [f64; BAND_COUNT] = std::array::from_fn(|_| rng.random_range(-0.3..0.3));
        let mut x = pink_noise(total, fs, cfg.noise_std, &mut rng);
        for (i, v) in x[lead..lead + n_stim].iter_mut().enumerate() {
            let t = i as f64 / fs;
            let s: f64 = (0..BAND_COUNT)
                .map(|b| amps[b] * (2.0 * PI * BANDS[b].center_hz() * t + phases[b] + offsets[b]).sin())
                .sum();
            *v += scale * s;
        }
        channels[ch.index()] = x.into_iter().map(quantize).collect();
    }

    let sid = subject_id(subject);
    let mut rec = Recording::from_channels(sid.clone(), fs, &channels);
    if cfg.missing_rate > 0.0 {
        for (row, mask) in rec.samples.iter_mut().zip(rec.missing.iter_mut()) {
            for (v, m) in row.iter_mut().zip(mask.iter_mut()) {
                if rng.random::<f64>() < cfg.missing_rate {
                    *m = true;
                    *v = 0.0;
                }
            }
        }
    }
    let vid = video_id(label, video);
    let entry = ManifestEntry {
        subject_id: sid.clone(),
        video_id: vid.clone(),
        session: video as u32 + 1,
        label,
        onset: lead,
        duration_s: cfg.duration_s,
        recording: PathBuf::from("recordings").join(format!("{sid}_{vid}.csv")),
    };
    Ok((rec, entry))
}

/// Writes `recordings/*.csv` and `manifest.json` under `out_dir`.
///
/// Entry order: subject, then session (video ordinal), then quadrant.
pub fn generate_dataset(cfg: &SynthConfig, out_dir: &Path) -> Result<SessionManifest> {
    cfg.validate()?;
    let rec_dir = out_dir.join("recordings");
    fs::create_dir_all(&rec_dir).map_err(|e| Error::io(&rec_dir, e))?;

    let mut jobs = Vec::with_capacity(cfg.trial_count());
    for s in 0..cfg.n_subjects {
        for v in 0..cfg.videos_per_quadrant {
            for label in EmotionLabel::ALL {
                jobs.push((s, v, label));
            }
        }
    }
    let entries = jobs
        .par_iter()
        .map(|&(s, v, label)| {
            let (rec, entry) = generate_trial(label, s, v, cfg)?;
            let path = out_dir.join(&entry.recording);
            fs::write(&path, write_recording(&rec)).map_err(|e| Error::io(&path, e))?;
            Ok(entry)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut manifest =
        SessionManifest::new(ManifestStage::Raw, Provenance::Synthetic { seed: cfg.seed }, entries);
    manifest.config = Some(serde_json::json!({ "synth": cfg }));
    let path = out_dir.join("manifest.json");
    fs::write(&path, manifest.to_json()?).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
