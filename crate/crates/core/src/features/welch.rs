//! Welch power spectral density estimate.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchSpec {
    /// Samples per segment (also the FFT length).
    pub segment_len: usize,
    /// Fractional overlap between consecutive segments, `0 <= overlap < 1`.
    pub overlap: f64,
    /// Frequency range of the PSD mean/variance statistics, Hz.
    pub stats_range_hz: (f64, f64),
}

impl Default for WelchSpec {
    fn default() -> Self {
        WelchSpec { segment_len: 512, overlap: 0.5, stats_range_hz: (0.5, 50.0) }
    }
}

impl WelchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.segment_len < 2 {
            return Err(Error::Config("Welch segment must hold at least 2 samples".into()));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::Config(format!("overlap {} outside [0, 1)", self.overlap)));
        }
        let (lo, hi) = self.stats_range_hz;
        if !(lo >= 0.0 && lo < hi) {
            return Err(Error::Config(format!("bad PSD statistics range {lo}..{hi} Hz")));
        }
        Ok(())
    }

    pub fn step(&self) -> usize {
        let noverlap = (self.overlap * self.segment_len as f64).floor() as usize;
        (self.segment_len - noverlap).max(1)
    }
}

/// One-sided power spectral density, µV²/Hz on an ascending grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
}

impl Spectrum {
    pub fn resolution(&self) -> f64 {
        match self.freqs.as_slice() {
            [a, b, ..] => b - a,
            _ => 0.0,
        }
    }

    /// Integral of the piecewise-linear PSD over `[lo, hi]` (trapezoidal
    /// rule on the grid, interpolated at partial end bins).
    pub fn integrate(&self, lo: f64, hi: f64) -> Result<f64> {
        let (f, p) = (&self.freqs, &self.power);
        let (first, last) = match (f.first(), f.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(Error::Range("empty spectrum".into())),
        };
        if lo < first || hi > last + 1e-9 || lo > hi {
            return Err(Error::Range(format!(
                "interval {lo}..{hi} Hz outside spectrum support {first}..{last} Hz"
            )));
        }
        let hi = hi.min(last);
        let mut total = 0.0;
        for i in 0..f.len().saturating_sub(1) {
            let (f0, f1) = (f[i], f[i + 1]);
            let a = lo.max(f0);
            let b = hi.min(f1);
            if b <= a {
                continue;
            }
            let at = |x: f64| p[i] + (p[i + 1] - p[i]) * (x - f0) / (f1 - f0);
            total += 0.5 * (at(a) + at(b)) * (b - a);
        }
        Ok(total)
    }
}

/// Welch estimator with a cached FFT plan and periodic Hann taper. Each
/// segment has its mean removed before tapering.
pub struct WelchEstimator {
    spec: WelchSpec,
    window: Vec<f64>,
    window_power: f64,
    fft: Arc<dyn Fft<f64>>,
}

impl WelchEstimator {
    pub fn new(spec: WelchSpec) -> Result<WelchEstimator> {
        spec.validate()?;
        let n = spec.segment_len;
        let window: Vec<f64> =
            (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect();
        let window_power = window.iter().map(|w| w * w).sum();
        let fft = FftPlanner::new().plan_fft_forward(n);
        Ok(WelchEstimator { spec, window, window_power, fft })
    }

    pub fn spec(&self) -> &WelchSpec {
        &self.spec
    }

    pub fn estimate(&self, signal: &[f64], fs: f64) -> Result<Spectrum> {
        let n = self.spec.segment_len;
        if signal.len() < n {
            return Err(Error::Length(format!(
                "signal of {} samples shorter than Welch segment {n}",
                signal.len()
            )));
        }
        let step = self.spec.step();
        let n_bins = n / 2 + 1;
        let mut acc = vec![0.0; n_bins];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let mut segments = 0usize;
        let mut start = 0;
        while start + n <= signal.len() {
            let seg = &signal[start..start + n];
            let mean = seg.iter().sum::<f64>() / n as f64;
            for ((slot, &x), &w) in buf.iter_mut().zip(seg).zip(&self.window) {
                *slot = Complex64::new((x - mean) * w, 0.0);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (a, c) in acc.iter_mut().zip(&buf) {
                *a += c.norm_sqr();
            }
            segments += 1;
            start += step;
        }

        let scale = 1.0 / (fs * self.window_power * segments as f64);
        let power = acc
            .iter()
            .enumerate()
            .map(|(k, &a)| {
                let one_sided = if k == 0 || (n % 2 == 0 && k == n / 2) { 1.0 } else { 2.0 };
                a * scale * one_sided
            })
            .collect();
        let freqs = (0..n_bins).map(|k| k as f64 * fs / n as f64).collect();
        Ok(Spectrum { freqs, power })
    }
}

pub fn welch_psd(signal: &[f64], fs: f64, spec: &WelchSpec) -> Result<Spectrum> {
    WelchEstimator::new(*spec)?.estimate(signal, fs)
}
