//! Butterworth IIR design (bilinear transform) as cascaded biquads, with
//! forward-backward zero-phase filtering.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::types::BandDefinition;

pub const DEFAULT_FILTER_ORDER: usize = 4;

/// One second-order section, `a[0]` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, z: Complex64) -> Complex64 {
        let zi = z.inv();
        let zi2 = zi * zi;
        (self.b[0] + zi * self.b[1] + zi2 * self.b[2]) / (self.a[0] + zi * self.a[1] + zi2 * self.a[2])
    }

    fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }

    /// Transposed direct form II state after a long unit-step input.
    fn step_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        let z2 = self.b[2] - self.a[2] * g;
        let z1 = self.b[1] - self.a[1] * g + z2;
        [z1, z2]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
}

fn prototype_poles(order: usize) -> Vec<Complex64> {
    (0..order)
        .map(|k| {
            let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            Complex64::from_polar(1.0, theta)
        })
        .collect()
}

fn prewarp(f_hz: f64, fs: f64) -> f64 {
    2.0 * fs * (PI * f_hz / fs).tan()
}

fn bilinear(s: Complex64, fs: f64) -> Complex64 {
    let k = 2.0 * fs;
    (k + s) / (k - s)
}

/// Groups digital poles into denominators: conjugate pairs first, then
/// real poles two at a time.
fn pole_denominators(poles: &[Complex64]) -> Vec<[f64; 3]> {
    const EPS: f64 = 1e-12;
    let mut dens = Vec::new();
    let mut real = Vec::new();
    for p in poles {
        if p.im > EPS {
            dens.push([1.0, -2.0 * p.re, p.norm_sqr()]);
        } else if p.im.abs() <= EPS {
            real.push(p.re);
        }
    }
    for pair in real.chunks(2) {
        match *pair {
            [r1, r2] => dens.push([1.0, -(r1 + r2), r1 * r2]),
            [r] => dens.push([1.0, -r, 0.0]),
            _ => unreachable!(),
        }
    }
    dens
}

fn check_edge(f_hz: f64, fs: f64) -> Result<()> {
    if !(f_hz > 0.0 && f_hz < fs / 2.0) {
        return Err(Error::Config(format!(
            "cutoff {f_hz} Hz must lie strictly between 0 and Nyquist {} Hz",
            fs / 2.0
        )));
    }
    Ok(())
}

impl SosFilter {
    pub fn butter_lowpass(order: usize, cutoff_hz: f64, fs: f64) -> Result<SosFilter> {
        if order == 0 {
            return Err(Error::Config("filter order must be positive".into()));
        }
        check_edge(cutoff_hz, fs)?;
        let wc = prewarp(cutoff_hz, fs);
        let poles: Vec<_> = prototype_poles(order).into_iter().map(|p| bilinear(p * wc, fs)).collect();
        let sections = pole_denominators(&poles)
            .into_iter()
            .map(|a| {
                let b = if a[2] == 0.0 { [1.0, 1.0, 0.0] } else { [1.0, 2.0, 1.0] };
                Biquad { b, a }
            })
            .collect();
        let mut f = SosFilter { sections };
        f.normalize_at(Complex64::new(1.0, 0.0));
        Ok(f)
    }

    pub fn butter_bandpass(order: usize, low_hz: f64, high_hz: f64, fs: f64) -> Result<SosFilter> {
        if order == 0 {
            return Err(Error::Config("filter order must be positive".into()));
        }
        check_edge(low_hz, fs)?;
        check_edge(high_hz, fs)?;
        if low_hz >= high_hz {
            return Err(Error::Config(format!("band {low_hz}..{high_hz} Hz is empty")));
        }
        let (w1, w2) = (prewarp(low_hz, fs), prewarp(high_hz, fs));
        let bw = w2 - w1;
        let w0 = (w1 * w2).sqrt();
        let mut poles = Vec::with_capacity(2 * order);
        for p in prototype_poles(order) {
            let half = p * (bw / 2.0);
            let root = (half * half - w0 * w0).sqrt();
            poles.push(bilinear(half + root, fs));
            poles.push(bilinear(half - root, fs));
        }
        let sections = pole_denominators(&poles)
            .into_iter()
            .map(|a| Biquad { b: [1.0, 0.0, -1.0], a })
            .collect();
        let mut f = SosFilter { sections };
        // analog center w0 maps to this digital frequency
        let omega0 = 2.0 * (w0 / (2.0 * fs)).atan();
        f.normalize_at(Complex64::from_polar(1.0, omega0));
        Ok(f)
    }

    /// Low-pass when the band starts at 0 Hz, band-pass otherwise.
    pub fn for_band(band: &BandDefinition, fs: f64, order: usize) -> Result<SosFilter> {
        if band.high_hz >= fs / 2.0 {
            return Err(Error::Config(format!(
                "band {} upper edge {} Hz at or above Nyquist {} Hz",
                band.name.as_str(),
                band.high_hz,
                fs / 2.0
            )));
        }
        if band.low_hz <= 0.0 {
            SosFilter::butter_lowpass(order, band.high_hz, fs)
        } else {
            SosFilter::butter_bandpass(order, band.low_hz, band.high_hz, fs)
        }
    }

    fn normalize_at(&mut self, z: Complex64) {
        let gain = self.response_z(z).norm();
        if let Some(first) = self.sections.first_mut() {
            for b in &mut first.b {
                *b /= gain;
            }
        }
    }

    fn response_z(&self, z: Complex64) -> Complex64 {
        self.sections.iter().map(|s| s.response(z)).product()
    }

    /// Complex response at `f_hz` (single pass).
    pub fn frequency_response(&self, f_hz: f64, fs: f64) -> Complex64 {
        self.response_z(Complex64::from_polar(1.0, 2.0 * PI * f_hz / fs))
    }

    /// Edge padding used by [`SosFilter::filtfilt`].
    pub fn pad_len(&self) -> usize {
        3 * (2 * self.sections.len() + 1)
    }

    fn run(&self, x: &mut [f64], init: Option<f64>) {
        let mut level = init.unwrap_or(0.0);
        for s in &self.sections {
            let [mut z1, mut z2] = if init.is_some() {
                let st = s.step_state();
                [st[0] * level, st[1] * level]
            } else {
                [0.0, 0.0]
            };
            level *= s.dc_gain();
            let [b0, b1, b2] = s.b;
            let [_, a1, a2] = s.a;
            for v in x.iter_mut() {
                let xin = *v;
                let y = b0 * xin + z1;
                z1 = b1 * xin - a1 * y + z2;
                z2 = b2 * xin - a2 * y;
                *v = y;
            }
        }
    }

    /// Causal filtering from rest.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        self.run(&mut y, None);
        y
    }

    /// Zero-phase filtering: odd-reflection padding, forward pass, backward
    /// pass, each started from the steady state for the edge value.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>> {
        let pad = self.pad_len();
        let n = x.len();
        if n <= pad {
            return Err(Error::Length(format!(
                "signal of {n} samples too short for zero-phase filtering (needs > {pad})"
            )));
        }
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        let start = ext[0];
        self.run(&mut ext, Some(start));
        ext.reverse();
        let start = ext[0];
        self.run(&mut ext, Some(start));
        ext.reverse();
        Ok(ext[pad..pad + n].to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::BANDS;

    const FS: f64 = 256.0;

    fn gain_db(f: &SosFilter, hz: f64) -> f64 {
        20.0 * f.frequency_response(hz, FS).norm().log10()
    }

    #[test]
    fn lowpass_has_unit_dc_gain_and_minus_3db_at_cutoff() {
        let f = SosFilter::butter_lowpass(4, 4.0, FS).unwrap();
        assert_eq!(f.sections.len(), 2);
        assert!((f.frequency_response(0.0, FS).norm() - 1.0).abs() < 1e-12);
        assert!((gain_db(&f, 4.0) + 3.0103).abs() < 0.01);
        assert!(gain_db(&f, 16.0) < -45.0);
    }

    #[test]
    fn bandpass_edges_are_minus_3db() {
        let f = SosFilter::butter_bandpass(4, 8.0, 12.0, FS).unwrap();
        assert_eq!(f.sections.len(), 4);
        assert!((gain_db(&f, 8.0) + 3.0103).abs() < 0.01);
        assert!((gain_db(&f, 12.0) + 3.0103).abs() < 0.01);
        assert!(gain_db(&f, 10.0).abs() < 0.05);
        assert!(gain_db(&f, 21.0) < -40.0);
    }

    #[test]
    fn odd_order_lowpass_gets_first_order_section() {
        let f = SosFilter::butter_lowpass(3, 10.0, FS).unwrap();
        assert_eq!(f.sections.len(), 2);
        assert!((gain_db(&f, 10.0) + 3.0103).abs() < 0.01);
    }

    #[test]
    fn all_band_filters_are_stable() {
        for band in BANDS {
            let f = SosFilter::for_band(&band, FS, DEFAULT_FILTER_ORDER).unwrap();
            for s in &f.sections {
                // roots of z^2 + a1 z + a2 inside the unit circle
                assert!(s.a[2].abs() < 1.0 && s.a[1].abs() < 1.0 + s.a[2], "{band:?}");
            }
        }
    }

    #[test]
    fn band_above_nyquist_is_rejected() {
        let band = BandDefinition { name: crate::types::BandName::Gamma, low_hz: 30.0, high_hz: 50.0 };
        assert!(matches!(SosFilter::for_band(&band, 90.0, 4), Err(Error::Config(_))));
        assert!(SosFilter::butter_bandpass(4, 12.0, 8.0, FS).is_err());
    }

    #[test]
    fn filtfilt_of_zero_is_zero() {
        let f = SosFilter::for_band(&BANDS[2], FS, 4).unwrap();
        assert!(f.filtfilt(&[0.0; 300]).unwrap().iter().all(|&v| v == 0.0));
        assert!(matches!(f.filtfilt(&[0.0; 27]), Err(Error::Length(_))));
    }
}
