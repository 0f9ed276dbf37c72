//! Savitzky-Golay smoothing.
//!
//! Weights come from Gram (discrete orthogonal) polynomials over the
//! window positions `-m..=m`, which gives the least-squares fit evaluated
//! at any position `t` in closed form without solving normal equations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SavGolSpec {
    pub window_len: usize,
    pub poly_order: usize,
}

impl Default for SavGolSpec {
    fn default() -> Self {
        SavGolSpec { window_len: 11, poly_order: 3 }
    }
}

impl SavGolSpec {
    pub fn new(window_len: usize, poly_order: usize) -> Result<SavGolSpec> {
        let spec = SavGolSpec { window_len, poly_order };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_len < 3 || self.window_len % 2 == 0 {
            return Err(Error::Config(format!(
                "Savitzky-Golay window must be odd and >= 3, got {}",
                self.window_len
            )));
        }
        if self.poly_order >= self.window_len {
            return Err(Error::Config(format!(
                "polynomial order {} must be below window {}",
                self.poly_order, self.window_len
            )));
        }
        Ok(())
    }

    pub fn half_width(&self) -> usize {
        self.window_len / 2
    }
}

/// Gram polynomial `P_k^m(i)` for all `k <= order`.
fn gram_polynomials(i: f64, m: usize, order: usize) -> Vec<f64> {
    let m = m as f64;
    let mut p = Vec::with_capacity(order + 1);
    p.push(1.0);
    if order >= 1 {
        p.push(i / m);
    }
    for k in 2..=order {
        let kf = k as f64;
        let denom = kf * (2.0 * m - kf + 1.0);
        let a = 2.0 * (2.0 * kf - 1.0) / denom;
        let b = (kf - 1.0) * (2.0 * m + kf) / denom;
        p.push(a * i * p[k - 1] - b * p[k - 2]);
    }
    p
}

/// `a (a-1) ... (a-b+1)`
fn falling_factorial(a: f64, b: usize) -> f64 {
    (0..b).map(|j| a - j as f64).product()
}

/// Least-squares weights for evaluating the fitted polynomial at window
/// position `t` (`-m <= t <= m`). Element `j` multiplies sample `j - m`.
pub fn savgol_weights_at(spec: &SavGolSpec, t: isize) -> Result<Vec<f64>> {
    spec.validate()?;
    let m = spec.half_width();
    let n = spec.poly_order;
    let two_m = 2.0 * m as f64;
    let norm: Vec<f64> = (0..=n)
        .map(|k| {
            (2 * k + 1) as f64 * falling_factorial(two_m, k)
                / falling_factorial(two_m + k as f64 + 1.0, k + 1)
        })
        .collect();
    let pt = gram_polynomials(t as f64, m, n);
    let weights = (-(m as isize)..=m as isize)
        .map(|i| {
            let pi = gram_polynomials(i as f64, m, n);
            (0..=n).map(|k| norm[k] * pi[k] * pt[k]).sum()
        })
        .collect();
    Ok(weights)
}

/// Center-point convolution weights (length `window_len`).
pub fn savgol_coefficients(spec: &SavGolSpec) -> Result<Vec<f64>> {
    savgol_weights_at(spec, 0)
}

/// Smooths `signal`. Interior points use the center weights; the first and
/// last `m` points evaluate the fit over the first/last full window at
/// their own position, so the output length equals the input length.
pub fn savgol_smooth(signal: &[f64], spec: &SavGolSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let w = spec.window_len;
    let m = spec.half_width();
    let n = signal.len();
    if n < w {
        return Err(Error::Length(format!("signal of {n} samples shorter than window {w}")));
    }
    let dot = |weights: &[f64], start: usize| -> f64 {
        weights.iter().zip(&signal[start..start + w]).map(|(a, b)| a * b).sum()
    };

    let center = savgol_coefficients(spec)?;
    let mut out = vec![0.0; n];
    for i in m..n - m {
        out[i] = dot(&center, i - m);
    }
    for k in 0..m {
        let head = savgol_weights_at(spec, k as isize - m as isize)?;
        out[k] = dot(&head, 0);
        let tail = savgol_weights_at(spec, (m - k) as isize)?;
        out[n - 1 - k] = dot(&tail, n - w);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rejects_bad_specs() {
        assert!(SavGolSpec::new(10, 3).is_err());
        assert!(SavGolSpec::new(1, 0).is_err());
        assert!(SavGolSpec::new(5, 5).is_err());
        assert!(SavGolSpec::new(5, 4).is_ok());
        assert_eq!(SavGolSpec::default(), SavGolSpec { window_len: 11, poly_order: 3 });
    }

    #[test]
    fn window5_order2_textbook_weights() {
        let w = savgol_coefficients(&SavGolSpec::new(5, 2).unwrap()).unwrap();
        let want = [-3.0, 12.0, 17.0, 12.0, -3.0].map(|v| v / 35.0);
        for (a, b) in w.iter().zip(want) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn weights_sum_to_one_at_every_position() {
        for (win, ord) in [(3, 0), (5, 2), (7, 4), (11, 3), (21, 5)] {
            let spec = SavGolSpec::new(win, ord).unwrap();
            let m = spec.half_width() as isize;
            for t in -m..=m {
                let s: f64 = savgol_weights_at(&spec, t).unwrap().iter().sum();
                assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn constant_signal_is_unchanged() {
        let out = savgol_smooth(&[4.25; 40], &SavGolSpec::default()).unwrap();
        for v in out {
            assert_abs_diff_eq!(v, 4.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn impulse_response_center() {
        let mut x = vec![0.0; 11];
        x[5] = 1.0;
        let out = savgol_smooth(&x, &SavGolSpec::default()).unwrap();
        assert_abs_diff_eq!(out[5], 89.0 / 429.0, epsilon = 1e-14);
    }

    #[test]
    fn too_short_signal() {
        assert!(matches!(
            savgol_smooth(&[1.0; 10], &SavGolSpec::default()),
            Err(Error::Length(_))
        ));
    }
}
