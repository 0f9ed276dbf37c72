//! Binary soft-margin SVM trained with sequential minimal optimization.
//!
//! Dual problem:
//!
//! ```text
//! maximize   W(a) = sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij
//! subject to 0 <= a_i <= C,  sum_i a_i y_i = 0
//! ```
//!
//! Each step optimizes a pair `(a_i, a_j)` analytically along the equality
//! constraint, which keeps both constraints satisfied. The first index
//! sweeps over KKT violators; the second is drawn from a seeded generator,
//! falling through the remaining indices in order if the drawn one makes
//! no progress.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::kernel::KernelConfig;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoParams {
    /// Box constraint `C`.
    pub c: f64,
    /// KKT tolerance.
    pub tol: f64,
    /// Consecutive sweeps without an accepted update (with violations still
    /// above `tol`) before giving up.
    pub max_passes: usize,
    /// Hard cap on sweeps.
    pub max_sweeps: usize,
    pub seed: u64,
}

impl Default for SmoParams {
    fn default() -> Self {
        SmoParams { c: 1.0, tol: 1e-3, max_passes: 100, max_sweeps: 10_000, seed: 0 }
    }
}

impl SmoParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_passes == 0 || self.max_sweeps == 0 {
            return Err(Error::Config("max_passes and max_sweeps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    /// All KKT violations are within `tol`.
    pub converged: bool,
    pub max_violation: f64,
    pub sweeps: usize,
    pub updates: usize,
    pub objective: f64,
}

/// Dual objective `W(alpha)` for a row-major `n x n` Gram matrix.
pub fn dual_objective(gram: &[f64], y: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        let row = &gram[i * n..(i + 1) * n];
        let s: f64 = (0..n).map(|j| alpha[j] * y[j] * row[j]).sum();
        quad += alpha[i] * y[i] * s;
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Largest KKT violation given the kernel expansion `g_i = sum_j a_j y_j K_ij`.
pub fn kkt_violation(alpha: &[f64], g: &[f64], y: &[f64], bias: f64, c: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..y.len() {
        let r = y[i] * (g[i] + bias) - 1.0;
        if alpha[i] < c {
            worst = worst.max(-r);
        }
        if alpha[i] > 0.0 {
            worst = worst.max(r);
        }
    }
    worst
}

struct Solver<'a> {
    gram: &'a [f64],
    y: &'a [f64],
    n: usize,
    c: f64,
    alpha: Vec<f64>,
    g: Vec<f64>,
    bias: f64,
}

impl Solver<'_> {
    #[inline]
    fn k(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.n + j]
    }

    #[inline]
    fn error(&self, i: usize) -> f64 {
        self.g[i] + self.bias - self.y[i]
    }

    fn snap(&self, a: f64) -> f64 {
        let eps = 1e-12 * self.c;
        if a < eps {
            0.0
        } else if a > self.c - eps {
            self.c
        } else {
            a
        }
    }

    fn take_step(&mut self, i: usize, j: usize) -> bool {
        let (ai, aj) = (self.alpha[i], self.alpha[j]);
        let (yi, yj) = (self.y[i], self.y[j]);
        let (ei, ej) = (self.error(i), self.error(j));
        let c = self.c;
        let (lo, hi) = if yi != yj {
            ((aj - ai).max(0.0), (c + aj - ai).min(c))
        } else {
            ((ai + aj - c).max(0.0), (ai + aj).min(c))
        };
        if hi - lo < 1e-12 * c {
            return false;
        }
        let (kii, kjj, kij) = (self.k(i, i), self.k(j, j), self.k(i, j));
        let eta = 2.0 * kij - kii - kjj;
        if eta >= -1e-12 {
            return false;
        }
        let aj_new = self.snap((aj - yj * (ei - ej) / eta).clamp(lo, hi));
        if (aj_new - aj).abs() < 1e-9 * (aj_new + aj + 1e-9) {
            return false;
        }
        let ai_new = self.snap(ai + yi * yj * (aj - aj_new));
        let (dai, daj) = (ai_new - ai, aj_new - aj);

        let b1 = self.bias - ei - yi * dai * kii - yj * daj * kij;
        let b2 = self.bias - ej - yi * dai * kij - yj * daj * kjj;
        self.bias = if ai_new > 0.0 && ai_new < c {
            b1
        } else if aj_new > 0.0 && aj_new < c {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        self.alpha[i] = ai_new;
        self.alpha[j] = aj_new;
        let n = self.n;
        let (ri, rj) = (&self.gram[i * n..(i + 1) * n], &self.gram[j * n..(j + 1) * n]);
        let (si, sj) = (yi * dai, yj * daj);
        for ((g, ki), kj) in self.g.iter_mut().zip(ri).zip(rj) {
            *g += si * ki + sj * kj;
        }

        debug_assert!(self.alpha.iter().all(|&a| (0.0..=c).contains(&a)));
        debug_assert!(
            self.alpha.iter().zip(self.y).map(|(a, y)| a * y).sum::<f64>().abs() <= 1e-6 * c.max(1.0) * n as f64
        );
        true
    }

    /// Bias from the free multipliers, or the midpoint of the interval the
    /// bound ones allow.
    fn refit_bias(&mut self) {
        let c = self.c;
        let (mut sum, mut count) = (0.0, 0usize);
        for i in 0..self.n {
            if self.alpha[i] > 0.0 && self.alpha[i] < c {
                sum += self.y[i] - self.g[i];
                count += 1;
            }
        }
        if count > 0 {
            self.bias = sum / count as f64;
            return;
        }
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..self.n {
            let bound = self.y[i] - self.g[i];
            let at_zero = self.alpha[i] == 0.0;
            // alpha = 0 needs y f >= 1, alpha = C needs y f <= 1
            if (self.y[i] > 0.0) == at_zero {
                lo = lo.max(bound);
            } else {
                hi = hi.min(bound);
            }
        }
        self.bias = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo,
            (false, true) => hi,
            (false, false) => self.bias,
        };
    }

    fn violation(&self) -> f64 {
        kkt_violation(&self.alpha, &self.g, self.y, self.bias, self.c)
    }
}

/// Solves the dual for a precomputed row-major Gram matrix.
///
/// When `trace` is given, the dual objective after every accepted pair
/// update is appended to it.
pub fn solve_dual(
    gram: &[f64],
    y: &[f64],
    params: &SmoParams,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<DualSolution> {
    params.validate()?;
    let n = y.len();
    if gram.len() != n * n {
        return Err(Error::Dimension { expected: n * n, actual: gram.len() });
    }
    if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(Error::Training(format!("binary labels must be +1/-1, got {bad}")));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::Training("both classes must be present".into()));
    }

    let mut s = Solver { gram, y, n, c: params.c, alpha: vec![0.0; n], g: vec![0.0; n], bias: 0.0 };
    let mut rng = seed::rng(params.seed);
    let tol = params.tol;
    let (mut sweeps, mut updates, mut stalls) = (0, 0, 0);
    let mut converged = false;

    while sweeps < params.max_sweeps {
        sweeps += 1;
        let mut changed = 0;
        for i in 0..n {
            let r = y[i] * s.error(i);
            let violates = (r < -tol && s.alpha[i] < s.c) || (r > tol && s.alpha[i] > 0.0);
            if !violates {
                continue;
            }
            let start = rng.random_range(0..n - 1);
            for t in 0..n - 1 {
                let j = (i + 1 + (start + t) % (n - 1)) % n;
                if s.take_step(i, j) {
                    changed += 1;
                    updates += 1;
                    if let Some(tr) = trace.as_deref_mut() {
                        tr.push(dual_objective(gram, y, &s.alpha));
                    }
                    break;
                }
            }
        }
        if changed == 0 {
            s.refit_bias();
            if s.violation() <= tol {
                converged = true;
                break;
            }
            stalls += 1;
            if stalls >= params.max_passes {
                break;
            }
        } else {
            stalls = 0;
        }
    }
    if !converged {
        s.refit_bias();
        converged = s.violation() <= tol;
    }
    let max_violation = s.violation();
    let objective = dual_objective(gram, y, &s.alpha);
    Ok(DualSolution { alpha: s.alpha, bias: s.bias, converged, max_violation, sweeps, updates, objective })
}

/// A trained binary SVM. `coef[i]` is `alpha_i * y_i` for support vector `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryModel {
    pub kernel: KernelConfig,
    pub c: f64,
    pub support_vectors: Vec<Vec<f64>>,
    pub coef: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub max_violation: f64,
}

impl BinaryModel {
    /// Signed decision value `sum_i coef_i K(sv_i, x) + b`.
    pub fn decision_value(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coef)
            .map(|(sv, c)| c * self.kernel.apply(sv, x))
            .sum::<f64>()
            + self.bias
    }
}

pub fn predict_binary(model: &BinaryModel, x: &[f64]) -> f64 {
    model.decision_value(x)
}

pub fn flat_gram(x: &[Vec<f64>], kernel: &KernelConfig) -> Vec<f64> {
    let n = x.len();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let k = kernel.apply(&x[i], &x[j]);
            g[i * n + j] = k;
            g[j * n + i] = k;
        }
    }
    g
}

/// Trains on rows `x` with labels `y` in {-1, +1}.
pub fn smo_train_binary(
    x: &[Vec<f64>],
    y: &[f64],
    kernel: &KernelConfig,
    params: &SmoParams,
) -> Result<BinaryModel> {
    kernel.validate()?;
    if x.len() != y.len() {
        return Err(Error::Dimension { expected: x.len(), actual: y.len() });
    }
    if let Some(first) = x.first() {
        if let Some(bad) = x.iter().find(|r| r.len() != first.len()) {
            return Err(Error::Dimension { expected: first.len(), actual: bad.len() });
        }
    }
    let gram = flat_gram(x, kernel);
    let sol = solve_dual(&gram, y, params, None)?;
    let (mut support_vectors, mut coef) = (Vec::new(), Vec::new());
    for (i, &a) in sol.alpha.iter().enumerate() {
        if a > 0.0 {
            support_vectors.push(x[i].clone());
            coef.push(a * y[i]);
        }
    }
    Ok(BinaryModel {
        kernel: *kernel,
        c: params.c,
        support_vectors,
        coef,
        bias: sol.bias,
        converged: sol.converged,
        max_violation: sol.max_violation,
    })
}
