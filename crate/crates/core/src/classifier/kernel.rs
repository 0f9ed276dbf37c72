use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::FEATURE_COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Rbf,
    Gaussian,
    Polynomial,
}

impl KernelKind {
    /// Table order used by kernel comparison reports.
    pub const REPORT_ORDER: [KernelKind; 4] =
        [KernelKind::Rbf, KernelKind::Linear, KernelKind::Gaussian, KernelKind::Polynomial];

    pub fn as_str(self) -> &'static str {
        match self {
            KernelKind::Linear => "linear",
            KernelKind::Rbf => "rbf",
            KernelKind::Gaussian => "gaussian",
            KernelKind::Polynomial => "polynomial",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            KernelKind::Linear => "Linear",
            KernelKind::Rbf => "RBF",
            KernelKind::Gaussian => "Gaussian",
            KernelKind::Polynomial => "Polynomial",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(KernelKind::Linear),
            "rbf" => Ok(KernelKind::Rbf),
            "gaussian" => Ok(KernelKind::Gaussian),
            "polynomial" | "poly" => Ok(KernelKind::Polynomial),
            _ => Err(Error::Config(format!("unknown kernel {s:?}"))),
        }
    }
}

/// Kernel family plus parameters. Only the fields relevant to `kind` are
/// used: `gamma` by rbf and polynomial, `sigma` by gaussian, `degree` and
/// `coef0` by polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub kind: KernelKind,
    pub gamma: f64,
    pub sigma: f64,
    pub degree: u32,
    pub coef0: f64,
}

impl KernelConfig {
    pub const DEFAULT_GAMMA: f64 = 1.0 / FEATURE_COUNT as f64;

    pub fn new(kind: KernelKind) -> KernelConfig {
        KernelConfig { kind, gamma: Self::DEFAULT_GAMMA, sigma: 1.0, degree: 2, coef0: 1.0 }
    }

    pub fn linear() -> KernelConfig {
        KernelConfig::new(KernelKind::Linear)
    }

    pub fn rbf(gamma: f64) -> KernelConfig {
        KernelConfig { gamma, ..KernelConfig::new(KernelKind::Rbf) }
    }

    pub fn gaussian(sigma: f64) -> KernelConfig {
        KernelConfig { sigma, ..KernelConfig::new(KernelKind::Gaussian) }
    }

    pub fn polynomial(gamma: f64, coef0: f64, degree: u32) -> KernelConfig {
        KernelConfig { gamma, coef0, degree, ..KernelConfig::new(KernelKind::Polynomial) }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            KernelKind::Rbf | KernelKind::Polynomial if !(self.gamma > 0.0 && self.gamma.is_finite()) => {
                Err(Error::Config(format!("gamma must be positive, got {}", self.gamma)))
            }
            KernelKind::Gaussian if !(self.sigma > 0.0 && self.sigma.is_finite()) => {
                Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)))
            }
            KernelKind::Polynomial if self.degree == 0 => {
                Err(Error::Config("polynomial degree must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// Kernel value without a dimension check.
    #[inline]
    pub fn apply(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Linear => dot(x, y),
            KernelKind::Rbf => (-self.gamma * sq_dist(x, y)).exp(),
            KernelKind::Gaussian => (-sq_dist(x, y) / (2.0 * self.sigma * self.sigma)).exp(),
            KernelKind::Polynomial => {
                (self.gamma * dot(x, y) + self.coef0).powi(self.degree as i32)
            }
        }
    }
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig::new(KernelKind::Polynomial)
    }
}

#[inline]
fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[inline]
fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub fn kernel_eval(cfg: &KernelConfig, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension { expected: x.len(), actual: y.len() });
    }
    Ok(cfg.apply(x, y))
}

/// Full symmetric Gram matrix; only the upper triangle is evaluated.
pub fn gram_matrix(rows: &[Vec<f64>], cfg: &KernelConfig) -> Result<Vec<Vec<f64>>> {
    if let Some(first) = rows.first() {
        if let Some(bad) = rows.iter().find(|r| r.len() != first.len()) {
            return Err(Error::Dimension { expected: first.len(), actual: bad.len() });
        }
    }
    let n = rows.len();
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let k = cfg.apply(&rows[i], &rows[j]);
            g[i][j] = k;
            g[j][i] = k;
        }
    }
    Ok(g)
}
