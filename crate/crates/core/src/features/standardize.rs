use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::FEATURE_COUNT;

/// Per-dimension z-scoring fitted on training vectors only.
///
/// Dimensions with zero training variance are centered but not scaled;
/// they are listed in `passthrough`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub passthrough: Vec<usize>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Standardizer {
        Standardizer { mean: vec![0.0; dim], std: vec![1.0; dim], passthrough: Vec::new() }
    }

    /// Population mean and standard deviation per column.
    pub fn fit(rows: &[&[f64]]) -> Result<Standardizer> {
        if rows.len() < 2 {
            return Err(Error::Training(format!(
                "standardizer needs at least 2 training vectors, got {}",
                rows.len()
            )));
        }
        let dim = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::Dimension { expected: dim, actual: bad.len() });
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let mut passthrough = Vec::new();
        let std = var
            .iter()
            .enumerate()
            .map(|(j, s)| {
                let sd = (s / n).sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    passthrough.push(j);
                    1.0
                }
            })
            .collect();
        Ok(Standardizer { mean, std, passthrough })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), actual: v.len() });
        }
        Ok(v.iter().zip(&self.mean).zip(&self.std).map(|((x, m), s)| (x - m) / s).collect())
    }
}

impl Default for Standardizer {
    fn default() -> Self {
        Standardizer::identity(FEATURE_COUNT)
    }
}
