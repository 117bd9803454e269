//! Portfolio volatility as the square root of the covariance quadratic form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-10;
const PSD_TOL: f64 = -1e-10;

/// A symmetric covariance matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl CovarianceMatrix {
    /// Validate symmetry (within 1e-10, scaled) and wrap.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                dim,
                n: entries.len(),
            });
        }
        let scale = entries.iter().fold(0.0f64, |m, e| m.max(e.abs())).max(1.0);
        for i in 0..dim {
            for j in (i + 1)..dim {
                if (entries[i * dim + j] - entries[j * dim + i]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::NotSymmetric { i, j });
                }
            }
        }
        Ok(Self { dim, entries })
    }

    /// Build from per-asset volatilities and a correlation matrix.
    pub fn from_vols_and_correlations(vols: &[f64], correlations: &[f64]) -> Result<Self> {
        let n = vols.len();
        if correlations.len() != n * n {
            return Err(Error::DimensionMismatch {
                dim: n,
                n: correlations.len(),
            });
        }
        let entries = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                correlations[k] * vols[i] * vols[j]
            })
            .collect();
        Self::new(n, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }
}

/// `sqrt(x' S x)` for weights `x` and covariance `S`.
///
/// A quadratic form more negative than -1e-10 (scaled) is rejected; small
/// negative values from rounding clamp to zero.
pub fn portfolio_volatility(weights: &[f64], covariance: &CovarianceMatrix) -> Result<f64> {
    if weights.len() != covariance.dim() {
        return Err(Error::DimensionMismatch {
            dim: covariance.dim(),
            n: weights.len(),
        });
    }
    let n = weights.len();
    let mut form = 0.0;
    for i in 0..n {
        for j in 0..n {
            form += weights[i] * weights[j] * covariance.get(i, j);
        }
    }
    let scale = weights
        .iter()
        .map(|w| w * w)
        .sum::<f64>()
        .max(1.0);
    if form < PSD_TOL * scale {
        return Err(Error::IndefiniteForm(form));
    }
    Ok(form.max(0.0).sqrt())
}
