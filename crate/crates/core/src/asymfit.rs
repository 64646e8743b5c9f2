//! Least-squares fitting of asymptotic expansions and Richardson extrapolation.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Condition number above which a scaled design matrix is treated as rank deficient.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FitReport {
    pub exponents: Vec<f64>,
    pub coefficients: Vec<f64>,
    /// Max relative residual |fit − value| / |value| over samples.
    pub residual: f64,
    /// Condition number of the column-scaled design matrix.
    pub condition: f64,
    pub samples: Vec<(f64, f64)>,
}

impl FitReport {
    pub fn coefficient(&self, exponent: f64) -> Option<f64> {
        self.exponents
            .iter()
            .position(|&p| (p - exponent).abs() < 1e-12)
            .map(|i| self.coefficients[i])
    }

    pub fn evaluate(&self, h: f64) -> f64 {
        self.exponents
            .iter()
            .zip(&self.coefficients)
            .map(|(p, c)| c * h.powf(*p))
            .sum()
    }
}

/// Fits value ≈ Σ cᵢ h^{pᵢ} in the least-squares sense.
pub fn fit_expansion(samples: &[(f64, f64)], exponents: &[f64]) -> Result<FitReport> {
    if exponents.is_empty() || exponents.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("exponents must be strictly increasing".into()));
    }
    if samples.len() < exponents.len() + 1 {
        return Err(Error::InvalidInput(format!(
            "{} samples for {} exponents; need at least {}",
            samples.len(),
            exponents.len(),
            exponents.len() + 1
        )));
    }
    if samples.iter().any(|(h, v)| !(*h > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput("samples need h > 0 and finite values".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let rows = sorted.len();
    let cols = exponents.len();
    let mut a = DMatrix::from_fn(rows, cols, |i, j| sorted[i].0.powf(exponents[j]));
    let scales: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    for (j, s) in scales.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / s);
    }
    let rhs = DVector::from_iterator(rows, sorted.iter().map(|s| s.1));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::FitConditioning { condition });
    }
    let sol = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let coefficients: Vec<f64> = (0..cols).map(|j| sol[j] / scales[j]).collect();

    let mut report = FitReport {
        exponents: exponents.to_vec(),
        coefficients,
        residual: 0.0,
        condition,
        samples: sorted,
    };
    report.residual = report
        .samples
        .iter()
        .map(|&(h, v)| (report.evaluate(h) - v).abs() / v.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Ok(report)
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct RichardsonEstimate {
    pub limit: f64,
    /// log₂ of the ratio of successive differences; `None` when undefined (no variation).
    pub observed_order: Option<f64>,
}

/// Richardson extrapolation of values computed at grid sizes N, 2N, 4N, … (coarse first)
/// assuming an error ∝ N^{-order}.
pub fn richardson(values: &[f64], order: f64) -> Result<RichardsonEstimate> {
    if values.len() < 3 {
        return Err(Error::InvalidInput("richardson needs three or more resolutions".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value".into()));
    }
    let n = values.len();
    let finest = values[n - 1];
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    if diffs.iter().all(|d| d.abs() <= 4.0 * f64::EPSILON * scale) {
        return Ok(RichardsonEstimate {
            limit: finest,
            observed_order: None,
        });
    }
    let d1 = diffs[n - 3];
    let d2 = diffs[n - 2];
    if d1 == 0.0 || d2 == 0.0 || d1.signum() != d2.signum() || d2.abs() >= d1.abs() {
        return Err(Error::ExtrapolationUnsafe { finest });
    }
    let observed = (d1 / d2).log2();
    let factor = 2f64.powf(order);
    let limit = finest + d2 / (factor - 1.0);
    Ok(RichardsonEstimate {
        limit,
        observed_order: Some(observed),
    })
}
