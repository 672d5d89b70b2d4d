//! Estimation error metrics.

use serde::{Deserialize, Serialize};

use crate::error::{FilterError, Result};

/// Per-step errors of one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSeries {
    pub realization: usize,
    pub method: String,
    pub errors: Vec<f64>,
}

/// Euclidean distance between estimate and truth.
pub fn step_error(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(FilterError::DimensionMismatch { expected: truth.len(), got: estimate.len() });
    }
    Ok(estimate.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

/// Root mean square of all per-step errors over all realizations.
///
/// Squares are accumulated relative to the largest error, so a constant input
/// is returned exactly.
pub fn global_rmse(series: &[ErrorSeries]) -> Result<f64> {
    let first = series.first().ok_or(FilterError::Empty("error series"))?;
    let k = first.errors.len();
    if k == 0 {
        return Err(FilterError::Empty("error series"));
    }
    if let Some(s) = series.iter().find(|s| s.errors.len() != k) {
        return Err(FilterError::DimensionMismatch { expected: k, got: s.errors.len() });
    }
    let scale = series.iter().flat_map(|s| &s.errors).fold(0.0f64, |m, e| m.max(e.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return Ok(scale);
    }
    let total: f64 = series.iter().flat_map(|s| &s.errors).map(|e| (e / scale) * (e / scale)).sum();
    Ok(scale * (total / (series.len() * k) as f64).sqrt())
}

/// Aggregate outcome of a multi-realization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: String,
    pub err_g: f64,
    pub wall_clock_seconds: f64,
    pub config_hash: String,
    pub seeds: Vec<u64>,
}

impl RunSummary {
    pub fn from_series(method: &str, series: &[ErrorSeries], wall_clock_seconds: f64, config_hash: String, seeds: Vec<u64>) -> Result<Self> {
        Ok(Self { method: method.to_string(), err_g: global_rmse(series)?, wall_clock_seconds, config_hash, seeds })
    }
}
