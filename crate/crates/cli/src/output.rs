//! Trajectory CSV, summary JSON and bench table writers.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{ResolvedMethod, RunConfig};
use crate::error::CliError;
use crate::experiment::{CellStats, Trajectory};

/// Decimal notation with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return format!("{:.16}", 0.0);
    }
    let sci = format!("{v:.16e}");
    let exponent: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    let decimals = (16 - exponent).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn trajectory_header(d: usize) -> Vec<String> {
    let mut h = vec!["step".to_string()];
    h.extend((1..=d).map(|i| format!("truth_{i}")));
    h.extend((1..=d).map(|i| format!("estimate_{i}")));
    h.push("err_k".into());
    h.push("resampled".into());
    h
}

pub fn write_trajectory(path: &Path, t: &Trajectory) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(trajectory_header(t.dim()))?;
    for (k, ((truth, est), (err, resampled))) in t.truth.iter().zip(&t.estimates).zip(t.errors().into_iter().zip(&t.resampled)).enumerate() {
        let mut row = vec![k.to_string()];
        row.extend(truth.iter().map(|v| fmt17(*v)));
        row.extend(est.iter().map(|v| fmt17(*v)));
        row.push(fmt17(err));
        row.push(u8::from(*resampled).to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn trajectory_path(dir: &Path, scenario: &str, label: &str, seed: u64) -> PathBuf {
    dir.join(format!("{scenario}_{label}_seed{seed}.csv"))
}

/// Summary of a `run` invocation, or of one bench cell.
#[derive(Debug, Serialize)]
pub struct Summary<'a> {
    pub scenario: &'a str,
    pub method: &'a str,
    pub label: &'a str,
    pub config_hash: String,
    pub parameters: &'a ResolvedMethod,
    pub config: &'a RunConfig,
    pub reps: usize,
    pub seeds: &'a [u64],
    #[serde(flatten)]
    pub stats: &'a CellStats,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// One row of the bench comparison table.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub label: String,
    pub method: String,
    pub points: Option<usize>,
    pub samples: Option<usize>,
    pub particles: Option<usize>,
    pub completed: usize,
    pub divergence_count: usize,
    pub err_g: Option<f64>,
    pub mean_wall_clock_seconds: Option<f64>,
}

impl BenchRow {
    pub fn new(method: &ResolvedMethod, stats: &CellStats) -> Self {
        let (points, samples, particles) = match method {
            ResolvedMethod::Implicit { filter, .. } => (Some(filter.points), Some(filter.samples), None),
            ResolvedMethod::Pf { particles, .. } => (None, None, Some(*particles)),
            ResolvedMethod::Ekf { .. } => (None, None, None),
        };
        Self {
            label: method.label().to_string(),
            method: method.method().name().to_string(),
            points,
            samples,
            particles,
            completed: stats.completed,
            divergence_count: stats.divergence_count,
            err_g: stats.err_g,
            mean_wall_clock_seconds: stats.mean_wall_clock_seconds,
        }
    }
}

pub fn write_bench_csv(path: &Path, rows: &[BenchRow]) -> Result<(), CliError> {
    let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
    let optf = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["label", "method", "points", "samples", "particles", "completed", "divergence_count", "err_g", "mean_wall_clock_seconds"])?;
    for r in rows {
        w.write_record([
            r.label.clone(),
            r.method.clone(),
            opt(r.points),
            opt(r.samples),
            opt(r.particles),
            r.completed.to_string(),
            r.divergence_count.to_string(),
            optf(r.err_g),
            optf(r.mean_wall_clock_seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn significant_digits(s: &str) -> usize {
        s.trim_start_matches('-').chars().filter(char::is_ascii_digit).skip_while(|&c| c == '0').count()
    }

    #[test]
    fn fmt17_examples() {
        assert_eq!(fmt17(0.1), "0.10000000000000001");
        assert_eq!(fmt17(1.0), "1.0000000000000000");
        assert_eq!(fmt17(-2.5), "-2.5000000000000000");
        assert_eq!(fmt17(123.0), "123.00000000000000");
        assert_eq!(fmt17(0.0), "0.0000000000000000");
        assert_eq!(fmt17(1e20), "100000000000000000000");
    }

    #[test]
    fn fmt17_round_trips() {
        for &v in &[0.1, 1.0 / 3.0, -7.25e-9, 6.02214076e23, 0.6430673195181238, f64::MIN_POSITIVE * 1e10, 9.999999999999999e-3] {
            let s = fmt17(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
            assert!(!s.contains('e'), "{s}");
            let digits = significant_digits(&s);
            assert!((17..=18).contains(&digits) || v.abs() >= 1e17, "{s}: {digits}");
        }
    }

    #[test]
    fn header_layout() {
        assert_eq!(trajectory_header(2), ["step", "truth_1", "truth_2", "estimate_1", "estimate_2", "err_k", "resampled"]);
    }
}
