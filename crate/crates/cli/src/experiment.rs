//! Realization loop shared by `run` and `bench`.

use std::time::Instant;

use mif_core::baselines::ekf::run_ekf;
use mif_core::baselines::pf::run_pf;
use mif_core::metrics::{global_rmse, step_error, ErrorSeries};
use mif_core::scenarios::{simulate_truth, Scenario, TruthRecord};
use mif_core::{run_filter, RandomSource};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ResolvedMethod;

/// Truth and estimate rows for steps `0..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub truth: Vec<Vec<f64>>,
    pub estimates: Vec<Vec<f64>>,
    pub resampled: Vec<bool>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.truth.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.truth[0].len()
    }

    /// `err_k` for every row, step 0 included.
    pub fn errors(&self) -> Vec<f64> {
        self.estimates.iter().zip(&self.truth).map(|(e, t)| step_error(e, t).expect("matching dimensions")).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Realization {
    pub seed: u64,
    pub trajectory: Trajectory,
    pub wall_clock_seconds: f64,
    pub resampling_events: usize,
    pub failed_solves: usize,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub seed: u64,
    pub result: Result<Realization, String>,
}

/// Seeds `base, base + 1, ...` for `reps` realizations.
pub fn seeds(base: u64, reps: usize) -> Vec<u64> {
    (0..reps as u64).map(|j| base.wrapping_add(j)).collect()
}

pub fn simulate(scenario: &dyn Scenario, seed: u64) -> Result<TruthRecord, String> {
    simulate_truth(scenario, RandomSource::new(seed, 0)).map_err(|e| e.to_string())
}

/// Runs `method` on one truth record; the timer covers the filter only.
pub fn run_one(scenario: &dyn Scenario, method: &ResolvedMethod, truth: &TruthRecord, seed: u64) -> Result<Realization, String> {
    let model = scenario.model();
    let ys = truth.observation_rows();
    let rng = RandomSource::new(seed, 0);
    let start = Instant::now();
    let (estimates, resampled, failed) = match method {
        ResolvedMethod::Implicit { filter, .. } => {
            let out = run_filter(model, scenario.prior(), filter, &ys, rng, |_, _| {}).map_err(|e| e.to_string())?;
            let failed = out.iter().map(|s| s.report.failed_solves).sum();
            let flags = out.iter().map(|s| s.report.resampled).collect();
            (out.into_iter().map(|s| s.mean.0).collect::<Vec<_>>(), flags, failed)
        }
        ResolvedMethod::Pf { particles, .. } => {
            let means = run_pf(model, scenario.prior(), *particles, &ys, rng).map_err(|e| e.to_string())?;
            let flags = (0..means.len()).map(|k| k > 0).collect();
            (means.into_iter().map(|m| m.0).collect(), flags, 0)
        }
        ResolvedMethod::Ekf { .. } => {
            let means = run_ekf(model, scenario.prior(), &ys).map_err(|e| e.to_string())?;
            (means.into_iter().map(|m| m.0).collect(), vec![false; ys.len() + 1], 0)
        }
    };
    let wall_clock_seconds = start.elapsed().as_secs_f64();
    if estimates.iter().flatten().any(|v| !v.is_finite()) {
        return Err("non-finite estimate".into());
    }
    let trajectory = Trajectory { truth: truth.states.iter().map(|s| s.0.clone()).collect(), estimates, resampled };
    let resampling_events = trajectory.resampled.iter().filter(|&&r| r).count();
    Ok(Realization { seed, trajectory, wall_clock_seconds, resampling_events, failed_solves: failed })
}

/// Runs `method` on the given truth records, in parallel across realizations.
pub fn run_cell(scenario: &dyn Scenario, method: &ResolvedMethod, truths: &[(u64, Result<TruthRecord, String>)]) -> Vec<Outcome> {
    truths
        .par_iter()
        .map(|(seed, truth)| {
            let result = match truth {
                Ok(t) => run_one(scenario, method, t, *seed),
                Err(e) => Err(format!("truth simulation failed: {e}")),
            };
            if let Err(e) = &result {
                log::warn!("{} seed {seed}: {e}", method.label());
            }
            Outcome { seed: *seed, result }
        })
        .collect()
}

pub fn simulate_all(scenario: &dyn Scenario, seeds: &[u64]) -> Vec<(u64, Result<TruthRecord, String>)> {
    seeds.par_iter().map(|&s| (s, simulate(scenario, s))).collect()
}

/// Per-realization entry of a summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizationSummary {
    pub seed: u64,
    pub completed: bool,
    pub err_g: Option<f64>,
    pub wall_clock_seconds: Option<f64>,
    pub resampling_events: Option<usize>,
    pub failed_solves: Option<usize>,
    pub error: Option<String>,
}

/// Aggregate statistics of one cell over its completed realizations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellStats {
    pub completed: usize,
    pub divergence_count: usize,
    pub err_g: Option<f64>,
    pub per_dimension_rmse: Vec<f64>,
    pub wall_clock_seconds: f64,
    pub mean_wall_clock_seconds: Option<f64>,
    pub realizations: Vec<RealizationSummary>,
}

fn series(label: &str, r: &Realization) -> ErrorSeries {
    ErrorSeries { realization: r.seed as usize, method: label.to_string(), errors: r.trajectory.errors()[1..].to_vec() }
}

pub fn cell_stats(label: &str, outcomes: &[Outcome]) -> CellStats {
    let done: Vec<&Realization> = outcomes.iter().filter_map(|o| o.result.as_ref().ok()).collect();
    let all: Vec<ErrorSeries> = done.iter().map(|r| series(label, r)).collect();
    let err_g = global_rmse(&all).ok();
    let per_dimension_rmse = match done.first() {
        Some(first) => {
            let d = first.trajectory.dim();
            (0..d)
                .map(|i| {
                    let (mut sum, mut count) = (0.0, 0usize);
                    for r in &done {
                        for (e, t) in r.trajectory.estimates[1..].iter().zip(&r.trajectory.truth[1..]) {
                            sum += (e[i] - t[i]).powi(2);
                            count += 1;
                        }
                    }
                    (sum / count as f64).sqrt()
                })
                .collect()
        }
        None => Vec::new(),
    };
    let wall: f64 = done.iter().map(|r| r.wall_clock_seconds).sum();
    let realizations = outcomes
        .iter()
        .map(|o| match &o.result {
            Ok(r) => RealizationSummary {
                seed: o.seed,
                completed: true,
                err_g: global_rmse(&[series(label, r)]).ok(),
                wall_clock_seconds: Some(r.wall_clock_seconds),
                resampling_events: Some(r.resampling_events),
                failed_solves: Some(r.failed_solves),
                error: None,
            },
            Err(e) => RealizationSummary {
                seed: o.seed,
                completed: false,
                err_g: None,
                wall_clock_seconds: None,
                resampling_events: None,
                failed_solves: None,
                error: Some(e.clone()),
            },
        })
        .collect();
    CellStats {
        completed: done.len(),
        divergence_count: outcomes.len() - done.len(),
        err_g,
        per_dimension_rmse,
        wall_clock_seconds: wall,
        mean_wall_clock_seconds: (!done.is_empty()).then(|| wall / done.len() as f64),
        realizations,
    }
}

/// At least 80% of realizations completed.
pub fn mostly_completed(stats: &CellStats) -> bool {
    let total = stats.completed + stats.divergence_count;
    stats.completed * 5 >= total * 4
}
