//! Benchmark harness: scenario configuration, multi-realization runs and
//! machine-readable outputs.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod plotdata;

use std::fs;

use config::RunConfig;
use error::CliError;
use experiment::{cell_stats, mostly_completed, run_cell, seeds, simulate_all, CellStats};
use output::{trajectory_path, write_bench_csv, write_json, write_trajectory, BenchRow, Summary};
use serde::Serialize;

/// Exit status for a finished run: 0 when at least 80% of realizations
/// completed in every cell, 1 otherwise.
pub fn exit_status<'a>(cells: impl IntoIterator<Item = &'a CellStats>) -> i32 {
    if cells.into_iter().all(mostly_completed) {
        0
    } else {
        1
    }
}

/// Outcome of a `run` invocation.
#[derive(Debug)]
pub struct RunReport {
    pub label: String,
    pub stats: CellStats,
    pub exit_code: i32,
}

/// `run`: every realization of the configured method, a trajectory CSV per
/// realization and `summary.json` in `cfg.out`.
pub fn run(cfg: &RunConfig) -> Result<RunReport, CliError> {
    cfg.validate()?;
    let scenario = cfg.build_scenario()?;
    let method = cfg.method_config().resolve(cfg.scenario, scenario.model().state_dim())?;
    let seeds = seeds(cfg.seed, cfg.reps);
    fs::create_dir_all(&cfg.out)?;

    let truths = simulate_all(scenario.as_ref(), &seeds);
    let outcomes = run_cell(scenario.as_ref(), &method, &truths);
    for o in &outcomes {
        if let Ok(r) = &o.result {
            write_trajectory(&trajectory_path(&cfg.out, cfg.scenario.name(), method.label(), o.seed), &r.trajectory)?;
        }
    }
    let stats = cell_stats(method.label(), &outcomes);
    let summary = Summary {
        scenario: cfg.scenario.name(),
        method: method.method().name(),
        label: method.label(),
        config_hash: cfg.hash(),
        parameters: &method,
        config: cfg,
        reps: cfg.reps,
        seeds: &seeds,
        stats: &stats,
    };
    write_json(&cfg.out.join("summary.json"), &summary)?;
    let exit_code = exit_status([&stats]);
    Ok(RunReport { label: method.label().to_string(), stats, exit_code })
}

#[derive(Debug, Serialize)]
struct BenchJson<'a> {
    scenario: &'a str,
    config_hash: String,
    reps: usize,
    seeds: &'a [u64],
    rows: &'a [BenchRow],
}

/// Outcome of a `bench` invocation.
#[derive(Debug)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub exit_code: i32,
}

/// `bench`: every cell over shared truth records. Writes `bench.csv`,
/// `bench.json` and, per cell, trajectories and a summary under `out/<label>/`.
pub fn bench(cfg: &RunConfig) -> Result<BenchReport, CliError> {
    cfg.validate()?;
    let scenario = cfg.build_scenario()?;
    let d = scenario.model().state_dim();
    let methods = cfg.bench_cells().iter().map(|c| c.resolve(cfg.scenario, d)).collect::<Result<Vec<_>, _>>()?;
    let mut labels = std::collections::BTreeSet::new();
    if let Some(m) = methods.iter().find(|m| !labels.insert(m.label().to_string())) {
        return Err(CliError::Config(format!("duplicate cell label `{}`", m.label())));
    }
    let seeds = seeds(cfg.seed, cfg.reps);
    fs::create_dir_all(&cfg.out)?;
    let truths = simulate_all(scenario.as_ref(), &seeds);

    let mut rows = Vec::new();
    let mut all_stats = Vec::new();
    for method in &methods {
        log::info!("bench cell {}", method.label());
        let dir = cfg.out.join(method.label());
        fs::create_dir_all(&dir)?;
        let outcomes = run_cell(scenario.as_ref(), method, &truths);
        for o in &outcomes {
            if let Ok(r) = &o.result {
                write_trajectory(&trajectory_path(&dir, cfg.scenario.name(), method.label(), o.seed), &r.trajectory)?;
            }
        }
        let stats = cell_stats(method.label(), &outcomes);
        let summary = Summary {
            scenario: cfg.scenario.name(),
            method: method.method().name(),
            label: method.label(),
            config_hash: cfg.hash(),
            parameters: method,
            config: cfg,
            reps: cfg.reps,
            seeds: &seeds,
            stats: &stats,
        };
        write_json(&dir.join("summary.json"), &summary)?;
        rows.push(BenchRow::new(method, &stats));
        all_stats.push(stats);
    }
    write_bench_csv(&cfg.out.join("bench.csv"), &rows)?;
    let json = BenchJson { scenario: cfg.scenario.name(), config_hash: cfg.hash(), reps: cfg.reps, seeds: &seeds, rows: &rows };
    write_json(&cfg.out.join("bench.json"), &json)?;
    Ok(BenchReport { exit_code: exit_status(&all_stats), rows })
}
