//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Exposes a Shepard grid evaluator, a steppable tumor-growth filter and a
//! bearings-only method comparison.

use mif_core::baselines::ekf::run_ekf;
use mif_core::baselines::pf::run_pf;
use mif_core::filter::init_cloud_in_domain;
use mif_core::interp::{ShepardInterpolant, WeightMode};
use mif_core::scenarios::{simulate_truth, BearingScenario, Scenario, TruthRecord, TumorScenario};
use mif_core::{filter_step, run_filter, FilterConfig, FilterState, KnnIndex, RandomSource, ShepardConfig};
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Evaluates a 2-D Shepard interpolant on a `res` x `res` grid over `[lo, hi]^2`.
///
/// `nodes` is row-major `(x, y)` pairs. The result is row-major with `y`
/// varying slowest.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn shepard_grid(nodes: &[f64], values: &[f64], neighbors: usize, exponent: f64, inverse: bool, res: usize, lo: f64, hi: f64) -> Result<Vec<f64>, JsError> {
    let cfg = ShepardConfig {
        neighbors,
        idw_exponent: exponent,
        weight_mode: if inverse { WeightMode::InverseDistance } else { WeightMode::DistanceProportional },
        ..ShepardConfig::for_dim(2)
    };
    let index = KnnIndex::from_flat(2, nodes.to_vec()).map_err(js_err)?;
    let interp = ShepardInterpolant::new(index, values.to_vec(), cfg).map_err(js_err)?;
    let step = (hi - lo) / (res.max(2) - 1) as f64;
    let mut out = Vec::with_capacity(res * res);
    for j in 0..res {
        for i in 0..res {
            out.push(interp.evaluate(&[lo + i as f64 * step, lo + j as f64 * step]).map_err(js_err)?);
        }
    }
    Ok(out)
}

/// Tumor-growth filter advanced one observation at a time.
#[wasm_bindgen]
pub struct TumorDemo {
    scenario: TumorScenario,
    cfg: FilterConfig,
    truth: TruthRecord,
    state: FilterState,
    rng: RandomSource,
    step: usize,
    resampled: bool,
}

#[wasm_bindgen]
impl TumorDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u64, points: usize, samples: usize) -> Result<TumorDemo, JsError> {
        let scenario = TumorScenario::default();
        let cfg = FilterConfig::new(2, points, samples);
        let rng = RandomSource::new(seed, 0);
        let truth = simulate_truth(&scenario, rng).map_err(js_err)?;
        let cloud = init_cloud_in_domain(scenario.model(), scenario.prior(), points, rng).map_err(js_err)?;
        let state = FilterState::new(cloud, &cfg.shepard).map_err(js_err)?;
        Ok(TumorDemo { scenario, cfg, truth, state, rng, step: 0, resampled: false })
    }

    /// Assimilates the next observation. Returns `false` once all are used.
    pub fn advance(&mut self) -> Result<bool, JsError> {
        if self.step >= self.truth.steps() {
            return Ok(false);
        }
        let y = self.truth.observations[self.step].to_vec();
        self.step += 1;
        let (next, report) = filter_step(&self.state, self.scenario.model(), &self.cfg, &y, self.rng, self.step).map_err(js_err)?;
        self.state = next;
        self.resampled = report.resampled;
        Ok(true)
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn steps(&self) -> usize {
        self.truth.steps()
    }

    pub fn resampled(&self) -> bool {
        self.resampled
    }

    /// Row-major node coordinates.
    pub fn nodes(&self) -> Vec<f64> {
        self.state.cloud.nodes_flat().to_vec()
    }

    /// Normalized node weights.
    pub fn weights(&self) -> Vec<f64> {
        self.state.cloud.values().to_vec()
    }

    pub fn truth(&self) -> Vec<f64> {
        self.truth.states[self.step].to_vec()
    }

    pub fn mean(&self) -> Vec<f64> {
        let w = self.state.cloud.values();
        let mut m = [0.0; 2];
        for (i, wi) in w.iter().enumerate() {
            let x = self.state.cloud.node(i);
            m[0] += wi * x[0];
            m[1] += wi * x[1];
        }
        m.to_vec()
    }
}

/// Runs the implicit filter, a particle filter and an EKF on one bearings-only
/// realization. Returns per-step position errors laid out as
/// `[implicit_1..K, pf_1..K, ekf_1..K]`.
#[wasm_bindgen]
pub fn bearing_compare(seed: u64, points: usize, samples: usize, particles: usize) -> Result<Vec<f64>, JsError> {
    let sc = BearingScenario::default();
    let rng = RandomSource::new(seed, 0);
    let truth = simulate_truth(&sc, rng).map_err(js_err)?;
    let ys = truth.observation_rows();
    let cfg = FilterConfig::new(6, points, samples);
    let implicit: Vec<Vec<f64>> = run_filter(sc.model(), sc.prior(), &cfg, &ys, rng, |_, _| {})
        .map_err(js_err)?
        .into_iter()
        .map(|s| s.mean.to_vec())
        .collect();
    let pf: Vec<Vec<f64>> = run_pf(sc.model(), sc.prior(), particles, &ys, rng).map_err(js_err)?.into_iter().map(|m| m.to_vec()).collect();
    let ekf: Vec<Vec<f64>> = run_ekf(sc.model(), sc.prior(), &ys).map_err(js_err)?.into_iter().map(|m| m.to_vec()).collect();
    let mut out = Vec::with_capacity(3 * ys.len());
    for est in [&implicit, &pf, &ekf] {
        for (e, x) in est.iter().zip(&truth.states).skip(1) {
            out.push((0..3).map(|i| (e[i] - x[i]).powi(2)).sum::<f64>().sqrt());
        }
    }
    Ok(out)
}
