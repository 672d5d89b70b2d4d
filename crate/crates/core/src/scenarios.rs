//! Benchmark models: a 2-D tumor growth model, a 6-D bearing-only tracking
//! model, and linear-Gaussian models with exact Kalman solutions.

use serde::{Deserialize, Serialize};

use crate::error::{FilterError, Result};
use crate::model::{propagate_into, GaussianSpec, ObservationVector, StateSpaceModel, StateVector};
use crate::rng::{RandomSource, StreamPurpose};

/// Discretization of the tumor growth SDE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Discretization {
    /// Euler–Maruyama: `x' = x + F(x)Δ + σ∘w`.
    #[default]
    Euler,
    /// Drift increment only: `x' = F(x)Δ + σ∘w`.
    #[serde(alias = "literal")]
    DriftOnly,
}

impl std::str::FromStr for Discretization {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "euler" => Ok(Self::Euler),
            "drift_only" | "literal" => Ok(Self::DriftOnly),
            other => Err(format!("unknown discretization `{other}`")),
        }
    }
}

fn diag_spec(mean: &[f64], std: &[f64]) -> Result<GaussianSpec> {
    GaussianSpec::diagonal(mean.to_vec(), std.iter().map(|s| s * s).collect())
}

/// Row-major `diag(sigma)`: the noise Jacobian of `x' = f(x) + sigma∘w`.
fn additive_noise_jacobian(sigma: &[f64], jac: &mut [f64]) {
    let n = sigma.len();
    jac.fill(0.0);
    for (i, s) in sigma.iter().enumerate() {
        jac[i * n + i] = *s;
    }
}

/// Shared by every scenario: model, prior, truth start and horizon.
pub trait Scenario: Send + Sync {
    fn name(&self) -> &'static str;
    fn model(&self) -> &dyn StateSpaceModel;
    /// Prior `p0` used to initialize filters.
    fn prior(&self) -> &GaussianSpec;
    /// True initial state.
    fn initial_state(&self) -> &[f64];
    /// Number of observation steps `K`.
    fn steps(&self) -> usize;
}

// ---------------------------------------------------------------------------
// Tumor growth
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TumorParams {
    pub dt: f64,
    pub steps: usize,
    pub alpha: [f64; 3],
    pub sigma: [f64; 2],
    pub obs_scale: [f64; 2],
    pub x0: [f64; 2],
    pub prior_mean: [f64; 2],
    pub prior_std: [f64; 2],
    pub discretization: Discretization,
}

impl Default for TumorParams {
    fn default() -> Self {
        Self {
            dt: 0.2,
            steps: 40,
            alpha: [1.0, 0.2, 0.2],
            sigma: [0.01, 0.01],
            obs_scale: [0.1, 0.1],
            x0: [0.8, 0.3],
            prior_mean: [0.78, 0.32],
            prior_std: [0.05, 0.1],
            discretization: Discretization::Euler,
        }
    }
}

/// Default node count for the tumor scenario.
pub const TUMOR_POINTS: usize = 1500;

#[derive(Debug, Clone)]
pub struct TumorModel {
    pub params: TumorParams,
    state_noise: GaussianSpec,
    obs_noise: GaussianSpec,
}

impl TumorModel {
    pub fn new(params: TumorParams) -> Result<Self> {
        Ok(Self {
            state_noise: GaussianSpec::isotropic(2, params.dt)?,
            obs_noise: GaussianSpec::isotropic(2, params.dt)?,
            params,
        })
    }

    /// Drift `F(x)`.
    pub fn drift(&self, x: &[f64]) -> [f64; 2] {
        let [a1, a2, a3] = self.params.alpha;
        [a1 * x[0] * (x[1] / x[0]).ln(), a2 * x[0] - a3 * x[1] * x[0].powf(2.0 / 3.0)]
    }
}

impl StateSpaceModel for TumorModel {
    fn state_dim(&self) -> usize {
        2
    }
    fn noise_dim(&self) -> usize {
        2
    }
    fn obs_dim(&self) -> usize {
        2
    }

    fn transition(&self, x: &[f64], w: &[f64], _k: usize, out: &mut [f64]) {
        let f = self.drift(x);
        let dt = self.params.dt;
        let s = self.params.sigma;
        let base = match self.params.discretization {
            Discretization::Euler => [x[0], x[1]],
            Discretization::DriftOnly => [0.0, 0.0],
        };
        out[0] = base[0] + f[0] * dt + s[0] * w[0];
        out[1] = base[1] + f[1] * dt + s[1] * w[1];
    }

    fn transition_jacobian(&self, x: &[f64], _w: &[f64], _k: usize, jac: &mut [f64]) -> bool {
        let [a1, a2, a3] = self.params.alpha;
        let dt = self.params.dt;
        let (x1, x2) = (x[0], x[1]);
        let df = [
            a1 * ((x2 / x1).ln() - 1.0),
            a1 * x1 / x2,
            a2 - (2.0 / 3.0) * a3 * x2 * x1.powf(-1.0 / 3.0),
            -a3 * x1.powf(2.0 / 3.0),
        ];
        let id = match self.params.discretization {
            Discretization::Euler => 1.0,
            Discretization::DriftOnly => 0.0,
        };
        jac[0] = id + dt * df[0];
        jac[1] = dt * df[1];
        jac[2] = dt * df[2];
        jac[3] = id + dt * df[3];
        true
    }

    fn noise_jacobian(&self, _x: &[f64], _w: &[f64], _k: usize, jac: &mut [f64]) -> bool {
        additive_noise_jacobian(&self.params.sigma, jac);
        true
    }

    fn observe(&self, x: &[f64], _k: usize, out: &mut [f64]) {
        out[0] = x[0];
        out[1] = x[1];
    }

    fn observe_jacobian(&self, _x: &[f64], _k: usize, jac: &mut [f64]) -> bool {
        jac.copy_from_slice(&[1.0, 0.0, 0.0, 1.0]);
        true
    }

    fn state_noise(&self) -> &GaussianSpec {
        &self.state_noise
    }
    fn obs_noise(&self) -> &GaussianSpec {
        &self.obs_noise
    }
    fn obs_scale(&self) -> &[f64] {
        &self.params.obs_scale
    }

    fn domain_guard(&self, x: &[f64]) -> bool {
        x[0] > 0.0 && x[1] > 0.0
    }
}

#[derive(Debug, Clone)]
pub struct TumorScenario {
    pub model: TumorModel,
    prior: GaussianSpec,
}

impl TumorScenario {
    pub fn new(params: TumorParams) -> Result<Self> {
        let prior = diag_spec(&params.prior_mean, &params.prior_std)?;
        Ok(Self { model: TumorModel::new(params)?, prior })
    }
}

impl Default for TumorScenario {
    fn default() -> Self {
        Self::new(TumorParams::default()).expect("default tumor parameters are valid")
    }
}

impl Scenario for TumorScenario {
    fn name(&self) -> &'static str {
        "tumor"
    }
    fn model(&self) -> &dyn StateSpaceModel {
        &self.model
    }
    fn prior(&self) -> &GaussianSpec {
        &self.prior
    }
    fn initial_state(&self) -> &[f64] {
        &self.model.params.x0
    }
    fn steps(&self) -> usize {
        self.model.params.steps
    }
}

// ---------------------------------------------------------------------------
// Bearing-only tracking
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BearingParams {
    pub dt: f64,
    pub steps: usize,
    pub alpha: f64,
    /// Drift rates of the three control coordinates.
    pub drift: [f64; 3],
    pub sigma: [f64; 6],
    pub obs_scale: [f64; 4],
    pub platforms: [[f64; 2]; 2],
    pub x0: [f64; 6],
    pub prior_std: [f64; 6],
}

impl Default for BearingParams {
    fn default() -> Self {
        Self {
            dt: 0.3,
            // 0 <= t <= 15 at dt = 0.3
            steps: 50,
            alpha: 3.0,
            drift: [0.05, 0.05, 0.05],
            sigma: [0.1, 0.1, 0.1, 0.01, 0.01, 0.01],
            obs_scale: [0.6; 4],
            platforms: [[16.0, 6.0], [8.0, 15.0]],
            x0: [2.0, 2.0, 1.0, 0.4, 0.4, 0.0],
            prior_std: [1.0, 1.0, 1.0, 0.2, 0.2, 0.2],
        }
    }
}

pub const BEARING_POINTS: usize = 4000;
pub const BEARING_SAMPLES: usize = 6;
pub const BEARING_PARTICLES: [usize; 3] = [15_000, 20_000, 25_000];

/// `arctan(num / den)` on the principal branch, with `arctan(z/0) = sign(z)·π/2`
/// and `arctan(0/0) = 0`.
pub fn guarded_atan(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            num.signum() * std::f64::consts::FRAC_PI_2
        }
    } else {
        (num / den).atan()
    }
}

#[derive(Debug, Clone)]
pub struct BearingModel {
    pub params: BearingParams,
    state_noise: GaussianSpec,
    obs_noise: GaussianSpec,
}

impl BearingModel {
    pub fn new(params: BearingParams) -> Result<Self> {
        Ok(Self {
            state_noise: GaussianSpec::isotropic(6, params.dt)?,
            obs_noise: GaussianSpec::isotropic(4, params.dt)?,
            params,
        })
    }
}

impl StateSpaceModel for BearingModel {
    fn state_dim(&self) -> usize {
        6
    }
    fn noise_dim(&self) -> usize {
        6
    }
    fn obs_dim(&self) -> usize {
        4
    }

    fn transition(&self, x: &[f64], w: &[f64], _k: usize, out: &mut [f64]) {
        let p = &self.params;
        let dt = p.dt;
        out[0] = x[0] + x[3] * dt;
        out[1] = x[1] + (p.alpha * x[4]).sin() * dt;
        out[2] = x[2] + x[5] * x[5] * dt;
        out[3] = x[3] + p.drift[0] * dt;
        out[4] = x[4] + p.drift[1] * dt;
        out[5] = x[5] + p.drift[2] * dt;
        for i in 0..6 {
            out[i] += p.sigma[i] * w[i];
        }
    }

    fn transition_jacobian(&self, x: &[f64], _w: &[f64], _k: usize, jac: &mut [f64]) -> bool {
        let p = &self.params;
        jac.fill(0.0);
        for i in 0..6 {
            jac[i * 6 + i] = 1.0;
        }
        jac[3] = p.dt;
        jac[6 + 4] = p.alpha * (p.alpha * x[4]).cos() * p.dt;
        jac[12 + 5] = 2.0 * x[5] * p.dt;
        true
    }

    fn noise_jacobian(&self, _x: &[f64], _w: &[f64], _k: usize, jac: &mut [f64]) -> bool {
        additive_noise_jacobian(&self.params.sigma, jac);
        true
    }

    fn observe(&self, x: &[f64], _k: usize, out: &mut [f64]) {
        let [[a1, b1], [a2, b2]] = self.params.platforms;
        let r1 = ((x[0] - a1).powi(2) + (x[1] - b1).powi(2)).sqrt();
        let r2 = ((x[0] - a2).powi(2) + (x[1] - b2).powi(2)).sqrt();
        out[0] = guarded_atan(x[2], r1);
        out[1] = guarded_atan(x[2], r2);
        out[2] = guarded_atan(x[0] - a1, x[1] - b1);
        out[3] = guarded_atan(x[0] - a2, x[1] - b2);
    }

    fn state_noise(&self) -> &GaussianSpec {
        &self.state_noise
    }
    fn obs_noise(&self) -> &GaussianSpec {
        &self.obs_noise
    }
    fn obs_scale(&self) -> &[f64] {
        &self.params.obs_scale
    }
}

#[derive(Debug, Clone)]
pub struct BearingScenario {
    pub model: BearingModel,
    prior: GaussianSpec,
}

impl BearingScenario {
    pub fn new(params: BearingParams) -> Result<Self> {
        let prior = diag_spec(&params.x0, &params.prior_std)?;
        Ok(Self { model: BearingModel::new(params)?, prior })
    }
}

impl Default for BearingScenario {
    fn default() -> Self {
        Self::new(BearingParams::default()).expect("default bearing parameters are valid")
    }
}

impl Scenario for BearingScenario {
    fn name(&self) -> &'static str {
        "bearing"
    }
    fn model(&self) -> &dyn StateSpaceModel {
        &self.model
    }
    fn prior(&self) -> &GaussianSpec {
        &self.prior
    }
    fn initial_state(&self) -> &[f64] {
        &self.model.params.x0
    }
    fn steps(&self) -> usize {
        self.model.params.steps
    }
}

// ---------------------------------------------------------------------------
// Linear-Gaussian
// ---------------------------------------------------------------------------

/// `x_k = A x_{k-1} + σ∘w`, `y_k = H x_k + R∘v`, with `w, v ~ N(0, IΔ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearGaussianParams {
    pub dt: f64,
    pub steps: usize,
    /// Row-major `d x d` transition matrix.
    pub a: Vec<f64>,
    /// Row-major `q x d` observation matrix.
    pub h: Vec<f64>,
    pub sigma: Vec<f64>,
    pub obs_scale: Vec<f64>,
    pub x0: Vec<f64>,
    pub prior_mean: Vec<f64>,
    pub prior_std: Vec<f64>,
}

impl LinearGaussianParams {
    /// Scalar AR(1) state observed directly.
    pub fn one_d() -> Self {
        Self {
            dt: 1.0,
            steps: 40,
            a: vec![0.9],
            h: vec![1.0],
            sigma: vec![1.0],
            obs_scale: vec![1.0],
            x0: vec![0.0],
            prior_mean: vec![0.0],
            prior_std: vec![1.0],
        }
    }

    /// Two coupled coordinates, only the first observed.
    pub fn two_d() -> Self {
        Self {
            dt: 1.0,
            steps: 40,
            a: vec![0.9, 0.3, 0.0, 0.8],
            h: vec![1.0, 0.0],
            sigma: vec![1.0, 0.5],
            obs_scale: vec![1.0],
            x0: vec![0.0, 0.0],
            prior_mean: vec![0.0, 0.0],
            prior_std: vec![1.0, 1.0],
        }
    }

    pub fn state_dim(&self) -> usize {
        self.sigma.len()
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_scale.len()
    }
}

impl Default for LinearGaussianParams {
    fn default() -> Self {
        Self::one_d()
    }
}

#[derive(Debug, Clone)]
pub struct LinearGaussianModel {
    pub params: LinearGaussianParams,
    state_noise: GaussianSpec,
    obs_noise: GaussianSpec,
}

impl LinearGaussianModel {
    pub fn new(params: LinearGaussianParams) -> Result<Self> {
        let d = params.state_dim();
        let q = params.obs_dim();
        for (what, len, want) in [
            ("a", params.a.len(), d * d),
            ("h", params.h.len(), q * d),
            ("x0", params.x0.len(), d),
            ("prior_mean", params.prior_mean.len(), d),
            ("prior_std", params.prior_std.len(), d),
        ] {
            if len != want {
                return Err(FilterError::InvalidConfig(format!("linear_gaussian.{what} has {len} entries, expected {want}")));
            }
        }
        Ok(Self {
            state_noise: GaussianSpec::isotropic(d, params.dt)?,
            obs_noise: GaussianSpec::isotropic(q, params.dt)?,
            params,
        })
    }
}

impl StateSpaceModel for LinearGaussianModel {
    fn state_dim(&self) -> usize {
        self.params.state_dim()
    }
    fn noise_dim(&self) -> usize {
        self.params.state_dim()
    }
    fn obs_dim(&self) -> usize {
        self.params.obs_dim()
    }

    fn transition(&self, x: &[f64], w: &[f64], _k: usize, out: &mut [f64]) {
        let d = self.state_dim();
        for i in 0..d {
            let row = &self.params.a[i * d..(i + 1) * d];
            out[i] = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.params.sigma[i] * w[i];
        }
    }

    fn transition_jacobian(&self, _x: &[f64], _w: &[f64], _k: usize, jac: &mut [f64]) -> bool {
        jac.copy_from_slice(&self.params.a);
        true
    }

    fn noise_jacobian(&self, _x: &[f64], _w: &[f64], _k: usize, jac: &mut [f64]) -> bool {
        additive_noise_jacobian(&self.params.sigma, jac);
        true
    }

    fn observe(&self, x: &[f64], _k: usize, out: &mut [f64]) {
        let d = self.state_dim();
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.params.h[i * d..(i + 1) * d].iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn observe_jacobian(&self, _x: &[f64], _k: usize, jac: &mut [f64]) -> bool {
        jac.copy_from_slice(&self.params.h);
        true
    }

    fn state_noise(&self) -> &GaussianSpec {
        &self.state_noise
    }
    fn obs_noise(&self) -> &GaussianSpec {
        &self.obs_noise
    }
    fn obs_scale(&self) -> &[f64] {
        &self.params.obs_scale
    }
}

#[derive(Debug, Clone)]
pub struct LinearGaussianScenario {
    pub model: LinearGaussianModel,
    prior: GaussianSpec,
}

impl LinearGaussianScenario {
    pub fn new(params: LinearGaussianParams) -> Result<Self> {
        let model = LinearGaussianModel::new(params)?;
        let prior = diag_spec(&model.params.prior_mean, &model.params.prior_std)?;
        Ok(Self { model, prior })
    }
}

impl Scenario for LinearGaussianScenario {
    fn name(&self) -> &'static str {
        "linear_gaussian"
    }
    fn model(&self) -> &dyn StateSpaceModel {
        &self.model
    }
    fn prior(&self) -> &GaussianSpec {
        &self.prior
    }
    fn initial_state(&self) -> &[f64] {
        &self.model.params.x0
    }
    fn steps(&self) -> usize {
        self.model.params.steps
    }
}

// ---------------------------------------------------------------------------
// Truth simulation
// ---------------------------------------------------------------------------

/// A simulated trajectory: `K + 1` states (from step 0) and `K` observations
/// (steps `1..=K`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub states: Vec<StateVector>,
    pub observations: Vec<ObservationVector>,
}

impl TruthRecord {
    pub fn steps(&self) -> usize {
        self.observations.len()
    }

    pub fn observation_rows(&self) -> Vec<Vec<f64>> {
        self.observations.iter().map(|o| o.0.clone()).collect()
    }
}

/// Which noise sources are active when simulating truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruthNoise {
    pub state: bool,
    pub observation: bool,
}

impl Default for TruthNoise {
    fn default() -> Self {
        Self { state: true, observation: true }
    }
}

pub fn simulate_truth<S: Scenario + ?Sized>(scenario: &S, rng: RandomSource) -> Result<TruthRecord> {
    simulate_truth_with(scenario, rng, TruthNoise::default())
}

pub fn simulate_truth_with<S: Scenario + ?Sized>(scenario: &S, rng: RandomSource, noise: TruthNoise) -> Result<TruthRecord> {
    let model = scenario.model();
    let d = model.state_dim();
    let q = model.obs_dim();
    let mut states = vec![StateVector::from(scenario.initial_state())];
    let mut observations = Vec::with_capacity(scenario.steps());
    let mut w = vec![0.0; model.noise_dim()];
    let mut v = vec![0.0; q];
    let scale = model.obs_scale();
    for k in 1..=scenario.steps() {
        let prev = &states[k - 1];
        let mut next = vec![0.0; d];
        let mut state_rng = rng.child(StreamPurpose::Truth, k, 0).rng();
        if noise.state {
            propagate_into(model, prev, &mut state_rng, k - 1, &mut w, &mut next)?;
        } else {
            w.fill(0.0);
            model.transition(prev, &w, k - 1, &mut next);
        }
        let mut y = vec![0.0; q];
        model.observe(&next, k, &mut y);
        if noise.observation {
            let mut obs_rng = rng.child(StreamPurpose::Truth, k, 1).rng();
            model.obs_noise().sample_into(&mut obs_rng, &mut v);
            for i in 0..q {
                y[i] += scale[i] * v[i];
            }
        }
        states.push(StateVector(next));
        observations.push(ObservationVector(y));
    }
    Ok(TruthRecord { states, observations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tumor_euler_step() {
        let m = TumorModel::new(TumorParams::default()).unwrap();
        let mut out = [0.0; 2];
        m.transition(&[0.8, 0.3], &[0.0, 0.0], 0, &mut out);
        let f1 = 0.8 * (0.375f64).ln();
        let f2 = 0.2 * 0.8 - 0.2 * 0.3 * 0.8f64.powf(2.0 / 3.0);
        assert_relative_eq!(out[0], 0.8 + 0.2 * f1, epsilon = 1e-15);
        assert_relative_eq!(out[1], 0.3 + 0.2 * f2, epsilon = 1e-15);
        assert_relative_eq!(out[0], 0.643_067_3, epsilon = 1e-7);
        assert_relative_eq!(out[1], 0.321_658_7, epsilon = 1e-7);
    }

    #[test]
    fn tumor_drift_only_step() {
        let p = TumorParams { discretization: Discretization::DriftOnly, ..Default::default() };
        let m = TumorModel::new(p).unwrap();
        let mut out = [0.0; 2];
        m.transition(&[0.8, 0.3], &[0.0, 0.0], 0, &mut out);
        assert_relative_eq!(out[0], -0.156_932_7, epsilon = 1e-7);
        assert_relative_eq!(out[1], 0.021_658_7, epsilon = 1e-7);
    }

    #[test]
    fn tumor_equal_components_have_no_growth() {
        let m = TumorModel::new(TumorParams::default()).unwrap();
        assert_eq!(m.drift(&[0.5, 0.5])[0], 0.0);
    }

    #[test]
    fn tumor_jacobian_matches_differences() {
        for mode in [Discretization::Euler, Discretization::DriftOnly] {
            let m = TumorModel::new(TumorParams { discretization: mode, ..Default::default() }).unwrap();
            let x = [0.7, 0.35];
            let mut analytic = [0.0; 4];
            m.transition_jacobian(&x, &[0.0; 2], 0, &mut analytic);
            let h = 1e-6;
            for j in 0..2 {
                let (mut xp, mut xm) = (x, x);
                xp[j] += h;
                xm[j] -= h;
                let (mut fp, mut fm) = ([0.0; 2], [0.0; 2]);
                m.transition(&xp, &[0.0; 2], 0, &mut fp);
                m.transition(&xm, &[0.0; 2], 0, &mut fm);
                for i in 0..2 {
                    assert_relative_eq!(analytic[i * 2 + j], (fp[i] - fm[i]) / (2.0 * h), epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn bearing_step_from_x0() {
        let m = BearingModel::new(BearingParams::default()).unwrap();
        let mut out = [0.0; 6];
        m.transition(&[2.0, 2.0, 1.0, 0.4, 0.4, 0.0], &[0.0; 6], 0, &mut out);
        let expected = [2.12, 2.0 + 1.2f64.sin() * 0.3, 1.0, 0.415, 0.415, 0.015];
        for i in 0..6 {
            assert_relative_eq!(out[i], expected[i], epsilon = 1e-14);
        }
        assert_relative_eq!(out[1], 2.279_611_7, epsilon = 1e-7);
    }

    #[test]
    fn bearing_zero_control_keeps_altitude() {
        let m = BearingModel::new(BearingParams::default()).unwrap();
        let mut out = [0.0; 6];
        m.transition(&[1.0, 1.0, 3.0, 0.0, 0.0, 0.0], &[0.0; 6], 0, &mut out);
        assert_eq!(out[2], 3.0);
    }

    #[test]
    fn bearing_frozen_controls() {
        let p = BearingParams { drift: [0.0; 3], ..Default::default() };
        let m = BearingModel::new(p).unwrap();
        let mut out = [0.0; 6];
        m.transition(&[1.0, 1.0, 3.0, 0.1, 0.2, 0.3], &[0.0; 6], 0, &mut out);
        assert_eq!(&out[3..], &[0.1, 0.2, 0.3]);
    }

    #[test]
    fn bearing_observation_values() {
        let m = BearingModel::new(BearingParams::default()).unwrap();
        let mut y = [0.0; 4];
        m.observe(&[17.0, 7.0, 1.0, 0.0, 0.0, 0.0], 0, &mut y);
        assert_relative_eq!(y[0], (1.0 / 2f64.sqrt()).atan(), epsilon = 1e-15);
        assert_relative_eq!(y[0], 0.615_479_7, epsilon = 1e-7);
        assert_relative_eq!(y[2], std::f64::consts::FRAC_PI_4, epsilon = 1e-15);
        m.observe(&[3.0, 4.0, 0.0, 0.0, 0.0, 0.0], 0, &mut y);
        assert_eq!((y[0], y[1]), (0.0, 0.0));
        m.observe(&[1e9, 1e9, 1.0, 0.0, 0.0, 0.0], 0, &mut y);
        assert!(y[0].abs() < 1e-8 && y[1].abs() < 1e-8);
    }

    #[test]
    fn atan_guard() {
        assert_eq!(guarded_atan(0.0, 0.0), 0.0);
        assert_eq!(guarded_atan(2.0, 0.0), std::f64::consts::FRAC_PI_2);
        assert_eq!(guarded_atan(-2.0, 0.0), -std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn linear_params_validated() {
        let mut p = LinearGaussianParams::two_d();
        p.a.pop();
        assert!(LinearGaussianModel::new(p).is_err());
    }
}
