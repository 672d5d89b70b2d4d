//! The meshfree implicit filter.
//!
//! The posterior at step `k` lives on a cloud of `N` nodes, each carrying a
//! normalized density value. One step:
//!
//! 1. measure degeneracy of the step-`k-1` cloud; if it reaches `tau`,
//!    relocate the low-value nodes by resampling;
//! 2. push the (possibly resampled) nodes through the state model to get the
//!    new node set;
//! 3. prior value at each new node: draw `M` noise samples, invert the state
//!    equation for each, and average the step-`k-1` Shepard interpolant over
//!    the pre-images;
//! 4. multiply by the observation likelihood and normalize.
//!
//! Node values are kept as normalized weights over the nodes. Because the
//! nodes are not uniformly spread, each node also carries the (relative)
//! density of the point process that generated it. The node density follows
//! the same implicit prediction as the posterior, using the same pre-images,
//! so weights are `density / node density` and the weighted node average is a
//! consistent posterior mean. With `density_correction` off the node density
//! is held at one and weights equal raw density values.

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::error::{FilterError, Result};
use crate::interp::{KnnIndex, ShepardConfig, ShepardInterpolant, ShepardScratch};
use crate::model::{propagate_into, GaussianSpec, ObservationLikelihood, StateSpaceModel, StateVector};
use crate::rng::{RandomSource, StreamPurpose, StreamRng};
use crate::solver::{solve_in_place, SolveConfig, SolverWorkspace};

/// Nodes and their normalized density values at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub step: usize,
    dim: usize,
    nodes: Vec<f64>,
    values: Vec<f64>,
    node_density: Vec<f64>,
}

impl PointCloud {
    /// Builds a cloud from row-major node coordinates and matching values,
    /// with uniform node density.
    pub fn new(step: usize, dim: usize, nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::with_node_density(step, dim, nodes, values, vec![1.0; n])
    }

    pub fn with_node_density(step: usize, dim: usize, nodes: Vec<f64>, values: Vec<f64>, node_density: Vec<f64>) -> Result<Self> {
        if dim == 0 || nodes.len() != dim * values.len() {
            return Err(FilterError::DimensionMismatch { expected: dim * values.len(), got: nodes.len() });
        }
        if node_density.len() != values.len() {
            return Err(FilterError::DimensionMismatch { expected: values.len(), got: node_density.len() });
        }
        if values.is_empty() {
            return Err(FilterError::Empty("point cloud"));
        }
        Ok(Self { step, dim, nodes, values, node_density })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn nodes_flat(&self) -> &[f64] {
        &self.nodes
    }

    pub fn nodes(&self) -> Vec<StateVector> {
        self.nodes.chunks_exact(self.dim).map(StateVector::from).collect()
    }

    /// Normalized node weights.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Relative density of the process that placed the nodes.
    pub fn node_density(&self) -> &[f64] {
        &self.node_density
    }

    /// Unnormalized posterior density at each node: weight times node density.
    pub fn density(&self) -> Vec<f64> {
        self.values.iter().zip(&self.node_density).map(|(w, q)| w * q).collect()
    }

    /// Weighted standard deviation per coordinate, weights being the node values.
    pub fn weighted_std(&self) -> Vec<f64> {
        let mean = posterior_mean(self);
        let mut var = vec![0.0; self.dim];
        for (p, &v) in self.nodes.chunks_exact(self.dim).zip(&self.values) {
            for m in 0..self.dim {
                let e = p[m] - mean[m];
                var[m] += v * e * e;
            }
        }
        var.iter().map(|v| v.max(0.0).sqrt()).collect()
    }
}

/// How the `M` prediction noise samples are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSampling {
    /// A fresh set of `M` samples for every node.
    #[default]
    PerNode,
    /// One set of `M` samples per step, shared by all nodes.
    Shared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    /// Node count `N`.
    pub points: usize,
    /// Noise samples per node `M`.
    pub samples: usize,
    pub shepard: ShepardConfig,
    #[serde(default)]
    pub solve: SolveConfig,
    /// Degeneracy threshold on normalized values; `None` means `0.01 / N`.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Resample when the degenerate fraction reaches this ratio.
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_jitter")]
    pub jitter_scale: f64,
    #[serde(default)]
    pub noise_sampling: NoiseSampling,
    /// Track node density and weight nodes by `density / node density`.
    #[serde(default = "default_true")]
    pub density_correction: bool,
}

fn default_true() -> bool {
    true
}

fn default_tau() -> f64 {
    0.2
}

fn default_jitter() -> f64 {
    1.0
}

impl FilterConfig {
    /// Defaults for state dimension `d` with `points` nodes and `samples` noise draws.
    pub fn new(d: usize, points: usize, samples: usize) -> Self {
        Self {
            points,
            samples,
            shepard: ShepardConfig::for_dim(d),
            solve: SolveConfig::default(),
            epsilon: None,
            tau: default_tau(),
            jitter_scale: default_jitter(),
            noise_sampling: NoiseSampling::PerNode,
            density_correction: true,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(0.01 / self.points as f64)
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.points < 1 {
            return Err("points must be >= 1".into());
        }
        if self.samples < 1 {
            return Err("samples must be >= 1".into());
        }
        if !(self.epsilon() > 0.0) {
            return Err("epsilon must be > 0".into());
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err("tau must lie in [0, 1]".into());
        }
        if !(self.jitter_scale >= 0.0) {
            return Err("jitter_scale must be >= 0".into());
        }
        self.shepard.validate()?;
        self.solve.validate()
    }
}

/// Filter state after some step: the posterior cloud and its interpolant.
#[derive(Debug, Clone)]
pub struct FilterState {
    pub cloud: PointCloud,
    interpolant: ShepardInterpolant,
}

impl FilterState {
    pub fn new(cloud: PointCloud, shepard: &ShepardConfig) -> Result<Self> {
        let index = KnnIndex::from_flat(cloud.dim, cloud.nodes.clone())?;
        let interpolant = ShepardInterpolant::new(index, cloud.density(), *shepard)?;
        Ok(Self { cloud, interpolant })
    }

    /// Shepard interpolant of this state's posterior density.
    pub fn interpolant(&self) -> &ShepardInterpolant {
        &self.interpolant
    }

    pub fn step(&self) -> usize {
        self.cloud.step
    }
}

/// Diagnostics for one filter step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: usize,
    pub degeneracy_ratio: f64,
    pub resampled: bool,
    /// Nodes replaced during resampling.
    pub replaced: usize,
    /// Resampling had no node at or above epsilon and drew from the whole cloud.
    pub resample_fallback: bool,
    /// Implicit solves that did not converge.
    pub failed_solves: usize,
    /// Nodes for which every solve failed.
    pub rootless_nodes: usize,
    /// Nodes left in place because propagation kept leaving the domain.
    #[serde(default)]
    pub stalled_nodes: usize,
}

/// `N` draws from `p0` with equal values `1/N`; the node density is `p0`
/// itself, scaled to a maximum of one.
pub fn init_cloud(p0: &GaussianSpec, n: usize, rng: RandomSource) -> Result<PointCloud> {
    init_cloud_where(p0, n, rng, |_| true)
}

/// As [`init_cloud`], redrawing any sample outside the model's domain.
pub fn init_cloud_in_domain<M: StateSpaceModel + ?Sized>(
    model: &M,
    p0: &GaussianSpec,
    n: usize,
    rng: RandomSource,
) -> Result<PointCloud> {
    init_cloud_where(p0, n, rng, |x| model.domain_guard(x))
}

fn init_cloud_where(p0: &GaussianSpec, n: usize, rng: RandomSource, accept: impl Fn(&[f64]) -> bool) -> Result<PointCloud> {
    if n == 0 {
        return Err(FilterError::Empty("point cloud"));
    }
    let d = p0.dim();
    let mut nodes = vec![0.0; n * d];
    for (i, out) in nodes.chunks_exact_mut(d).enumerate() {
        let mut r = rng.child(StreamPurpose::Init, 0, i).rng();
        let mut tries = 0;
        loop {
            p0.sample_into(&mut r, out);
            tries += 1;
            if accept(out) {
                break;
            }
            if tries >= 1000 {
                return Err(FilterError::DomainRetriesExhausted { node: out.to_vec(), retries: tries });
            }
        }
    }
    let logq: Vec<f64> = nodes.chunks_exact(d).map(|x| p0.logpdf_unchecked(x)).collect();
    let top = logq.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let q = logq.iter().map(|l| (l - top).exp().max(f64::MIN_POSITIVE)).collect();
    PointCloud::with_node_density(0, d, nodes, vec![1.0 / n as f64; n], q)
}

/// Fraction of nodes whose value is below `epsilon`.
pub fn degeneracy_ratio(cloud: &PointCloud, epsilon: f64) -> f64 {
    cloud.values.iter().filter(|&&v| v < epsilon).count() as f64 / cloud.len() as f64
}

/// `Σ value_i · node_i`.
pub fn posterior_mean(cloud: &PointCloud) -> StateVector {
    let mut m = vec![0.0; cloud.dim];
    for (p, &v) in cloud.nodes.chunks_exact(cloud.dim).zip(&cloud.values) {
        for (a, b) in m.iter_mut().zip(p) {
            *a += v * b;
        }
    }
    StateVector(m)
}

/// Outcome of [`resample`].
#[derive(Debug, Clone, PartialEq)]
pub struct Resampled {
    /// Row-major intermediate node set.
    pub nodes: Vec<f64>,
    pub replaced: usize,
    pub fallback: bool,
}

impl Resampled {
    pub fn to_state_vectors(&self, dim: usize) -> Vec<StateVector> {
        self.nodes.chunks_exact(dim).map(StateVector::from).collect()
    }
}

/// Replaces every node with value below `epsilon` by a jittered copy of a
/// surviving node drawn with probability proportional to its value. Nodes at
/// or above `epsilon` are kept as they are.
pub fn resample(cloud: &PointCloud, epsilon: f64, jitter_scale: f64, rng: RandomSource) -> Resampled {
    resample_where(cloud, epsilon, jitter_scale, rng, |_| true)
}

/// As [`resample`], redrawing jitter that would leave `accept`'s region. After
/// 100 rejected draws the donor is copied without jitter.
pub fn resample_where(
    cloud: &PointCloud,
    epsilon: f64,
    jitter_scale: f64,
    rng: RandomSource,
    accept: impl Fn(&[f64]) -> bool,
) -> Resampled {
    let n = cloud.len();
    let d = cloud.dim;
    let mut nodes = cloud.nodes.clone();
    let degenerate: Vec<usize> = (0..n).filter(|&i| cloud.values[i] < epsilon).collect();
    if degenerate.is_empty() {
        return Resampled { nodes, replaced: 0, fallback: false };
    }

    let mut donors: Vec<usize> = (0..n).filter(|&i| cloud.values[i] >= epsilon).collect();
    let fallback = donors.is_empty();
    let mut donor_weights: Vec<f64>;
    if fallback {
        warn!("step {}: every node below epsilon {epsilon:e}; resampling from the whole cloud", cloud.step);
        donors = (0..n).collect();
        donor_weights = cloud.values.clone();
        if !(donor_weights.iter().sum::<f64>() > 0.0) {
            donor_weights.fill(1.0);
        }
    } else {
        donor_weights = donors.iter().map(|&i| cloud.values[i]).collect();
    }
    let mut cumulative = Vec::with_capacity(donors.len());
    let mut acc = 0.0;
    for w in &donor_weights {
        acc += w;
        cumulative.push(acc);
    }

    let bandwidth: Vec<f64> = {
        let factor = jitter_scale * (n as f64).powf(-1.0 / (d as f64 + 4.0));
        cloud.weighted_std().iter().map(|s| factor * s).collect()
    };
    let jitter = bandwidth.iter().any(|&b| b > 0.0);

    let mut r = rng.rng();
    let mut trial = vec![0.0; d];
    for &i in &degenerate {
        let u = r.uniform() * acc;
        let pick = cumulative.partition_point(|&c| c <= u).min(donors.len() - 1);
        let donor = &cloud.nodes[donors[pick] * d..(donors[pick] + 1) * d];
        let out = &mut nodes[i * d..(i + 1) * d];
        out.copy_from_slice(donor);
        if jitter {
            for _ in 0..100 {
                for m in 0..d {
                    trial[m] = donor[m] + bandwidth[m] * r.standard_normal();
                }
                if accept(&trial) {
                    out.copy_from_slice(&trial);
                    break;
                }
            }
        }
    }
    Resampled { nodes, replaced: degenerate.len(), fallback }
}

struct PredictScratch {
    solver: SolverWorkspace,
    shepard: ShepardScratch,
    noise: Vec<f64>,
}

impl PredictScratch {
    fn new(d: usize, r: usize, m: usize) -> Self {
        Self { solver: SolverWorkspace::new(d), shepard: ShepardScratch::default(), noise: vec![0.0; r * m] }
    }
}

#[cfg(feature = "parallel")]
fn map_nodes<T, S, I, F>(n: usize, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().with_min_len(64).map_init(init, f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_nodes<T, S, I, F>(n: usize, init: I, f: F) -> Vec<T>
where
    I: Fn() -> S,
    F: Fn(&mut S, usize) -> T,
{
    let mut s = init();
    (0..n).map(|i| f(&mut s, i)).collect()
}

/// Pushes every seed through the state model (transition indexed by `k - 1`).
///
/// A seed whose every noise redraw leaves the model domain stays where it is;
/// the second return value counts such seeds.
pub fn propagate_nodes<M: StateSpaceModel + ?Sized>(model: &M, seeds: &[f64], rng: RandomSource, k: usize) -> Result<(Vec<f64>, usize)> {
    let d = model.state_dim();
    let r = model.noise_dim();
    let n = seeds.len() / d;
    let rows = map_nodes(
        n,
        || vec![0.0; r],
        |w, i| {
            let mut out = vec![0.0; d];
            let mut s = rng.child(StreamPurpose::Propagate, k, i).rng();
            propagate_into(model, &seeds[i * d..(i + 1) * d], &mut s, k - 1, w, &mut out).map(|_| out)
        },
    );
    let mut nodes = Vec::with_capacity(n * d);
    let mut stalled = 0;
    for (i, row) in rows.into_iter().enumerate() {
        match row {
            Ok(x) => nodes.extend_from_slice(&x),
            Err(FilterError::DomainRetriesExhausted { .. }) => {
                stalled += 1;
                nodes.extend_from_slice(&seeds[i * d..(i + 1) * d]);
            }
            Err(e) => return Err(e),
        }
    }
    if stalled > 0 {
        log::debug!("step {k}: {stalled} nodes could not be propagated inside the domain");
    }
    Ok((nodes, stalled))
}

/// How the seeds of the new node set were produced from the previous cloud.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedOrigin {
    /// The previous nodes themselves.
    Previous,
    /// The previous nodes with `replaced` of them resampled.
    Resampled { replaced: usize },
}

/// Prediction output: unnormalized prior density and node density at each
/// node, plus solve diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub values: Vec<f64>,
    pub node_density: Vec<f64>,
    /// Prior weights: density over node density (raw density when the node
    /// density is not tracked).
    pub weights: Vec<f64>,
    pub failed_solves: usize,
    pub rootless_nodes: usize,
}

/// Prior value at each node of `nodes`: the average of the previous posterior
/// interpolant over the pre-images of `M` noise samples. Non-converged solves
/// are dropped from the average; a node with no converged solve receives the
/// smallest positive value found elsewhere.
///
/// The node density of the new nodes is predicted over the same pre-images,
/// from the density of the seeds: the previous node density, or after
/// resampling, the kept part of it plus the replacement draws.
pub fn predict<M: StateSpaceModel + ?Sized>(
    previous: &FilterState,
    nodes: &[f64],
    model: &M,
    cfg: &FilterConfig,
    rng: RandomSource,
    k: usize,
) -> Result<Prediction> {
    predict_from(previous, nodes, SeedOrigin::Previous, model, cfg, rng, k)
}

#[allow(clippy::too_many_arguments)]
pub fn predict_from<M: StateSpaceModel + ?Sized>(
    previous: &FilterState,
    nodes: &[f64],
    origin: SeedOrigin,
    model: &M,
    cfg: &FilterConfig,
    rng: RandomSource,
    k: usize,
) -> Result<Prediction> {
    let d = model.state_dim();
    let r = model.noise_dim();
    let m = cfg.samples;
    let n = nodes.len() / d;
    let noise = model.state_noise();
    let interp = &previous.interpolant;
    let density = interp.values();
    let qfield = previous.cloud.node_density();
    let eps = cfg.epsilon();
    let track = cfg.density_correction;

    let shared: Option<Vec<f64>> = match cfg.noise_sampling {
        NoiseSampling::Shared => {
            let mut s = rng.child(StreamPurpose::PredictNoise, k, 0).rng();
            let mut buf = vec![0.0; r * m];
            for w in buf.chunks_exact_mut(r) {
                noise.sample_into(&mut s, w);
            }
            Some(buf)
        }
        NoiseSampling::PerNode => None,
    };

    let per_node: Vec<Result<(f64, f64, usize)>> = map_nodes(
        n,
        || PredictScratch::new(d, r, m),
        |s, i| {
            let target = &nodes[i * d..(i + 1) * d];
            let ws: &[f64] = match &shared {
                Some(buf) => buf,
                None => {
                    let mut g: StreamRng = rng.child(StreamPurpose::PredictNoise, k, i).rng();
                    for w in s.noise.chunks_exact_mut(r) {
                        noise.sample_into(&mut g, w);
                    }
                    &s.noise
                }
            };
            let mut total = 0.0;
            let mut total_q = 0.0;
            let mut ok = 0usize;
            for w in ws.chunks_exact(r) {
                let st = solve_in_place(model, target, w, k - 1, target, &cfg.solve, &mut s.solver, None);
                if st.converged {
                    interp.locate(s.solver.root(), &mut s.shepard)?;
                    let rho = s.shepard.combine(density);
                    total += rho;
                    if track {
                        let q = s.shepard.combine(qfield);
                        total_q += match origin {
                            SeedOrigin::Previous => q,
                            SeedOrigin::Resampled { replaced } if rho >= eps * q => q + replaced as f64 * rho,
                            SeedOrigin::Resampled { .. } => 0.0,
                        };
                    }
                    ok += 1;
                }
            }
            Ok(if ok > 0 {
                let q = if track { total_q / ok as f64 } else { 1.0 };
                (total / ok as f64, q, m - ok)
            } else {
                (f64::NAN, f64::NAN, m)
            })
        },
    );

    let mut values = Vec::with_capacity(n);
    let mut node_density = Vec::with_capacity(n);
    let mut failed = 0;
    for item in per_node {
        let (v, q, f) = item?;
        failed += f;
        values.push(v);
        node_density.push(q);
    }
    let rootless = values.iter().filter(|v| v.is_nan()).count();
    if rootless > 0 {
        let floor = floor_positive(&values);
        warn!("step {k}: {rootless} node(s) had no converged pre-image; assigned value {floor:e}");
        for v in values.iter_mut().filter(|v| v.is_nan()) {
            *v = floor;
        }
    }
    // A node whose pre-images all missed the seed support has no usable
    // density estimate; it gets the smallest weight seen elsewhere.
    let mut weights: Vec<f64> = values.iter().zip(&node_density).map(|(v, q)| if *q > 0.0 { v / q } else { f64::NAN }).collect();
    let wfloor = floor_positive(&weights);
    for w in weights.iter_mut().filter(|w| w.is_nan()) {
        *w = wfloor;
    }
    let qfloor = floor_positive(&node_density);
    for q in node_density.iter_mut().filter(|q| !(**q > 0.0)) {
        *q = qfloor;
    }
    let top = node_density.iter().copied().fold(0.0_f64, f64::max);
    if top > 0.0 && top.is_finite() {
        for q in &mut node_density {
            *q /= top;
        }
    }
    Ok(Prediction { values, node_density, weights, failed_solves: failed, rootless_nodes: rootless })
}

fn floor_positive(v: &[f64]) -> f64 {
    let floor = v.iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    if floor.is_finite() {
        floor
    } else {
        f64::MIN_POSITIVE
    }
}

/// Bayes update on the nodes: `posterior_i ∝ p(y | node_i) · prior_i`,
/// normalized to sum to one. Computed in log space.
pub fn update<M: StateSpaceModel + ?Sized>(
    prior: &[f64],
    nodes: &[f64],
    observation: &[f64],
    model: &M,
    k: usize,
) -> Result<Vec<f64>> {
    let lik = ObservationLikelihood::for_model(model)?;
    let q = model.obs_dim();
    if observation.len() != q {
        return Err(FilterError::DimensionMismatch { expected: q, got: observation.len() });
    }
    let d = model.state_dim();
    let mut predicted = vec![0.0; q];
    let mut scratch = vec![0.0; q];
    let logs: Vec<f64> = nodes
        .chunks_exact(d)
        .zip(prior)
        .map(|(x, &p)| {
            if !(p > 0.0) {
                return f64::NEG_INFINITY;
            }
            model.observe(x, k, &mut predicted);
            lik.log_likelihood(observation, &predicted, &mut scratch) + p.ln()
        })
        .collect();
    normalize_log_weights(&logs).ok_or(FilterError::ObservationIncompatible)
}

/// Exponentiates and normalizes log weights with max subtraction. `None` when
/// nothing survives.
pub fn normalize_log_weights(logs: &[f64]) -> Option<Vec<f64>> {
    let max = logs.iter().copied().filter(|v| !v.is_nan()).fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let mut w: Vec<f64> = logs.iter().map(|&l| if l.is_nan() { 0.0 } else { (l - max).exp() }).collect();
    let total: f64 = w.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return None;
    }
    for v in &mut w {
        *v /= total;
    }
    Some(w)
}

/// One full filter step from `state` (step `k - 1`) to step `k`.
pub fn filter_step<M: StateSpaceModel + ?Sized>(
    state: &FilterState,
    model: &M,
    cfg: &FilterConfig,
    observation: &[f64],
    rng: RandomSource,
    k: usize,
) -> Result<(FilterState, StepReport)> {
    let eps = cfg.epsilon();
    let ratio = degeneracy_ratio(&state.cloud, eps);
    let mut report = StepReport { step: k, degeneracy_ratio: ratio, ..Default::default() };

    let mut origin = SeedOrigin::Previous;
    let (propagated, stalled) = if ratio < cfg.tau {
        propagate_nodes(model, &state.cloud.nodes, rng, k)?
    } else {
        let seeds = resample_where(&state.cloud, eps, cfg.jitter_scale, rng.child(StreamPurpose::Resample, k, 0), |x| {
            model.domain_guard(x)
        });
        report.resampled = true;
        report.replaced = seeds.replaced;
        report.resample_fallback = seeds.fallback;
        origin = SeedOrigin::Resampled { replaced: seeds.replaced };
        debug!("step {k}: resampled {} of {} nodes (ratio {ratio:.3})", seeds.replaced, state.cloud.len());
        propagate_nodes(model, &seeds.nodes, rng, k)?
    };

    report.stalled_nodes = stalled;
    let prior = predict_from(state, &propagated, origin, model, cfg, rng, k)?;
    report.failed_solves = prior.failed_solves;
    report.rootless_nodes = prior.rootless_nodes;

    let posterior = update(&prior.weights, &propagated, observation, model, k)?;
    let cloud = PointCloud::with_node_density(k, model.state_dim(), propagated, posterior, prior.node_density)?;
    Ok((FilterState::new(cloud, &cfg.shepard)?, report))
}

/// Per-step output of [`run_filter`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepEstimate {
    pub step: usize,
    pub mean: StateVector,
    pub std: Vec<f64>,
    pub report: StepReport,
}

/// Runs the filter over `observations` (for steps `1..=K`) from the prior `p0`.
/// The returned vector holds step 0 followed by one entry per observation.
pub fn run_filter<M: StateSpaceModel + ?Sized>(
    model: &M,
    p0: &GaussianSpec,
    cfg: &FilterConfig,
    observations: &[Vec<f64>],
    rng: RandomSource,
    mut inspect: impl FnMut(&FilterState, &StepReport),
) -> Result<Vec<StepEstimate>> {
    cfg.validate().map_err(FilterError::InvalidConfig)?;
    if p0.dim() != model.state_dim() {
        return Err(FilterError::DimensionMismatch { expected: model.state_dim(), got: p0.dim() });
    }
    let mut cloud = init_cloud_in_domain(model, p0, cfg.points, rng)?;
    if !cfg.density_correction {
        cloud.node_density.fill(1.0);
    }
    let mut state = FilterState::new(cloud, &cfg.shepard)?;
    let initial = StepReport::default();
    inspect(&state, &initial);
    let mut out = Vec::with_capacity(observations.len() + 1);
    out.push(StepEstimate { step: 0, mean: posterior_mean(&state.cloud), std: state.cloud.weighted_std(), report: initial });
    for (j, y) in observations.iter().enumerate() {
        let k = j + 1;
        let (next, report) = filter_step(&state, model, cfg, y, rng, k)?;
        inspect(&next, &report);
        out.push(StepEstimate { step: k, mean: posterior_mean(&next.cloud), std: next.cloud.weighted_std(), report });
        state = next;
    }
    Ok(out)
}
