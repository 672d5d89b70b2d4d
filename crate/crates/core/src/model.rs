//! State-space model abstraction, Gaussian densities and point propagation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FilterError, Result};
use crate::rng::StreamRng;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Redraws allowed when a propagated point leaves the model domain.
pub const PROPAGATE_RETRY_CAP: usize = 100;

macro_rules! real_vector {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        pub struct $name(pub Vec<f64>);

        impl $name {
            pub fn new(coords: Vec<f64>) -> Self {
                Self(coords)
            }
            pub fn zeros(n: usize) -> Self {
                Self(vec![0.0; n])
            }
            pub fn len(&self) -> usize {
                self.0.len()
            }
            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }
            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }
            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|v| v.is_finite())
            }
        }

        impl std::ops::Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }

        impl From<&[f64]> for $name {
            fn from(v: &[f64]) -> Self {
                Self(v.to_vec())
            }
        }
    };
}

real_vector!(
    /// A point in state space.
    StateVector
);
real_vector!(
    /// A measurement.
    ObservationVector
);
real_vector!(
    /// A realization of state or observation noise.
    NoiseVector
);

/// Covariance of a [`GaussianSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Covariance {
    /// Variances along the diagonal.
    Diagonal(Vec<f64>),
    /// Dense symmetric matrix, row-major.
    Full(Vec<f64>),
}

/// Multivariate normal distribution with its factorization cached.
#[derive(Debug, Clone)]
pub struct GaussianSpec {
    mean: Vec<f64>,
    covariance: Covariance,
    factor: Factor,
    log_det: f64,
}

#[derive(Debug, Clone)]
enum Factor {
    /// Standard deviations.
    Diagonal(Vec<f64>),
    /// Lower Cholesky factor.
    Full(DMatrix<f64>),
}

impl GaussianSpec {
    pub fn new(mean: Vec<f64>, covariance: Covariance) -> Result<Self> {
        let n = mean.len();
        let (factor, log_det) = match &covariance {
            Covariance::Diagonal(var) => {
                if var.len() != n {
                    return Err(FilterError::DimensionMismatch { expected: n, got: var.len() });
                }
                if var.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                    return Err(FilterError::NotPositiveDefinite);
                }
                let sd: Vec<f64> = var.iter().map(|v| v.sqrt()).collect();
                (Factor::Diagonal(sd), var.iter().map(|v| v.ln()).sum())
            }
            Covariance::Full(m) => {
                if m.len() != n * n {
                    return Err(FilterError::DimensionMismatch { expected: n * n, got: m.len() });
                }
                let mat = DMatrix::from_row_slice(n, n, m);
                let asym = (&mat - mat.transpose()).abs().max();
                if !(asym <= 1e-12 * (1.0 + mat.abs().max())) {
                    return Err(FilterError::NotPositiveDefinite);
                }
                let chol = mat.cholesky().ok_or(FilterError::NotPositiveDefinite)?;
                let l = chol.l();
                let log_det = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
                (Factor::Full(l), log_det)
            }
        };
        Ok(Self { mean, covariance, factor, log_det })
    }

    /// Diagonal normal with the given mean and variances.
    pub fn diagonal(mean: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        Self::new(mean, Covariance::Diagonal(variances))
    }

    /// Zero-mean isotropic normal with variance `var` in each of `n` coordinates.
    pub fn isotropic(n: usize, var: f64) -> Result<Self> {
        Self::diagonal(vec![0.0; n], vec![var; n])
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &Covariance {
        &self.covariance
    }

    /// Covariance as a dense matrix.
    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        match &self.covariance {
            Covariance::Diagonal(v) => DMatrix::from_diagonal(&DVector::from_column_slice(v)),
            Covariance::Full(m) => DMatrix::from_row_slice(n, n, m),
        }
    }

    /// Log density at `x`.
    pub fn logpdf(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(FilterError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(self.logpdf_unchecked(x))
    }

    pub(crate) fn logpdf_unchecked(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let maha = match &self.factor {
            Factor::Diagonal(sd) => x
                .iter()
                .zip(&self.mean)
                .zip(sd)
                .map(|((xi, mi), s)| {
                    let z = (xi - mi) / s;
                    z * z
                })
                .sum::<f64>(),
            Factor::Full(l) => {
                let diff = DVector::from_iterator(n, x.iter().zip(&self.mean).map(|(a, b)| a - b));
                let z = l.solve_lower_triangular(&diff).expect("cholesky factor is nonsingular");
                z.norm_squared()
            }
        };
        -0.5 * (n as f64 * LN_2PI + self.log_det + maha)
    }

    /// One draw written into `out`.
    pub fn sample_into(&self, rng: &mut StreamRng, out: &mut [f64]) {
        match &self.factor {
            Factor::Diagonal(sd) => {
                for ((o, m), s) in out.iter_mut().zip(&self.mean).zip(sd) {
                    *o = m + s * rng.standard_normal();
                }
            }
            Factor::Full(l) => {
                let n = self.dim();
                let z = DVector::from_fn(n, |_, _| rng.standard_normal());
                let y = l * z;
                for i in 0..n {
                    out[i] = self.mean[i] + y[i];
                }
            }
        }
    }

    pub fn sample(&self, rng: &mut StreamRng) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.sample_into(rng, &mut out);
        out
    }
}

/// Log density of `spec` at `x`.
pub fn gaussian_logpdf(spec: &GaussianSpec, x: &[f64]) -> Result<f64> {
    spec.logpdf(x)
}

/// One draw from `spec`.
pub fn sample_gaussian(spec: &GaussianSpec, rng: &mut StreamRng) -> NoiseVector {
    NoiseVector(spec.sample(rng))
}

/// A discrete nonlinear state-space model
///
/// ```text
/// x_k = transition(x_{k-1}, w_{k-1}, k-1)
/// y_k = observe(x_k, k) + obs_scale ∘ v_k
/// ```
///
/// with `w ~ state_noise` and `v ~ obs_noise`. The transition is indexed by the
/// source step. Implementations must be pure.
pub trait StateSpaceModel: Send + Sync {
    fn state_dim(&self) -> usize;
    fn noise_dim(&self) -> usize;
    fn obs_dim(&self) -> usize;

    fn transition(&self, x: &[f64], w: &[f64], k: usize, out: &mut [f64]);

    /// Row-major `d x d` Jacobian of the transition with respect to `x`.
    /// Returns `false` when no analytic form is available.
    fn transition_jacobian(&self, _x: &[f64], _w: &[f64], _k: usize, _jac: &mut [f64]) -> bool {
        false
    }

    /// Row-major `d x r` Jacobian of the transition with respect to the noise,
    /// if available.
    fn noise_jacobian(&self, _x: &[f64], _w: &[f64], _k: usize, _jac: &mut [f64]) -> bool {
        false
    }

    fn observe(&self, x: &[f64], k: usize, out: &mut [f64]);

    /// Row-major `q x d` Jacobian of the observation map, if available.
    fn observe_jacobian(&self, _x: &[f64], _k: usize, _jac: &mut [f64]) -> bool {
        false
    }

    fn state_noise(&self) -> &GaussianSpec;
    fn obs_noise(&self) -> &GaussianSpec;
    /// Per-component scale applied to the observation noise.
    fn obs_scale(&self) -> &[f64];

    fn domain_guard(&self, _x: &[f64]) -> bool {
        true
    }
}

/// Default relative finite-difference step.
pub const FD_STEP: f64 = 1e-6;

fn fd_step(x: f64) -> f64 {
    FD_STEP.max(FD_STEP * x.abs())
}

/// Transition Jacobian with respect to `x`: analytic when the model has one,
/// central differences otherwise.
pub fn transition_jacobian<M: StateSpaceModel + ?Sized>(model: &M, x: &[f64], w: &[f64], k: usize, jac: &mut [f64]) {
    transition_jacobian_with_step(model, x, w, k, jac, FD_STEP)
}

/// As [`transition_jacobian`], with step `max(h, h·|x_j|)` for the difference fallback.
pub fn transition_jacobian_with_step<M: StateSpaceModel + ?Sized>(
    model: &M,
    x: &[f64],
    w: &[f64],
    k: usize,
    jac: &mut [f64],
    h_rel: f64,
) {
    if model.transition_jacobian(x, w, k, jac) {
        return;
    }
    let d = model.state_dim();
    let mut xp = x.to_vec();
    let mut fp = vec![0.0; d];
    let mut fm = vec![0.0; d];
    for j in 0..d {
        let h = h_rel.max(h_rel * x[j].abs());
        xp[j] = x[j] + h;
        model.transition(&xp, w, k, &mut fp);
        xp[j] = x[j] - h;
        model.transition(&xp, w, k, &mut fm);
        xp[j] = x[j];
        for i in 0..d {
            jac[i * d + j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
}

/// Row-major `d x r` Jacobian of the transition with respect to the noise:
/// analytic when available, central differences otherwise.
pub fn noise_jacobian<M: StateSpaceModel + ?Sized>(model: &M, x: &[f64], w: &[f64], k: usize, jac: &mut [f64]) {
    if model.noise_jacobian(x, w, k, jac) {
        return;
    }
    let d = model.state_dim();
    let r = model.noise_dim();
    let mut wp = w.to_vec();
    let mut fp = vec![0.0; d];
    let mut fm = vec![0.0; d];
    for j in 0..r {
        let h = fd_step(w[j]);
        wp[j] = w[j] + h;
        model.transition(x, &wp, k, &mut fp);
        wp[j] = w[j] - h;
        model.transition(x, &wp, k, &mut fm);
        wp[j] = w[j];
        for i in 0..d {
            jac[i * r + j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
}

/// Observation Jacobian: analytic when available, central differences otherwise.
pub fn observe_jacobian<M: StateSpaceModel + ?Sized>(model: &M, x: &[f64], k: usize, jac: &mut [f64]) {
    if model.observe_jacobian(x, k, jac) {
        return;
    }
    let d = model.state_dim();
    let q = model.obs_dim();
    let mut xp = x.to_vec();
    let mut gp = vec![0.0; q];
    let mut gm = vec![0.0; q];
    for j in 0..d {
        let h = fd_step(x[j]);
        xp[j] = x[j] + h;
        model.observe(&xp, k, &mut gp);
        xp[j] = x[j] - h;
        model.observe(&xp, k, &mut gm);
        xp[j] = x[j];
        for i in 0..q {
            jac[i * d + j] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
}

/// Gaussian likelihood of an observation given a state: mean `observe(x)`,
/// covariance `diag(scale) * Λ * diag(scale)`.
#[derive(Debug, Clone)]
pub struct ObservationLikelihood {
    spec: GaussianSpec,
}

impl ObservationLikelihood {
    pub fn for_model<M: StateSpaceModel + ?Sized>(model: &M) -> Result<Self> {
        let s = model.obs_dim();
        let scale = model.obs_scale();
        if scale.len() != s {
            return Err(FilterError::DimensionMismatch { expected: s, got: scale.len() });
        }
        let cov = match model.obs_noise().covariance() {
            Covariance::Diagonal(v) => Covariance::Diagonal(v.iter().zip(scale).map(|(v, r)| v * r * r).collect()),
            Covariance::Full(m) => {
                let mut out = m.clone();
                for i in 0..s {
                    for j in 0..s {
                        out[i * s + j] *= scale[i] * scale[j];
                    }
                }
                Covariance::Full(out)
            }
        };
        Ok(Self { spec: GaussianSpec::new(vec![0.0; s], cov)? })
    }

    /// Covariance of the effective observation noise.
    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        self.spec.covariance_matrix()
    }

    /// `ln p(y | x)` given the predicted observation `g(x)`.
    pub fn log_likelihood(&self, y: &[f64], predicted: &[f64], scratch: &mut [f64]) -> f64 {
        for ((s, a), b) in scratch.iter_mut().zip(y).zip(predicted) {
            *s = a - b;
        }
        self.spec.logpdf_unchecked(scratch)
    }
}

/// Pushes `x` one step through the model with fresh noise, redrawing the noise
/// while the result leaves the domain.
pub fn propagate<M: StateSpaceModel + ?Sized>(model: &M, x: &StateVector, rng: &mut StreamRng, k: usize) -> Result<StateVector> {
    let mut out = vec![0.0; model.state_dim()];
    let mut w = vec![0.0; model.noise_dim()];
    propagate_into(model, x, rng, k, &mut w, &mut out)?;
    Ok(StateVector(out))
}

pub(crate) fn propagate_into<M: StateSpaceModel + ?Sized>(
    model: &M,
    x: &[f64],
    rng: &mut StreamRng,
    k: usize,
    w: &mut [f64],
    out: &mut [f64],
) -> Result<()> {
    if x.len() != model.state_dim() {
        return Err(FilterError::DimensionMismatch { expected: model.state_dim(), got: x.len() });
    }
    if !model.domain_guard(x) {
        return Err(FilterError::OutsideDomain(x.to_vec()));
    }
    for _ in 0..PROPAGATE_RETRY_CAP {
        model.state_noise().sample_into(rng, w);
        model.transition(x, w, k, out);
        if model.domain_guard(out) && out.iter().all(|v| v.is_finite()) {
            return Ok(());
        }
    }
    Err(FilterError::DomainRetriesExhausted { node: x.to_vec(), retries: PROPAGATE_RETRY_CAP })
}
