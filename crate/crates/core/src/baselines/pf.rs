//! Bootstrap particle filter with systematic resampling at every step.

use crate::error::{FilterError, Result};
use crate::filter::normalize_log_weights;
use crate::model::{propagate_into, GaussianSpec, ObservationLikelihood, StateSpaceModel, StateVector};
use crate::rng::{RandomSource, StreamPurpose};

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    dim: usize,
    particles: Vec<f64>,
    weights: Vec<f64>,
}

impl ParticleEnsemble {
    pub fn new(dim: usize, particles: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 || particles.len() != dim * weights.len() {
            return Err(FilterError::DimensionMismatch { expected: dim * weights.len(), got: particles.len() });
        }
        if weights.is_empty() {
            return Err(FilterError::Empty("particle ensemble"));
        }
        Ok(Self { dim, particles, weights })
    }

    /// `count` particles drawn from `p0` (redrawn while outside the model domain), equally weighted.
    pub fn from_prior<M: StateSpaceModel + ?Sized>(model: &M, p0: &GaussianSpec, count: usize, rng: RandomSource) -> Result<Self> {
        let cloud = crate::filter::init_cloud_in_domain(model, p0, count, rng)?;
        Self::new(p0.dim(), cloud.nodes_flat().to_vec(), vec![1.0 / count as f64; count])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn particle(&self, i: usize) -> &[f64] {
        &self.particles[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean(&self) -> StateVector {
        let mut m = vec![0.0; self.dim];
        for (p, w) in self.particles.chunks_exact(self.dim).zip(&self.weights) {
            for (a, b) in m.iter_mut().zip(p) {
                *a += w * b;
            }
        }
        StateVector(m)
    }
}

/// Result of one particle filter step.
#[derive(Debug, Clone)]
pub struct PfStep {
    /// Resampled, equally weighted ensemble.
    pub ensemble: ParticleEnsemble,
    /// Weighted mean taken before resampling.
    pub mean: StateVector,
    /// Importance-sampling standard error of `mean`, per coordinate.
    pub std_error: StateVector,
}

/// Indices chosen by systematic resampling of normalized `weights` with offset `u0 ∈ [0, 1)`.
pub fn systematic_resample(weights: &[f64], u0: f64) -> Vec<usize> {
    let n = weights.len();
    let step = 1.0 / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut cumulative = weights[0];
    let mut j = 0;
    for i in 0..n {
        let u = (u0 + i as f64) * step;
        while u >= cumulative && j < n - 1 {
            j += 1;
            cumulative += weights[j];
        }
        out.push(j);
    }
    out
}

pub fn pf_step<M: StateSpaceModel + ?Sized>(
    ens: &ParticleEnsemble,
    model: &M,
    observation: &[f64],
    rng: RandomSource,
    k: usize,
) -> Result<PfStep> {
    let d = model.state_dim();
    let q = model.obs_dim();
    let lik = ObservationLikelihood::for_model(model)?;
    let n = ens.len();

    let rows = propagate_and_weigh(ens, model, &lik, observation, rng, k, d, q);
    let mut moved = Vec::with_capacity(n * d);
    let mut logs = Vec::with_capacity(n);
    for (row, prior_w) in rows.into_iter().zip(&ens.weights) {
        let (x, l) = row?;
        moved.extend_from_slice(&x);
        logs.push(l + prior_w.ln());
    }
    let weights = normalize_log_weights(&logs).ok_or(FilterError::EnsembleDivergence)?;
    let weighted = ParticleEnsemble::new(d, moved, weights)?;
    let mean = weighted.mean();
    let mut var = vec![0.0; d];
    for (p, w) in weighted.particles.chunks_exact(d).zip(&weighted.weights) {
        for ((v, x), m) in var.iter_mut().zip(p).zip(mean.iter()) {
            *v += w * w * (x - m) * (x - m);
        }
    }
    let std_error = StateVector(var.into_iter().map(f64::sqrt).collect());

    let u0 = rng.child(StreamPurpose::Resample, k, 1).rng().uniform();
    let picks = systematic_resample(&weighted.weights, u0);
    let mut particles = Vec::with_capacity(n * d);
    for &j in &picks {
        particles.extend_from_slice(weighted.particle(j));
    }
    let ensemble = ParticleEnsemble::new(d, particles, vec![1.0 / n as f64; n])?;
    Ok(PfStep { ensemble, mean, std_error })
}

#[allow(clippy::too_many_arguments)]
fn propagate_and_weigh<M: StateSpaceModel + ?Sized>(
    ens: &ParticleEnsemble,
    model: &M,
    lik: &ObservationLikelihood,
    y: &[f64],
    rng: RandomSource,
    k: usize,
    d: usize,
    q: usize,
) -> Vec<Result<(Vec<f64>, f64)>> {
    let r = model.noise_dim();
    let one = |i: usize, w: &mut Vec<f64>, g: &mut Vec<f64>, s: &mut Vec<f64>| -> Result<(Vec<f64>, f64)> {
        let mut x = vec![0.0; d];
        let mut stream = rng.child(StreamPurpose::Particle, k, i).rng();
        propagate_into(model, ens.particle(i), &mut stream, k - 1, w, &mut x)?;
        model.observe(&x, k, g);
        let l = lik.log_likelihood(y, g, s);
        Ok((x, l))
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..ens.len())
            .into_par_iter()
            .with_min_len(256)
            .map_init(|| (vec![0.0; r], vec![0.0; q], vec![0.0; q]), |(w, g, s), i| one(i, w, g, s))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let (mut w, mut g, mut s) = (vec![0.0; r], vec![0.0; q], vec![0.0; q]);
        (0..ens.len()).map(|i| one(i, &mut w, &mut g, &mut s)).collect()
    }
}

/// Runs the particle filter over `observations`; returns step 0 plus one mean per observation.
pub fn run_pf<M: StateSpaceModel + ?Sized>(
    model: &M,
    p0: &GaussianSpec,
    particles: usize,
    observations: &[Vec<f64>],
    rng: RandomSource,
) -> Result<Vec<StateVector>> {
    let mut ens = ParticleEnsemble::from_prior(model, p0, particles, rng)?;
    let mut means = vec![ens.mean()];
    for (j, y) in observations.iter().enumerate() {
        let step = pf_step(&ens, model, y, rng, j + 1)?;
        means.push(step.mean);
        ens = step.ensemble;
    }
    Ok(means)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn systematic_on_point_mass() {
        assert_eq!(systematic_resample(&[0.0, 1.0, 0.0], 0.3), vec![1, 1, 1]);
    }

    #[test]
    fn systematic_on_uniform_is_identity() {
        let w = vec![0.25; 4];
        assert_eq!(systematic_resample(&w, 0.5), vec![0, 1, 2, 3]);
    }

    #[test]
    fn systematic_counts_track_weights() {
        let w = [0.5, 0.25, 0.25];
        let picks = systematic_resample(&w, 0.1);
        let count0 = picks.iter().filter(|&&j| j == 0).count();
        assert_eq!(picks.len(), 3);
        assert!((1..=2).contains(&count0));
    }
}
