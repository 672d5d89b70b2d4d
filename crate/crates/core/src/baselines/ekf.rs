//! Extended Kalman filter with Joseph-form covariance update.

use nalgebra::{DMatrix, DVector};

use crate::error::{FilterError, Result};
use crate::model::{noise_jacobian, observe_jacobian, transition_jacobian, ObservationLikelihood, StateSpaceModel, StateVector};

#[derive(Debug, Clone, PartialEq)]
pub struct EkfBelief {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl EkfBelief {
    pub fn new(mean: Vec<f64>, covariance: DMatrix<f64>) -> Self {
        Self { mean: DVector::from_vec(mean), covariance }
    }

    pub fn mean_state(&self) -> StateVector {
        StateVector(self.mean.iter().copied().collect())
    }
}

pub fn ekf_step<M: StateSpaceModel + ?Sized>(belief: &EkfBelief, model: &M, observation: &[f64], k: usize) -> Result<EkfBelief> {
    let d = model.state_dim();
    let r = model.noise_dim();
    let q = model.obs_dim();
    if observation.len() != q {
        return Err(FilterError::DimensionMismatch { expected: q, got: observation.len() });
    }
    let x = belief.mean.as_slice();
    let w0 = vec![0.0; r];

    let mut pred = vec![0.0; d];
    model.transition(x, &w0, k - 1, &mut pred);
    let mut f = vec![0.0; d * d];
    transition_jacobian(model, x, &w0, k - 1, &mut f);
    let f = DMatrix::from_row_slice(d, d, &f);
    let mut g = vec![0.0; d * r];
    noise_jacobian(model, x, &w0, k - 1, &mut g);
    let g = DMatrix::from_row_slice(d, r, &g);
    let q_eff = &g * model.state_noise().covariance_matrix() * g.transpose();
    let p_pred = &f * &belief.covariance * f.transpose() + q_eff;

    let mut h = vec![0.0; q * d];
    observe_jacobian(model, &pred, k, &mut h);
    let h = DMatrix::from_row_slice(q, d, &h);
    let r_eff = ObservationLikelihood::for_model(model)?.covariance_matrix();
    let s = &h * &p_pred * h.transpose() + &r_eff;
    let s_inv = s.cholesky().ok_or(FilterError::SingularInnovation)?.inverse();
    let gain = &p_pred * h.transpose() * s_inv;

    let mut predicted_obs = vec![0.0; q];
    model.observe(&pred, k, &mut predicted_obs);
    let innovation = DVector::from_iterator(q, observation.iter().zip(&predicted_obs).map(|(a, b)| a - b));
    let mean = DVector::from_vec(pred) + &gain * innovation;

    let i_kh = DMatrix::identity(d, d) - &gain * &h;
    let mut cov = &i_kh * p_pred * i_kh.transpose() + &gain * r_eff * gain.transpose();
    cov = (&cov + cov.transpose()) * 0.5;
    Ok(EkfBelief { mean, covariance: cov })
}

/// Runs the EKF from the prior; returns step 0 plus one mean per observation.
pub fn run_ekf<M: StateSpaceModel + ?Sized>(
    model: &M,
    p0: &crate::model::GaussianSpec,
    observations: &[Vec<f64>],
) -> Result<Vec<StateVector>> {
    let mut belief = EkfBelief::new(p0.mean().to_vec(), p0.covariance_matrix());
    let mut means = vec![belief.mean_state()];
    for (j, y) in observations.iter().enumerate() {
        belief = ekf_step(&belief, model, y, j + 1)?;
        means.push(belief.mean_state());
    }
    Ok(means)
}
