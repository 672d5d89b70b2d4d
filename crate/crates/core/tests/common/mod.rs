//! Exact Kalman filter for linear-Gaussian oracles.

#![allow(dead_code)]

use mif_core::scenarios::LinearGaussianParams;
use nalgebra::{DMatrix, DVector};

pub struct Kalman {
    pub means: Vec<DVector<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
}

/// Runs the textbook Kalman recursion for `x' = A x + diag(σ) w`, `y = H x + diag(R) v`,
/// with `w, v ~ N(0, IΔ)`, from `N(m0, P0)`.
pub fn kalman(a: &DMatrix<f64>, h: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>, m0: DVector<f64>, p0: DMatrix<f64>, ys: &[Vec<f64>]) -> Kalman {
    let d = a.nrows();
    let mut m = m0;
    let mut p = p0;
    let mut out = Kalman { means: vec![m.clone()], covariances: vec![p.clone()] };
    for y in ys {
        let mp = a * &m;
        let pp = a * &p * a.transpose() + q;
        let s = h * &pp * h.transpose() + r;
        let gain = &pp * h.transpose() * s.try_inverse().expect("innovation covariance invertible");
        m = &mp + &gain * (DVector::from_column_slice(y) - h * &mp);
        p = (DMatrix::identity(d, d) - &gain * h) * pp;
        out.means.push(m.clone());
        out.covariances.push(p.clone());
    }
    out
}

pub fn kalman_for(params: &LinearGaussianParams, ys: &[Vec<f64>]) -> Kalman {
    let d = params.state_dim();
    let qd = params.obs_dim();
    let a = DMatrix::from_row_slice(d, d, &params.a);
    let h = DMatrix::from_row_slice(qd, d, &params.h);
    let q = DMatrix::from_diagonal(&DVector::from_iterator(d, params.sigma.iter().map(|s| s * s * params.dt)));
    let r = DMatrix::from_diagonal(&DVector::from_iterator(qd, params.obs_scale.iter().map(|s| s * s * params.dt)));
    let p0 = DMatrix::from_diagonal(&DVector::from_iterator(d, params.prior_std.iter().map(|s| s * s)));
    kalman(&a, &h, &q, &r, DVector::from_column_slice(&params.prior_mean), p0, ys)
}

/// `sqrt(trace(P) / d)` of the last posterior covariance.
pub fn steady_state_std(k: &Kalman) -> f64 {
    let p = k.covariances.last().unwrap();
    (p.trace() / p.nrows() as f64).sqrt()
}
