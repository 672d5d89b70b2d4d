//! Meshfree implicit filtering for nonlinear state-space models.
//!
//! The filter represents the posterior density by its values on an adaptive
//! cloud of points. The prior at each point is obtained by inverting the
//! state equation for a handful of noise samples and averaging the previous
//! posterior, interpolated with Shepard's method, over the pre-images.
//! Bootstrap particle and extended Kalman filters are included as baselines.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod error;
pub mod filter;
pub mod interp;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod scenarios;
pub mod solver;

pub use error::{FilterError, Result};
pub use filter::{
    degeneracy_ratio, filter_step, init_cloud, posterior_mean, predict, resample, run_filter, update, FilterConfig,
    FilterState, NoiseSampling, PointCloud, StepReport,
};
pub use interp::{KnnIndex, ShepardConfig, WeightMode};
pub use model::{gaussian_logpdf, propagate, sample_gaussian, GaussianSpec, StateSpaceModel, StateVector};
pub use rng::RandomSource;
pub use solver::{implicit_solve, SolveConfig, SolveResult};
