//! Reference filters.

pub mod ekf;
pub mod pf;

pub use ekf::{ekf_step, run_ekf, EkfBelief};
pub use pf::{pf_step, run_pf, systematic_resample, ParticleEnsemble, PfStep};
