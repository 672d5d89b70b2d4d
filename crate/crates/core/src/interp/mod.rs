//! Scattered-data density evaluation.

pub mod knn;
pub mod shepard;

pub use knn::{KnnIndex, Neighbors};
pub use shepard::{
    default_neighbors, evaluate_density, shepard_weights, ShepardConfig, ShepardInterpolant, ShepardScratch, WeightMode,
};
