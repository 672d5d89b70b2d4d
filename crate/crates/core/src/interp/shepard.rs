//! Shepard (normalized weighted-average) interpolation over the `L` nearest nodes.

use serde::{Deserialize, Serialize};

use super::knn::{KnnIndex, Neighbors};
use crate::error::{FilterError, Result};

/// How neighbor distances become weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// `h_l ∝ d_l^{-p}`: closer nodes weigh more.
    #[default]
    InverseDistance,
    /// `h_l ∝ d_l`: the distance-proportional variant, kept for comparison runs.
    #[serde(alias = "literal")]
    DistanceProportional,
}

impl std::str::FromStr for WeightMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "inverse_distance" => Ok(Self::InverseDistance),
            "distance_proportional" | "literal" => Ok(Self::DistanceProportional),
            other => Err(format!("unknown weight mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShepardConfig {
    /// Neighbor count `L`.
    pub neighbors: usize,
    #[serde(default)]
    pub weight_mode: WeightMode,
    #[serde(default = "default_exponent")]
    pub idw_exponent: f64,
    /// Distance at or below which a query counts as hitting a node. `None`
    /// means `1e-12` times the node set's bounding-box diagonal.
    #[serde(default)]
    pub exact_hit_radius: Option<f64>,
}

fn default_exponent() -> f64 {
    2.0
}

impl ShepardConfig {
    /// Defaults for state dimension `d`: `L = max(4, 2d)`, inverse distance with `p = 2`.
    pub fn for_dim(d: usize) -> Self {
        Self {
            neighbors: default_neighbors(d),
            weight_mode: WeightMode::InverseDistance,
            idw_exponent: 2.0,
            exact_hit_radius: None,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.neighbors < 1 {
            return Err("shepard.neighbors must be >= 1".into());
        }
        if !(self.idw_exponent > 0.0) {
            return Err("shepard.idw_exponent must be > 0".into());
        }
        if let Some(r) = self.exact_hit_radius {
            if !(r >= 0.0) {
                return Err("shepard.exact_hit_radius must be >= 0".into());
            }
        }
        Ok(())
    }

    fn radius_for(&self, index: &KnnIndex) -> f64 {
        self.exact_hit_radius.unwrap_or(1e-12 * index.diameter())
    }
}

pub fn default_neighbors(d: usize) -> usize {
    (2 * d).max(4)
}

/// Normalized weights for the given neighbor distances (nearest first).
pub fn shepard_weights(distances: &[f64], cfg: &ShepardConfig) -> Result<Vec<f64>> {
    let mut out = vec![0.0; distances.len()];
    weights_into(distances.iter().copied(), distances.len(), cfg, cfg.exact_hit_radius.unwrap_or(0.0), &mut out)?;
    Ok(out)
}

fn weights_into(
    distances: impl Iterator<Item = f64> + Clone,
    n: usize,
    cfg: &ShepardConfig,
    radius: f64,
    out: &mut [f64],
) -> Result<()> {
    if n == 0 {
        return Err(FilterError::Empty("shepard distances"));
    }
    if let Some(hit) = distances.clone().position(|d| d <= radius) {
        out[..n].fill(0.0);
        out[hit] = 1.0;
        return Ok(());
    }
    let mut total = 0.0;
    for (o, d) in out.iter_mut().zip(distances) {
        *o = match cfg.weight_mode {
            WeightMode::InverseDistance => {
                if cfg.idw_exponent == 2.0 {
                    1.0 / (d * d)
                } else {
                    d.powf(-cfg.idw_exponent)
                }
            }
            WeightMode::DistanceProportional => d,
        };
        total += *o;
    }
    for o in out[..n].iter_mut() {
        *o /= total;
    }
    Ok(())
}

/// Scratch space for repeated [`ShepardInterpolant::evaluate_with`] calls.
#[derive(Debug, Clone, Default)]
pub struct ShepardScratch {
    neighbors: Neighbors,
    weights: Vec<f64>,
}

impl ShepardScratch {
    /// Weighted average of `values` over the neighbors found by the last
    /// [`ShepardInterpolant::locate`].
    pub fn combine(&self, values: &[f64]) -> f64 {
        self.weights.iter().enumerate().map(|(i, h)| values[self.neighbors.index(i)] * h).sum()
    }
}

/// Node values plus their spatial index: a density known at scattered nodes.
#[derive(Debug, Clone)]
pub struct ShepardInterpolant {
    index: KnnIndex,
    values: Vec<f64>,
    cfg: ShepardConfig,
    radius: f64,
    neighbors: usize,
}

impl ShepardInterpolant {
    pub fn new(index: KnnIndex, values: Vec<f64>, cfg: ShepardConfig) -> Result<Self> {
        if values.len() != index.len() {
            return Err(FilterError::DimensionMismatch { expected: index.len(), got: values.len() });
        }
        cfg.validate().map_err(FilterError::InvalidConfig)?;
        let radius = cfg.radius_for(&index);
        // Small clouds cannot supply more neighbors than they have.
        let neighbors = cfg.neighbors.min(index.len());
        Ok(Self { index, values, cfg, radius, neighbors })
    }

    pub fn index(&self) -> &KnnIndex {
        &self.index
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn config(&self) -> &ShepardConfig {
        &self.cfg
    }

    pub fn exact_hit_radius(&self) -> f64 {
        self.radius
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.evaluate_with(x, &mut ShepardScratch::default())
    }

    pub fn evaluate_with(&self, x: &[f64], scratch: &mut ShepardScratch) -> Result<f64> {
        self.locate(x, scratch)?;
        Ok(scratch.combine(&self.values))
    }

    /// Finds the neighbors of `x` and their weights, leaving them in `scratch`
    /// so several value fields on the same nodes can be combined with
    /// [`ShepardScratch::combine`].
    pub fn locate(&self, x: &[f64], scratch: &mut ShepardScratch) -> Result<()> {
        let l = self.neighbors;
        self.index.query_into(x, l, &mut scratch.neighbors)?;
        scratch.weights.resize(l, 0.0);
        let nb = &scratch.neighbors;
        weights_into((0..l).map(|i| nb.distance(i)), l, &self.cfg, self.radius, &mut scratch.weights)
    }
}

/// Shepard estimate at `x` from `values` on the nodes of `index`.
pub fn evaluate_density(values: &[f64], index: &KnnIndex, x: &[f64], cfg: &ShepardConfig) -> Result<f64> {
    if values.len() != index.len() {
        return Err(FilterError::DimensionMismatch { expected: index.len(), got: values.len() });
    }
    let nb = index.knn_query(x, cfg.neighbors)?;
    let radius = cfg.radius_for(index);
    let mut w = vec![0.0; nb.len()];
    weights_into(nb.iter().map(|p| p.1), nb.len(), cfg, radius, &mut w)?;
    Ok(nb.iter().zip(&w).map(|((i, _), h)| values[*i] * h).sum())
}
