//! Run configuration: JSON file plus command-line overrides.

use std::path::{Path, PathBuf};

use mif_core::scenarios::{
    BearingParams, BearingScenario, Discretization, LinearGaussianParams, LinearGaussianScenario, Scenario, TumorParams, TumorScenario,
    BEARING_POINTS, BEARING_SAMPLES, TUMOR_POINTS,
};
use mif_core::{FilterConfig, SolveConfig, WeightMode};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    #[default]
    Tumor,
    Bearing,
    LinearGaussian,
}

impl std::str::FromStr for ScenarioKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "tumor" => Ok(Self::Tumor),
            "bearing" => Ok(Self::Bearing),
            "linear_gaussian" => Ok(Self::LinearGaussian),
            other => Err(format!("unknown scenario `{other}` (expected tumor, bearing or linear_gaussian)")),
        }
    }
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Tumor => "tumor",
            Self::Bearing => "bearing",
            Self::LinearGaussian => "linear_gaussian",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Implicit,
    Pf,
    Ekf,
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "implicit" => Ok(Self::Implicit),
            "pf" => Ok(Self::Pf),
            "ekf" => Ok(Self::Ekf),
            other => Err(format!("unknown method `{other}` (expected implicit, pf or ekf)")),
        }
    }
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Implicit => "implicit",
            Self::Pf => "pf",
            Self::Ekf => "ekf",
        }
    }
}

/// Filter settings for one method. Unset fields take scenario defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    #[serde(default)]
    pub method: Method,
    /// Optional row label in bench tables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighbors: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_mode: Option<WeightMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idw_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jitter_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_correction: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveConfig>,
}

/// Top-level configuration shared by `run` and `bench`.
///
/// `run` uses the top-level method fields; `bench` runs every entry of
/// `cells` (or the top-level method alone when `cells` is empty).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighbors: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_mode: Option<WeightMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idw_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jitter_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_correction: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveConfig>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discretization: Option<Discretization>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tumor: Option<TumorParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bearing: Option<BearingParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear_gaussian: Option<LinearGaussianParams>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<MethodConfig>,
}

fn default_reps() -> usize {
    1
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn new(scenario: ScenarioKind) -> Self {
        Self {
            scenario,
            method: Method::Implicit,
            points: None,
            samples: None,
            particles: None,
            neighbors: None,
            weight_mode: None,
            idw_exponent: None,
            epsilon: None,
            tau: None,
            jitter_scale: None,
            density_correction: None,
            solve: None,
            reps: default_reps(),
            seed: 0,
            out: default_out(),
            discretization: None,
            threads: None,
            tumor: None,
            bearing: None,
            linear_gaussian: None,
            cells: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// The top-level method fields as a bench cell.
    pub fn method_config(&self) -> MethodConfig {
        MethodConfig {
            method: self.method,
            label: None,
            points: self.points,
            samples: self.samples,
            particles: self.particles,
            neighbors: self.neighbors,
            weight_mode: self.weight_mode,
            idw_exponent: self.idw_exponent,
            epsilon: self.epsilon,
            tau: self.tau,
            jitter_scale: self.jitter_scale,
            density_correction: self.density_correction,
            solve: self.solve,
        }
    }

    pub fn bench_cells(&self) -> Vec<MethodConfig> {
        if self.cells.is_empty() {
            vec![self.method_config()]
        } else {
            self.cells.clone()
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.reps == 0 {
            return Err(CliError::Config("reps must be >= 1".into()));
        }
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be >= 1".into()));
        }
        if self.discretization.is_some() && self.scenario != ScenarioKind::Tumor {
            return Err(CliError::Config("discretization applies to the tumor scenario only".into()));
        }
        let scenario = self.build_scenario()?;
        for cell in self.bench_cells() {
            cell.resolve(self.scenario, scenario.model().state_dim())?;
        }
        Ok(())
    }

    pub fn build_scenario(&self) -> Result<Box<dyn Scenario>, CliError> {
        let bad = |e: mif_core::FilterError| CliError::Config(e.to_string());
        Ok(match self.scenario {
            ScenarioKind::Tumor => {
                let mut p = self.tumor.clone().unwrap_or_default();
                if let Some(d) = self.discretization {
                    p.discretization = d;
                }
                Box::new(TumorScenario::new(p).map_err(bad)?)
            }
            ScenarioKind::Bearing => Box::new(BearingScenario::new(self.bearing.clone().unwrap_or_default()).map_err(bad)?),
            ScenarioKind::LinearGaussian => {
                Box::new(LinearGaussianScenario::new(self.linear_gaussian.clone().unwrap_or_default()).map_err(bad)?)
            }
        })
    }

    /// SHA-256 of the canonical JSON encoding, hex encoded.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut canonical = self.clone();
        canonical.threads = None;
        canonical.out = PathBuf::new();
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Settings of one method after scenario defaults are applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ResolvedMethod {
    Implicit { label: String, filter: FilterConfig },
    Pf { label: String, particles: usize },
    Ekf { label: String },
}

impl ResolvedMethod {
    pub fn label(&self) -> &str {
        match self {
            Self::Implicit { label, .. } | Self::Pf { label, .. } | Self::Ekf { label } => label,
        }
    }

    pub fn method(&self) -> Method {
        match self {
            Self::Implicit { .. } => Method::Implicit,
            Self::Pf { .. } => Method::Pf,
            Self::Ekf { .. } => Method::Ekf,
        }
    }
}

/// Default `(N, M)` for the implicit filter.
pub fn default_points_samples(kind: ScenarioKind) -> (usize, usize) {
    match kind {
        ScenarioKind::Tumor => (TUMOR_POINTS, 10),
        ScenarioKind::Bearing => (BEARING_POINTS, BEARING_SAMPLES),
        ScenarioKind::LinearGaussian => (2000, 20),
    }
}

/// Default particle count for the particle filter.
pub fn default_particles(kind: ScenarioKind) -> usize {
    match kind {
        ScenarioKind::Tumor => 10_000,
        ScenarioKind::Bearing => 15_000,
        ScenarioKind::LinearGaussian => 100_000,
    }
}

impl MethodConfig {
    pub fn resolve(&self, kind: ScenarioKind, dim: usize) -> Result<ResolvedMethod, CliError> {
        let (n0, m0) = default_points_samples(kind);
        match self.method {
            Method::Implicit => {
                let points = self.points.unwrap_or(n0);
                let samples = self.samples.unwrap_or(m0);
                let mut cfg = FilterConfig::new(dim, points, samples);
                if let Some(l) = self.neighbors {
                    cfg.shepard.neighbors = l;
                }
                if let Some(w) = self.weight_mode {
                    cfg.shepard.weight_mode = w;
                }
                if let Some(p) = self.idw_exponent {
                    cfg.shepard.idw_exponent = p;
                }
                cfg.epsilon = self.epsilon.or(cfg.epsilon);
                cfg.tau = self.tau.unwrap_or(cfg.tau);
                cfg.jitter_scale = self.jitter_scale.unwrap_or(cfg.jitter_scale);
                cfg.density_correction = self.density_correction.unwrap_or(cfg.density_correction);
                if let Some(s) = self.solve {
                    cfg.solve = s;
                }
                cfg.validate().map_err(CliError::Config)?;
                if cfg.shepard.neighbors > points {
                    return Err(CliError::Config(format!("neighbors ({}) exceeds points ({points})", cfg.shepard.neighbors)));
                }
                let label = self.label.clone().unwrap_or_else(|| format!("implicit_n{points}_m{samples}"));
                Ok(ResolvedMethod::Implicit { label, filter: cfg })
            }
            Method::Pf => {
                let particles = self.particles.unwrap_or(default_particles(kind));
                if particles == 0 {
                    return Err(CliError::Config("particles must be >= 1".into()));
                }
                let label = self.label.clone().unwrap_or_else(|| format!("pf_p{particles}"));
                Ok(ResolvedMethod::Pf { label, particles })
            }
            Method::Ekf => Ok(ResolvedMethod::Ekf { label: self.label.clone().unwrap_or_else(|| "ekf".into()) }),
        }
    }
}
