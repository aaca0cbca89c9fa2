//! Experiment configuration files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use ricciwalk_core::comparison::{self, ComparisonGrid};
use ricciwalk_core::explosion::DriftSpec;
use ricciwalk_core::models::{Base, EvolvingMetricModel, ModelKind, ScaleCurve, Warp};
use ricciwalk_core::VectorFieldSpec;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub output: PathBuf,
    pub analyses: Vec<Analysis>,
    pub model: ModelConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub feller: Option<FellerConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Constants,
    Qv,
    DriftCheck,
    Supermartingale,
    LocalTime,
    Explosion,
    Feller,
    AssumptionCheck,
}

impl Analysis {
    pub fn name(self) -> &'static str {
        match self {
            Analysis::Constants => "constants",
            Analysis::Qv => "qv",
            Analysis::DriftCheck => "drift-check",
            Analysis::Supermartingale => "supermartingale",
            Analysis::LocalTime => "local-time",
            Analysis::Explosion => "explosion",
            Analysis::Feller => "feller",
            Analysis::AssumptionCheck => "assumption-check",
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    Euclidean { dim: usize, horizon: f64 },
    Sphere { dim: usize, horizon: f64, r0: f64 },
    Hyperbolic { dim: usize, horizon: f64, k: f64 },
    Homothetic { dim: usize, horizon: f64, base: BaseConfig, scale: ScaleConfig },
    Warped { dim: usize, horizon: f64, warp: WarpConfig },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BaseConfig {
    Flat,
    Sphere,
    Warped { warp: WarpConfig },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WarpConfig {
    Sinh { k: f64 },
    Sin { k: f64 },
    Identity,
    GaussianExp { c: f64 },
    Polynomial { coeffs: Vec<f64> },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScaleConfig {
    Constant { a: f64 },
    Linear { a0: f64, rate: f64 },
    Exponential { a0: f64, rate: f64 },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VectorFieldConfig {
    Zero,
    Radial { c: f64 },
    Linear { matrix: Vec<Vec<f64>> },
    GradRhoPower { p: f64, c: f64 },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Simulation horizon; defaults to the model horizon.
    #[serde(default)]
    pub horizon: Option<f64>,
    pub step: f64,
    pub paths: usize,
    pub seed: u64,
    #[serde(default = "default_start_radius")]
    pub start_radius: f64,
    #[serde(default)]
    pub radius_ladder: Vec<f64>,
    /// Defaults to `{δ₁/2, δ₁/4, δ₁/8}`.
    #[serde(default)]
    pub delta_ladder: Option<Vec<f64>>,
    /// Cut-locus occupation thresholds; defaults to `ε_hit·{8, 4, 2, 1}`.
    #[serde(default)]
    pub occupation_ladder: Option<Vec<f64>>,
    /// Comparison window radius for noncompact models.
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Summary grid spacing in steps.
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default)]
    pub drift: Option<VectorFieldConfig>,
    /// Constant `b` in the curvature-drift assumption.
    #[serde(default)]
    pub assumption_b: f64,
}

fn default_start_radius() -> f64 {
    1.0
}
fn default_window() -> f64 {
    10.0
}
fn default_grid_points() -> usize {
    64
}
fn default_record_every() -> usize {
    10
}

/// Extra drift `b` for the Feller analysis: `𝐛 = F̄ + ∫₀^y b`.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FellerConfig {
    #[serde(default)]
    pub extra: Option<DriftConfig>,
    #[serde(default = "default_y_max")]
    pub y_max: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_y_max() -> f64 {
    1e6
}
fn default_tolerance() -> f64 {
    0.05
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DriftConfig {
    Zero,
    Constant { c: f64 },
    Linear { c: f64 },
    Power { c: f64, p: f64 },
    Bessel { dim: f64 },
    Coth { dim: f64, k: f64 },
}

impl DriftConfig {
    pub fn build(&self) -> DriftSpec {
        match *self {
            DriftConfig::Zero => DriftSpec::Zero,
            DriftConfig::Constant { c } => DriftSpec::Constant { c },
            DriftConfig::Linear { c } => DriftSpec::Linear { c },
            DriftConfig::Power { c, p } => DriftSpec::Power { c, p },
            DriftConfig::Bessel { dim } => DriftSpec::Bessel { dim },
            DriftConfig::Coth { dim, k } => DriftSpec::Coth { dim, k },
        }
    }
}

impl WarpConfig {
    fn build(&self) -> Warp {
        match self {
            WarpConfig::Sinh { k } => Warp::Sinh { k: *k },
            WarpConfig::Sin { k } => Warp::Sin { k: *k },
            WarpConfig::Identity => Warp::Identity,
            WarpConfig::GaussianExp { c } => Warp::GaussianExp { c: *c },
            WarpConfig::Polynomial { coeffs } => Warp::OddPolynomial { coeffs: coeffs.clone() },
        }
    }
}

impl ModelConfig {
    pub fn build(&self) -> ricciwalk_core::Result<EvolvingMetricModel> {
        let (dim, horizon, kind) = match self {
            ModelConfig::Euclidean { dim, horizon } => (*dim, *horizon, ModelKind::Euclidean),
            ModelConfig::Sphere { dim, horizon, r0 } => (*dim, *horizon, ModelKind::Sphere { r0: *r0 }),
            ModelConfig::Hyperbolic { dim, horizon, k } => {
                (*dim, *horizon, ModelKind::WarpedProduct { warp: Warp::Sinh { k: *k } })
            }
            ModelConfig::Homothetic { dim, horizon, base, scale } => {
                let base = match base {
                    BaseConfig::Flat => Base::Flat,
                    BaseConfig::Sphere => Base::UnitSphere,
                    BaseConfig::Warped { warp } => Base::Warped(warp.build()),
                };
                let scale = match *scale {
                    ScaleConfig::Constant { a } => ScaleCurve::Constant(a),
                    ScaleConfig::Linear { a0, rate } => ScaleCurve::Linear { a0, rate },
                    ScaleConfig::Exponential { a0, rate } => ScaleCurve::Exponential { a0, rate },
                };
                (*dim, *horizon, ModelKind::Homothetic { base, scale })
            }
            ModelConfig::Warped { dim, horizon, warp } => (*dim, *horizon, ModelKind::WarpedProduct { warp: warp.build() }),
        };
        EvolvingMetricModel::new(dim, horizon, kind)
    }

    pub fn label(&self) -> &'static str {
        match self {
            ModelConfig::Euclidean { .. } => "euclidean",
            ModelConfig::Sphere { .. } => "sphere",
            ModelConfig::Hyperbolic { .. } => "hyperbolic",
            ModelConfig::Homothetic { .. } => "homothetic",
            ModelConfig::Warped { .. } => "warped",
        }
    }
}

impl VectorFieldConfig {
    pub fn build(&self) -> anyhow::Result<VectorFieldSpec> {
        Ok(match self {
            VectorFieldConfig::Zero => VectorFieldSpec::Zero,
            VectorFieldConfig::Radial { c } => VectorFieldSpec::Radial { c: *c },
            VectorFieldConfig::GradRhoPower { p, c } => VectorFieldSpec::GradRhoPower { p: *p, c: *c },
            VectorFieldConfig::Linear { matrix } => {
                let n = matrix.len();
                if n == 0 || matrix.iter().any(|row| row.len() != n) {
                    bail!("linear drift matrix must be square and non-empty");
                }
                VectorFieldSpec::Linear { matrix: DMatrix::from_fn(n, n, |i, j| matrix[i][j]) }
            }
        })
    }
}

/// A parsed and validated experiment.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub model: EvolvingMetricModel,
    pub drift: Option<VectorFieldSpec>,
    pub horizon: f64,
    pub canonical: String,
}

impl Experiment {
    pub fn window(&self) -> ComparisonGrid {
        let mut grid = comparison::default_window(&self.model, self.config.run.window);
        grid.time_points = self.config.run.grid_points;
        grid.space_points = self.config.run.grid_points;
        grid
    }
}

/// Marks failures that are the config's fault (exit status 2).
#[derive(Debug)]
pub struct ValidationError(pub String);

impl std::fmt::Display for ValidationError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationError {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    ValidationError(msg.into()).into()
}

pub fn load(path: &Path) -> anyhow::Result<Experiment> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let config: ExperimentConfig =
        toml::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    validate(config)
}

pub fn validate(config: ExperimentConfig) -> anyhow::Result<Experiment> {
    let model = config.model.build().map_err(|e| invalid(e.to_string()))?;
    let run = &config.run;
    let horizon = run.horizon.unwrap_or(model.horizon);
    if !(run.step > 0.0) || !(horizon > 0.0) {
        return Err(invalid("run.step and run.horizon must be positive"));
    }
    if horizon > model.horizon * (1.0 + 1e-12) {
        return Err(invalid(format!("run.horizon {horizon} exceeds the model horizon {}", model.horizon)));
    }
    if run.step > horizon {
        return Err(invalid("run.step exceeds the horizon"));
    }
    if run.paths == 0 {
        return Err(invalid("run.paths must be at least 1"));
    }
    if !(run.start_radius >= 0.0) {
        return Err(invalid("run.start_radius must be non-negative"));
    }
    if run.record_every == 0 || run.grid_points == 0 {
        return Err(invalid("run.record_every and run.grid_points must be positive"));
    }
    if config.analyses.is_empty() {
        return Err(invalid("analyses must not be empty"));
    }
    let drift = run.drift.as_ref().map(|d| d.build()).transpose().map_err(|e| invalid(e.to_string()))?;
    if let Some(spec) = &drift {
        spec.validate(&model).map_err(|e| invalid(e.to_string()))?;
    }
    for analysis in &config.analyses {
        let label = config.model.label();
        match analysis {
            Analysis::LocalTime if !model.has_cut_locus() => {
                return Err(invalid(format!(
                    "analysis `local-time` is incompatible with model `{label}`: the cut locus is empty"
                )));
            }
            Analysis::Explosion if run.radius_ladder.is_empty() => {
                return Err(invalid("analysis `explosion` needs a non-empty run.radius_ladder"));
            }
            Analysis::AssumptionCheck if drift.is_none() => {
                return Err(invalid("analysis `assumption-check` needs run.drift"));
            }
            _ => {}
        }
    }
    if run.radius_ladder.iter().any(|r| !(*r > 0.0)) {
        return Err(invalid("radius ladder entries must be positive"));
    }
    let canonical = toml::to_string(&config).context("serializing config")?;
    Ok(Experiment { config, model, drift, horizon, canonical })
}
