//! Resolved configurations for every subcommand.
//!
//! A configuration is assembled in three layers: built-in defaults, then the
//! keys of an optional JSON file, then whatever flags were given on the
//! command line. The result is validated the same way the in-memory types
//! are, and recorded verbatim next to every output.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use concomitant::simulate::{SimulationSpec, SnrDefinition, SolverSettings};
use concomitant::solver::{DEFAULT_GRID_LEN, DEFAULT_RATIO_MIN};
use concomitant::types::DEFAULT_FLOOR_ALPHA;
use concomitant::{SolverConfig, SolverKind, StoppingRule};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Layers `file` and then `flags` over `defaults`, rejecting keys the
/// defaults do not know about. Null flag values mean "not given".
pub fn resolve<T: Serialize + DeserializeOwned>(
    defaults: &T,
    file: Option<&Path>,
    flags: &Value,
) -> Result<T> {
    let mut merged = match serde_json::to_value(defaults)? {
        Value::Object(m) => m,
        _ => unreachable!("configurations serialize to objects"),
    };
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let value: Value = serde_json::from_str(&text)
            .with_context(|| format!("parsing config file {}", path.display()))?;
        let Value::Object(layer) = value else {
            bail!("config file {} must hold a JSON object", path.display());
        };
        overlay(&mut merged, layer, &format!("config file {}", path.display()))?;
    }
    if let Value::Object(layer) = flags {
        let given: Map<String, Value> = layer
            .iter()
            .filter(|(_, v)| !v.is_null())
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        overlay(&mut merged, given, "command line")?;
    }
    serde_json::from_value(Value::Object(merged)).context("invalid configuration")
}

fn overlay(base: &mut Map<String, Value>, layer: Map<String, Value>, origin: &str) -> Result<()> {
    for (key, value) in layer {
        match base.get_mut(&key) {
            Some(slot) => *slot = value,
            None => bail!("unknown key {key:?} in {origin}"),
        }
    }
    Ok(())
}

/// Solver accuracy knobs shared by every subcommand that fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub f: usize,
    pub max_epochs: usize,
    pub sigma_floor_alpha: i32,
    pub stopping: StoppingRule,
    pub anderson: usize,
    pub continuation: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: SolverConfig::DEFAULT_TOL,
            f: SolverConfig::DEFAULT_F,
            max_epochs: SolverConfig::DEFAULT_MAX_EPOCHS,
            sigma_floor_alpha: DEFAULT_FLOOR_ALPHA,
            stopping: StoppingRule::Relative,
            anderson: SolverConfig::DEFAULT_ANDERSON,
            continuation: true,
        }
    }
}

impl SolverOptions {
    pub fn settings(&self) -> SolverSettings {
        SolverSettings {
            tol: self.tol,
            f: self.f,
            max_epochs: self.max_epochs,
            floor_alpha: self.sigma_floor_alpha,
            stopping: self.stopping,
            anderson: self.anderson,
            continuation: self.continuation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            bail!("tol must be positive, got {}", self.tol);
        }
        if self.f == 0 {
            bail!("f must be at least 1");
        }
        if self.max_epochs == 0 {
            bail!("max_epochs must be at least 1");
        }
        Ok(())
    }
}

/// Parameters of the synthetic generator, flattened for the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataOptions {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub blocks: Vec<usize>,
    pub noise_mult: Vec<f64>,
    pub rho: f64,
    pub support: usize,
    pub snr: f64,
    pub snr_definition: SnrDefinition,
}

impl DataOptions {
    pub fn spec(&self, seed: u64) -> SimulationSpec {
        SimulationSpec {
            n: self.n,
            p: self.p,
            q: self.q,
            rho: self.rho,
            support_size: self.support,
            block_sizes: self.blocks.clone(),
            noise_multipliers: self.noise_mult.clone(),
            snr: self.snr,
            snr_definition: self.snr_definition,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    #[serde(flatten)]
    pub data: DataOptions,
    pub seed: u64,
}

impl Default for SimulateConfig {
    /// The full-size heteroscedastic benchmark: three equal sources with
    /// noise levels in ratio 1 : 2 : 5.
    fn default() -> Self {
        Self {
            data: DataOptions {
                n: 300,
                p: 1000,
                q: 100,
                blocks: vec![100, 100, 100],
                noise_mult: vec![1.0, 2.0, 5.0],
                rho: 0.7,
                support: 20,
                snr: 1.0,
                snr_definition: SnrDefinition::SignalOverNoise,
            },
            seed: 0,
        }
    }
}

impl SimulateConfig {
    pub fn validate(&self) -> Result<()> {
        self.data.spec(self.seed).validate()?;
        Ok(())
    }
}

/// Where the observations come from: a simulation directory, or explicit
/// matrix files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InputOptions {
    pub data: Option<PathBuf>,
    pub x: Option<PathBuf>,
    pub y: Option<PathBuf>,
    pub meta: Option<PathBuf>,
    /// Row block sizes; taken from the metadata when absent.
    pub blocks: Option<Vec<usize>>,
}

pub struct InputPaths {
    pub x: PathBuf,
    pub y: PathBuf,
    pub meta: Option<PathBuf>,
}

impl InputOptions {
    pub fn paths(&self) -> Result<InputPaths> {
        let dir = self.data.as_deref();
        let pick = |explicit: &Option<PathBuf>, name: &str| -> Option<PathBuf> {
            explicit.clone().or_else(|| dir.map(|d| d.join(name)))
        };
        let x = pick(&self.x, "X.csv").context("no design matrix given (use --data or --x)")?;
        let y = pick(&self.y, "Y.csv").context("no observations given (use --data or --y)")?;
        let meta = self
            .meta
            .clone()
            .or_else(|| dir.map(|d| d.join("meta.json")).filter(|p| p.exists()));
        Ok(InputPaths { x, y, meta })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    #[serde(flatten)]
    pub input: InputOptions,
    pub solver: SolverKind,
    pub lambda: Option<f64>,
    pub lambda_ratio: Option<f64>,
    #[serde(flatten)]
    pub options: SolverOptions,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            input: InputOptions::default(),
            solver: SolverKind::Sbhcl,
            lambda: None,
            lambda_ratio: None,
            options: SolverOptions::default(),
        }
    }
}

/// How the regularization level was requested.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaSpec {
    Absolute(f64),
    Ratio(f64),
}

impl FitConfig {
    pub fn lambda_spec(&self) -> Result<LambdaSpec> {
        match (self.lambda, self.lambda_ratio) {
            (Some(l), None) if l > 0.0 && l.is_finite() => Ok(LambdaSpec::Absolute(l)),
            (None, Some(r)) if r > 0.0 && r.is_finite() => Ok(LambdaSpec::Ratio(r)),
            (Some(_), Some(_)) => bail!("give either lambda or lambda_ratio, not both"),
            (None, None) => bail!("one of --lambda or --lambda-ratio is required"),
            _ => bail!("the regularization level must be positive and finite"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.lambda_spec()?;
        self.options.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    #[serde(flatten)]
    pub input: InputOptions,
    pub solver: SolverKind,
    pub num: usize,
    pub ratio_min: f64,
    #[serde(flatten)]
    pub options: SolverOptions,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            input: InputOptions::default(),
            solver: SolverKind::Sbhcl,
            num: DEFAULT_GRID_LEN,
            ratio_min: DEFAULT_RATIO_MIN,
            options: SolverOptions::default(),
        }
    }
}

fn validate_grid(num: usize, ratio_min: f64) -> Result<()> {
    if num == 0 {
        bail!("the grid needs at least one point");
    }
    if !(ratio_min > 0.0 && ratio_min <= 1.0) {
        bail!("ratio_min must lie in (0, 1], got {ratio_min}");
    }
    if num > 1 && ratio_min == 1.0 {
        bail!("a grid of {num} points needs ratio_min < 1");
    }
    Ok(())
}

impl PathConfig {
    pub fn validate(&self) -> Result<()> {
        validate_grid(self.num, self.ratio_min)?;
        self.options.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    /// Per-block prediction error along the path, on held-out rows.
    Rmse,
    /// Support recovery curves.
    Roc,
    /// Noise level against the number of averaged repetitions.
    Trials,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Rmse => "rmse",
            ExperimentKind::Roc => "roc",
            ExperimentKind::Trials => "trials",
        }
    }
}

/// Every experiment shares this record. `solvers`, `num` and `ratio_min`
/// drive rmse and roc; `t_values` and `lambda_ratio` drive trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub data: DataOptions,
    pub seeds: Vec<u64>,
    pub solvers: Vec<SolverKind>,
    pub num: usize,
    pub ratio_min: f64,
    pub t_values: Vec<usize>,
    pub lambda_ratio: f64,
    #[serde(flatten)]
    pub options: SolverOptions,
}

impl ExperimentConfig {
    /// Desk-scale defaults for each protocol.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let data = DataOptions {
            n: 120,
            p: 300,
            q: 30,
            blocks: vec![40, 40, 40],
            noise_mult: vec![1.0, 2.0, 5.0],
            rho: 0.7,
            support: 20,
            snr: 1.0,
            snr_definition: SnrDefinition::SignalOverNoise,
        };
        let base = Self {
            data,
            seeds: (0..10).collect(),
            solvers: vec![SolverKind::Sbhcl, SolverKind::Scl],
            num: DEFAULT_GRID_LEN,
            ratio_min: DEFAULT_RATIO_MIN,
            t_values: vec![2, 4, 8, 16, 32],
            lambda_ratio: 0.03,
            options: SolverOptions::default(),
        };
        match kind {
            ExperimentKind::Rmse => base,
            ExperimentKind::Roc => Self {
                data: DataOptions {
                    support: 30,
                    ..base.data.clone()
                },
                solvers: vec![SolverKind::Sbhcl, SolverKind::Scl, SolverKind::Mtl],
                ..base
            },
            // Fewer features than samples: at 3% of the critical level a
            // wide design would interpolate the observations and the noise
            // estimate would collapse onto its floor.
            ExperimentKind::Trials => Self {
                data: DataOptions {
                    n: 180,
                    p: 60,
                    q: 34,
                    blocks: vec![60, 60, 60],
                    support: 10,
                    ..base.data.clone()
                },
                seeds: vec![0],
                solvers: vec![SolverKind::Sbhcl],
                ..base
            },
        }
    }

    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        if self.seeds.is_empty() {
            bail!("at least one seed is required");
        }
        for &seed in &self.seeds {
            self.data.spec(seed).validate()?;
        }
        match kind {
            ExperimentKind::Rmse | ExperimentKind::Roc => {
                if self.solvers.is_empty() {
                    bail!("at least one solver is required");
                }
                validate_grid(self.num, self.ratio_min)?;
            }
            ExperimentKind::Trials => {
                if !(self.lambda_ratio > 0.0 && self.lambda_ratio <= 1.0) {
                    bail!("lambda_ratio must lie in (0, 1], got {}", self.lambda_ratio);
                }
            }
        }
        self.options.validate()
    }
}
