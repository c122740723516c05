//! Run configuration files.
//!
//! A run is described by one JSON object whose `command` field selects the
//! experiment. Omitted fields take documented defaults, and the resolved
//! configuration (defaults filled in) is echoed into the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use eib_core::bounds::{Generator, DEFAULT_ENUMERATION_BUDGET};
use eib_core::gauss::DiagGaussian;
use eib_core::prob::{EmpiricalDraw, Encoder, JointDistribution};
use eib_core::solver::EibConfig;
use eib_core::toy::{self, ToyConfig};
use eib_core::rng;
use rand::Rng as _;
use rand_distr::Gamma;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    Solve(SolveConfig),
    Sweep(SweepConfig),
    BoundsSim(BoundsSimConfig),
    ToyTransfer(ToyTransferConfig),
    RdCompare(RdCompareConfig),
    Gauss(GaussConfig),
    Decompose(DecomposeConfig),
}

pub const COMMAND_NAMES: [&str; 7] = ["solve", "sweep", "bounds-sim", "toy-transfer", "rd-compare", "gauss", "decompose"];

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Sweep(_) => "sweep",
            Command::BoundsSim(_) => "bounds-sim",
            Command::ToyTransfer(_) => "toy-transfer",
            Command::RdCompare(_) => "rd-compare",
            Command::Gauss(_) => "gauss",
            Command::Decompose(_) => "decompose",
        }
    }

    /// Fills in defaults that depend on other fields and checks grids.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        match &mut self {
            Command::Sweep(c) => {
                let grid = c.grid.get_or_insert_with(|| c.axis.default_grid());
                grid.validate()?;
            }
            Command::BoundsSim(c) => {
                nonempty(&c.ms, "ms")?;
                nonempty(&c.generators, "generators")?;
            }
            Command::ToyTransfer(c) => {
                nonempty(&c.alphas, "alphas")?;
                nonempty(&c.source_rs, "source_rs")?;
                if let Some(a) = c.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
                    return Err(CliError::Input(format!("alpha {a} outside [0, 1]")));
                }
                let betas = c.betas.get_or_insert_with(|| c.source_rs.iter().map(|&r| default_toy_beta(r)).collect());
                if betas.len() != c.source_rs.len() {
                    return Err(CliError::Input(format!(
                        "{} betas given for {} source noise levels",
                        betas.len(),
                        c.source_rs.len()
                    )));
                }
            }
            _ => {}
        }
        Ok(self)
    }
}

fn nonempty<T>(v: &[T], name: &str) -> Result<(), CliError> {
    if v.is_empty() {
        return Err(CliError::Input(format!("`{name}` must not be empty")));
    }
    Ok(())
}

/// Reads a configuration, applies `key=value` overrides (dotted keys reach
/// into nested objects) and resolves defaults.
pub fn parse(text: &str, command: Option<&str>, overrides: &[String]) -> Result<Command, CliError> {
    let mut value: Value = serde_json::from_str(text)?;
    let obj = value.as_object_mut().ok_or_else(|| CliError::Input("configuration must be a JSON object".into()))?;
    if let Some(name) = command {
        match obj.get("command") {
            None => {
                obj.insert("command".into(), Value::String(name.into()));
            }
            Some(Value::String(s)) if s == name => {}
            Some(other) => {
                return Err(CliError::Input(format!("configuration is for command {other}, not \"{name}\"")));
            }
        }
    }
    for item in overrides {
        apply_override(obj, item)?;
    }
    let cmd: Command = serde_json::from_value(value)?;
    cmd.resolve()
}

fn apply_override(root: &mut Map<String, Value>, item: &str) -> Result<(), CliError> {
    let (key, raw) = item.split_once('=').ok_or_else(|| CliError::Input(format!("override `{item}` is not key=value")))?;
    let parsed = serde_json::from_str::<Value>(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    if parsed.is_object() || parsed.is_array() {
        return Err(CliError::Input(format!("override `{key}` must be a scalar")));
    }
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) || key == "command" {
        return Err(CliError::Input(format!("cannot override `{key}`")));
    }
    let mut obj = root;
    for part in &parts[..parts.len() - 1] {
        let next = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
        obj = next.as_object_mut().ok_or_else(|| CliError::Input(format!("`{part}` in `{key}` is not an object")))?;
    }
    obj.insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(())
}

/// Where a joint distribution comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum JointSource {
    /// `{"inline": {"probs": [[...], ...]}}`
    Inline(JointDistribution),
    /// Path to a joint JSON file, relative to the configuration file.
    File(PathBuf),
    /// Empirical joint of a toy dataset.
    Toy(ToyConfig),
    /// Flattened joint drawn from a symmetric Dirichlet; small
    /// `concentration` gives sparse, strongly dependent joints.
    Random {
        nx: usize,
        ny: usize,
        seed: u64,
        #[serde(default = "default_concentration")]
        concentration: f64,
    },
}

impl JointSource {
    /// The joint, plus the bit-vector alphabet when it comes from toy data.
    pub fn load(&self, base: &Path) -> Result<(JointDistribution, Option<Vec<u64>>), CliError> {
        match self {
            JointSource::Inline(j) => Ok((j.clone(), None)),
            JointSource::File(p) => {
                let path = base.join(p);
                let text = fs::read_to_string(&path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                Ok((serde_json::from_str(&text)?, None))
            }
            JointSource::Toy(cfg) => {
                let (j, alphabet) = toy::to_empirical_joint(&toy::generate(cfg)?)?;
                Ok((j, Some(alphabet)))
            }
            JointSource::Random { nx, ny, seed, concentration } => {
                Ok((random_joint(*nx, *ny, *seed, *concentration)?, None))
            }
        }
    }
}

fn default_concentration() -> f64 {
    1.0
}

pub fn random_joint(nx: usize, ny: usize, seed: u64, concentration: f64) -> Result<JointDistribution, CliError> {
    let gamma = Gamma::new(concentration, 1.0)
        .map_err(|e| CliError::Input(format!("concentration = {concentration}: {e}")))?;
    let mut r = rng::seeded(seed);
    loop {
        let v: Vec<f64> = (0..nx * ny).map(|_| r.sample(gamma)).collect();
        let z: f64 = v.iter().sum();
        if z > 0.0 {
            return Ok(JointDistribution::from_flat(nx, ny, v.iter().map(|e| e / z).collect())?);
        }
    }
}

fn default_sweep_source() -> JointSource {
    JointSource::Random { nx: 8, ny: 2, seed: 0, concentration: 0.3 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub source: JointSource,
    #[serde(default)]
    pub solver: EibConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Alpha,
    Beta,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Alpha => "alpha",
            Axis::Beta => "beta",
        }
    }

    pub fn default_grid(self) -> Grid {
        match self {
            Axis::Beta => Grid { start: 1.5, stop: 51.5, points: 500 },
            Axis::Alpha => Grid { start: 0.0, stop: 1.0, points: 201 },
        }
    }
}

/// `points` evenly spaced values from `start` to `stop` inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.points == 0 || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(CliError::Input(format!("invalid grid {self:?}")));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points).map(|i| if i + 1 == self.points { self.stop } else { self.start + step * i as f64 }).collect()
    }
}

fn default_sweep_solver() -> EibConfig {
    EibConfig { alpha: 1.0, beta: 4.5, t_cardinality: 4, ..EibConfig::default() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_sweep_source")]
    pub source: JointSource,
    pub axis: Axis,
    /// Defaults to 500 points on [1.5, 51.5] for β and 201 points on [0, 1]
    /// for α.
    #[serde(default)]
    pub grid: Option<Grid>,
    /// Supplies the fixed parameter and everything else; the swept one is
    /// overwritten per point.
    #[serde(default = "default_sweep_solver")]
    pub solver: EibConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSimConfig {
    pub ms: Vec<u64>,
    pub trials: usize,
    pub seed: u64,
    pub delta: f64,
    pub x_card: usize,
    pub t_card: usize,
    pub y_card: usize,
    pub generators: Vec<Generator>,
}

impl Default for BoundsSimConfig {
    fn default() -> Self {
        let sim = eib_core::bounds::SimulationConfig::default();
        Self {
            ms: sim.ms,
            trials: sim.trials,
            seed: sim.seed,
            delta: sim.delta,
            x_card: sim.x_card,
            t_card: sim.t_card,
            y_card: sim.y_card,
            generators: vec![Generator::Uniform, Generator::Normal],
        }
    }
}

/// β used for a source noise level when none is given: 10⁴ above 1.4 and
/// 5·10³ otherwise, which reproduces the published choice on its grid.
pub fn default_toy_beta(r: f64) -> f64 {
    if r > 1.4 {
        1e4
    } else {
        5e3
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyTransferConfig {
    pub alphas: Vec<f64>,
    pub source_rs: Vec<f64>,
    /// One β per source noise level.
    pub betas: Option<Vec<f64>>,
    pub target_r: f64,
    pub m: usize,
    pub n_bits: usize,
    pub seed: u64,
    pub t_cardinality: usize,
    pub n_restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ToyTransferConfig {
    fn default() -> Self {
        Self {
            alphas: (0..=10).map(|k| k as f64 / 10.0).collect(),
            source_rs: vec![2.0, 1.5, 1.433, 1.375, 1.25],
            betas: None,
            target_r: 3.0,
            m: 2000,
            n_bits: 10,
            seed: 0,
            t_cardinality: 4,
            n_restarts: 10,
            max_iter: 10_000,
            tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Domains {
    /// Toy source and target datasets; target instances never seen in the
    /// source are encoded like their nearest seen source instance.
    Toy { source_r: f64, target_r: f64, m: usize, seed: u64 },
    /// Two joints over the same instance alphabet.
    Joints { source: JointSource, target: JointSource },
}

fn default_domains() -> Domains {
    Domains::Toy { source_r: 2.0, target_r: 3.0, m: 2000, seed: 0 }
}

fn default_rd_solver() -> EibConfig {
    EibConfig { beta: 10.0, t_cardinality: 4, ..EibConfig::default() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RdCompareConfig {
    #[serde(default = "default_domains")]
    pub domains: Domains,
    /// Shared settings of both solves; `alpha` is set to 0 and 1 in turn.
    #[serde(default = "default_rd_solver")]
    pub solver: EibConfig,
    #[serde(default = "default_budget")]
    pub budget: u64,
}

fn default_budget() -> u64 {
    DEFAULT_ENUMERATION_BUDGET
}

fn default_mc_samples() -> usize {
    1_000_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussConfig {
    pub g1: DiagGaussian,
    pub g2: DiagGaussian,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// When set, evaluates the variational regularizer with `g1` as the
    /// encoder and `g2` as the backward encoder.
    #[serde(default)]
    pub regularizer_alpha: Option<f64>,
    #[serde(default)]
    pub pairing: Option<PairingConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairingConfig {
    pub source: Vec<DiagGaussian>,
    pub target: Vec<DiagGaussian>,
    pub t_card: usize,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EncoderSource {
    Inline(Encoder),
    /// Solve on the source joint.
    Solve(EibConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EmpiricalSource {
    /// Multinomial draw of size `m` from the source joint.
    Sample { m: u64, seed: u64 },
    Counts(EmpiricalDraw),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportMode {
    /// One report per hypothesis.
    All,
    /// Only the aggregate and the tightest hypothesis.
    Summary,
}

fn default_mode() -> ReportMode {
    ReportMode::All
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeConfig {
    pub source: JointSource,
    pub target: JointSource,
    pub encoder: EncoderSource,
    pub empirical: EmpiricalSource,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default = "default_mode")]
    pub mode: ReportMode,
}
