//! Experiment configuration, read from JSON.
//!
//! ```json
//! {
//!   "instances": [{"generator": "uniform", "n": 2000, "m": 1, "b": 200, "seed": 1},
//!                 {"file": "inst.json"}],
//!   "grid": {"epsilon": [1, 5], "delta": [1e-6], "alpha": [0.05, 0.1]},
//!   "seeds": [0, 1, 2],
//!   "algorithms": ["private", "nonprivate"],
//!   "audits": ["gap", "feasibility", "rounds", "privacy", "regret"],
//!   "output_dir": "out"
//! }
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use jdp_pack_core::audit::thresholds;
use jdp_pack_core::{generate, GeneratorKind, PackingInstance, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::io::{load_instance, IoError};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed config at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("instance `{name}`: {source}")]
    Instance { name: String, source: IoError },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub generator: GeneratorKind,
    pub n: usize,
    pub m: usize,
    pub b: f64,
    pub seed: u64,
    #[serde(default)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSource {
    Generator(GeneratorSpec),
    File {
        file: PathBuf,
        #[serde(default)]
        name: Option<String>,
    },
}

impl InstanceSource {
    pub fn name(&self) -> String {
        match self {
            InstanceSource::Generator(g) => g
                .name
                .clone()
                .unwrap_or_else(|| format!("{}-n{}-m{}-b{}-s{}", g.generator, g.n, g.m, g.b, g.seed)),
            InstanceSource::File { file, name } => name.clone().unwrap_or_else(|| {
                file.file_stem()
                    .map_or_else(|| file.display().to_string(), |s| s.to_string_lossy().into_owned())
            }),
        }
    }

    pub fn load(&self) -> Result<PackingInstance, ConfigError> {
        let wrap = |source| ConfigError::Instance {
            name: self.name(),
            source,
        };
        match self {
            InstanceSource::Generator(g) => generate(g.generator, g.n, g.m, g.b, g.seed)
                .map_err(|e| ConfigError::Invalid(format!("instance `{}`: {e}", self.name()))),
            InstanceSource::File { file, .. } => load_instance(file).map_err(wrap),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamGrid {
    pub epsilon: Vec<f64>,
    pub delta: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Multiplies each instance's supply `b`.
    #[serde(default = "unit_multiplier")]
    pub b_multipliers: Vec<f64>,
}

fn unit_multiplier() -> Vec<f64> {
    vec![1.0]
}

/// One point of the parameter grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub epsilon: f64,
    pub delta: f64,
    pub alpha: f64,
    pub b_multiplier: f64,
}

impl ParamGrid {
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &b_multiplier in &self.b_multipliers {
            for &alpha in &self.alpha {
                for &epsilon in &self.epsilon {
                    for &delta in &self.delta {
                        out.push(GridPoint {
                            epsilon,
                            delta,
                            alpha,
                            b_multiplier,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Private,
    Nonprivate,
    FixedStep,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Private => "private",
            Algorithm::Nonprivate => "nonprivate",
            Algorithm::FixedStep => "fixed_step",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Checks applied to every private-algorithm row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditKind {
    /// `OPT − objective ≤ C_gap α n`
    Gap,
    /// `s ≤ C_feas α b` before scaling, `≤ 0` after
    Feasibility,
    /// Both canonical comparators within `D_KL + C_reg α n η_sum`
    Regret,
    /// Per-type round bounds
    Rounds,
    /// Per-round regime and composed budget
    Privacy,
}

impl AuditKind {
    pub const ALL: [AuditKind; 5] = [
        AuditKind::Gap,
        AuditKind::Feasibility,
        AuditKind::Regret,
        AuditKind::Rounds,
        AuditKind::Privacy,
    ];

    /// Statistical audits tolerate a violation rate; the others tolerate none.
    pub fn is_statistical(self) -> bool {
        matches!(self, AuditKind::Gap | AuditKind::Feasibility | AuditKind::Regret)
    }

    pub fn name(self) -> &'static str {
        match self {
            AuditKind::Gap => "gap",
            AuditKind::Feasibility => "feasibility",
            AuditKind::Regret => "regret",
            AuditKind::Rounds => "rounds",
            AuditKind::Privacy => "privacy",
        }
    }
}

/// Where `OPT` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// Knapsack oracle for `m = 1`, high-precision MWU otherwise.
    #[default]
    Auto,
    Knapsack,
    Mwu,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub c_gap: f64,
    pub c_feas: f64,
    pub c_reg: f64,
    pub c_priv: f64,
    pub max_violation_rate: f64,
    /// `α` of the high-precision MWU reference.
    pub reference_alpha: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            c_gap: thresholds::C_GAP,
            c_feas: thresholds::C_FEAS,
            c_reg: thresholds::C_REG,
            c_priv: thresholds::C_PRIV,
            max_violation_rate: thresholds::MAX_VIOLATION_RATE,
            reference_alpha: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instances: Vec<InstanceSource>,
    pub grid: ParamGrid,
    pub seeds: Vec<u64>,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub audits: Vec<AuditKind>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub reference: Reference,
    #[serde(default)]
    pub thresholds: Thresholds,
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Private]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("jdp-pack-out")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: Self = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Reads and validates a config; relative instance paths and the output
    /// directory are taken relative to the config file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.into(),
            source,
        })?;
        let mut config = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for source in &mut config.instances {
            if let InstanceSource::File { file, .. } = source {
                if file.is_relative() {
                    *file = base.join(&*file);
                }
            }
        }
        if config.output_dir.is_relative() {
            config.output_dir = base.join(&config.output_dir);
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: &str| Err(ConfigError::Invalid(msg.into()));
        if self.instances.is_empty() {
            return fail("at least one instance is required");
        }
        if self.seeds.is_empty() {
            return fail("at least one seed is required");
        }
        if self.algorithms.is_empty() {
            return fail("at least one algorithm is required");
        }
        let g = &self.grid;
        if g.epsilon.is_empty() || g.delta.is_empty() || g.alpha.is_empty() || g.b_multipliers.is_empty() {
            return fail("every grid axis needs at least one value");
        }
        if g.b_multipliers.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return fail("b multipliers must be positive");
        }
        let t = &self.thresholds;
        if !(0.0..=1.0).contains(&t.max_violation_rate) {
            return fail("max_violation_rate must lie in [0, 1]");
        }
        if !(t.reference_alpha > 0.0 && t.reference_alpha < 1.0) {
            return fail("reference_alpha must lie in (0, 1)");
        }
        Ok(())
    }

    /// Number of (instance, grid point, seed, algorithm) rows.
    pub fn grid_size(&self) -> usize {
        self.instances.len() * self.grid.points().len() * self.seeds.len() * self.algorithms.len()
    }
}
