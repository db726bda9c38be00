//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "problem": "global_existence",
//!   "grid": { "family": "uniform", "m": 80 },
//!   "tau": 1e-3,
//!   "t_final": 1.0,
//!   "outputs": { "snapshot_times": [0.0, 0.5, 1.0], "snapshot_format": "vtk" }
//! }
//! ```
//!
//! Unknown keys are rejected and errors name the offending path.

use std::fmt;
use std::path::Path;

use bcfd_core::{GridFamily, ProblemSpec, SchemeConfig, BUILTIN_PROBLEMS};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Run,
    Convergence,
    Blowup,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Run => "run",
            Mode::Convergence => "convergence",
            Mode::Blowup => "blowup",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Uniform,
    Random,
    Middle,
    Corner,
}

/// One resolution, or a list of them for convergence sweeps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Resolution {
    One(usize),
    Many(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub family: Family,
    pub m: Resolution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnapshotFormat {
    #[default]
    Csv,
    Vtk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// File name of the per-step diagnostics, relative to the output directory.
    #[serde(default = "default_diagnostics")]
    pub diagnostics: String,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub snapshot_format: SnapshotFormat,
}

fn default_diagnostics() -> String {
    "diagnostics.csv".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            diagnostics: default_diagnostics(),
            snapshot_times: Vec::new(),
            snapshot_format: SnapshotFormat::Csv,
        }
    }
}

fn default_solver_tol() -> f64 {
    SchemeConfig::DEFAULT_SOLVER_TOL
}

fn default_blowup_threshold() -> f64 {
    SchemeConfig::DEFAULT_BLOWUP_THRESHOLD
}

fn default_true() -> bool {
    true
}

/// The raw document. Use [`parse_config`] to obtain a validated [`RunConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    /// Optional; when present it must agree with the subcommand.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    pub problem: String,
    pub grid: GridConfig,
    /// Not allowed in convergence mode, where `tau = h_fix`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    pub t_final: f64,
    #[serde(default = "default_solver_tol")]
    pub solver_tol: f64,
    #[serde(default = "default_blowup_threshold")]
    pub blowup_threshold: f64,
    #[serde(default = "default_true")]
    pub uniqueness_monitor: bool,
    #[serde(default)]
    pub outputs: OutputConfig,
}

#[derive(Debug)]
pub enum ConfigError {
    Io(std::io::Error),
    /// Schema violation; `path` is the JSON path of the offending value.
    Schema { path: String, message: String },
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(e) => write!(f, "cannot read config: {e}"),
            ConfigError::Schema { path, message } => write!(f, "config error at `{path}`: {message}"),
            ConfigError::Invalid(msg) => write!(f, "invalid config: {msg}"),
        }
    }
}

impl std::error::Error for ConfigError {}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub problem: ProblemSpec,
    pub family: GridFamily,
    /// A single entry except in convergence mode.
    pub m: Vec<usize>,
    /// `None` in convergence mode, where each run uses its own `h_fix`.
    pub tau: Option<f64>,
    pub t_final: f64,
    pub solver_tol: f64,
    pub blowup_threshold: f64,
    pub uniqueness_monitor: bool,
    pub outputs: OutputConfig,
    pub raw: RawConfig,
}

impl RunConfig {
    /// `h_fix = (x_hi - x_lo) / m`.
    pub fn h_fix(&self, m: usize) -> f64 {
        let [x_lo, x_hi, _, _] = self.problem.domain();
        (x_hi - x_lo) / m as f64
    }

    /// Scheme parameters for resolution `m`.
    pub fn scheme_config(&self, m: usize) -> SchemeConfig {
        SchemeConfig {
            lambda: self.problem.lambda(),
            tau: self.tau.unwrap_or_else(|| self.h_fix(m)),
            t_final: self.t_final,
            solver_tol: self.solver_tol,
            blowup_threshold: self.blowup_threshold,
            uniqueness_monitor: self.uniqueness_monitor,
        }
    }
}

/// Parses and validates a configuration for the given subcommand.
pub fn parse_config(text: &str, mode: Mode) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    validate(raw, mode)
}

pub fn load_config(path: &Path, mode: Mode) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(ConfigError::Io)?;
    parse_config(&text, mode)
}

fn validate(raw: RawConfig, mode: Mode) -> Result<RunConfig, ConfigError> {
    if let Some(declared) = raw.mode {
        if declared != mode {
            return Err(invalid(format!(
                "config declares mode '{declared}' but the '{mode}' command was used"
            )));
        }
    }
    let problem = ProblemSpec::by_name(&raw.problem).ok_or_else(|| {
        invalid(format!(
            "unknown problem '{}' (available: {})",
            raw.problem,
            BUILTIN_PROBLEMS.join(", ")
        ))
    })?;

    let g = &raw.grid;
    let family = match (g.family, g.beta) {
        (Family::Random, Some(beta)) => GridFamily::Random {
            beta,
            seed: g.seed.unwrap_or(0),
        },
        (Family::Random, None) => return Err(invalid("grid.beta is required for the random family")),
        (_, Some(_)) => return Err(invalid("grid.beta is only allowed with the random family")),
        (Family::Uniform, None) => GridFamily::Uniform,
        (Family::Middle, None) => GridFamily::Middle,
        (Family::Corner, None) => GridFamily::Corner,
    };
    if g.seed.is_some() && g.family != Family::Random {
        return Err(invalid("grid.seed is only allowed with the random family"));
    }

    let m = match (&g.m, mode) {
        (Resolution::Many(list), Mode::Convergence) => list.clone(),
        (Resolution::One(m), Mode::Convergence) => vec![*m],
        (Resolution::One(m), _) => vec![*m],
        (Resolution::Many(_), _) => {
            return Err(invalid(format!("grid.m must be a single integer in {mode} mode")))
        }
    };
    if m.is_empty() {
        return Err(invalid("grid.m must not be empty"));
    }
    if let Some(bad) = m.iter().find(|&&m| m < 4) {
        return Err(invalid(format!("grid.m must be at least 4, got {bad}")));
    }
    if family == GridFamily::Middle {
        if let Some(bad) = m.iter().find(|&&m| m % 2 != 0) {
            return Err(invalid(format!("the middle family needs an even grid.m, got {bad}")));
        }
    }

    let tau = match (mode, raw.tau) {
        (Mode::Convergence, Some(_)) => {
            return Err(invalid("tau must not be given in convergence mode (tau = h_fix)"))
        }
        (Mode::Convergence, None) => None,
        (_, Some(t)) => Some(t),
        (_, None) => return Err(invalid(format!("tau is required in {mode} mode"))),
    };
    if mode == Mode::Convergence && problem.exact().is_none() {
        return Err(invalid(format!(
            "problem '{}' has no exact solution, so convergence mode cannot measure errors",
            problem.name()
        )));
    }
    if raw.outputs.diagnostics.is_empty()
        || Path::new(&raw.outputs.diagnostics).components().count() != 1
    {
        return Err(invalid("outputs.diagnostics must be a plain file name"));
    }

    let cfg = RunConfig {
        mode,
        problem,
        family,
        m,
        tau,
        t_final: raw.t_final,
        solver_tol: raw.solver_tol,
        blowup_threshold: raw.blowup_threshold,
        uniqueness_monitor: raw.uniqueness_monitor,
        outputs: raw.outputs.clone(),
        raw,
    };
    for &m in &cfg.m {
        cfg.scheme_config(m)
            .n_steps()
            .map_err(|e| invalid(format!("M = {m}: {e}")))?;
        bcfd_core::StaggeredGrid2D::build(cfg.family, m, cfg.problem.domain())
            .map_err(|e| invalid(format!("M = {m}: {e}")))?;
    }
    if let Some(tau) = cfg.tau {
        for &t in &cfg.outputs.snapshot_times {
            let steps = t / tau;
            if !(0.0..=cfg.t_final * (1.0 + 1e-12)).contains(&t)
                || (steps - steps.round()).abs() > 1e-9 * steps.max(1.0)
            {
                return Err(invalid(format!(
                    "snapshot time {t} is not a multiple of tau in [0, t_final]"
                )));
            }
        }
    } else if !cfg.outputs.snapshot_times.is_empty() {
        return Err(invalid("snapshots are not supported in convergence mode"));
    }
    Ok(cfg)
}
