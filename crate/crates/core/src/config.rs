//! Run configuration: flat `key = value` text with `#` comments, strict
//! unknown-key rejection, defaults for every field, and a lossless
//! serialization used for reproducibility checks.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elliptic::EllipticConfig;
use crate::picard::{InitialIterate, SweepSettings};
use crate::transport::TransportConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` set twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: `{key}`: {msg}")]
    BadValue { line: usize, key: String, msg: String },
    #[error("`{key}`: {msg}")]
    Invalid { key: String, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Deterministic,
    Multiplicative,
    Additive,
}

impl Regime {
    fn as_str(&self) -> &'static str {
        match self {
            Regime::Deterministic => "deterministic",
            Regime::Multiplicative => "multiplicative",
            Regime::Additive => "additive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    /// Taylor–Green vortex velocity with the density profile implied by the
    /// `[density_min, density_max]` bounds.
    TaylorGreen,
    /// Smooth periodic density bump inside `[density_min, density_max]`,
    /// same Taylor–Green velocity scaled by `velocity_amplitude`.
    GaussianDensityBlob,
    /// Load `rho0` and `v0` from stored field files under the given prefix.
    FromFile(String),
}

impl InitialCondition {
    fn as_config_value(&self) -> String {
        match self {
            InitialCondition::TaylorGreen => "taylor_green".into(),
            InitialCondition::GaussianDensityBlob => "gaussian_density_blob".into(),
            InitialCondition::FromFile(path) => format!("from_file:{path}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub regime: Regime,
    pub dim: usize,
    pub n_per_axis: usize,
    pub n_steps: usize,
    pub t_horizon: f64,
    pub p: f64,
    pub picard_tol: f64,
    pub k_max: usize,
    /// Declared ball radius; absent means derived from the initial data.
    pub ball_radius: Option<f64>,
    pub seed: u64,
    pub q_modes: usize,
    pub q_decay: f64,
    pub q_smoothness: f64,
    pub elliptic_rel_tol: f64,
    pub elliptic_max_iter: usize,
    pub ic: InitialCondition,
    pub density_min: f64,
    pub density_max: f64,
    pub velocity_amplitude: f64,
    pub substeps: usize,
    pub overshoot_factor: f64,
    pub bound_slack: f64,
    pub div_tol: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub initial_iterate_projected: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            regime: Regime::Deterministic,
            dim: 2,
            n_per_axis: 64,
            n_steps: 64,
            t_horizon: 0.1,
            p: 4.0,
            picard_tol: 1e-8,
            k_max: 30,
            ball_radius: None,
            seed: 0,
            q_modes: 4,
            q_decay: 4.0,
            q_smoothness: 3.0,
            elliptic_rel_tol: 1e-10,
            elliptic_max_iter: 500,
            ic: InitialCondition::TaylorGreen,
            density_min: 1.0,
            density_max: 1.0,
            velocity_amplitude: 1.0,
            substeps: 2,
            overshoot_factor: 1.0,
            bound_slack: 0.05,
            div_tol: 1e-10,
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            initial_iterate_projected: false,
        }
    }
}

/// A parsed configuration plus hypothesis warnings (recorded, not fatal).
#[derive(Debug, Clone)]
pub struct ParsedConfig {
    pub config: RunConfig,
    pub warnings: Vec<String>,
}

pub fn parse_config(text: &str) -> Result<ParsedConfig, ConfigError> {
    parse_config_with_overrides(text, &[])
}

/// Parse `key = value` lines, then apply command-line overrides (which may
/// replace file values without counting as duplicates).
pub fn parse_config_with_overrides(
    text: &str,
    overrides: &[(String, String)],
) -> Result<ParsedConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut seen: Vec<String> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            text: content.to_string(),
        })?;
        let key = key.trim();
        let value = value.trim();
        if seen.iter().any(|k| k == key) {
            return Err(ConfigError::Duplicate { line, key: key.to_string() });
        }
        seen.push(key.to_string());
        apply(&mut cfg, key, value, line)?;
    }
    for (key, value) in overrides {
        apply(&mut cfg, key, value, 0)?;
    }
    let warnings = validate(&cfg)?;
    Ok(ParsedConfig { config: cfg, warnings })
}

fn apply(cfg: &mut RunConfig, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
    fn bad(line: usize, key: &str, msg: impl Into<String>) -> ConfigError {
        ConfigError::BadValue { line, key: key.to_string(), msg: msg.into() }
    }
    fn num<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError> {
        value.parse::<T>().map_err(|_| bad(line, key, format!("cannot parse `{value}`")))
    }
    match key {
        "regime" => {
            cfg.regime = match value {
                "deterministic" => Regime::Deterministic,
                "multiplicative" => Regime::Multiplicative,
                "additive" => Regime::Additive,
                _ => return Err(bad(line, key, format!("unknown regime `{value}`"))),
            }
        }
        "dim" => cfg.dim = num(line, key, value)?,
        "n_per_axis" => cfg.n_per_axis = num(line, key, value)?,
        "n_steps" => cfg.n_steps = num(line, key, value)?,
        "t_horizon" => cfg.t_horizon = num(line, key, value)?,
        "p" => cfg.p = num(line, key, value)?,
        "picard_tol" => cfg.picard_tol = num(line, key, value)?,
        "k_max" => cfg.k_max = num(line, key, value)?,
        "ball_radius" => {
            cfg.ball_radius = if value == "auto" { None } else { Some(num(line, key, value)?) }
        }
        "seed" => cfg.seed = num(line, key, value)?,
        "q_modes" => cfg.q_modes = num(line, key, value)?,
        "q_decay" => cfg.q_decay = num(line, key, value)?,
        "q_smoothness" => cfg.q_smoothness = num(line, key, value)?,
        "elliptic_rel_tol" => cfg.elliptic_rel_tol = num(line, key, value)?,
        "elliptic_max_iter" => cfg.elliptic_max_iter = num(line, key, value)?,
        "ic" => {
            cfg.ic = if value == "taylor_green" {
                InitialCondition::TaylorGreen
            } else if value == "gaussian_density_blob" {
                InitialCondition::GaussianDensityBlob
            } else if let Some(path) = value.strip_prefix("from_file:") {
                InitialCondition::FromFile(path.trim().to_string())
            } else {
                return Err(bad(line, key, format!("unknown initial condition `{value}`")));
            }
        }
        "density_min" => cfg.density_min = num(line, key, value)?,
        "density_max" => cfg.density_max = num(line, key, value)?,
        "velocity_amplitude" => cfg.velocity_amplitude = num(line, key, value)?,
        "substeps" => cfg.substeps = num(line, key, value)?,
        "overshoot_factor" => cfg.overshoot_factor = num(line, key, value)?,
        "bound_slack" => cfg.bound_slack = num(line, key, value)?,
        "div_tol" => cfg.div_tol = num(line, key, value)?,
        "c1" => cfg.c1 = num(line, key, value)?,
        "c2" => cfg.c2 = num(line, key, value)?,
        "c3" => cfg.c3 = num(line, key, value)?,
        "initial_iterate" => {
            cfg.initial_iterate_projected = match value {
                "zero" => false,
                "projected_v0" => true,
                _ => return Err(bad(line, key, format!("unknown initial iterate `{value}`"))),
            }
        }
        _ => return Err(ConfigError::UnknownKey { line, key: key.to_string() }),
    }
    Ok(())
}

fn validate(cfg: &RunConfig) -> Result<Vec<String>, ConfigError> {
    fn invalid(key: &str, msg: impl Into<String>) -> ConfigError {
        ConfigError::Invalid { key: key.to_string(), msg: msg.into() }
    }
    if cfg.dim != 2 && cfg.dim != 3 {
        return Err(invalid("dim", "must be 2 or 3"));
    }
    if cfg.n_per_axis < 8 || !cfg.n_per_axis.is_power_of_two() {
        return Err(invalid("n_per_axis", "must be a power of two >= 8"));
    }
    if cfg.n_steps == 0 {
        return Err(invalid("n_steps", "must be >= 1"));
    }
    if !(cfg.t_horizon.is_finite() && cfg.t_horizon > 0.0) {
        return Err(invalid("t_horizon", "must be positive and finite"));
    }
    if !(cfg.p.is_finite() && cfg.p > 1.0) {
        return Err(invalid("p", "must be finite and > 1"));
    }
    if !(cfg.picard_tol > 0.0) {
        return Err(invalid("picard_tol", "must be positive"));
    }
    if cfg.k_max == 0 {
        return Err(invalid("k_max", "must be >= 1"));
    }
    if let Some(a) = cfg.ball_radius {
        if !(a > 1.0) {
            return Err(invalid("ball_radius", "must exceed 1"));
        }
    }
    if !(cfg.density_min > 0.0) {
        return Err(invalid("density_min", "density lower bound must be positive"));
    }
    if cfg.density_max < cfg.density_min {
        return Err(invalid("density_max", "must be >= density_min"));
    }
    if !cfg.velocity_amplitude.is_finite() {
        return Err(invalid("velocity_amplitude", "must be finite"));
    }
    if cfg.substeps == 0 {
        return Err(invalid("substeps", "must be >= 1"));
    }
    if !(cfg.overshoot_factor > 0.0) {
        return Err(invalid("overshoot_factor", "must be positive"));
    }
    if !(cfg.bound_slack >= 0.0) {
        return Err(invalid("bound_slack", "must be nonnegative"));
    }
    if !(cfg.div_tol > 0.0) {
        return Err(invalid("div_tol", "must be positive"));
    }
    if cfg.q_modes == 0 {
        return Err(invalid("q_modes", "must be >= 1"));
    }
    if !(cfg.q_decay > 0.0) {
        return Err(invalid("q_decay", "must be positive"));
    }
    if !(cfg.elliptic_rel_tol > 0.0 && cfg.elliptic_rel_tol < 1.0) {
        return Err(invalid("elliptic_rel_tol", "must lie in (0, 1)"));
    }
    if cfg.elliptic_max_iter == 0 {
        return Err(invalid("elliptic_max_iter", "must be >= 1"));
    }
    let mut warnings = Vec::new();
    if cfg.p <= 3.0 {
        warnings.push(format!(
            "p = {} lies outside the well-posedness hypothesis 3 < p < ∞; results are exploratory",
            cfg.p
        ));
    }
    if cfg.q_smoothness <= 2.5 {
        warnings.push(format!(
            "q_smoothness = {} is at or below the 5/2 regularity hypothesis",
            cfg.q_smoothness
        ));
    }
    if cfg.q_decay <= 1.0 {
        warnings.push(format!(
            "q_decay = {} does not give a trace-class limit as the mode count grows",
            cfg.q_decay
        ));
    }
    Ok(warnings)
}

impl RunConfig {
    /// Flat `key = value` rendering; parsing it back reproduces the config.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        push("regime", self.regime.as_str().into());
        push("dim", self.dim.to_string());
        push("n_per_axis", self.n_per_axis.to_string());
        push("n_steps", self.n_steps.to_string());
        push("t_horizon", fmt_f64(self.t_horizon));
        push("p", fmt_f64(self.p));
        push("picard_tol", fmt_f64(self.picard_tol));
        push("k_max", self.k_max.to_string());
        push("ball_radius", self.ball_radius.map_or("auto".into(), fmt_f64));
        push("seed", self.seed.to_string());
        push("q_modes", self.q_modes.to_string());
        push("q_decay", fmt_f64(self.q_decay));
        push("q_smoothness", fmt_f64(self.q_smoothness));
        push("elliptic_rel_tol", fmt_f64(self.elliptic_rel_tol));
        push("elliptic_max_iter", self.elliptic_max_iter.to_string());
        push("ic", self.ic.as_config_value());
        push("density_min", fmt_f64(self.density_min));
        push("density_max", fmt_f64(self.density_max));
        push("velocity_amplitude", fmt_f64(self.velocity_amplitude));
        push("substeps", self.substeps.to_string());
        push("overshoot_factor", fmt_f64(self.overshoot_factor));
        push("bound_slack", fmt_f64(self.bound_slack));
        push("div_tol", fmt_f64(self.div_tol));
        push("c1", fmt_f64(self.c1));
        push("c2", fmt_f64(self.c2));
        push("c3", fmt_f64(self.c3));
        push(
            "initial_iterate",
            if self.initial_iterate_projected { "projected_v0".into() } else { "zero".into() },
        );
        out
    }

    pub fn sweep_settings(&self) -> SweepSettings {
        SweepSettings {
            p: self.p,
            picard_tol: self.picard_tol,
            k_max: self.k_max,
            ball_radius: self.ball_radius,
            transport: TransportConfig {
                substeps: self.substeps,
                overshoot_factor: self.overshoot_factor,
            },
            elliptic: EllipticConfig {
                rel_tol: self.elliptic_rel_tol,
                max_iter: self.elliptic_max_iter,
            },
            div_tol: self.div_tol,
            bound_slack: self.bound_slack,
            initial_iterate: if self.initial_iterate_projected {
                InitialIterate::ProjectedInitialVelocity
            } else {
                InitialIterate::Zero
            },
            c1: self.c1,
            c2: self.c2,
            c3: self.c3,
        }
    }
}

/// Shortest round-trip-exact decimal rendering of an f64.
fn fmt_f64(v: f64) -> String {
    let s = format!("{v}");
    debug_assert_eq!(s.parse::<f64>().unwrap(), v);
    s
}
