//! Run orchestration: initial-condition synthesis, regime dispatch,
//! diagnostics, and the on-disk run layout (`run.json`, `norms.csv`, and the
//! final-iterate fields in the shared binary format).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, InitialCondition, Regime, RunConfig};
use crate::fields::{
    FieldError, GridSpec, ScalarField, ScalarSeries, TimeGrid, TimeSeries, VectorField,
    VectorSeries,
};
use crate::io::{self, IoError};
use crate::noise::{
    exp_factor, sample_brownian, sample_q_wiener, BrownianPath, NoiseError, QWienerPath,
    QWienerSpec,
};
use crate::picard::bounds::{verify_bounds, BoundsReport};
use crate::picard::monitor::{monitor_convergence, ConvergenceReport};
use crate::picard::residual::{
    check_spde_residual_additive, check_spde_residual_multiplicative, ResidualReport,
};
use crate::picard::{
    run_additive, run_multiplicative, IterationState, PicardRun, ProblemSetup, SolveError,
    SolveReport,
};
use crate::transport::range_tolerance;

pub const REPORT_FORMAT: &str = "stochastic-euler-run/1";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("i/o failure on {path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("report serialization: {0}")]
    Json(#[from] serde_json::Error),
    #[error("initial-condition files describe a different grid than the config")]
    InitialConditionMismatch,
    #[error("runs have mismatched shapes: {0}")]
    ShapeMismatch(String),
    #[error("malformed run directory {0}: missing {1}")]
    MalformedRun(PathBuf, String),
}

/// Per-node norm diagnostics emitted to `norms.csv` and `run.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormRow {
    pub t: f64,
    pub v_norm_0p: f64,
    pub v_norm_1p: f64,
    pub v_norm_2p: f64,
    pub grad_rho_norm_1p: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub div_v_sup: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub format: String,
    pub config: RunConfig,
    pub config_text: String,
    pub warnings: Vec<String>,
    pub tau: f64,
    pub tau_capped: bool,
    pub solve: SolveReport,
    pub bounds: BoundsReport,
    pub residual: ResidualReport,
    pub convergence: ConvergenceReport,
    pub norm_table: Vec<NormRow>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub converged: bool,
}

/// Synthesize (or load) the initial fields of a configuration.
pub fn initial_conditions(cfg: &RunConfig) -> Result<(ScalarField, VectorField), RunError> {
    let grid = GridSpec::torus(cfg.dim, cfg.n_per_axis)?;
    match &cfg.ic {
        InitialCondition::TaylorGreen => {
            // homogeneous benchmark: constant density at the midpoint of the band
            let rho = ScalarField::constant(grid, 0.5 * (cfg.density_min + cfg.density_max))?;
            Ok((rho, taylor_green(grid, cfg.velocity_amplitude)?))
        }
        InitialCondition::GaussianDensityBlob => {
            let (m, big_m) = (cfg.density_min, cfg.density_max);
            let pi = std::f64::consts::PI;
            let rho = ScalarField::from_fn(grid, |x| {
                let mut bump = 1.0;
                for xa in x {
                    bump *= (2.0 * ((xa - pi).cos() - 1.0)).exp();
                }
                m + (big_m - m) * bump
            })?;
            Ok((rho, taylor_green(grid, cfg.velocity_amplitude)?))
        }
        InitialCondition::FromFile(prefix) => {
            let (rho, _) = io::read_scalar(&PathBuf::from(format!("{prefix}_rho0")))?;
            let (v0, _) = io::read_vector(&PathBuf::from(format!("{prefix}_v0")))?;
            if rho.grid() != grid || v0.grid() != grid {
                return Err(RunError::InitialConditionMismatch);
            }
            Ok((rho, v0))
        }
    }
}

/// Taylor–Green vortex scaled by `amplitude`; the 3D variant modulates the
/// planar vortex by `cos(x₃)`.
pub fn taylor_green(grid: GridSpec, amplitude: f64) -> Result<VectorField, FieldError> {
    VectorField::from_fn(grid, |x, c| {
        let planar = match c {
            0 => x[0].sin() * x[1].cos(),
            1 => -x[0].cos() * x[1].sin(),
            _ => 0.0,
        };
        if grid.dim() == 3 {
            amplitude * planar * x[2].cos()
        } else {
            amplitude * planar
        }
    })
}

fn q_spec(cfg: &RunConfig) -> QWienerSpec {
    QWienerSpec {
        mode_count: cfg.q_modes,
        decay_exponent: cfg.q_decay,
        smoothness_k: cfg.q_smoothness,
    }
}

/// Execute a configured run and write `run.json`, `norms.csv` and all
/// final-iterate fields into `out_dir`.
pub fn run(cfg: &RunConfig, warnings: &[String], out_dir: &Path) -> Result<RunOutcome, RunError> {
    let grid = GridSpec::torus(cfg.dim, cfg.n_per_axis)?;
    let t_grid = TimeGrid::new(cfg.t_horizon, cfg.n_steps)?;
    let (rho0, v0) = initial_conditions(cfg)?;
    let setup = ProblemSetup {
        grid,
        t_grid,
        rho0: rho0.clone(),
        v0,
        settings: cfg.sweep_settings(),
    };

    let picard: PicardRun;
    let residual: ResidualReport;
    let mut brownian: Option<BrownianPath> = None;
    let mut qwiener: Option<QWienerPath> = None;
    match cfg.regime {
        Regime::Deterministic | Regime::Multiplicative => {
            let path = match cfg.regime {
                Regime::Deterministic => BrownianPath::zero(cfg.t_horizon, cfg.n_steps)?,
                _ => sample_brownian(cfg.t_horizon, cfg.n_steps, cfg.seed)?,
            };
            picard = run_multiplicative(&setup, &path)?;
            let nodes = picard.state.v.len();
            let exp = if nodes < path.t_grid().len() {
                exp_factor(&path.truncate(nodes - 1)?)?
            } else {
                exp_factor(&path)?
            };
            residual = check_spde_residual_multiplicative(&picard.state, &exp)?;
            brownian = Some(path);
        }
        Regime::Additive => {
            let qpath = sample_q_wiener(grid, &q_spec(cfg), cfg.t_horizon, cfg.n_steps, cfg.seed)?;
            picard = run_additive(&setup, &qpath)?;
            residual = check_spde_residual_additive(&picard.state, &qpath)?;
            qwiener = Some(qpath);
        }
    }

    let range_tol = range_tolerance(grid, rho0.min(), rho0.max(), cfg.overshoot_factor);
    let bounds = verify_bounds(
        &picard.state,
        &rho0,
        cfg.p,
        picard.report.ball_radius,
        picard.report.ball_declared,
        cfg.bound_slack,
        range_tol,
        cfg.div_tol,
    )?;
    let convergence = monitor_convergence(&picard.report.records);
    let norm_table = norm_table(&picard.state, cfg.p)?;

    let report = RunReport {
        format: REPORT_FORMAT.to_string(),
        config: cfg.clone(),
        config_text: cfg.to_config_text(),
        warnings: warnings.to_vec(),
        tau: picard.report.tau,
        tau_capped: picard.report.tau_capped,
        solve: picard.report.clone(),
        bounds,
        residual,
        convergence,
        norm_table,
    };

    write_run_dir(out_dir, &report, &picard.state, brownian.as_ref(), qwiener.as_ref())?;
    Ok(RunOutcome { converged: report.solve.converged, report })
}

fn norm_table(state: &IterationState, p: f64) -> Result<Vec<NormRow>, RunError> {
    let t_grid = state.v.t_grid();
    let mut rows = Vec::with_capacity(state.v.len());
    for i in 0..state.v.len() {
        let v = state.v.frame(i);
        let rho = state.rho.frame(i);
        rows.push(NormRow {
            t: t_grid.node(i),
            v_norm_0p: v.sobolev_norm(0, p)?,
            v_norm_1p: v.sobolev_norm(1, p)?,
            v_norm_2p: v.sobolev_norm(2, p)?,
            grad_rho_norm_1p: rho.gradient().sobolev_norm(1, p)?,
            rho_min: rho.min(),
            rho_max: rho.max(),
            div_v_sup: v.divergence().sup_norm(),
        });
    }
    Ok(rows)
}

/// 17-significant-digit rendering, round-trip exact for f64.
fn csv_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn norms_csv(report: &RunReport) -> String {
    let mut out = String::from(
        "t,v_norm_0p,v_norm_1p,v_norm_2p,grad_rho_norm_1p,rho_min,rho_max,div_v_sup\n",
    );
    for row in &report.norm_table {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            csv_num(row.t),
            csv_num(row.v_norm_0p),
            csv_num(row.v_norm_1p),
            csv_num(row.v_norm_2p),
            csv_num(row.grad_rho_norm_1p),
            csv_num(row.rho_min),
            csv_num(row.rho_max),
            csv_num(row.div_v_sup),
        ));
    }
    // appendix: Picard difference-norm history
    for (k, d) in report.solve.diff_history.iter().enumerate() {
        out.push_str(&format!("# picard_diff,{},{}\n", k + 1, csv_num(*d)));
    }
    out
}

fn write_run_dir(
    out_dir: &Path,
    report: &RunReport,
    state: &IterationState,
    brownian: Option<&BrownianPath>,
    qwiener: Option<&QWienerPath>,
) -> Result<(), RunError> {
    let file_err = |path: &Path| {
        let p = path.to_path_buf();
        move |source: std::io::Error| RunError::File { path: p.clone(), source }
    };
    fs::create_dir_all(out_dir).map_err(file_err(out_dir))?;
    let fields_dir = out_dir.join("fields");
    fs::create_dir_all(&fields_dir).map_err(file_err(&fields_dir))?;

    let json_path = out_dir.join("run.json");
    fs::write(&json_path, serde_json::to_string_pretty(report)?).map_err(file_err(&json_path))?;
    let csv_path = out_dir.join("norms.csv");
    fs::write(&csv_path, norms_csv(report)).map_err(file_err(&csv_path))?;

    for i in 0..state.v.len() {
        io::write_scalar(&fields_dir.join(format!("rho_{i:04}")), state.rho.frame(i), Some(i))?;
        io::write_vector(&fields_dir.join(format!("v_{i:04}")), state.v.frame(i), Some(i))?;
        io::write_vector(
            &fields_dir.join(format!("grad_pi_{i:04}")),
            state.grad_pi.frame(i),
            Some(i),
        )?;
        io::write_vector(&fields_dir.join(format!("u_{i:04}")), state.u.frame(i), Some(i))?;
    }
    if let Some(path) = brownian {
        io::write_samples(
            &out_dir.join("noise_w"),
            path.values(),
            path.t_grid().t_end(),
            "brownian",
            Some(path.seed()),
        )?;
    }
    if let Some(qpath) = qwiener {
        for (i, frame) in qpath.frames().iter().enumerate() {
            let base = fields_dir.join(format!("q_wiener_{i:04}"));
            io::write_vector(&base, frame, Some(i))?;
        }
    }
    Ok(())
}

/// Fields of a stored run, reloaded for comparison or re-verification.
pub struct StoredRun {
    pub report: RunReport,
    pub state: IterationState,
}

/// Reload `run.json`; the report alone is enough for shallow queries.
pub fn load_report(dir: &Path) -> Result<RunReport, RunError> {
    let path = dir.join("run.json");
    let text = fs::read_to_string(&path)
        .map_err(|source| RunError::File { path: path.clone(), source })?;
    Ok(serde_json::from_str(&text)?)
}

/// Reload a run's final-iterate fields.
pub fn load_run(dir: &Path) -> Result<StoredRun, RunError> {
    let report = load_report(dir)?;
    let nodes = report.solve.run_nodes;
    if nodes < 2 {
        return Err(RunError::MalformedRun(dir.into(), "run_nodes < 2".into()));
    }
    let fields_dir = dir.join("fields");
    let mut rho_frames = Vec::with_capacity(nodes);
    let mut v_frames = Vec::with_capacity(nodes);
    let mut grad_pi_frames = Vec::with_capacity(nodes);
    let mut u_frames = Vec::with_capacity(nodes);
    for i in 0..nodes {
        rho_frames.push(io::read_scalar(&fields_dir.join(format!("rho_{i:04}")))?.0);
        v_frames.push(io::read_vector(&fields_dir.join(format!("v_{i:04}")))?.0);
        grad_pi_frames.push(io::read_vector(&fields_dir.join(format!("grad_pi_{i:04}")))?.0);
        u_frames.push(io::read_vector(&fields_dir.join(format!("u_{i:04}")))?.0);
    }
    // the stored grid is uniform with the original step size, possibly τ-truncated
    let dt = report.config.t_horizon / report.config.n_steps as f64;
    let t_grid = TimeGrid::new(dt * (nodes - 1) as f64, nodes - 1)?;
    let state = IterationState {
        k: report.solve.iterations,
        rho: TimeSeries::new(t_grid, rho_frames)?,
        grad_pi: TimeSeries::new(t_grid, grad_pi_frames)?,
        u: TimeSeries::new(t_grid, u_frames)?,
        v: TimeSeries::new(t_grid, v_frames)?,
        diff_per_node: report.solve.records.last().map(|r| r.diff_per_node.clone()).unwrap_or_default(),
        diff_sup: report.solve.final_diff,
    };
    Ok(StoredRun { report, state })
}

/// Re-run the bound and residual checks on a stored run.
#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub bounds: BoundsReport,
    pub residual: ResidualReport,
    pub pass: bool,
}

pub fn verify(dir: &Path) -> Result<VerifyReport, RunError> {
    let stored = load_run(dir)?;
    let cfg = &stored.report.config;
    let (rho0, _) = initial_conditions(cfg)?;
    let grid = GridSpec::torus(cfg.dim, cfg.n_per_axis)?;
    let nodes = stored.state.v.len();
    let residual = match cfg.regime {
        Regime::Deterministic | Regime::Multiplicative => {
            let path = match cfg.regime {
                Regime::Deterministic => BrownianPath::zero(cfg.t_horizon, cfg.n_steps)?,
                _ => sample_brownian(cfg.t_horizon, cfg.n_steps, cfg.seed)?,
            };
            let path = if nodes < path.t_grid().len() { path.truncate(nodes - 1)? } else { path };
            check_spde_residual_multiplicative(&stored.state, &exp_factor(&path)?)?
        }
        Regime::Additive => {
            let qpath = sample_q_wiener(grid, &q_spec(cfg), cfg.t_horizon, cfg.n_steps, cfg.seed)?;
            check_spde_residual_additive(&stored.state, &qpath)?
        }
    };
    let range_tol = range_tolerance(grid, rho0.min(), rho0.max(), cfg.overshoot_factor);
    let bounds = verify_bounds(
        &stored.state,
        &rho0,
        cfg.p,
        stored.report.solve.ball_radius,
        stored.report.solve.ball_declared,
        cfg.bound_slack,
        range_tol,
        cfg.div_tol,
    )?;
    let pass = bounds.pass;
    Ok(VerifyReport { bounds, residual, pass })
}

/// Sup-over-node differences between two stored runs, per field.
#[derive(Debug, Serialize)]
pub struct FieldDiff {
    pub l2: f64,
    pub w1p: f64,
}

#[derive(Debug, Serialize)]
pub struct CompareReport {
    pub nodes_compared: usize,
    pub rho: FieldDiff,
    pub v: FieldDiff,
    pub grad_pi: FieldDiff,
    pub u: FieldDiff,
}

pub fn compare_runs(dir_a: &Path, dir_b: &Path) -> Result<CompareReport, RunError> {
    let a = load_run(dir_a)?;
    let b = load_run(dir_b)?;
    if a.state.v.frame(0).grid() != b.state.v.frame(0).grid() {
        return Err(RunError::ShapeMismatch("spatial grids differ".into()));
    }
    if a.state.v.len() != b.state.v.len() {
        return Err(RunError::ShapeMismatch(format!(
            "node counts differ: {} vs {}",
            a.state.v.len(),
            b.state.v.len()
        )));
    }
    if a.report.config.p != b.report.config.p {
        return Err(RunError::ShapeMismatch("norm exponents differ".into()));
    }
    let p = a.report.config.p;
    let nodes = a.state.v.len();
    let scalar_diff = |sa: &ScalarSeries, sb: &ScalarSeries| -> Result<FieldDiff, RunError> {
        let mut l2 = 0.0f64;
        let mut w1p = 0.0f64;
        for i in 0..nodes {
            let d = sa.frame(i).sub(sb.frame(i))?;
            l2 = l2.max(d.l2_norm());
            w1p = w1p.max(d.sobolev_norm(1, p)?);
        }
        Ok(FieldDiff { l2, w1p })
    };
    let vector_diff = |sa: &VectorSeries, sb: &VectorSeries| -> Result<FieldDiff, RunError> {
        let mut l2 = 0.0f64;
        let mut w1p = 0.0f64;
        for i in 0..nodes {
            let d = sa.frame(i).sub(sb.frame(i))?;
            l2 = l2.max(d.l2_norm());
            w1p = w1p.max(d.sobolev_norm(1, p)?);
        }
        Ok(FieldDiff { l2, w1p })
    };
    Ok(CompareReport {
        nodes_compared: nodes,
        rho: scalar_diff(&a.state.rho, &b.state.rho)?,
        v: vector_diff(&a.state.v, &b.state.v)?,
        grad_pi: vector_diff(&a.state.grad_pi, &b.state.grad_pi)?,
        u: vector_diff(&a.state.u, &b.state.u)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn zero_velocity_run_writes_expected_layout() {
        let dir = tempfile::tempdir().unwrap();
        let parsed = parse_config(
            "regime = deterministic\nn_per_axis = 16\nn_steps = 8\nvelocity_amplitude = 0\nball_radius = 2\n",
        )
        .unwrap();
        let outcome = run(&parsed.config, &parsed.warnings, dir.path()).unwrap();
        assert!(outcome.converged);
        assert!(dir.path().join("run.json").is_file());
        assert!(dir.path().join("norms.csv").is_file());
        assert!(dir.path().join("fields/rho_0000.bin").is_file());
        assert!(dir.path().join("fields/v_0000.json").is_file());
        // zero-velocity columns in the csv
        let csv = fs::read_to_string(dir.path().join("norms.csv")).unwrap();
        let second_line = csv.lines().nth(1).unwrap();
        let cols: Vec<&str> = second_line.split(',').collect();
        assert_eq!(cols[1].parse::<f64>().unwrap(), 0.0);
        assert_eq!(cols[2].parse::<f64>().unwrap(), 0.0);

        // round-trip: a reloaded run compares equal to itself
        let cmp = compare_runs(dir.path(), dir.path()).unwrap();
        assert_eq!(cmp.v.l2, 0.0);
        assert_eq!(cmp.rho.l2, 0.0);

        let verify_report = verify(dir.path()).unwrap();
        assert!(verify_report.pass);
    }

    #[test]
    fn forced_nonconvergence_reports_history() {
        let dir = tempfile::tempdir().unwrap();
        let parsed = parse_config(
            "regime = deterministic\nn_per_axis = 16\nn_steps = 4\nk_max = 1\nball_radius = 30\n",
        )
        .unwrap();
        let outcome = run(&parsed.config, &parsed.warnings, dir.path()).unwrap();
        assert!(!outcome.converged);
        assert_eq!(outcome.report.solve.diff_history.len(), 1);
        assert!(outcome.report.solve.diff_history[0] > 0.0);
        let csv = fs::read_to_string(dir.path().join("norms.csv")).unwrap();
        assert!(csv.contains("# picard_diff,1,"));
    }

    #[test]
    fn initial_condition_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridSpec::torus(2, 16).unwrap();
        let rho = ScalarField::from_fn(grid, |x| 1.5 + 0.1 * x[0].cos()).unwrap();
        let v = taylor_green(grid, 0.5).unwrap();
        let prefix = dir.path().join("ic").to_string_lossy().to_string();
        io::write_scalar(&PathBuf::from(format!("{prefix}_rho0")), &rho, None).unwrap();
        io::write_vector(&PathBuf::from(format!("{prefix}_v0")), &v, None).unwrap();
        let parsed = parse_config(&format!("n_per_axis = 16\nic = from_file:{prefix}\n")).unwrap();
        let (rho_back, v_back) = initial_conditions(&parsed.config).unwrap();
        assert_eq!(rho_back.values(), rho.values());
        assert_eq!(v_back.component(0).values(), v.component(0).values());
    }
}
