//! Successive-approximation drivers for both noise regimes.
//!
//! One sweep maps the previous projected velocity trajectory to the next:
//! density transport along the scaled previous iterate, a variable-coefficient
//! pressure solve per time node, a forced linear velocity solve along the same
//! characteristics, then the divergence-free projection. Sweeps repeat until
//! the `W^{1,p}` sup-in-time difference of consecutive iterates drops below
//! `picard_tol` or the sweep budget runs out. The run horizon is the config
//! horizon capped by the noise-dependent stopping time.

pub mod bounds;
pub mod monitor;
pub mod residual;
pub mod stopping;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elliptic::{
    assemble_pressure_rhs_additive, assemble_pressure_rhs_multiplicative, leray_project,
    solve_pressure, EllipticConfig, EllipticError,
};
use crate::fields::{
    FieldError, GridSpec, ScalarField, ScalarSeries, TimeGrid, TimeSeries, VectorField,
    VectorSeries,
};
use crate::noise::{exp_factor, BrownianPath, NoiseError, QWienerPath};
use crate::transport::{advect_scalar, solve_forced_velocity, TransportConfig, TransportError};
use monitor::ConvergenceRecord;
use stopping::{stopping_time_additive, stopping_time_multiplicative, StoppingTimeResult};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("transport failed during sweep {k}: {source}")]
    Transport {
        k: usize,
        #[source]
        source: TransportError,
    },
    #[error("pressure solve failed during sweep {k} at node {node}: {source}")]
    Elliptic {
        k: usize,
        node: usize,
        #[source]
        source: EllipticError,
    },
    #[error("initial density must be strictly positive; min ρ₀ = {0}")]
    BadInitialDensity(f64),
    #[error("noise: {0}")]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Starting trajectory of the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InitialIterate {
    /// The construction's choice: the zero trajectory.
    Zero,
    /// Constant-in-time trajectory holding the projected initial velocity
    /// (used by the uniqueness harness).
    ProjectedInitialVelocity,
}

/// Sweep-level tunables.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSettings {
    pub p: f64,
    pub picard_tol: f64,
    pub k_max: usize,
    /// Declared `W^{2,p}` ball radius; derived from the data when absent.
    pub ball_radius: Option<f64>,
    pub transport: TransportConfig,
    pub elliptic: EllipticConfig,
    pub div_tol: f64,
    pub bound_slack: f64,
    pub initial_iterate: InitialIterate,
    /// Surrogate constants entering the additive stopping functional.
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            p: 4.0,
            picard_tol: 1e-8,
            k_max: 30,
            ball_radius: None,
            transport: TransportConfig::default(),
            elliptic: EllipticConfig::default(),
            div_tol: 1e-10,
            bound_slack: 0.05,
            initial_iterate: InitialIterate::Zero,
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
        }
    }
}

/// Full problem description handed to a driver.
#[derive(Debug, Clone)]
pub struct ProblemSetup {
    pub grid: GridSpec,
    /// Config time grid over the full horizon (before τ-truncation).
    pub t_grid: TimeGrid,
    pub rho0: ScalarField,
    pub v0: VectorField,
    pub settings: SweepSettings,
}

/// One Picard iterate: the density, pressure gradient, unprojected and
/// projected velocity trajectories of the final sweep, plus its difference
/// norms against the previous sweep.
#[derive(Debug, Clone)]
pub struct IterationState {
    pub k: usize,
    pub rho: ScalarSeries,
    pub grad_pi: VectorSeries,
    pub u: VectorSeries,
    /// Projected iterate: the transformed velocity in the multiplicative
    /// regime, the physical velocity in the additive regime.
    pub v: VectorSeries,
    pub diff_per_node: Vec<f64>,
    pub diff_sup: f64,
}

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub transport: f64,
    pub elliptic: f64,
    pub forced_velocity: f64,
    pub projection: f64,
    pub norms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub final_diff: f64,
    pub diff_history: Vec<f64>,
    pub records: Vec<ConvergenceRecord>,
    pub ball_radius: f64,
    pub ball_declared: bool,
    pub tau: f64,
    pub tau_capped: bool,
    /// Nodes actually iterated on (τ-truncated grid).
    pub run_nodes: usize,
    pub initial_velocity_projected: bool,
    pub elliptic_iterations_max: usize,
    pub elliptic_residual_max: f64,
    /// Largest pre-projection mean of the assembled pressure RHS.
    pub rhs_raw_mean_max: f64,
    /// Observed `‖∇π‖_{2,p} / (z⁻²‖v‖²_{2,p})`, an empirical surrogate for
    /// the elliptic regularity constant; reported, never asserted.
    pub elliptic_constant_surrogate: f64,
    pub timing: PhaseTiming,
}

/// Driver output: final iterate plus diagnostics.
#[derive(Debug, Clone)]
pub struct PicardRun {
    pub state: IterationState,
    pub report: SolveReport,
}

enum NoiseContext<'a> {
    /// `e^{±W(t)}` factors at the (truncated) nodes.
    Multiplicative { z: &'a [f64], z_inv: &'a [f64] },
    Additive { qpath: &'a QWienerPath },
}

/// Run the multiplicative-noise construction. The deterministic scheme is the
/// special case of the identically-zero path.
pub fn run_multiplicative(setup: &ProblemSetup, path: &BrownianPath) -> Result<PicardRun, SolveError> {
    let exp = exp_factor(path)?;
    let ball_radius = resolve_radius(setup)?;
    let st = stopping_time_multiplicative(&exp, ball_radius);
    let crossing = st.crossing_node.unwrap_or(setup.t_grid.n_steps());
    let j = crossing.clamp(1, setup.t_grid.n_steps());
    let exp = if j < setup.t_grid.n_steps() { exp.truncate(j)? } else { exp };
    let noise = NoiseContext::Multiplicative { z: exp.z(), z_inv: exp.z_inv() };
    drive(setup, noise, exp.t_grid(), ball_radius, &st)
}

/// Run the additive-noise construction against a sampled Q-Wiener path.
pub fn run_additive(setup: &ProblemSetup, qpath: &QWienerPath) -> Result<PicardRun, SolveError> {
    let ball_radius = resolve_radius(setup)?;
    let s = &setup.settings;
    let norms = qpath.sobolev_k2_norms();
    let st = stopping_time_additive(&norms, qpath.t_grid(), ball_radius, s.c1, s.c2, s.c3);
    let dt = qpath.t_grid().dt();
    let j = ((st.tau / dt).floor() as usize).clamp(1, qpath.t_grid().n_steps());
    let qpath = if j < qpath.t_grid().n_steps() { qpath.truncate(j)? } else { qpath.clone() };
    let t_grid = qpath.t_grid();
    drive(setup, NoiseContext::Additive { qpath: &qpath }, t_grid, ball_radius, &st)
}

fn resolve_radius(setup: &ProblemSetup) -> Result<f64, SolveError> {
    match setup.settings.ball_radius {
        Some(a) => Ok(a),
        None => {
            let v0_norm = setup.v0.sobolev_norm(2, setup.settings.p)?;
            Ok(8.0 * (1.0 + v0_norm))
        }
    }
}

fn drive(
    setup: &ProblemSetup,
    noise: NoiseContext<'_>,
    t_grid: TimeGrid,
    ball_radius: f64,
    st: &StoppingTimeResult,
) -> Result<PicardRun, SolveError> {
    let s = &setup.settings;
    let grid = setup.grid;
    let min_rho0 = setup.rho0.min();
    if min_rho0 <= 0.0 {
        return Err(SolveError::BadInitialDensity(min_rho0));
    }

    // enforce div v₀ = 0, projecting (and logging) when violated
    let div0 = setup.v0.divergence().sup_norm();
    let needs_projection = div0 > s.div_tol * (1.0 + setup.v0.sup_norm());
    let v0 = if needs_projection { leray_project(&setup.v0).v } else { setup.v0.clone() };

    let nodes = t_grid.len();
    let ones = vec![1.0; nodes];
    let (z, z_inv): (&[f64], &[f64]) = match &noise {
        NoiseContext::Multiplicative { z, z_inv } => (z, z_inv),
        NoiseContext::Additive { .. } => (&ones, &ones),
    };

    let mut v_prev = match s.initial_iterate {
        InitialIterate::Zero => VectorSeries::zeros(grid, t_grid),
        InitialIterate::ProjectedInitialVelocity => {
            TimeSeries::new(t_grid, (0..nodes).map(|_| v0.clone()).collect())?
        }
    };
    let mut rho_prev: Option<ScalarSeries> = None;
    let mut grad_pi_prev: Option<VectorSeries> = None;
    let mut prev_diff_per_node: Option<Vec<f64>> = None;

    let mut records: Vec<ConvergenceRecord> = Vec::new();
    let mut timing = PhaseTiming::default();
    let mut elliptic_iterations_max = 0usize;
    let mut elliptic_residual_max = 0.0f64;
    let mut rhs_raw_mean_max = 0.0f64;
    let mut k_surrogate = 0.0f64;
    let mut converged = false;
    let mut final_state: Option<IterationState> = None;

    for k in 1..=s.k_max {
        // (a) density transport along the scaled previous iterate
        let clock = Instant::now();
        let advecting_frames: Vec<VectorField> = (0..nodes)
            .map(|i| v_prev.frame(i).scale(z_inv[i]))
            .collect();
        let advecting = TimeSeries::new(t_grid, advecting_frames)?;
        let rho = advect_scalar(&setup.rho0, &advecting, t_grid, &s.transport)
            .map_err(|source| SolveError::Transport { k, source })?;
        timing.transport += clock.elapsed().as_secs_f64();

        // (b) pressure solve per node, (c) forcing assembly; the per-node
        // solves are independent and run concurrently
        let clock = Instant::now();
        struct NodeSolve {
            grad_pi: VectorField,
            forcing: VectorField,
            iterations: usize,
            residual: f64,
            raw_mean: f64,
            k_ratio: f64,
        }
        let node_results: Vec<Result<NodeSolve, SolveError>> = (0..nodes)
            .into_par_iter()
            .map(|i| {
                let assembly = match &noise {
                    NoiseContext::Multiplicative { z_inv, .. } => {
                        assemble_pressure_rhs_multiplicative(v_prev.frame(i), z_inv[i] * z_inv[i])
                    }
                    NoiseContext::Additive { .. } => {
                        assemble_pressure_rhs_additive(v_prev.frame(i))
                    }
                };
                let sol = solve_pressure(rho.frame(i), &assembly.rhs, &s.elliptic)
                    .map_err(|source| SolveError::Elliptic { k, node: i, source })?;
                let v_prev_2p = v_prev.frame(i).sobolev_norm(2, s.p)?;
                let k_ratio = if v_prev_2p > 0.0 {
                    sol.grad_pi.sobolev_norm(2, s.p)?
                        / (z_inv[i] * z_inv[i] * v_prev_2p * v_prev_2p)
                } else {
                    0.0
                };
                let rho_inv = rho.frame(i).map(|r| 1.0 / r);
                let mut forcing = sol.grad_pi.mul_scalar_field(&rho_inv)?.scale(-z[i]);
                if let NoiseContext::Additive { qpath } = &noise {
                    // additive regime carries the extra −(v^(k−1)·∇)W^Q forcing
                    let stretch = v_prev.frame(i).advect(qpath.frame(i))?;
                    forcing = forcing.sub(&stretch)?;
                }
                Ok(NodeSolve {
                    grad_pi: sol.grad_pi,
                    forcing,
                    iterations: sol.iterations,
                    residual: sol.residual,
                    raw_mean: assembly.raw_mean,
                    k_ratio,
                })
            })
            .collect();
        let mut grad_pi_frames = Vec::with_capacity(nodes);
        let mut forcing_frames = Vec::with_capacity(nodes);
        for r in node_results {
            let node = r?;
            rhs_raw_mean_max = rhs_raw_mean_max.max(node.raw_mean.abs());
            elliptic_iterations_max = elliptic_iterations_max.max(node.iterations);
            elliptic_residual_max = elliptic_residual_max.max(node.residual);
            k_surrogate = k_surrogate.max(node.k_ratio);
            grad_pi_frames.push(node.grad_pi);
            forcing_frames.push(node.forcing);
        }
        let grad_pi = TimeSeries::new(t_grid, grad_pi_frames)?;
        let forcing = TimeSeries::new(t_grid, forcing_frames)?;
        timing.elliptic += clock.elapsed().as_secs_f64();

        // (d) forced linear velocity solve along the same characteristics
        let clock = Instant::now();
        let u = solve_forced_velocity(&v0, &advecting, &forcing, &s.transport)
            .map_err(|source| SolveError::Transport { k, source })?;
        timing.forced_velocity += clock.elapsed().as_secs_f64();

        // (e) divergence-free projection; the additive regime re-adds the
        // (already divergence-free) noise after projecting u's gradient part
        let clock = Instant::now();
        let v_new_frames: Vec<VectorField> = (0..nodes)
            .map(|i| {
                let projected = leray_project(u.frame(i)).v;
                match &noise {
                    NoiseContext::Multiplicative { .. } => Ok(projected),
                    NoiseContext::Additive { qpath } => projected.add(qpath.frame(i)),
                }
            })
            .collect::<Result<Vec<_>, FieldError>>()?;
        let v_new = TimeSeries::new(t_grid, v_new_frames)?;
        timing.projection += clock.elapsed().as_secs_f64();

        // difference norms and the difference-system diagnostics
        let clock = Instant::now();
        let mut diff_per_node = Vec::with_capacity(nodes);
        for i in 0..nodes {
            let w = v_new.frame(i).sub(v_prev.frame(i))?;
            diff_per_node.push(w.sobolev_norm(1, s.p)?);
        }
        let diff_sup = diff_per_node.iter().copied().fold(0.0f64, f64::max);

        let mut sigma_sup = None;
        let mut grad_q_sup = None;
        let mut sigma_ratio = None;
        let mut q_ratio = None;
        if let (Some(rp), Some(gp), Some(wprev)) =
            (rho_prev.as_ref(), grad_pi_prev.as_ref(), prev_diff_per_node.as_ref())
        {
            let mut sig_sup = 0.0f64;
            let mut gq_sup = 0.0f64;
            let mut sig_ratio = 0.0f64;
            let mut gq_ratio = 0.0f64;
            let mut have_sig = false;
            let mut have_gq = false;
            let dt = t_grid.dt();
            let mut integral = 0.0;
            for i in 0..nodes {
                let sigma = rho.frame(i).sub(rp.frame(i))?.sobolev_norm(1, s.p)?;
                let gq = grad_pi.frame(i).sub(gp.frame(i))?.sobolev_norm(1, s.p)?;
                sig_sup = sig_sup.max(sigma);
                gq_sup = gq_sup.max(gq);
                if i > 0 {
                    integral += 0.5 * dt * (z_inv[i - 1] * wprev[i - 1] + z_inv[i] * wprev[i]);
                    if integral > 1e-300 {
                        sig_ratio = sig_ratio.max(sigma / integral);
                        have_sig = true;
                    }
                }
                let q_bound = sigma + z_inv[i] * z_inv[i] * wprev[i];
                if q_bound > 1e-300 {
                    gq_ratio = gq_ratio.max(gq / q_bound);
                    have_gq = true;
                }
            }
            sigma_sup = Some(sig_sup);
            grad_q_sup = Some(gq_sup);
            sigma_ratio = have_sig.then_some(sig_ratio);
            q_ratio = have_gq.then_some(gq_ratio);
        }
        timing.norms += clock.elapsed().as_secs_f64();

        records.push(ConvergenceRecord {
            k,
            diff_sup,
            diff_per_node: diff_per_node.clone(),
            sigma_sup,
            grad_q_sup,
            sigma_lemma_ratio: sigma_ratio,
            q_lemma_ratio: q_ratio,
        });

        let state = IterationState {
            k,
            rho: rho.clone(),
            grad_pi: grad_pi.clone(),
            u,
            v: v_new.clone(),
            diff_per_node: diff_per_node.clone(),
            diff_sup,
        };
        final_state = Some(state);

        if diff_sup <= s.picard_tol {
            converged = true;
            break;
        }
        rho_prev = Some(rho);
        grad_pi_prev = Some(grad_pi);
        prev_diff_per_node = Some(diff_per_node);
        v_prev = v_new;
    }

    let state = final_state.expect("k_max >= 1 guarantees at least one sweep");
    let report = SolveReport {
        converged,
        iterations: state.k,
        final_diff: state.diff_sup,
        diff_history: records.iter().map(|r| r.diff_sup).collect(),
        records,
        ball_radius,
        ball_declared: setup.settings.ball_radius.is_some(),
        tau: st.tau,
        tau_capped: st.capped,
        run_nodes: nodes,
        initial_velocity_projected: needs_projection,
        elliptic_iterations_max,
        elliptic_residual_max,
        rhs_raw_mean_max,
        elliptic_constant_surrogate: k_surrogate,
        timing,
    };
    Ok(PicardRun { state, report })
}

/// Pathwise-uniqueness harness: run the chosen regime twice with the same
/// noise but different iteration pre-processing (zero initial trajectory
/// versus the projected initial velocity) and compare the limits.
#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    pub difference_sup_1p: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub converged_a: bool,
    pub converged_b: bool,
}

pub enum NoiseRealization<'a> {
    Multiplicative(&'a BrownianPath),
    Additive(&'a QWienerPath),
}

pub fn uniqueness_harness(
    setup: &ProblemSetup,
    noise: NoiseRealization<'_>,
) -> Result<UniquenessReport, SolveError> {
    let mut setup_a = setup.clone();
    setup_a.settings.initial_iterate = InitialIterate::Zero;
    let mut setup_b = setup.clone();
    setup_b.settings.initial_iterate = InitialIterate::ProjectedInitialVelocity;
    let (run_a, run_b) = match noise {
        NoiseRealization::Multiplicative(path) => {
            (run_multiplicative(&setup_a, path)?, run_multiplicative(&setup_b, path)?)
        }
        NoiseRealization::Additive(qpath) => {
            (run_additive(&setup_a, qpath)?, run_additive(&setup_b, qpath)?)
        }
    };
    let p = setup.settings.p;
    let mut worst = 0.0f64;
    for i in 0..run_a.state.v.len().min(run_b.state.v.len()) {
        let diff = run_a.state.v.frame(i).sub(run_b.state.v.frame(i))?;
        worst = worst.max(diff.sobolev_norm(1, p)?);
    }
    let tolerance = 10.0 * setup.settings.picard_tol;
    Ok(UniquenessReport {
        difference_sup_1p: worst,
        tolerance,
        pass: worst <= tolerance,
        converged_a: run_a.report.converged,
        converged_b: run_b.report.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{sample_brownian, sample_q_wiener, QWienerSpec};

    fn small_setup(n: usize, steps: usize) -> ProblemSetup {
        let grid = GridSpec::torus(2, n).unwrap();
        ProblemSetup {
            grid,
            t_grid: TimeGrid::new(0.1, steps).unwrap(),
            rho0: ScalarField::constant(grid, 1.0).unwrap(),
            v0: VectorField::zeros(grid),
            settings: SweepSettings { ball_radius: Some(2.0), ..Default::default() },
        }
    }

    #[test]
    fn zero_velocity_is_a_fixed_point_multiplicative() {
        let setup = small_setup(16, 8);
        let path = sample_brownian(0.1, 8, 3).unwrap();
        let run = run_multiplicative(&setup, &path).unwrap();
        assert!(run.report.converged);
        assert_eq!(run.report.iterations, 1);
        assert_eq!(run.state.diff_sup, 0.0);
        for frame in run.state.v.frames() {
            assert_eq!(frame.sup_norm(), 0.0);
        }
        for frame in run.state.grad_pi.frames() {
            assert_eq!(frame.sup_norm(), 0.0);
        }
        for frame in run.state.rho.frames() {
            assert_eq!(frame.values(), setup.rho0.values());
        }
    }

    #[test]
    fn zero_velocity_is_a_fixed_point_additive() {
        let setup = small_setup(16, 8);
        let qpath = QWienerPath::zero(setup.grid, 0.1, 8).unwrap();
        let run = run_additive(&setup, &qpath).unwrap();
        assert!(run.report.converged);
        for frame in run.state.v.frames() {
            assert_eq!(frame.sup_norm(), 0.0);
        }
    }

    #[test]
    fn first_additive_sweep_reproduces_noise_exactly() {
        // v₀ = 0, ρ₀ ≡ 1: the first sweep has zero advection and zero forcing,
        // so v^(1)(t) = W^Q(t) bit-for-bit
        let setup = small_setup(16, 8);
        let spec = QWienerSpec { mode_count: 1, ..Default::default() };
        let qpath = sample_q_wiener(setup.grid, &spec, 0.1, 8, 11).unwrap();
        let mut s = setup.clone();
        s.settings.k_max = 1;
        let run = run_additive(&s, &qpath).unwrap();
        let nodes = run.state.v.len();
        for i in 0..nodes {
            for (a, b) in run.state.v.frame(i).components().iter().zip(qpath.frame(i).components())
            {
                assert_eq!(a.values(), b.values());
            }
        }
    }

    #[test]
    fn bad_density_is_rejected() {
        let mut setup = small_setup(16, 8);
        setup.rho0 = ScalarField::from_fn(setup.grid, |x| x[0].cos()).unwrap();
        let path = BrownianPath::zero(0.1, 8).unwrap();
        assert!(matches!(
            run_multiplicative(&setup, &path),
            Err(SolveError::BadInitialDensity(_))
        ));
    }

    #[test]
    fn non_divergence_free_initial_velocity_is_projected_and_logged() {
        let mut setup = small_setup(16, 8);
        setup.v0 = ScalarField::from_fn(setup.grid, |x| (x[0] + x[1]).sin())
            .unwrap()
            .gradient();
        let path = BrownianPath::zero(0.1, 8).unwrap();
        let run = run_multiplicative(&setup, &path).unwrap();
        assert!(run.report.initial_velocity_projected);
        // a pure gradient projects to zero, so the run collapses to the zero fixed point
        assert!(run.report.converged);
        assert!(run.state.v.frame(run.state.v.len() - 1).sup_norm() < 1e-11);
    }
}
