//! Path-dependent stopping times bounding the horizon on which the iterates
//! are guaranteed to stay in the declared `W^{2,p}` ball.

use serde::Serialize;

use crate::fields::TimeGrid;
use crate::noise::ExpFactor;

/// Crossing of the stopping functional, or the capped horizon.
#[derive(Debug, Clone, Serialize)]
pub struct StoppingTimeResult {
    pub tau: f64,
    /// Functional values at the time nodes.
    pub criterion_trace: Vec<f64>,
    /// True when the functional never crossed and `tau` equals the horizon.
    pub capped: bool,
    /// First node at or beyond the crossing, when one exists.
    pub crossing_node: Option<usize>,
}

/// Multiplicative regime: `τ = inf{t ≥ 0 : ∫₀ᵗ e^{−W(s)} ds ≥ A⁻²} ∧ T`,
/// the integral evaluated by the trapezoid rule and the infimum resolved at
/// the first time node where the running integral crosses.
pub fn stopping_time_multiplicative(exp: &ExpFactor, a_radius: f64) -> StoppingTimeResult {
    debug_assert!(a_radius > 1.0, "ball radius must exceed 1");
    let t_grid = exp.t_grid();
    let z_inv = exp.z_inv();
    let dt = t_grid.dt();
    let threshold = a_radius.powi(-2);
    let mut trace = Vec::with_capacity(t_grid.len());
    trace.push(0.0);
    let mut integral = 0.0;
    let mut crossing = None;
    for i in 1..t_grid.len() {
        integral += 0.5 * dt * (z_inv[i - 1] + z_inv[i]);
        trace.push(integral);
        if crossing.is_none() && integral >= threshold {
            crossing = Some(i);
        }
    }
    match crossing {
        Some(i) => StoppingTimeResult {
            tau: t_grid.node(i),
            criterion_trace: trace,
            capped: false,
            crossing_node: Some(i),
        },
        None => StoppingTimeResult {
            tau: t_grid.t_end(),
            criterion_trace: trace,
            capped: true,
            crossing_node: None,
        },
    }
}

/// Additive regime: first crossing of
/// `(c₁∨c₂∨1) A² t + c₃ e ∫₀ᵗ ‖W^Q(s)‖_{k,2} ds + c₃ A⁻¹ ‖W^Q(t)‖_{k,2} ≥ 1/3`,
/// capped at the horizon. The functional is piecewise linear between nodes,
/// so the crossing is resolved inside the step.
pub fn stopping_time_additive(
    qw_norms: &[f64],
    t_grid: TimeGrid,
    a_radius: f64,
    c1: f64,
    c2: f64,
    c3: f64,
) -> StoppingTimeResult {
    debug_assert!(a_radius > 1.0, "ball radius must exceed 1");
    debug_assert_eq!(qw_norms.len(), t_grid.len());
    let dt = t_grid.dt();
    let linear_rate = c1.max(c2).max(1.0) * a_radius * a_radius;
    let mut integral = 0.0;
    let mut trace = Vec::with_capacity(t_grid.len());
    for i in 0..t_grid.len() {
        if i > 0 {
            integral += 0.5 * dt * (qw_norms[i - 1] + qw_norms[i]);
        }
        let value = linear_rate * t_grid.node(i)
            + c3 * std::f64::consts::E * integral
            + c3 / a_radius * qw_norms[i];
        trace.push(value);
    }
    let threshold = 1.0 / 3.0;
    for i in 0..trace.len() {
        if trace[i] >= threshold {
            let tau = if i == 0 {
                t_grid.node(0)
            } else {
                let f0 = trace[i - 1];
                let f1 = trace[i];
                t_grid.node(i - 1) + (threshold - f0) / (f1 - f0) * dt
            };
            return StoppingTimeResult {
                tau,
                criterion_trace: trace,
                capped: false,
                crossing_node: Some(i),
            };
        }
    }
    StoppingTimeResult {
        tau: t_grid.t_end(),
        criterion_trace: trace,
        capped: true,
        crossing_node: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{exp_factor, sample_brownian, BrownianPath};
    use approx::assert_relative_eq;

    #[test]
    fn flat_path_crosses_at_inverse_square() {
        // W ≡ 0: ∫ 1 ds = t, threshold 1/4 ⇒ τ = 0.25 on a grid containing it
        let path = BrownianPath::zero(1.0, 64).unwrap();
        let ef = exp_factor(&path).unwrap();
        let st = stopping_time_multiplicative(&ef, 2.0);
        assert_eq!(st.tau, 0.25);
        assert!(!st.capped);
        assert_eq!(st.crossing_node, Some(16));
    }

    #[test]
    fn short_horizon_caps() {
        let path = BrownianPath::zero(0.1, 16).unwrap();
        let ef = exp_factor(&path).unwrap();
        let st = stopping_time_multiplicative(&ef, 2.0);
        assert_eq!(st.tau, 0.1);
        assert!(st.capped);
    }

    #[test]
    fn multiplicative_crossing_matches_refined_quadrature() {
        // oracle: same crossing found on a 10x-refined grid with linearly
        // interpolated W must agree within one coarse step
        let coarse_steps = 64;
        let path = sample_brownian(2.0, coarse_steps, 99).unwrap();
        let ef = exp_factor(&path).unwrap();
        let a = 1.5;
        let st = stopping_time_multiplicative(&ef, a);
        assert!(!st.capped);

        let refine = 10;
        let dt = path.t_grid().dt() / refine as f64;
        let w = path.values();
        let mut integral = 0.0;
        let mut fine_tau = None;
        let mut prev = 1.0; // e^{-W(0)}
        'outer: for i in 0..coarse_steps {
            for r in 1..=refine {
                let frac = r as f64 / refine as f64;
                let wi = w[i] + (w[i + 1] - w[i]) * frac;
                let cur = (-wi).exp();
                integral += 0.5 * dt * (prev + cur);
                prev = cur;
                if integral >= a.powi(-2) {
                    fine_tau = Some((i * refine + r) as f64 * dt);
                    break 'outer;
                }
            }
        }
        let fine_tau = fine_tau.expect("oracle crossing");
        assert!(
            (st.tau - fine_tau).abs() <= path.t_grid().dt() + 1e-12,
            "coarse {} vs oracle {}",
            st.tau,
            fine_tau
        );
    }

    #[test]
    fn monotone_in_radius() {
        let path = sample_brownian(2.0, 128, 7).unwrap();
        let ef = exp_factor(&path).unwrap();
        let mut last = f64::INFINITY;
        for a in [1.2, 1.5, 2.0, 3.0, 5.0] {
            let st = stopping_time_multiplicative(&ef, a);
            assert!(st.tau <= last + 1e-15);
            last = st.tau;
        }
    }

    #[test]
    fn additive_zero_noise_has_closed_form() {
        // functional reduces to A² t ⇒ τ = 1/(3A²) ∧ T
        let t = TimeGrid::new(1.0, 64).unwrap();
        let norms = vec![0.0; t.len()];
        let st = stopping_time_additive(&norms, t, 2.0, 1.0, 1.0, 1.0);
        assert_relative_eq!(st.tau, 1.0 / 12.0, max_relative = 1e-13);
        assert!(!st.capped);

        let t_short = TimeGrid::new(0.05, 16).unwrap();
        let st = stopping_time_additive(&vec![0.0; t_short.len()], t_short, 2.0, 1.0, 1.0, 1.0);
        assert_eq!(st.tau, 0.05);
        assert!(st.capped);
    }

    #[test]
    fn additive_monotone_in_radius() {
        let t = TimeGrid::new(1.0, 64).unwrap();
        let norms = vec![0.0; t.len()];
        let tau2 = stopping_time_additive(&norms, t, 2.0, 1.0, 1.0, 1.0).tau;
        let tau4 = stopping_time_additive(&norms, t, 4.0, 1.0, 1.0, 1.0).tau;
        assert!(tau4 <= tau2);
    }
}
