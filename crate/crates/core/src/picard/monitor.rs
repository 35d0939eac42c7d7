//! Convergence monitoring of the successive-approximation sweeps.
//!
//! Per sweep the driver records the difference norms
//! `d_k = sup_t ‖v^(k) − v^(k−1)‖_{1,p}` together with the density and
//! pressure-gradient difference norms and the empirical constants of the
//! difference-system estimates (the observed ratio of the left-hand side to
//! the bounding expression). The monitor asserts eventual monotone decay of
//! `d_k` and reports ratios and partial sums.

use serde::{Deserialize, Serialize};

/// Compact per-sweep record captured by the driver.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub k: usize,
    /// `d_k = sup_t ‖v^(k) − v^(k−1)‖_{1,p}`.
    pub diff_sup: f64,
    /// `‖v^(k)(t_i) − v^(k−1)(t_i)‖_{1,p}` per node.
    pub diff_per_node: Vec<f64>,
    /// `sup_t ‖ρ^(k) − ρ^(k−1)‖_{1,p}` (defined for k ≥ 2).
    pub sigma_sup: Option<f64>,
    /// `sup_t ‖∇π^(k) − ∇π^(k−1)‖_{1,p}` (defined for k ≥ 2).
    pub grad_q_sup: Option<f64>,
    /// Observed `‖σ^(k)(t)‖ / ∫₀ᵗ e^{−W}‖w^(k−1)‖` (density difference lemma).
    pub sigma_lemma_ratio: Option<f64>,
    /// Observed `‖∇q^(k)(t)‖ / (‖σ^(k)(t)‖ + z⁻²‖w^(k−1)(t)‖)`.
    pub q_lemma_ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub diffs: Vec<f64>,
    /// `d_{k+1}/d_k` (zero denominators skipped as `None`).
    pub ratios: Vec<Option<f64>>,
    pub partial_sums: Vec<f64>,
    /// First index (into `diffs`) from which the sequence decays
    /// monotonically to the end; `None` if there is no such tail.
    pub monotone_from: Option<usize>,
    /// Largest observed empirical constants of the difference lemmas.
    pub sigma_constant: Option<f64>,
    pub q_constant: Option<f64>,
    pub pass: bool,
}

/// Assess eventual monotone decay of the difference norms. Requires at least
/// three recorded sweeps unless the iteration collapsed onto the fixed point
/// earlier (trailing `d_k = 0` counts as decayed).
pub fn monitor_convergence(records: &[ConvergenceRecord]) -> ConvergenceReport {
    let diffs: Vec<f64> = records.iter().map(|r| r.diff_sup).collect();
    monitor_diff_sequence(
        &diffs,
        records.iter().filter_map(|r| r.sigma_lemma_ratio).fold(None, max_opt),
        records.iter().filter_map(|r| r.q_lemma_ratio).fold(None, max_opt),
    )
}

fn max_opt(acc: Option<f64>, v: f64) -> Option<f64> {
    Some(acc.map_or(v, |a| a.max(v)))
}

/// Monitor a bare `d_k` sequence (used for injected-sequence diagnostics).
pub fn monitor_diff_sequence(
    diffs: &[f64],
    sigma_constant: Option<f64>,
    q_constant: Option<f64>,
) -> ConvergenceReport {
    let ratios: Vec<Option<f64>> = diffs
        .windows(2)
        .map(|w| if w[0] > 0.0 { Some(w[1] / w[0]) } else { None })
        .collect();
    let mut partial_sums = Vec::with_capacity(diffs.len());
    let mut acc = 0.0;
    for d in diffs {
        acc += d;
        partial_sums.push(acc);
    }
    // find the earliest k0 with strictly decaying tail (ties at zero allowed);
    // a tail must contain at least one step, a single record is trivially monotone
    let mut monotone_from = None;
    if diffs.len() == 1 {
        monotone_from = Some(0);
    } else {
        'outer: for k0 in 0..diffs.len().saturating_sub(1) {
            for i in k0..diffs.len() - 1 {
                let decayed = diffs[i + 1] < diffs[i] || (diffs[i] == 0.0 && diffs[i + 1] == 0.0);
                if !decayed {
                    continue 'outer;
                }
            }
            monotone_from = Some(k0);
            break;
        }
    }
    let pass = !diffs.is_empty() && monotone_from.is_some();
    ConvergenceReport {
        diffs: diffs.to_vec(),
        ratios,
        partial_sums,
        monotone_from,
        sigma_constant,
        q_constant,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point_at_first_sweep() {
        // v₀ = 0 collapses immediately: d₁ = 0
        let report = monitor_diff_sequence(&[0.0], None, None);
        assert!(report.pass);
        assert_eq!(report.partial_sums, vec![0.0]);
    }

    #[test]
    fn geometric_decay_passes() {
        let diffs = [8.0, 2.0, 0.5, 0.125, 0.03125];
        let report = monitor_diff_sequence(&diffs, None, None);
        assert!(report.pass);
        assert_eq!(report.monotone_from, Some(0));
        for r in report.ratios.iter().flatten() {
            assert!((r - 0.25).abs() < 1e-12);
        }
        assert!((report.partial_sums.last().unwrap() - 10.65625).abs() < 1e-12);
    }

    #[test]
    fn stalled_sequence_fails() {
        let diffs = [1.0, 1.0, 1.0, 1.0];
        let report = monitor_diff_sequence(&diffs, None, None);
        assert!(!report.pass);
        assert_eq!(report.monotone_from, None);
    }

    #[test]
    fn late_monotonicity_is_found() {
        let diffs = [1.0, 3.0, 2.0, 1.0, 0.5];
        let report = monitor_diff_sequence(&diffs, None, None);
        assert!(report.pass);
        assert_eq!(report.monotone_from, Some(1));
    }
}
