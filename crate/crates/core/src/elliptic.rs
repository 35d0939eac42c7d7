//! Variable-coefficient pressure solves and the Leray projection.
//!
//! The pressure equation `div(ρ⁻¹∇π) = f` is solved by conjugate gradients
//! on the SPD operator `π ↦ −div(ρ⁻¹∇π)` restricted to mean-zero fields,
//! preconditioned by the constant-coefficient inverse `ρ̄(−Δ)⁻¹`. Gradients
//! and divergences inside the operator are spectral, which makes the discrete
//! operator exactly symmetric under the equal-weight inner product.
//! The Leray projection solves `Δφ = div u` spectrally and is direct.

use serde::Serialize;
use thiserror::Error;

use crate::fields::{FieldError, ScalarField, VectorField};

#[derive(Debug, Error)]
pub enum EllipticError {
    #[error("density must be strictly positive; min ρ = {0}")]
    NonPositiveDensity(f64),
    #[error("CG stalled: residual {achieved:e} after {iterations} iterations (target {target:e})")]
    NoConvergence { achieved: f64, target: f64, iterations: usize },
    #[error("right-hand side mean {mean:e} exceeds the compatibility budget {budget:e}")]
    IncompatibleRhs { mean: f64, budget: f64 },
    #[error("config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EllipticConfig {
    /// Relative residual target in the discrete L² norm.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for EllipticConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-10, max_iter: 500 }
    }
}

impl EllipticConfig {
    pub fn validate(&self) -> Result<(), EllipticError> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(EllipticError::BadConfig(format!("rel_tol out of (0,1): {}", self.rel_tol)));
        }
        if self.max_iter == 0 {
            return Err(EllipticError::BadConfig("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

/// Result of one pressure solve.
#[derive(Debug, Clone)]
pub struct PressureSolution {
    /// Zero-mean pressure.
    pub pi: ScalarField,
    /// Spectral gradient of `pi`.
    pub grad_pi: VectorField,
    pub iterations: usize,
    /// Achieved relative residual.
    pub residual: f64,
}

/// Apply `π ↦ div(ρ_inv ∇π)` with `ρ_inv` given pointwise.
fn apply_divergence_form(rho_inv: &ScalarField, pi: &ScalarField) -> ScalarField {
    let grad = pi.gradient();
    let flux = grad.mul_scalar_field(rho_inv).expect("same grid");
    flux.divergence()
}

/// Apply the full variable-coefficient operator `div(ρ⁻¹ ∇π)` for a given
/// density (used by tests and the stored-report verifier).
pub fn apply_variable_poisson(rho: &ScalarField, pi: &ScalarField) -> Result<ScalarField, EllipticError> {
    let min_rho = rho.min();
    if min_rho <= 0.0 {
        return Err(EllipticError::NonPositiveDensity(min_rho));
    }
    Ok(apply_divergence_form(&rho.map(|r| 1.0 / r), pi))
}

/// Solve `div(ρ⁻¹∇π) = f` for the zero-mean pressure.
///
/// The right-hand side must be compatible: a relative mean above `1e-8` is
/// rejected, anything smaller is projected out before the solve.
pub fn solve_pressure(
    rho: &ScalarField,
    f: &ScalarField,
    cfg: &EllipticConfig,
) -> Result<PressureSolution, EllipticError> {
    cfg.validate()?;
    let grid = rho.grid();
    if f.grid() != grid {
        return Err(EllipticError::Field(FieldError::GridMismatch));
    }
    let min_rho = rho.min();
    if min_rho <= 0.0 {
        return Err(EllipticError::NonPositiveDensity(min_rho));
    }
    let f_norm = f.l2_norm();
    let mean = f.mean();
    if f_norm == 0.0 {
        return Ok(PressureSolution {
            pi: ScalarField::zeros(grid),
            grad_pi: VectorField::zeros(grid),
            iterations: 0,
            residual: 0.0,
        });
    }
    let budget = 1e-8 * f_norm;
    if mean.abs() > budget {
        return Err(EllipticError::IncompatibleRhs { mean, budget });
    }
    let rho_inv = rho.map(|r| 1.0 / r);
    let rho_mean = rho.mean();
    // CG on A π = b with A = −div(ρ⁻¹∇·) SPD on mean-zero fields, b = −f
    let b = f.map(|v| -(v - mean));
    let apply = |p: &ScalarField| apply_divergence_form(&rho_inv, p).scale(-1.0);
    let precond = |r: &ScalarField| r.neg_laplacian_inverse().scale(rho_mean);

    let b_norm = b.l2_norm();
    let mut x = ScalarField::zeros(grid);
    let mut r = b.clone();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = r.inner(&z)?;
    let mut iterations = 0;
    let mut rel_res = 1.0;
    for it in 1..=cfg.max_iter {
        let ap = apply(&p);
        let pap = p.inner(&ap)?;
        if pap <= 0.0 {
            // numerically semi-definite direction: nothing left to reduce
            break;
        }
        let alpha = rz / pap;
        x = x.add(&p.scale(alpha))?;
        r = r.sub(&ap.scale(alpha))?;
        iterations = it;
        rel_res = r.l2_norm() / b_norm;
        if rel_res <= cfg.rel_tol {
            break;
        }
        z = precond(&r);
        let rz_new = r.inner(&z)?;
        let beta = rz_new / rz;
        rz = rz_new;
        p = z.add(&p.scale(beta))?;
    }
    if rel_res > cfg.rel_tol {
        return Err(EllipticError::NoConvergence {
            achieved: rel_res,
            target: cfg.rel_tol,
            iterations,
        });
    }
    // re-center the gauge: CG preserves the zero mean up to roundoff
    let x_mean = x.mean();
    let pi = x.map(|v| v - x_mean);
    let grad_pi = pi.gradient();
    Ok(PressureSolution { pi, grad_pi, iterations, residual: rel_res })
}

/// Assembled quadratic right-hand side of the pressure equation, together
/// with its mean before the zero-mean projection (the discrete product is
/// not exactly compatible; the residue is reported, not hidden).
#[derive(Debug, Clone)]
pub struct RhsAssembly {
    pub rhs: ScalarField,
    pub raw_mean: f64,
}

/// `−z⁻² Σ_{i,j} ∂_j ṽ^i ∂_i ṽ^j` with dealiased products, mean projected out.
pub fn assemble_pressure_rhs_multiplicative(v_tilde: &VectorField, z_inv_sq: f64) -> RhsAssembly {
    let grid = v_tilde.grid();
    let jac = v_tilde.jacobian();
    let dim = v_tilde.dim();
    let mut acc = ScalarField::zeros(grid);
    for i in 0..dim {
        for j in 0..dim {
            let prod = jac[i][j].mul_pointwise(&jac[j][i]).expect("same grid");
            acc = acc.add(&prod).expect("same grid");
        }
    }
    let rhs = acc.dealias().scale(-z_inv_sq);
    let raw_mean = rhs.mean();
    RhsAssembly { rhs: rhs.map(|v| v - raw_mean), raw_mean }
}

/// Additive-regime right-hand side: the multiplicative assembly at `z⁻² = 1`.
pub fn assemble_pressure_rhs_additive(v: &VectorField) -> RhsAssembly {
    assemble_pressure_rhs_multiplicative(v, 1.0)
}

/// Leray decomposition `u = v + ∇φ` with `div v = 0`, via the spectral
/// solution of `Δφ = div u`.
#[derive(Debug, Clone)]
pub struct LerayProjection {
    pub v: VectorField,
    pub grad_phi: VectorField,
}

pub fn leray_project(u: &VectorField) -> LerayProjection {
    let div = u.divergence();
    // Δφ = div u  ⇔  −Δφ = −div u
    let phi = div.scale(-1.0).neg_laplacian_inverse();
    let grad_phi = phi.gradient();
    let v = u.sub(&grad_phi).expect("same grid");
    LerayProjection { v, grad_phi }
}
