//! Discrete Sobolev, Lebesgue and sup norms.
//!
//! `‖f‖_{k,p} = Σ_{|m|≤k} ‖D^m f‖_{L^p}` with spectral derivatives and the
//! equal-weight periodic trapezoid rule for the integrals. Vector norms are
//! the sum of component norms, sup norms the max over components.

use super::{FieldError, ScalarField, VectorField};

fn check_exponent(p: f64) -> Result<(), FieldError> {
    if !(p.is_finite() && p > 1.0) {
        return Err(FieldError::BadExponent(p));
    }
    Ok(())
}

/// All multi-indices `m` with `|m| ≤ k` in `dim` variables.
pub(crate) fn multi_indices(dim: usize, k: u32) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for total in 0..=k as usize {
        compositions(dim, total, &mut vec![], &mut out);
    }
    out
}

fn compositions(dim: usize, total: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if prefix.len() == dim - 1 {
        let mut m = prefix.clone();
        m.push(total);
        out.push(m);
        return;
    }
    for first in 0..=total {
        prefix.push(first);
        compositions(dim, total - first, prefix, out);
        prefix.pop();
    }
}

impl ScalarField {
    /// `L^p` norm with equal-weight periodic quadrature.
    pub fn lp_norm(&self, p: f64) -> Result<f64, FieldError> {
        check_exponent(p)?;
        let sum: f64 = self.values().iter().map(|v| v.abs().powf(p)).sum();
        Ok((self.grid().cell_volume() * sum).powf(1.0 / p))
    }

    /// Sobolev norm `Σ_{|m|≤k} ‖D^m f‖_{L^p}`. One forward transform is
    /// shared by all derivative levels.
    pub fn sobolev_norm(&self, k: u32, p: f64) -> Result<f64, FieldError> {
        check_exponent(p)?;
        let grid = self.grid();
        let spectrum = super::spectral::forward(self);
        let mut total = 0.0;
        for m in multi_indices(grid.dim(), k) {
            let d = if m.iter().all(|&o| o == 0) {
                self.clone()
            } else {
                super::spectral::derivative_from_spectrum(grid, &spectrum, &m)
            };
            total += d.lp_norm(p)?;
        }
        Ok(total)
    }

    /// Max of `|f|` over grid points.
    pub fn sup_norm(&self) -> f64 {
        self.values().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Discrete `L²` inner product.
    pub fn inner(&self, other: &ScalarField) -> Result<f64, FieldError> {
        if self.grid() != other.grid() {
            return Err(FieldError::GridMismatch);
        }
        let sum: f64 = self
            .values()
            .iter()
            .zip(other.values())
            .map(|(a, b)| a * b)
            .sum();
        Ok(self.grid().cell_volume() * sum)
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).expect("same field") .sqrt()
    }
}

impl VectorField {
    pub fn lp_norm(&self, p: f64) -> Result<f64, FieldError> {
        self.components().iter().map(|c| c.lp_norm(p)).sum()
    }

    pub fn sobolev_norm(&self, k: u32, p: f64) -> Result<f64, FieldError> {
        self.components().iter().map(|c| c.sobolev_norm(k, p)).sum()
    }

    pub fn sup_norm(&self) -> f64 {
        self.components().iter().fold(0.0f64, |m, c| m.max(c.sup_norm()))
    }

    pub fn inner(&self, other: &VectorField) -> Result<f64, FieldError> {
        if self.dim() != other.dim() {
            return Err(FieldError::GridMismatch);
        }
        let mut total = 0.0;
        for (a, b) in self.components().iter().zip(other.components()) {
            total += a.inner(b)?;
        }
        Ok(total)
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).expect("same field").sqrt()
    }

    /// Max over grid points of the Euclidean length of the vector value.
    pub fn sup_magnitude(&self) -> f64 {
        let n = self.grid().points();
        let mut worst = 0.0f64;
        for i in 0..n {
            let mut s = 0.0;
            for c in self.components() {
                let v = c.values()[i];
                s += v * v;
            }
            worst = worst.max(s);
        }
        worst.sqrt()
    }

    /// Max over grid points of the Frobenius norm of the Jacobian `∂_j v^i`.
    pub fn sup_jacobian(&self) -> f64 {
        let jac = self.jacobian();
        let n = self.grid().points();
        let mut worst = 0.0f64;
        for i in 0..n {
            let mut s = 0.0;
            for row in &jac {
                for entry in row {
                    let v = entry.values()[i];
                    s += v * v;
                }
            }
            worst = worst.max(s);
        }
        worst.sqrt()
    }
}
