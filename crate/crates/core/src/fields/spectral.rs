//! Spectral differential operators on periodic fields.
//!
//! Fields are transformed with a full complex FFT per axis; derivative
//! multipliers act mode-wise. First-derivative multipliers are zeroed at the
//! Nyquist bin so real input stays real and the discrete divergence is the
//! exact negative adjoint of the discrete gradient under the equal-weight
//! inner product.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{FieldError, GridSpec, ScalarField, VectorField};

type Plan = Arc<dyn Fft<f64>>;

fn plan(n: usize, inverse: bool) -> Plan {
    static CACHE: OnceLock<Mutex<HashMap<(usize, bool), Plan>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// In-place FFT along every axis of a row-major hypercube with `n^dim` entries.
/// The inverse transform includes the `1/n^dim` normalization.
pub(crate) fn fft_nd(data: &mut [Complex<f64>], dim: usize, n: usize, inverse: bool) {
    let fft = plan(n, inverse);
    let mut line = vec![Complex::default(); n];
    for axis in 0..dim {
        // stride between consecutive entries of a line along `axis`
        let stride = n.pow((dim - 1 - axis) as u32);
        let lines = data.len() / n;
        for l in 0..lines {
            // base index of the l-th line: split l into (outer, inner) blocks
            let inner = l % stride;
            let outer = l / stride;
            let base = outer * stride * n + inner;
            for (j, slot) in line.iter_mut().enumerate() {
                *slot = data[base + j * stride];
            }
            fft.process(&mut line);
            for (j, slot) in line.iter().enumerate() {
                data[base + j * stride] = *slot;
            }
        }
    }
    if inverse {
        let scale = 1.0 / (data.len() as f64);
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// Forward transform of a real field into a complex spectrum.
pub(crate) fn forward(f: &ScalarField) -> Vec<Complex<f64>> {
    let grid = f.grid();
    let mut data: Vec<Complex<f64>> = f.values().iter().map(|v| Complex::new(*v, 0.0)).collect();
    fft_nd(&mut data, grid.dim(), grid.n_per_axis(), false);
    data
}

/// Inverse transform; the imaginary residue of a real-symmetric spectrum is dropped.
pub(crate) fn inverse(grid: GridSpec, mut spectrum: Vec<Complex<f64>>) -> ScalarField {
    fft_nd(&mut spectrum, grid.dim(), grid.n_per_axis(), true);
    ScalarField::from_values_unchecked(grid, spectrum.iter().map(|c| c.re).collect())
}

/// Apply a mode-wise multiplier `m(k)` where `k` is the signed integer wavevector.
pub(crate) fn apply_multiplier(
    f: &ScalarField,
    multiplier: impl Fn(&[i64]) -> Complex<f64>,
) -> ScalarField {
    let grid = f.grid();
    let mut spectrum = forward(f);
    for_each_mode(grid, &mut spectrum, |k, value| {
        *value *= multiplier(k);
    });
    inverse(grid, spectrum)
}

/// Visit every spectral bin with its signed integer wavevector.
pub(crate) fn for_each_mode(
    grid: GridSpec,
    spectrum: &mut [Complex<f64>],
    mut visit: impl FnMut(&[i64], &mut Complex<f64>),
) {
    let dim = grid.dim();
    let n = grid.n_per_axis();
    let mut k = [0i64; 3];
    for (flat, value) in spectrum.iter_mut().enumerate() {
        let mut rem = flat;
        for a in (0..dim).rev() {
            k[a] = grid.wave_index(rem % n);
            rem /= n;
        }
        visit(&k[..dim], value);
    }
}

/// `D^m f` from an already-computed spectrum of `f`.
pub(crate) fn derivative_from_spectrum(
    grid: GridSpec,
    spectrum: &[Complex<f64>],
    m: &[usize],
) -> ScalarField {
    let mut spec = spectrum.to_vec();
    for_each_mode(grid, &mut spec, |k, v| {
        let mut f = Complex::new(1.0, 0.0);
        for (a, &order) in m.iter().enumerate() {
            let base = derivative_factor(grid, k[a]);
            for _ in 0..order {
                f *= base;
            }
        }
        *v *= f;
    });
    inverse(grid, spec)
}

/// Angular first-derivative factor `iκ_a`, zeroed at the Nyquist bin.
fn derivative_factor(grid: GridSpec, k: i64) -> Complex<f64> {
    if 2 * k.unsigned_abs() as usize == grid.n_per_axis() {
        Complex::new(0.0, 0.0)
    } else {
        Complex::new(0.0, std::f64::consts::TAU * k as f64 / grid.length())
    }
}

impl ScalarField {
    /// Spectral partial derivative along one axis.
    pub fn derivative_axis(&self, axis: usize) -> ScalarField {
        let grid = self.grid();
        apply_multiplier(self, |k| derivative_factor(grid, k[axis]))
    }

    /// Spectral mixed derivative `D^m f` for a multi-index `m`.
    pub fn derivative_multi(&self, m: &[usize]) -> ScalarField {
        derivative_from_spectrum(self.grid(), &forward(self), m)
    }

    /// Spectral gradient `∇f`.
    pub fn gradient(&self) -> VectorField {
        let grid = self.grid();
        let spectrum = forward(self);
        let components = (0..grid.dim())
            .map(|axis| {
                let mut spec = spectrum.clone();
                for_each_mode(grid, &mut spec, |k, v| {
                    *v *= derivative_factor(grid, k[axis]);
                });
                inverse(grid, spec)
            })
            .collect();
        VectorField::from_components(components).expect("components share the grid")
    }

    /// Spectral Laplacian `Δf`.
    pub fn laplacian(&self) -> ScalarField {
        let grid = self.grid();
        apply_multiplier(self, |k| {
            let mut s = 0.0;
            for &ka in k {
                let kappa = std::f64::consts::TAU * ka as f64 / grid.length();
                s += kappa * kappa;
            }
            Complex::new(-s, 0.0)
        })
    }

    /// Solve `−Δ s = f` on mean-zero fields; the mean of the input is discarded.
    pub fn neg_laplacian_inverse(&self) -> ScalarField {
        let grid = self.grid();
        apply_multiplier(self, |k| {
            let mut s = 0.0;
            for &ka in k {
                let kappa = std::f64::consts::TAU * ka as f64 / grid.length();
                s += kappa * kappa;
            }
            if s == 0.0 {
                Complex::new(0.0, 0.0)
            } else {
                Complex::new(1.0 / s, 0.0)
            }
        })
    }

    /// 2/3-rule truncation: zero every mode with a component above `n/3`.
    pub fn dealias(&self) -> ScalarField {
        let grid = self.grid();
        let limit = grid.dealias_limit();
        apply_multiplier(self, |k| {
            if k.iter().any(|ka| ka.abs() > limit) {
                Complex::new(0.0, 0.0)
            } else {
                Complex::new(1.0, 0.0)
            }
        })
    }

    /// Exact translation `f(x - shift)` via phase rotation of the spectrum.
    pub fn translate(&self, shift: &[f64]) -> ScalarField {
        let grid = self.grid();
        apply_multiplier(self, |k| {
            let mut phase = 0.0;
            for (a, &ka) in k.iter().enumerate() {
                let kappa = std::f64::consts::TAU * ka as f64 / grid.length();
                phase -= kappa * shift[a];
            }
            Complex::from_polar(1.0, phase)
        })
    }

    /// Resample onto a finer grid by zero-padding the spectrum (exact for
    /// band-limited fields). The Nyquist bin is split symmetrically.
    pub fn spectral_upsample(&self, n_new: usize) -> Result<ScalarField, FieldError> {
        let grid = self.grid();
        let fine = GridSpec::new(grid.dim(), n_new, grid.length())?;
        if n_new < grid.n_per_axis() {
            return Err(FieldError::BadResolution(n_new));
        }
        if n_new == grid.n_per_axis() {
            return Ok(self.clone());
        }
        let spectrum = forward(self);
        let n = grid.n_per_axis();
        let dim = grid.dim();
        let mut out = vec![Complex::new(0.0, 0.0); fine.points()];
        let nyq = (n / 2) as i64;
        // copy each coarse mode into every compatible fine bin,
        // halving Nyquist contributions per affected axis
        let mut coarse_spec = spectrum;
        for flat in 0..coarse_spec.len() {
            let mut k = [0i64; 3];
            let mut rem = flat;
            for a in (0..dim).rev() {
                k[a] = grid.wave_index(rem % n);
                rem /= n;
            }
            let mut targets: Vec<Vec<i64>> = vec![vec![]];
            let mut weight = 1.0;
            for &ka in &k[..dim] {
                let choices: Vec<i64> = if ka == nyq {
                    weight *= 0.5;
                    vec![nyq, -nyq]
                } else {
                    vec![ka]
                };
                let mut next = Vec::new();
                for t in &targets {
                    for &c in &choices {
                        let mut t2 = t.clone();
                        t2.push(c);
                        next.push(t2);
                    }
                }
                targets = next;
            }
            let value = coarse_spec[flat] * weight;
            for t in targets {
                let mut fine_flat = 0usize;
                for &ka in &t {
                    let bin = if ka >= 0 { ka as usize } else { (ka + n_new as i64) as usize };
                    fine_flat = fine_flat * n_new + bin;
                }
                out[fine_flat] += value;
            }
            coarse_spec[flat] = Complex::new(0.0, 0.0);
        }
        let scale = (fine.points() as f64) / (grid.points() as f64);
        for v in out.iter_mut() {
            *v *= scale;
        }
        Ok(inverse(fine, out))
    }
}

impl VectorField {
    /// Spectral divergence `Σ_a ∂_a v^a`.
    pub fn divergence(&self) -> ScalarField {
        let grid = self.grid();
        let mut acc = vec![Complex::new(0.0, 0.0); grid.points()];
        for (axis, comp) in self.components().iter().enumerate() {
            let mut spec = forward(comp);
            for_each_mode(grid, &mut spec, |k, v| {
                *v *= derivative_factor(grid, k[axis]);
            });
            for (a, b) in acc.iter_mut().zip(spec) {
                *a += b;
            }
        }
        inverse(grid, acc)
    }

    pub fn dealias(&self) -> VectorField {
        VectorField::from_components(self.components().iter().map(|c| c.dealias()).collect())
            .expect("components share the grid")
    }

    pub fn translate(&self, shift: &[f64]) -> VectorField {
        VectorField::from_components(
            self.components().iter().map(|c| c.translate(shift)).collect(),
        )
        .expect("components share the grid")
    }

    pub fn spectral_upsample(&self, n_new: usize) -> Result<VectorField, FieldError> {
        VectorField::from_components(
            self.components()
                .iter()
                .map(|c| c.spectral_upsample(n_new))
                .collect::<Result<Vec<_>, _>>()?,
        )
    }

    /// Jacobian entries `∂_j v^i` indexed `[i][j]`.
    pub fn jacobian(&self) -> Vec<Vec<ScalarField>> {
        self.components()
            .iter()
            .map(|c| (0..self.dim()).map(|j| c.derivative_axis(j)).collect())
            .collect()
    }

    /// Directional derivative `(v·∇)w`, dealiased.
    pub fn advect(&self, w: &VectorField) -> Result<VectorField, FieldError> {
        if self.grid() != w.grid() {
            return Err(FieldError::GridMismatch);
        }
        let components = w
            .components()
            .iter()
            .map(|wc| self.advect_scalar_term(wc))
            .collect::<Result<Vec<_>, _>>()?;
        VectorField::from_components(components)
    }

    /// Directional derivative `(v·∇)s` of a scalar, dealiased.
    pub fn advect_scalar_term(&self, s: &ScalarField) -> Result<ScalarField, FieldError> {
        if self.grid() != s.grid() {
            return Err(FieldError::GridMismatch);
        }
        let mut acc = ScalarField::zeros(self.grid());
        for (axis, va) in self.components().iter().enumerate() {
            let ds = s.derivative_axis(axis);
            acc = acc.add(&va.mul_pointwise(&ds)?)?;
        }
        Ok(acc.dealias())
    }
}
