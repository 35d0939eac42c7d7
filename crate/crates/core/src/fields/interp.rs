//! Periodic cubic-spline interpolation of grid fields at arbitrary points.
//!
//! The interpolant is the classical C² periodic cubic spline, written in the
//! uniform B-spline basis. The prefilter (deconvolution of the B-spline
//! stencil 1/6, 4/6, 1/6 per axis) is solved spectrally once per field; each
//! evaluation then touches a 4^dim stencil. Queries landing exactly on grid
//! nodes return the stored nodal value bit-for-bit.

use rustfft::num_complex::Complex;

use super::spectral::{fft_nd, for_each_mode};
use super::{GridSpec, ScalarField, VectorField};

/// B-spline coefficients of one scalar field plus the raw nodal values.
#[derive(Debug, Clone)]
pub struct SplineInterpolant {
    grid: GridSpec,
    coeffs: Vec<f64>,
    nodal: Vec<f64>,
}

impl SplineInterpolant {
    pub fn new(f: &ScalarField) -> Self {
        let grid = f.grid();
        let mut spec: Vec<Complex<f64>> =
            f.values().iter().map(|v| Complex::new(*v, 0.0)).collect();
        fft_nd(&mut spec, grid.dim(), grid.n_per_axis(), false);
        let n = grid.n_per_axis() as f64;
        for_each_mode(grid, &mut spec, |k, v| {
            let mut b = 1.0;
            for &ka in k {
                let theta = std::f64::consts::TAU * ka as f64 / n;
                b *= (4.0 + 2.0 * theta.cos()) / 6.0;
            }
            *v /= b;
        });
        fft_nd(&mut spec, grid.dim(), grid.n_per_axis(), true);
        SplineInterpolant {
            grid,
            coeffs: spec.iter().map(|c| c.re).collect(),
            nodal: f.values().to_vec(),
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// Evaluate at a point, wrapped periodically. `x.len() >= dim`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_stencil(&Stencil::at(self.grid, x))
    }

    /// Evaluate with a precomputed stencil (must come from the same grid).
    pub fn eval_stencil(&self, st: &Stencil) -> f64 {
        debug_assert_eq!(st.dim, self.grid.dim());
        if st.on_node {
            return self.nodal[st.flat];
        }
        let n = self.grid.n_per_axis();
        match st.dim {
            2 => {
                let mut acc = 0.0;
                for s0 in 0..4 {
                    let row = st.idx[0][s0] * n;
                    let w0 = st.w[0][s0];
                    let mut partial = 0.0;
                    for s1 in 0..4 {
                        partial += st.w[1][s1] * self.coeffs[row + st.idx[1][s1]];
                    }
                    acc += w0 * partial;
                }
                acc
            }
            _ => {
                let mut acc = 0.0;
                for s0 in 0..4 {
                    let w0 = st.w[0][s0];
                    let plane = st.idx[0][s0] * n * n;
                    for s1 in 0..4 {
                        let w01 = w0 * st.w[1][s1];
                        let row = plane + st.idx[1][s1] * n;
                        let mut partial = 0.0;
                        for s2 in 0..4 {
                            partial += st.w[2][s2] * self.coeffs[row + st.idx[2][s2]];
                        }
                        acc += w01 * partial;
                    }
                }
                acc
            }
        }
    }
}

/// Tensor-product evaluation stencil of one query point, shareable across
/// every interpolant living on the same grid.
#[derive(Debug, Clone)]
pub struct Stencil {
    dim: usize,
    idx: [[usize; 4]; 3],
    w: [[f64; 4]; 3],
    on_node: bool,
    flat: usize,
}

impl Stencil {
    pub fn at(grid: GridSpec, x: &[f64]) -> Self {
        let dim = grid.dim();
        let n = grid.n_per_axis();
        let h = grid.spacing();
        let mut base = [0usize; 3];
        let mut idx = [[0usize; 4]; 3];
        let mut w = [[0.0f64; 4]; 3];
        let mut on_node = true;
        for a in 0..dim {
            let u = (x[a] / h).rem_euclid(n as f64);
            let r = u.round();
            // snap to the node when the query sits within rounding error of it
            let (i, t) = if (u - r).abs() < 1e-12 {
                (r as usize % n, 0.0)
            } else {
                (u.floor() as usize % n, u - u.floor())
            };
            base[a] = i;
            on_node &= t == 0.0;
            w[a] = bspline_weights(t);
            for s in 0..4 {
                idx[a][s] = (i + n + s - 1) % n;
            }
        }
        let mut flat = 0;
        for a in 0..dim {
            flat = flat * n + base[a];
        }
        Stencil { dim, idx, w, on_node, flat }
    }
}

/// Normalized uniform cubic B-spline weights at offset `t ∈ [0,1)` for the
/// stencil `i-1, i, i+1, i+2`. Normalization keeps constants exact.
fn bspline_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    let w0 = (1.0 - t).powi(3) / 6.0;
    let w1 = (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0;
    let w2 = (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0;
    let w3 = t3 / 6.0;
    let s = w0 + w1 + w2 + w3;
    [w0 / s, w1 / s, w2 / s, w3 / s]
}

/// Spline interpolant of every component of a vector field.
#[derive(Debug, Clone)]
pub struct VectorInterpolant {
    components: Vec<SplineInterpolant>,
}

impl VectorInterpolant {
    pub fn new(v: &VectorField) -> Self {
        Self { components: v.components().iter().map(SplineInterpolant::new).collect() }
    }

    pub fn grid(&self) -> GridSpec {
        self.components[0].grid()
    }

    pub fn eval(&self, x: &[f64]) -> [f64; 3] {
        self.eval_stencil(&Stencil::at(self.grid(), x))
    }

    pub fn eval_stencil(&self, st: &Stencil) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (c, comp) in self.components.iter().enumerate() {
            out[c] = comp.eval_stencil(st);
        }
        out
    }
}

/// Interpolate `f` at a list of points (periodically wrapped).
pub fn interpolate(f: &ScalarField, points: &[Vec<f64>]) -> Vec<f64> {
    let spline = SplineInterpolant::new(f);
    points.iter().map(|p| spline.eval(p)).collect()
}
