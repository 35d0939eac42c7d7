//! Periodic tensor-product grids and the scalar/vector fields living on them.
//!
//! All fields are sampled on the uniform grid of the torus `[0, length)^dim`
//! with `n_per_axis` points per axis, stored row-major (axis 0 slowest).
//! Differential operators are spectral (exact for band-limited data), norms
//! use the equal-weight periodic trapezoid rule for the `L^p` integrals.

pub mod interp;
pub mod norms;
pub mod spectral;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("spatial dimension must be 2 or 3, got {0}")]
    BadDimension(usize),
    #[error("n_per_axis must be a power of two >= 8, got {0}")]
    BadResolution(usize),
    #[error("domain period must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("expected {expected} values for the grid, got {got}")]
    ValueCount { expected: usize, got: usize },
    #[error("field contains a non-finite value at flat index {0}")]
    NonFinite(usize),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("norm exponent must be finite and > 1, got {0}")]
    BadExponent(f64),
    #[error("time grid must have at least one step")]
    EmptyTimeGrid,
    #[error("frame count {got} does not match time grid ({expected} nodes)")]
    FrameCount { expected: usize, got: usize },
}

/// Uniform periodic grid: `n_per_axis` points per axis on `[0, length)^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    n_per_axis: usize,
    length: f64,
}

impl GridSpec {
    pub fn new(dim: usize, n_per_axis: usize, length: f64) -> Result<Self, FieldError> {
        if dim != 2 && dim != 3 {
            return Err(FieldError::BadDimension(dim));
        }
        if n_per_axis < 8 || !n_per_axis.is_power_of_two() {
            return Err(FieldError::BadResolution(n_per_axis));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(FieldError::BadLength(length));
        }
        Ok(Self { dim, n_per_axis, length })
    }

    /// Standard `2π`-periodic grid.
    pub fn torus(dim: usize, n_per_axis: usize) -> Result<Self, FieldError> {
        Self::new(dim, n_per_axis, std::f64::consts::TAU)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_per_axis(&self) -> usize {
        self.n_per_axis
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Total number of grid points `n^dim`.
    pub fn points(&self) -> usize {
        self.n_per_axis.pow(self.dim as u32)
    }

    /// Grid spacing `h = length / n`.
    pub fn spacing(&self) -> f64 {
        self.length / self.n_per_axis as f64
    }

    /// Torus volume `length^dim`.
    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Quadrature weight of one cell, `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Row-major shape, `[n; dim]`.
    pub fn shape(&self) -> Vec<usize> {
        vec![self.n_per_axis; self.dim]
    }

    /// Multi-index of a flat row-major index.
    pub fn unravel(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for a in (0..self.dim).rev() {
            idx[a] = flat % self.n_per_axis;
            flat /= self.n_per_axis;
        }
        idx
    }

    /// Physical coordinates of a flat index (only the first `dim` entries are set).
    pub fn position(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = idx[a] as f64 * h;
        }
        x
    }

    /// Signed integer wavenumber of FFT bin `j`, with the Nyquist bin mapped to `n/2`.
    pub fn wave_index(&self, j: usize) -> i64 {
        let n = self.n_per_axis as i64;
        let j = j as i64;
        if j <= n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Angular wavenumber `2π k / length` of FFT bin `j`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        std::f64::consts::TAU * self.wave_index(j) as f64 / self.length
    }

    /// Largest integer mode kept by the 2/3 dealiasing rule.
    pub fn dealias_limit(&self) -> i64 {
        (self.n_per_axis / 3) as i64
    }
}

/// Real scalar sample per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != grid.points() {
            return Err(FieldError::ValueCount { expected: grid.points(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, values: vec![0.0; grid.points()] }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Result<Self, FieldError> {
        Self::from_values(grid, vec![c; grid.points()])
    }

    /// Sample `f(x)` at every grid point.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self, FieldError> {
        let values = (0..grid.points())
            .map(|i| {
                let x = grid.position(i);
                f(&x[..grid.dim()])
            })
            .collect();
        Self::from_values(grid, values)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn from_values_unchecked(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.points());
        Self { grid, values }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Mean value over the torus.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| a * v).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self, FieldError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FieldError> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul_pointwise(&self, other: &Self) -> Result<Self, FieldError> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self, FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| f(*v)).collect() }
    }
}

/// `dim` scalar components sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn from_components(components: Vec<ScalarField>) -> Result<Self, FieldError> {
        let grid = components.first().ok_or(FieldError::GridMismatch)?.grid();
        if components.len() != grid.dim() {
            return Err(FieldError::GridMismatch);
        }
        if components.iter().any(|c| c.grid() != grid) {
            return Err(FieldError::GridMismatch);
        }
        Ok(Self { components })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self { components: (0..grid.dim()).map(|_| ScalarField::zeros(grid)).collect() }
    }

    /// Sample a vector function componentwise.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64], usize) -> f64) -> Result<Self, FieldError> {
        let components = (0..grid.dim())
            .map(|c| ScalarField::from_fn(grid, |x| f(x, c)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_components(components)
    }

    pub fn grid(&self) -> GridSpec {
        self.components[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, c: usize) -> &ScalarField {
        &self.components[c]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { components: self.components.iter().map(|c| c.scale(a)).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self, FieldError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FieldError> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64 + Copy) -> Result<Self, FieldError> {
        if self.dim() != other.dim() {
            return Err(FieldError::GridMismatch);
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.zip_with(b, f))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { components })
    }

    /// Multiply every component by the same scalar field.
    pub fn mul_scalar_field(&self, s: &ScalarField) -> Result<Self, FieldError> {
        let components = self
            .components
            .iter()
            .map(|c| c.mul_pointwise(s))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { components })
    }
}

/// Uniform time grid `t_i = i Δt`, `i = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_end: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self, FieldError> {
        if n_steps == 0 {
            return Err(FieldError::EmptyTimeGrid);
        }
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(FieldError::BadLength(t_end));
        }
        Ok(Self { t_end, n_steps })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of nodes, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.t_end
        } else {
            i as f64 * self.dt()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }

    /// Truncated grid keeping nodes `0..=j`.
    pub fn truncate(&self, j: usize) -> Result<Self, FieldError> {
        if j == 0 || j > self.n_steps {
            return Err(FieldError::EmptyTimeGrid);
        }
        Ok(Self { t_end: self.node(j), n_steps: j })
    }
}

/// A field-valued function of time on a uniform grid; one frame per node.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<F> {
    t_grid: TimeGrid,
    frames: Vec<F>,
}

pub type ScalarSeries = TimeSeries<ScalarField>;
pub type VectorSeries = TimeSeries<VectorField>;

impl<F> TimeSeries<F> {
    pub fn new(t_grid: TimeGrid, frames: Vec<F>) -> Result<Self, FieldError> {
        if frames.len() != t_grid.len() {
            return Err(FieldError::FrameCount { expected: t_grid.len(), got: frames.len() });
        }
        Ok(Self { t_grid, frames })
    }

    pub fn t_grid(&self) -> TimeGrid {
        self.t_grid
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, i: usize) -> &F {
        &self.frames[i]
    }

    pub fn frames(&self) -> &[F] {
        &self.frames
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &F)> {
        self.t_grid.nodes().zip(self.frames.iter()).collect::<Vec<_>>().into_iter()
    }
}

impl VectorSeries {
    pub fn zeros(grid: GridSpec, t_grid: TimeGrid) -> Self {
        let frames = (0..t_grid.len()).map(|_| VectorField::zeros(grid)).collect();
        Self { t_grid, frames }
    }
}

impl ScalarSeries {
    pub fn zeros(grid: GridSpec, t_grid: TimeGrid) -> Self {
        let frames = (0..t_grid.len()).map(|_| ScalarField::zeros(grid)).collect();
        Self { t_grid, frames }
    }
}
