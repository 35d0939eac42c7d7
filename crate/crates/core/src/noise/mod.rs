//! Reproducible noise realizations: the scalar Brownian driver with its
//! exponential change-of-variables factor, and the divergence-free
//! trace-class Q-Wiener vector field.

pub mod rng;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{FieldError, GridSpec, TimeGrid, VectorField};
use rng::NormalStream;

#[derive(Debug, Error)]
pub enum NoiseError {
    #[error("need at least one time step")]
    EmptySteps,
    #[error("time horizon must be positive, got {0}")]
    BadHorizon(f64),
    #[error("|W| = {0} exceeds the exp overflow guard (700)")]
    ExpOverflow(f64),
    #[error("requested {requested} modes but the dealiased grid budget is {available}")]
    ModeBudget { requested: usize, available: usize },
    #[error("mode_count must be >= 1")]
    NoModes,
    #[error("decay exponent must be positive, got {0}")]
    BadDecay(f64),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Scalar Brownian motion sampled on a uniform time grid; `w[0] = 0` and the
/// increments are pure functions of `(seed, node index)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    t_grid: TimeGrid,
    w: Vec<f64>,
    seed: u64,
}

impl BrownianPath {
    pub fn t_grid(&self) -> TimeGrid {
        self.t_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The identically-zero path (deterministic regime).
    pub fn zero(t_run: f64, n_steps: usize) -> Result<Self, NoiseError> {
        let t_grid = time_grid(t_run, n_steps)?;
        Ok(Self { t_grid, w: vec![0.0; t_grid.len()], seed: 0 })
    }

    /// Keep nodes `0..=j`.
    pub fn truncate(&self, j: usize) -> Result<Self, NoiseError> {
        let t_grid = self.t_grid.truncate(j).map_err(NoiseError::from)?;
        Ok(Self { t_grid, w: self.w[..=j].to_vec(), seed: self.seed })
    }

    /// The same realization on a `factor`-times finer grid, filled in by the
    /// piecewise-linear interpolation rule. Used for time-step refinement
    /// studies along a fixed path.
    pub fn refine(&self, factor: usize) -> Result<Self, NoiseError> {
        if factor == 0 {
            return Err(NoiseError::EmptySteps);
        }
        let n_fine = self.t_grid.n_steps() * factor;
        let t_grid = time_grid(self.t_grid.t_end(), n_fine)?;
        let mut w = Vec::with_capacity(n_fine + 1);
        for i in 0..self.t_grid.n_steps() {
            for r in 0..factor {
                let frac = r as f64 / factor as f64;
                w.push(self.w[i] + (self.w[i + 1] - self.w[i]) * frac);
            }
        }
        w.push(*self.w.last().expect("nonempty path"));
        Ok(Self { t_grid, w, seed: self.seed })
    }
}

fn time_grid(t_run: f64, n_steps: usize) -> Result<TimeGrid, NoiseError> {
    if n_steps == 0 {
        return Err(NoiseError::EmptySteps);
    }
    TimeGrid::new(t_run, n_steps).map_err(|_| NoiseError::BadHorizon(t_run))
}

/// Sample `W` with `W(t_{i+1}) = W(t_i) + √Δt ξ_i`, `ξ_i` from the counter
/// stream `(seed, 0)`.
pub fn sample_brownian(t_run: f64, n_steps: usize, seed: u64) -> Result<BrownianPath, NoiseError> {
    let t_grid = time_grid(t_run, n_steps)?;
    let stream = NormalStream::new(seed, 0);
    let sqrt_dt = t_grid.dt().sqrt();
    let mut w = Vec::with_capacity(t_grid.len());
    w.push(0.0);
    for i in 0..n_steps {
        let prev = *w.last().expect("nonempty");
        w.push(prev + sqrt_dt * stream.normal(i as u64));
    }
    Ok(BrownianPath { t_grid, w, seed })
}

/// Nodewise `z = exp(W)` and `z⁻¹ = exp(−W)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpFactor {
    t_grid: TimeGrid,
    z: Vec<f64>,
    z_inv: Vec<f64>,
}

impl ExpFactor {
    pub fn t_grid(&self) -> TimeGrid {
        self.t_grid
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn z_inv(&self) -> &[f64] {
        &self.z_inv
    }

    pub fn truncate(&self, j: usize) -> Result<Self, NoiseError> {
        let t_grid = self.t_grid.truncate(j).map_err(NoiseError::from)?;
        Ok(Self { t_grid, z: self.z[..=j].to_vec(), z_inv: self.z_inv[..=j].to_vec() })
    }
}

pub fn exp_factor(path: &BrownianPath) -> Result<ExpFactor, NoiseError> {
    if let Some(w) = path.w.iter().find(|w| w.abs() > 700.0) {
        return Err(NoiseError::ExpOverflow(*w));
    }
    Ok(ExpFactor {
        t_grid: path.t_grid,
        z: path.w.iter().map(|w| w.exp()).collect(),
        z_inv: path.w.iter().map(|w| (-w).exp()).collect(),
    })
}

/// Covariance description of the Q-Wiener field: `mode_count` divergence-free
/// Fourier modes with eigenvalues `λ_j = j^{-decay_exponent}`, measured in the
/// `W^{k,2}` scale `smoothness_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QWienerSpec {
    pub mode_count: usize,
    pub decay_exponent: f64,
    pub smoothness_k: f64,
}

impl Default for QWienerSpec {
    fn default() -> Self {
        Self { mode_count: 4, decay_exponent: 4.0, smoothness_k: 3.0 }
    }
}

/// One real divergence-free Fourier mode: a wavevector, a unit polarization
/// orthogonal to it, and a trig phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisMode {
    pub wavevector: [i64; 3],
    pub polarization: [f64; 3],
    pub sine_phase: bool,
}

impl BasisMode {
    pub fn wavevector_sq(&self) -> f64 {
        self.wavevector.iter().map(|k| (*k * *k) as f64).sum()
    }

    /// Sample the unit-`L²` mode field on the grid.
    fn sample(&self, grid: GridSpec) -> VectorField {
        let norm = (2.0 / grid.volume()).sqrt();
        let factor = std::f64::consts::TAU / grid.length();
        VectorField::from_fn(grid, |x, c| {
            let mut phase = 0.0;
            for (a, xa) in x.iter().enumerate() {
                phase += factor * self.wavevector[a] as f64 * xa;
            }
            let trig = if self.sine_phase { phase.sin() } else { phase.cos() };
            norm * self.polarization[c] * trig
        })
        .expect("trig fields are finite")
    }
}

/// Divergence-free Fourier modes inside the dealiased budget, ordered by
/// `|κ|²` then lexicographically; one half-space representative per ±κ pair,
/// each with its polarization(s) and both trig phases.
pub fn divergence_free_modes(grid: GridSpec) -> Vec<BasisMode> {
    let limit = grid.dealias_limit();
    let dim = grid.dim();
    let mut vectors: Vec<[i64; 3]> = Vec::new();
    let range = -limit..=limit;
    for k0 in range.clone() {
        for k1 in range.clone() {
            let k2s: Vec<i64> = if dim == 3 { range.clone().collect() } else { vec![0] };
            for k2 in k2s {
                let k = [k0, k1, k2];
                if k == [0, 0, 0] {
                    continue;
                }
                // keep one representative of each ±κ pair
                if !lexicographically_positive(&k) {
                    continue;
                }
                vectors.push(k);
            }
        }
    }
    vectors.sort_by_key(|k| (k.iter().map(|v| v * v).sum::<i64>(), *k));
    let mut modes = Vec::new();
    for k in vectors {
        for pol in polarizations(&k, dim) {
            for sine_phase in [false, true] {
                modes.push(BasisMode { wavevector: k, polarization: pol, sine_phase });
            }
        }
    }
    modes
}

fn lexicographically_positive(k: &[i64; 3]) -> bool {
    for &v in k {
        if v > 0 {
            return true;
        }
        if v < 0 {
            return false;
        }
    }
    false
}

/// Unit vectors orthogonal to `κ`: one in 2D, an orthonormal pair in 3D.
fn polarizations(k: &[i64; 3], dim: usize) -> Vec<[f64; 3]> {
    let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
    let norm = (kf[0] * kf[0] + kf[1] * kf[1] + kf[2] * kf[2]).sqrt();
    if dim == 2 {
        return vec![[-kf[1] / norm, kf[0] / norm, 0.0]];
    }
    // first polarization: cross with the coordinate axis least aligned with κ
    let axis = if kf[0].abs() <= kf[1].abs() && kf[0].abs() <= kf[2].abs() {
        [1.0, 0.0, 0.0]
    } else if kf[1].abs() <= kf[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let e1 = normalize(cross(&kf, &axis));
    let e2 = normalize(cross(&kf, &e1));
    vec![e1, e2]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// A sampled Q-Wiener path: one divergence-free vector frame per time node,
/// plus the underlying mode coefficients `√λ_j β_j(t_i)`.
#[derive(Debug, Clone)]
pub struct QWienerPath {
    t_grid: TimeGrid,
    frames: Vec<VectorField>,
    modes: Vec<BasisMode>,
    lambdas: Vec<f64>,
    /// `coeffs[j][i] = β_j(t_i)` (unscaled Brownian coefficients).
    coeffs: Vec<Vec<f64>>,
    smoothness_k: f64,
    seed: u64,
}

impl QWienerPath {
    pub fn t_grid(&self) -> TimeGrid {
        self.t_grid
    }

    pub fn frames(&self) -> &[VectorField] {
        &self.frames
    }

    pub fn frame(&self, i: usize) -> &VectorField {
        &self.frames[i]
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn modes(&self) -> &[BasisMode] {
        &self.modes
    }

    pub fn coefficient(&self, mode: usize, node: usize) -> f64 {
        self.coeffs[mode][node]
    }

    /// Discrete `W^{k,2}`-type norm of the frame at a node, evaluated exactly
    /// from the orthonormal mode expansion:
    /// `(Σ_j λ_j (1+|κ_j|²)^k β_j²)^{1/2}`.
    pub fn sobolev_k2_norm(&self, node: usize) -> f64 {
        let k = self.smoothness_k;
        let mut s = 0.0;
        for (j, mode) in self.modes.iter().enumerate() {
            let b = self.coeffs[j][node];
            s += self.lambdas[j] * (1.0 + mode.wavevector_sq()).powf(k) * b * b;
        }
        s.sqrt()
    }

    pub fn sobolev_k2_norms(&self) -> Vec<f64> {
        (0..self.t_grid.len()).map(|i| self.sobolev_k2_norm(i)).collect()
    }

    /// The identically-zero path on the given grid.
    pub fn zero(grid: GridSpec, t_run: f64, n_steps: usize) -> Result<Self, NoiseError> {
        let t_grid = time_grid(t_run, n_steps)?;
        Ok(Self {
            t_grid,
            frames: (0..t_grid.len()).map(|_| VectorField::zeros(grid)).collect(),
            modes: vec![],
            lambdas: vec![],
            coeffs: vec![],
            smoothness_k: 0.0,
            seed: 0,
        })
    }

    pub fn truncate(&self, j: usize) -> Result<Self, NoiseError> {
        let t_grid = self.t_grid.truncate(j).map_err(NoiseError::from)?;
        Ok(Self {
            t_grid,
            frames: self.frames[..=j].to_vec(),
            modes: self.modes.clone(),
            lambdas: self.lambdas.clone(),
            coeffs: self.coeffs.iter().map(|c| c[..=j].to_vec()).collect(),
            smoothness_k: self.smoothness_k,
            seed: self.seed,
        })
    }

    /// The path that the same Brownian coefficients produce when every
    /// eigenvalue is multiplied by `factor`: frames scale by `√factor`.
    pub fn with_scaled_covariance(&self, factor: f64) -> Self {
        let amp = factor.sqrt();
        Self {
            t_grid: self.t_grid,
            frames: self.frames.iter().map(|f| f.scale(amp)).collect(),
            modes: self.modes.clone(),
            lambdas: self.lambdas.iter().map(|l| l * factor).collect(),
            coeffs: self.coeffs.clone(),
            smoothness_k: self.smoothness_k,
            seed: self.seed,
        }
    }
}

/// Sample `W^Q(t) = Σ_{j≤M} √λ_j β_j(t) e_j` with independent Brownian
/// coefficients on counter streams `(seed, j+1)`.
pub fn sample_q_wiener(
    grid: GridSpec,
    spec: &QWienerSpec,
    t_run: f64,
    n_steps: usize,
    seed: u64,
) -> Result<QWienerPath, NoiseError> {
    if spec.mode_count == 0 {
        return Err(NoiseError::NoModes);
    }
    if !(spec.decay_exponent > 0.0) {
        return Err(NoiseError::BadDecay(spec.decay_exponent));
    }
    let t_grid = time_grid(t_run, n_steps)?;
    let all_modes = divergence_free_modes(grid);
    if spec.mode_count > all_modes.len() {
        return Err(NoiseError::ModeBudget { requested: spec.mode_count, available: all_modes.len() });
    }
    let modes: Vec<BasisMode> = all_modes[..spec.mode_count].to_vec();
    let lambdas: Vec<f64> =
        (1..=spec.mode_count).map(|j| (j as f64).powf(-spec.decay_exponent)).collect();
    let sqrt_dt = t_grid.dt().sqrt();
    let coeffs: Vec<Vec<f64>> = (0..spec.mode_count)
        .map(|j| {
            let stream = NormalStream::new(seed, j as u64 + 1);
            let mut beta = Vec::with_capacity(t_grid.len());
            beta.push(0.0);
            for i in 0..n_steps {
                let prev = *beta.last().expect("nonempty");
                beta.push(prev + sqrt_dt * stream.normal(i as u64));
            }
            beta
        })
        .collect();
    let sampled: Vec<VectorField> = modes.iter().map(|m| m.sample(grid)).collect();
    let frames: Vec<VectorField> = (0..t_grid.len())
        .map(|i| {
            let mut frame = VectorField::zeros(grid);
            for (j, mode_field) in sampled.iter().enumerate() {
                let a = lambdas[j].sqrt() * coeffs[j][i];
                frame = frame
                    .add(&mode_field.scale(a))
                    .expect("mode fields share the grid");
            }
            frame
        })
        .collect();
    Ok(QWienerPath {
        t_grid,
        frames,
        modes,
        lambdas,
        coeffs,
        smoothness_k: spec.smoothness_k,
        seed,
    })
}

/// Result of integrating `dv = −v ∘ dW` with the Stratonovich midpoint
/// scheme against the closed-form solution `v₀ e^{−W(t)}`.
#[derive(Debug, Clone, Serialize)]
pub struct StratonovichReport {
    pub n_steps: usize,
    pub max_deviation: f64,
}

/// Heun (Stratonovich midpoint) integration of `dv = −v ∘ dW` along a path.
pub fn heun_exponential_decay(path: &BrownianPath, v0: f64) -> Vec<f64> {
    let w = path.values();
    let mut v = Vec::with_capacity(w.len());
    v.push(v0);
    for i in 1..w.len() {
        let dw = w[i] - w[i - 1];
        let prev = v[i - 1];
        let predictor = prev - prev * dw;
        v.push(prev - 0.5 * (prev + predictor) * dw);
    }
    v
}

/// Integrate the spatially constant reduction along a sampled path and return
/// the worst nodewise deviation from `v₀ e^{−W(t)}`.
pub fn verify_stratonovich_reduction(
    seed: u64,
    n_steps: usize,
    t_run: f64,
    v0: f64,
) -> Result<StratonovichReport, NoiseError> {
    let path = sample_brownian(t_run, n_steps, seed)?;
    Ok(stratonovich_deviation(&path, v0))
}

pub fn stratonovich_deviation(path: &BrownianPath, v0: f64) -> StratonovichReport {
    let numeric = heun_exponential_decay(path, v0);
    let max_deviation = numeric
        .iter()
        .zip(path.values())
        .map(|(v, w)| (v - v0 * (-w).exp()).abs())
        .fold(0.0f64, f64::max);
    StratonovichReport { n_steps: path.t_grid().n_steps(), max_deviation }
}

/// Mean deviation over `paths` independent seeds at each step count, plus the
/// ratios between consecutive refinements.
#[derive(Debug, Clone, Serialize)]
pub struct StratonovichStudy {
    pub step_counts: Vec<usize>,
    pub mean_errors: Vec<f64>,
    pub ratios: Vec<f64>,
}

pub fn stratonovich_order_study(
    base_seed: u64,
    paths: usize,
    step_counts: &[usize],
    t_run: f64,
    v0: f64,
) -> Result<StratonovichStudy, NoiseError> {
    let mut mean_errors = Vec::with_capacity(step_counts.len());
    for &steps in step_counts {
        let mut total = 0.0;
        for p in 0..paths {
            let report = verify_stratonovich_reduction(base_seed + p as u64, steps, t_run, v0)?;
            total += report.max_deviation;
        }
        mean_errors.push(total / paths as f64);
    }
    let ratios = mean_errors.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(StratonovichStudy { step_counts: step_counts.to_vec(), mean_errors, ratios })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn brownian_starts_at_zero_and_is_deterministic() {
        let a = sample_brownian(1.0, 64, 7).unwrap();
        let b = sample_brownian(1.0, 64, 7).unwrap();
        assert_eq!(a.values()[0], 0.0);
        assert_eq!(a.values(), b.values());
        assert!(sample_brownian(1.0, 0, 7).is_err());
    }

    #[test]
    fn exp_factor_identities() {
        let path = sample_brownian(1.0, 128, 3).unwrap();
        let ef = exp_factor(&path).unwrap();
        assert_eq!(ef.z()[0], 1.0);
        for (z, zi) in ef.z().iter().zip(ef.z_inv()) {
            assert_abs_diff_eq!(z * zi, 1.0, epsilon = 1e-14);
        }
        let zero = BrownianPath::zero(1.0, 8).unwrap();
        let ef0 = exp_factor(&zero).unwrap();
        assert!(ef0.z().iter().all(|z| *z == 1.0));
    }

    #[test]
    fn exp_factor_guards_overflow() {
        let mut path = BrownianPath::zero(1.0, 4).unwrap();
        path.w[3] = 701.0;
        assert!(matches!(exp_factor(&path), Err(NoiseError::ExpOverflow(_))));
    }

    #[test]
    fn exp_at_unit_value() {
        let mut path = BrownianPath::zero(1.0, 4).unwrap();
        path.w[2] = 1.0;
        let ef = exp_factor(&path).unwrap();
        assert_relative_eq!(ef.z()[2], std::f64::consts::E, max_relative = 1e-15);
    }

    #[test]
    fn terminal_variance_matches_horizon() {
        // Monte Carlo estimate of Var[W(T)] over 10⁴ seeds
        let t_run = 0.7;
        let n = 10_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for seed in 0..n {
            let w = *sample_brownian(t_run, 16, seed).unwrap().values().last().unwrap();
            sum += w;
            sum2 += w * w;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        assert!((var - t_run).abs() / t_run < 0.05, "var {var}");
    }

    #[test]
    fn q_wiener_frames_start_zero_and_are_divergence_free() {
        let grid = GridSpec::torus(2, 32).unwrap();
        let spec = QWienerSpec { mode_count: 6, ..Default::default() };
        let path = sample_q_wiener(grid, &spec, 0.5, 16, 5).unwrap();
        assert_eq!(path.frame(0).sup_norm(), 0.0);
        for frame in path.frames() {
            let div_sup = frame.divergence().sup_norm();
            assert!(div_sup <= 1e-12 * (1.0 + frame.sup_norm()), "div {div_sup}");
        }
    }

    #[test]
    fn q_wiener_respects_mode_budget() {
        let grid = GridSpec::torus(2, 8).unwrap();
        let spec = QWienerSpec { mode_count: 10_000, ..Default::default() };
        assert!(matches!(
            sample_q_wiener(grid, &spec, 0.5, 4, 1),
            Err(NoiseError::ModeBudget { .. })
        ));
    }

    #[test]
    fn single_mode_coefficient_variance() {
        let grid = GridSpec::torus(2, 16).unwrap();
        let spec = QWienerSpec { mode_count: 1, decay_exponent: 4.0, smoothness_k: 3.0 };
        // λ₁ = 1 regardless of decay; coefficient β₁(T) should have variance T
        let t_run = 0.5;
        let n = 10_000;
        let mut sum2 = 0.0;
        let mut sum = 0.0;
        for seed in 0..n {
            let path = sample_q_wiener(grid, &spec, t_run, 8, seed).unwrap();
            let b = path.coefficient(0, 8);
            sum += b;
            sum2 += b * b;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        assert!((var - t_run).abs() / t_run < 0.05, "var {var}");
    }

    #[test]
    fn mode_enumeration_is_orthogonal_to_wavevectors() {
        for dim in [2usize, 3] {
            let grid = GridSpec::torus(dim, 16).unwrap();
            let modes = divergence_free_modes(grid);
            assert!(!modes.is_empty());
            for m in modes.iter().take(40) {
                let dot: f64 = (0..3).map(|a| m.wavevector[a] as f64 * m.polarization[a]).sum();
                assert_abs_diff_eq!(dot, 0.0, epsilon = 1e-12);
                let len: f64 = m.polarization.iter().map(|p| p * p).sum();
                assert_abs_diff_eq!(len, 1.0, epsilon = 1e-12);
            }
            // ordered by |κ|²
            for w in modes.windows(2) {
                assert!(w[0].wavevector_sq() <= w[1].wavevector_sq());
            }
        }
    }

    #[test]
    fn heun_is_exact_for_zero_path_and_zero_state() {
        let path = BrownianPath::zero(1.0, 32).unwrap();
        let v = heun_exponential_decay(&path, 2.0);
        assert!(v.iter().all(|x| *x == 2.0));
        let random = sample_brownian(1.0, 32, 4).unwrap();
        let v0 = heun_exponential_decay(&random, 0.0);
        assert!(v0.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn heun_converges_at_strong_order() {
        let study =
            stratonovich_order_study(100, 100, &[256, 512, 1024], 1.0, 1.0).unwrap();
        for r in &study.ratios {
            assert!(*r >= 1.3, "ratios {:?}", study.ratios);
        }
    }
}
