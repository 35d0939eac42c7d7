use solver_core::fields::{GridSpec, ScalarField, TimeGrid, TimeSeries};
use solver_core::noise::{exp_factor, sample_brownian};
use solver_core::picard::{run_multiplicative, ProblemSetup, SweepSettings};
use solver_core::runner::taylor_green;
use solver_core::transport::{advect_scalar, range_tolerance, TransportConfig};

fn blob(grid: GridSpec, s: f64) -> ScalarField {
    let pi = std::f64::consts::PI;
    ScalarField::from_fn(grid, |x| {
        let mut b = 1.0;
        for xa in x {
            b *= (s * ((xa - pi).cos() - 1.0)).exp();
        }
        1.0 + b
    })
    .unwrap()
}

fn main() {
    let grid = GridSpec::torus(2, 64).unwrap();
    let t = TimeGrid::new(0.1, 64).unwrap();
    let setup = ProblemSetup {
        grid,
        t_grid: t,
        rho0: blob(grid, 2.0),
        v0: taylor_green(grid, 0.05).unwrap(),
        settings: SweepSettings { ball_radius: Some(3.0), ..Default::default() },
    };
    let path = sample_brownian(0.1, 64, 1).unwrap();
    let run = run_multiplicative(&setup, &path).unwrap();
    let exp = exp_factor(&path).unwrap();
    let frames: Vec<_> = (0..run.state.v.len())
        .map(|i| run.state.v.frame(i).scale(exp.z_inv()[i]))
        .collect();
    let adv = TimeSeries::new(t, frames).unwrap();
    let cfg = TransportConfig::default();
    for s in [60.0, 120.0, 200.0, 400.0] {
        let mut line = format!("sharpness {s}: ");
        for n in [64usize, 128] {
            let g = GridSpec::torus(2, n).unwrap();
            let a = if n == 64 {
                adv.clone()
            } else {
                TimeSeries::new(t, adv.frames().iter().map(|f| f.spectral_upsample(n).unwrap()).collect()).unwrap()
            };
            let rho0 = blob(g, s);
            let out = advect_scalar(&rho0, &a, t, &cfg).unwrap();
            let mut viol = 0.0f64;
            for fr in out.frames() {
                viol = viol.max(fr.max() - 2.0).max(1.0 - fr.min());
            }
            let tol = range_tolerance(g, 1.0, 2.0, 1.0);
            line += &format!("n={n}: viol {viol:.3e} tol {tol:.3e} | ");
        }
        println!("{line}");
    }
}
