//! Command-line front end.
//!
//! ```text
//! solver run --config FILE --out DIR [--key value ...]
//! solver verify --report DIR
//! solver compare DIR_A DIR_B
//! ```
//!
//! Any config key may be overridden on the `run` command line as
//! `--key value`. `SOLVER_THREADS` caps the worker-thread count (0 = auto);
//! outputs are byte-identical for any thread count.

use std::path::PathBuf;
use std::process::ExitCode;

use solver_core::config::parse_config_with_overrides;
use solver_core::runner;

const USAGE: &str = "usage:
  solver run --config FILE --out DIR [--key value ...]
  solver verify --report DIR
  solver compare DIR_A DIR_B

run exit status: 0 converged, 2 iteration did not converge, 1 error.
Every config key is also a run flag, e.g. --seed 7 --regime additive.";

fn main() -> ExitCode {
    if let Err(e) = configure_threads() {
        eprintln!("solver: {e}");
        return ExitCode::from(1);
    }
    let args: Vec<String> = std::env::args().skip(1).collect();
    let code = match args.first().map(String::as_str) {
        Some("run") => cmd_run(&args[1..]),
        Some("verify") => cmd_verify(&args[1..]),
        Some("compare") => cmd_compare(&args[1..]),
        Some("--help" | "-h" | "help") => {
            println!("{USAGE}");
            Ok(0)
        }
        _ => Err(USAGE.to_string()),
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(msg) => {
            eprintln!("solver: {msg}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    if let Ok(raw) = std::env::var("SOLVER_THREADS") {
        let n: usize = raw
            .parse()
            .map_err(|_| format!("SOLVER_THREADS must be a nonnegative integer, got `{raw}`"))?;
        if n > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| format!("thread pool: {e}"))?;
        }
    }
    Ok(())
}

/// Scan `--key value` pairs; `config` and `out` are command options, every
/// other key is handed to the config parser as an override.
fn cmd_run(args: &[String]) -> Result<u8, String> {
    let mut config_path: Option<PathBuf> = None;
    let mut out_dir: Option<PathBuf> = None;
    let mut overrides: Vec<(String, String)> = Vec::new();
    let mut it = args.iter();
    while let Some(flag) = it.next() {
        let key = flag
            .strip_prefix("--")
            .ok_or_else(|| format!("expected a --flag, got `{flag}`\n{USAGE}"))?;
        let value = it
            .next()
            .ok_or_else(|| format!("flag --{key} is missing its value"))?
            .clone();
        match key {
            "config" => config_path = Some(PathBuf::from(value)),
            "out" => out_dir = Some(PathBuf::from(value)),
            _ => overrides.push((key.to_string(), value)),
        }
    }
    let config_path = config_path.ok_or("run requires --config FILE")?;
    let out_dir = out_dir.ok_or("run requires --out DIR")?;
    let text = std::fs::read_to_string(&config_path)
        .map_err(|e| format!("cannot read {}: {e}", config_path.display()))?;
    let parsed = parse_config_with_overrides(&text, &overrides).map_err(|e| e.to_string())?;
    for w in &parsed.warnings {
        eprintln!("solver: warning: {w}");
    }
    match runner::run(&parsed.config, &parsed.warnings, &out_dir) {
        Ok(outcome) => {
            let r = &outcome.report;
            println!(
                "regime {:?}: {} after {} sweep(s), final diff {:.3e}, tau = {:.6}{}",
                r.config.regime,
                if outcome.converged { "converged" } else { "did NOT converge" },
                r.solve.iterations,
                r.solve.final_diff,
                r.tau,
                if r.tau_capped { " (capped at horizon)" } else { "" },
            );
            println!(
                "bounds: ball {} | gradient {} | range {} | div-free {}",
                pass_str(r.bounds.ball_pass.unwrap_or(true)),
                pass_str(r.bounds.grad_rho_pass),
                pass_str(r.bounds.max_principle.pass),
                pass_str(r.bounds.div_free_pass),
            );
            println!("report written to {}", out_dir.join("run.json").display());
            Ok(if outcome.converged { 0 } else { 2 })
        }
        Err(e) => Err(format!("{e}")),
    }
}

fn pass_str(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}

fn cmd_verify(args: &[String]) -> Result<u8, String> {
    let dir = match args {
        [flag, dir] if flag == "--report" => PathBuf::from(dir),
        _ => return Err(format!("verify requires --report DIR\n{USAGE}")),
    };
    let report = runner::verify(&dir).map_err(|e| e.to_string())?;
    println!(
        "bounds: ball {} | gradient {} | range {} (violation {:.3e}) | div-free {}",
        pass_str(report.bounds.ball_pass.unwrap_or(true)),
        pass_str(report.bounds.grad_rho_pass),
        pass_str(report.bounds.max_principle.pass),
        report.bounds.max_principle.violation,
        pass_str(report.bounds.div_free_pass),
    );
    println!(
        "residual sup: velocity {:.6e}, density {:.6e}",
        report.residual.velocity_sup, report.residual.density_sup
    );
    Ok(if report.pass { 0 } else { 2 })
}

fn cmd_compare(args: &[String]) -> Result<u8, String> {
    let (a, b) = match args {
        [a, b] => (PathBuf::from(a), PathBuf::from(b)),
        _ => return Err(format!("compare requires two run directories\n{USAGE}")),
    };
    let cmp = runner::compare_runs(&a, &b).map_err(|e| e.to_string())?;
    println!("compared {} node(s)", cmp.nodes_compared);
    println!("rho:     sup L2 {:.6e}, sup W1p {:.6e}", cmp.rho.l2, cmp.rho.w1p);
    println!("v:       sup L2 {:.6e}, sup W1p {:.6e}", cmp.v.l2, cmp.v.w1p);
    println!("grad_pi: sup L2 {:.6e}, sup W1p {:.6e}", cmp.grad_pi.l2, cmp.grad_pi.w1p);
    println!("u:       sup L2 {:.6e}, sup W1p {:.6e}", cmp.u.l2, cmp.u.w1p);
    Ok(0)
}
