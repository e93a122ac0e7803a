use std::fs;
use std::path::Path;

use serde::Serialize;

use imcf_core::counterexample::{run_and_certify, search_s0, Failure};
use imcf_core::flow::{run, FlowControls, FlowOutcome, FlowTrace};
use imcf_core::geometry::{gauss_identity_check, geometry_report, GraphSurface};
use imcf_core::io::{write_coeffs, write_field};
use imcf_core::roundness::{ball_model_limit, ball_model_radius, ball_model_radius_inverse};
use imcf_core::Error;

use crate::config::{Battery, Profile, RunConfig};
use crate::CliError;

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Other(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Other(format!("cannot write {}: {e}", path.display())))
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn breakdown(outcome: &FlowOutcome) -> Option<String> {
    match outcome {
        FlowOutcome::Completed => None,
        FlowOutcome::Breakdown { t, node, h } => {
            Some(format!("mean convexity lost at t = {t}: H = {h} at node {node}"))
        }
    }
}

/// Geometry of the configured initial surface.
pub fn cmd_report(config: &RunConfig) -> Result<bool, CliError> {
    let grid = config.grid()?;
    let surface = config.initial_surface(&grid)?;
    let report = geometry_report(&surface);
    let summary = report.summary();
    let dir = config.output_path();
    write(&dir, "report.json", &json(&summary))?;
    write(&dir, "mean_curvature.field", &write_field(&report.mean_curvature))?;
    write(&dir, "aring2.field", &write_field(&report.aring2))?;
    println!(
        "n = {}, area = {:.10e}, mtilde = {:.10e}, Q = {:.10e}, H in [{:.6}, {:.6}]",
        summary.dimension, summary.area, summary.mtilde, summary.q, summary.min_h, summary.max_h
    );
    println!("wrote {}", dir.display());
    Ok(true)
}

#[derive(Serialize)]
struct FlowSummary {
    dimension: usize,
    samples: usize,
    steps: usize,
    rejected_steps: usize,
    outcome: FlowOutcome,
    t: f64,
    area_ratio: f64,
    mtilde: f64,
    #[serde(rename = "Q")]
    q: f64,
}

fn write_trace(dir: &Path, trace: &FlowTrace) -> Result<(), CliError> {
    write(dir, "trace.csv", &trace.to_csv())?;
    let snapshots = dir.join("snapshots");
    for k in 0..trace.len() {
        write(&snapshots, &format!("profile_{k:04}.field"), &write_field(&trace.profile_snapshot(k)?))?;
    }
    let last = trace.samples.last().expect("trace has samples");
    write(dir, "final_coeffs.json", &(write_coeffs(&trace.grid, &last.coeffs)? + "\n"))?;
    Ok(())
}

pub fn cmd_flow(config: &RunConfig) -> Result<bool, CliError> {
    let grid = config.grid()?;
    let surface = config.initial_surface(&grid)?;
    let trace = run(surface, &config.flow)?;
    let dir = config.output_path();
    write_trace(&dir, &trace)?;
    let last = trace.samples.last().expect("trace has samples");
    let summary = FlowSummary {
        dimension: trace.dimension,
        samples: trace.len(),
        steps: trace.steps,
        rejected_steps: trace.rejected_steps,
        outcome: trace.outcome.clone(),
        t: last.t,
        area_ratio: last.area / trace.initial_area(),
        mtilde: last.mtilde,
        q: last.q,
    };
    write(&dir, "flow.json", &json(&summary))?;
    println!(
        "t = {}, {} samples, {} steps ({} rejected), area ratio {:.10e}, mtilde {:.10e}",
        summary.t, summary.samples, summary.steps, summary.rejected_steps, summary.area_ratio, summary.mtilde
    );
    println!("wrote {}", dir.display());
    match breakdown(&trace.outcome) {
        Some(message) => Err(CliError::Breakdown(message)),
        None => Ok(true),
    }
}

pub fn cmd_certify(config: &RunConfig) -> Result<bool, CliError> {
    let Profile::Fbar { s, search_s0: search, fbar } = &config.profile else {
        return Err(CliError::Config("profile: certify needs the fbar preset".into()));
    };
    let grid = config.grid()?;
    let settings = &config.certify;
    let s0 = if *search {
        search_s0(fbar, &grid, settings)?.s0
    } else {
        *s
    };
    let report = run_and_certify(fbar, &grid, s0, settings)?;
    let dir = config.output_path();
    write(&dir, "certification.json", &json(&report))?;
    println!("n = {}, c0 = {:.10e}, s0 = {}", report.dimension, report.c0, report.s0);
    for c in &report.conditions {
        let tag = if c.passed { "ok  " } else { "FAIL" };
        println!("  [{tag}] {}: {:.6e} (bound {:.6e})", c.name, c.value, c.bound);
    }
    println!("{}", report.conclusion);
    println!("wrote {}", dir.display());
    if report.failure == Some(Failure::Breakdown) {
        return Err(CliError::Breakdown(report.conclusion));
    }
    Ok(report.passed)
}

#[derive(Serialize)]
struct Check {
    name: String,
    value: f64,
    threshold: f64,
    passed: bool,
}

/// Passes when `value < threshold`.
fn check(name: &str, value: f64, threshold: f64) -> Check {
    Check {
        name: name.into(),
        value,
        threshold,
        passed: value < threshold,
    }
}

#[derive(Serialize)]
struct VerifyReport {
    battery: Battery,
    dimension: usize,
    checks: Vec<Check>,
    passed: bool,
}

fn worst(trace: &FlowTrace, f: impl Fn(usize) -> imcf_core::Result<f64>) -> Result<f64, CliError> {
    let mut m = 0.0_f64;
    for k in 1..trace.len().saturating_sub(1) {
        m = m.max(f(k)?);
    }
    Ok(m)
}

fn verify_default(config: &RunConfig, checks: &mut Vec<Check>) -> Result<(), CliError> {
    let v = &config.verify;
    let grid = config.grid()?;
    let surface = config.initial_surface(&grid)?;
    let controls = |cadence: f64| FlowControls {
        t_final: v.t_final,
        cadence,
        dt_max: cadence,
        keep_fields: true,
        ..config.flow.clone()
    };
    let coarse = run(surface.clone(), &controls(v.cadence))?;
    let fine = run(surface.clone(), &controls(0.5 * v.cadence))?;
    for trace in [&coarse, &fine] {
        if let Some(message) = breakdown(&trace.outcome) {
            return Err(CliError::Breakdown(message));
        }
    }
    type Monitor = fn(&FlowTrace, usize) -> imcf_core::Result<f64>;
    let monitors: [(&str, Monitor); 4] = [
        ("monotonicity", |t, k| Ok(t.monotonicity_residual(k)?.relative)),
        ("h-evolution", |t, k| Ok(t.h_evolution_residual(k)?.relative)),
        ("aring-evolution", |t, k| Ok(t.aring_evolution_residual(k)?.relative)),
        ("integrated aring-evolution", |t, k| Ok(t.integrated_aring_residual(k)?.relative)),
    ];
    for (name, monitor) in monitors {
        let a = worst(&coarse, |k| monitor(&coarse, k))?;
        let b = worst(&fine, |k| monitor(&fine, k))?;
        checks.push(check(&format!("{name} residual"), a, v.residual_tolerance));
        let order = (a / b).log2();
        let (lo, hi) = v.order_band;
        checks.push(Check {
            name: format!("{name} refinement order"),
            value: order,
            threshold: lo,
            passed: order >= lo && order <= hi,
        });
    }
    let report = geometry_report(&surface);
    checks.push(check("closed-form |Å|² gap", report.closed_form_gap, v.exact_tolerance));
    if grid.dimension() == 3 {
        let lemma = worst(&coarse, |k| Ok(coarse.gauss_bonnet_consistency(k)?.relative))?;
        checks.push(check("gauss-bonnet consistency", lemma, v.exact_tolerance.max(1e-6)));
        checks.push(check("gauss identity", gauss_identity_check(&surface)?, v.exact_tolerance));
    }
    Ok(())
}

fn verify_sphere(config: &RunConfig, checks: &mut Vec<Check>) -> Result<(), CliError> {
    let v = &config.verify;
    let grid = config.grid()?;
    let n = grid.dimension() as f64;
    let r0 = 1.0;
    let controls = FlowControls {
        t_final: v.t_final,
        cadence: v.cadence,
        keep_fields: true,
        ..config.flow.clone()
    };
    let trace = run(GraphSurface::sphere(&grid, r0)?, &controls)?;
    let exact_radius = |t: f64| ((t / (n - 1.0)).exp() * f64::sinh(r0)).asinh();
    let mut radius = 0.0_f64;
    let mut area = 0.0_f64;
    let mut modified = 0.0_f64;
    let mut h_rate = 0.0_f64;
    for (k, s) in trace.samples.iter().enumerate() {
        let r = exact_radius(s.t);
        let surface = trace.surface(k)?;
        radius = radius.max((surface.radius().max() - r).abs().max((surface.radius().min() - r).abs()) / r);
        area = area.max((s.area / trace.initial_area() - s.t.exp()).abs() / s.t.exp());
        modified = modified.max(s.q.abs());
        if let Some(fields) = &s.fields {
            let exact = -1.0 / (r.sinh() * r.cosh());
            h_rate = fields.h_rhs.iter().fold(h_rate, |m, x| m.max((x - exact).abs()));
        }
    }
    let mono = worst(&trace, |k| Ok(trace.monotonicity_residual(k)?.absolute))?;
    let aring = worst(&trace, |k| Ok(trace.aring_evolution_residual(k)?.absolute))?;
    let tol = v.exact_tolerance;
    checks.push(check("radius vs exact ODE (relative)", radius, tol));
    checks.push(check("area vs e^t (relative)", area, tol));
    checks.push(check("|Q| (= |mtilde| when n = 3)", modified, tol));
    checks.push(check("H evolution vs exact rate", h_rate, tol));
    checks.push(check("monotonicity residual (absolute)", mono, tol));
    checks.push(check("aring-evolution residual (absolute)", aring, tol));
    let round_trip = (1..200)
        .map(|k| {
            let rho = k as f64 / 100.0;
            ball_model_radius_inverse(rho)
                .and_then(ball_model_radius)
                .map(|x| (x - rho).abs())
        })
        .collect::<imcf_core::Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0_f64, f64::max);
    checks.push(check("ball model round trip", round_trip, tol));
    Ok(())
}

pub fn cmd_verify(config: &RunConfig) -> Result<bool, CliError> {
    let mut checks = Vec::new();
    match config.verify.battery {
        Battery::Default => verify_default(config, &mut checks)?,
        Battery::Sphere => verify_sphere(config, &mut checks)?,
    }
    let passed = checks.iter().all(|c| c.passed);
    let report = VerifyReport {
        battery: config.verify.battery,
        dimension: config.dimension,
        checks,
        passed,
    };
    let dir = config.output_path();
    write(&dir, "verify.json", &json(&report))?;
    for c in &report.checks {
        let tag = if c.passed { "ok  " } else { "FAIL" };
        println!("  [{tag}] {}: {:.6e} (threshold {:.6e})", c.name, c.value, c.threshold);
    }
    println!("wrote {}", dir.display());
    Ok(passed)
}

#[derive(Serialize)]
struct BallModelSummary {
    t_final: f64,
    tolerance: f64,
    gap: f64,
    history: Vec<f64>,
    monotone: bool,
    passed: bool,
}

pub fn cmd_ball_model(config: &RunConfig) -> Result<bool, CliError> {
    let b = &config.ball_model;
    let grid = config.grid()?;
    let surface = config.initial_surface(&grid)?;
    let controls = FlowControls {
        t_final: b.t_final,
        cadence: b.cadence,
        keep_fields: false,
        ..config.flow.clone()
    };
    let trace = run(surface, &controls)?;
    if let Some(message) = breakdown(&trace.outcome) {
        return Err(CliError::Breakdown(message));
    }
    let limit = ball_model_limit(&trace, b.tolerance)?;
    let summary = BallModelSummary {
        t_final: b.t_final,
        tolerance: b.tolerance,
        gap: limit.gap,
        history: limit.history.clone(),
        monotone: limit.monotone,
        passed: limit.gap < b.tolerance,
    };
    let dir = config.output_path();
    write(&dir, "ball_model.json", &json(&summary))?;
    write(&dir, "ball_limit.field", &write_field(&limit.limit))?;
    write(&dir, "ball_target.field", &write_field(&limit.target))?;
    println!("sup gap {:.6e} at t = {} (tolerance {:.1e})", summary.gap, summary.t_final, summary.tolerance);
    println!("wrote {}", dir.display());
    Ok(summary.passed)
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::FlowBreakdown { .. } | Error::StepRejected { .. } | Error::NonFinite { .. } => {
                CliError::Breakdown(e.to_string())
            }
            Error::Domain(_) | Error::Unsupported(_) | Error::InvalidGrid(_) | Error::Parse(_) => {
                CliError::Config(e.to_string())
            }
            Error::NotConverged { .. } | Error::InsufficientData(_) => CliError::Assertion(e.to_string()),
            _ => CliError::Other(e.to_string()),
        }
    }
}
