//! Inverse mean curvature flow of radial graphs.
//!
//! A graph r = r̃(θ, t) moves with normal speed 1/H exactly when
//! ∂r̃/∂t = v/H; the radial parametrization differs from the normal one by
//! a tangential reparametrization, which the residual monitors undo.

mod diagnostics;
pub(crate) mod trace;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{geometry_report, GeometryReport, GraphSurface, NodeGeometry};
use crate::sphere::{analyze_centered, SphereGrid};

pub use diagnostics::{extract_profile, fit_decay, pinching_diagnostics, DecayFit, PinchingReport, ProfileExtraction};
pub use trace::{FlowOutcome, FlowSample, FlowTrace, Residual, SampleFields};

/// Stability interval of classical RK4 on the negative real axis.
const RK4_REAL_STABILITY: f64 = 2.785;

pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowControls {
    pub t_final: f64,
    /// Spacing of trace samples.
    pub cadence: f64,
    pub c_stab: f64,
    pub dt_max: f64,
    /// Fraction of non-constant spectral energy allowed in the top quarter of degrees.
    pub tail_tolerance: f64,
    /// Keep nodal fields at every sample (needed for pointwise residuals).
    pub keep_fields: bool,
    /// Halvings of dt attempted before a rejected step becomes fatal.
    pub max_rejections: usize,
}

impl Default for FlowControls {
    fn default() -> Self {
        FlowControls {
            t_final: 1.0,
            cadence: 0.05,
            c_stab: 0.5,
            dt_max: 0.05,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
            keep_fields: true,
            max_rejections: 6,
        }
    }
}

impl FlowControls {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be positive and finite, got {x}")))
            }
        };
        positive("cadence", self.cadence)?;
        positive("c_stab", self.c_stab)?;
        positive("dt_max", self.dt_max)?;
        positive("tail_tolerance", self.tail_tolerance)?;
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::Domain(format!("t_final must be non-negative, got {}", self.t_final)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct FlowState {
    pub t: f64,
    pub surface: GraphSurface,
}

impl FlowState {
    pub fn new(surface: GraphSurface) -> Self {
        FlowState { t: 0.0, surface }
    }

    pub fn report(&self) -> GeometryReport {
        geometry_report(&self.surface)
    }
}

/// Radial speed v/H projected to the band limit, plus its nodal maximum.
fn radial_speed(grid: &Arc<SphereGrid>, coeffs: &[f64], t: f64) -> Result<(Vec<f64>, f64)> {
    let frame = grid.frame();
    let d = grid.derivatives(coeffs);
    let mut speed = Vec::with_capacity(d.values.len());
    for k in 0..d.values.len() {
        let r = d.values[k];
        if !(r > 0.0) {
            return Err(Error::StepRejected {
                t,
                dt: f64::NAN,
                reason: format!("radius {r} at node {k} left the star-shaped domain"),
            });
        }
        let g = NodeGeometry::compute(frame, r, d.grad[k], d.hess[k]);
        let h = g.mean_curvature;
        if !(h > 0.0) {
            return Err(Error::FlowBreakdown { t, node: k, h });
        }
        speed.push(g.v / h);
    }
    let max = speed.iter().fold(0.0_f64, |m, s| m.max(*s));
    Ok((analyze_centered(grid, &speed), max))
}

/// Largest RK4 step for which the linearized flow is stable, times c_stab.
/// The linearization of v/H about a graph damps degree-l modes at rate
/// ≈ l(l+n-2)/(H² sinh²r).
pub fn stable_dt(surface: &GraphSurface, c_stab: f64) -> f64 {
    let grid = surface.grid();
    let l = grid.band_limit() as f64;
    let lambda = l * (l + grid.dimension() as f64 - 2.0);
    let d = surface.derivatives();
    let frame = grid.frame();
    let mut min = f64::INFINITY;
    for k in 0..d.values.len() {
        let g = NodeGeometry::compute(frame, d.values[k], d.grad[k], d.hess[k]);
        min = min.min((g.mean_curvature * g.sinh).powi(2));
    }
    c_stab * RK4_REAL_STABILITY * min / lambda.max(1.0)
}

/// Ratio of spectral energy in degrees above 3L/4 to all non-constant energy.
pub fn tail_fraction(grid: &SphereGrid, coeffs: &[f64]) -> f64 {
    let cut = 3 * grid.band_limit() / 4;
    let (mut tail, mut total) = (0.0, 0.0);
    for (i, c) in coeffs.iter().enumerate().skip(1) {
        total += c * c;
        if grid.degree_of(i) > cut {
            tail += c * c;
        }
    }
    // Round surfaces have no non-constant energy to compare against.
    let floor = (1e-12 * coeffs[0]).powi(2);
    if tail <= floor {
        0.0
    } else {
        tail / total
    }
}

/// One classical RK4 step of ∂r̃/∂t = v/H.
pub fn step(state: &FlowState, dt: f64) -> Result<FlowState> {
    step_with_tolerance(state, dt, DEFAULT_TAIL_TOLERANCE)
}

pub fn step_with_tolerance(state: &FlowState, dt: f64, tail_tolerance: f64) -> Result<FlowState> {
    let grid = state.surface.grid();
    let c0 = state.surface.coeffs();
    let t = state.t;
    let shifted = |k: &[f64], h: f64| -> Vec<f64> { c0.iter().zip(k).map(|(c, k)| c + h * k).collect() };
    let (k1, m1) = radial_speed(grid, c0, t)?;
    let (k2, m2) = radial_speed(grid, &shifted(&k1, 0.5 * dt), t + 0.5 * dt)?;
    let (k3, m3) = radial_speed(grid, &shifted(&k2, 0.5 * dt), t + 0.5 * dt)?;
    let (k4, m4) = radial_speed(grid, &shifted(&k3, dt), t + dt)?;
    let next: Vec<f64> = (0..c0.len())
        .map(|i| c0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    let reject = |reason: String| Error::StepRejected { t, dt, reason };
    if let Some(bad) = next.iter().find(|c| !c.is_finite()) {
        return Err(reject(format!("non-finite coefficient {bad}")));
    }
    let tail = tail_fraction(grid, &next);
    if tail > tail_tolerance {
        return Err(reject(format!("spectral tail fraction {tail:e} above {tail_tolerance:e}")));
    }
    let surface = GraphSurface::from_coeffs(grid, next).map_err(|e| reject(e.to_string()))?;
    let max_speed = m1.max(m2).max(m3).max(m4);
    let growth = surface.radius().max() - state.surface.radius().max();
    if growth > 2.0 * dt * max_speed + 1e-12 {
        return Err(reject(format!(
            "max radius grew by {growth:e}, more than the speed bound {:e} allows",
            dt * max_speed
        )));
    }
    Ok(FlowState { t: t + dt, surface })
}

/// Integrates the flow from `initial` to `controls.t_final`, sampling every
/// `controls.cadence`. Loss of mean convexity stops the run and is recorded
/// in the trace outcome; the samples up to that point are kept.
pub fn run(initial: GraphSurface, controls: &FlowControls) -> Result<FlowTrace> {
    controls.validate()?;
    let report = geometry_report(&initial);
    if !report.mean_convex {
        return Err(Error::Domain(format!(
            "initial surface is not mean-convex (min H = {})",
            report.min_h
        )));
    }
    let mut trace = FlowTrace::new(&initial, &report, controls.keep_fields);
    let mut state = FlowState::new(initial);
    let mut sample_index = 1usize;
    while state.t < controls.t_final - 1e-12 {
        let target = (sample_index as f64 * controls.cadence).min(controls.t_final);
        match advance(&mut state, target, controls, &mut trace) {
            Ok(()) => {}
            Err(Error::FlowBreakdown { t, node, h }) => {
                trace.outcome = FlowOutcome::Breakdown { t, node, h };
                return Ok(trace);
            }
            Err(e) => return Err(e),
        }
        let report = state.report();
        if !report.mean_convex {
            trace.outcome = FlowOutcome::Breakdown {
                t: state.t,
                node: report.mean_curvature.argmin(),
                h: report.min_h,
            };
            return Ok(trace);
        }
        trace.push(&state, &report);
        sample_index += 1;
    }
    Ok(trace)
}

/// Steps from state.t to exactly `target` with uniform sub-steps no larger
/// than the stability bound or dt_max, halving on rejection.
fn advance(state: &mut FlowState, target: f64, controls: &FlowControls, trace: &mut FlowTrace) -> Result<()> {
    let mut refine = 0usize;
    loop {
        let remaining = target - state.t;
        if remaining <= 1e-14 {
            state.t = target;
            return Ok(());
        }
        let bound = stable_dt(&state.surface, controls.c_stab).min(controls.dt_max) / (1u64 << refine) as f64;
        let count = (remaining / bound).ceil().max(1.0);
        let dt = remaining / count;
        match step_with_tolerance(state, dt, controls.tail_tolerance) {
            Ok(next) => {
                *state = next;
                trace.steps += 1;
            }
            Err(Error::StepRejected { .. }) if refine < controls.max_rejections => {
                trace.rejected_steps += 1;
                refine += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests;
