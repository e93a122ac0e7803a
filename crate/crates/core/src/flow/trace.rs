use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use super::diagnostics::evolution_fields;
use super::FlowState;
use crate::error::{Error, Result};
use crate::geometry::{GeometryReport, GraphSurface};
use crate::sphere::{SphereField, SphereGrid};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
pub enum FlowOutcome {
    Completed,
    /// Mean convexity was lost; the trace stops at the last good sample.
    Breakdown { t: f64, node: usize, h: f64 },
}

/// Nodal fields kept for the pointwise evolution residuals.
#[derive(Clone, Debug)]
pub struct SampleFields {
    pub h: Vec<f64>,
    pub aring2: Vec<f64>,
    /// Right-hand side of the evolution of H under normal motion.
    pub h_rhs: Vec<f64>,
    /// Right-hand side of the evolution of |Å|² under normal motion.
    pub aring_rhs: Vec<f64>,
    /// Rate of change at fixed θ caused by the tangential drift of the
    /// radial parametrization.
    pub h_transport: Vec<f64>,
    pub aring_transport: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct FlowSample {
    pub t: f64,
    pub coeffs: Vec<f64>,
    pub area: f64,
    pub hawking: Option<f64>,
    pub mtilde: f64,
    pub q: f64,
    pub min_h: f64,
    pub max_h: f64,
    pub aring2_integral: f64,
    pub gradient_integral: f64,
    /// |Σ| ∫|∇H|²/H², the predicted dm̃/dt.
    pub mtilde_rate: f64,
    /// Predicted dQ/dt.
    pub q_rate: f64,
    /// ∫ (right-hand side of the |Å|² evolution) dμ.
    pub aring_rhs_integral: f64,
    pub sup_h2_excess: f64,
    pub sup_excess2_plus_aring2: f64,
    pub sup_grad_a2: f64,
    pub fields: Option<SampleFields>,
}

/// Comparison of a finite-difference rate with its predicted value.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Residual {
    pub lhs: f64,
    pub rhs: f64,
    pub absolute: f64,
    /// absolute / scale of the prediction; falls back to `absolute` when the
    /// prediction itself vanishes (below 1e-12).
    pub relative: f64,
}

impl Residual {
    fn new(lhs: f64, rhs: f64, absolute: f64, scale: f64) -> Self {
        let relative = if scale > 1e-12 { absolute / scale } else { absolute };
        Residual { lhs, rhs, absolute, relative }
    }
}

#[derive(Clone, Debug)]
pub struct FlowTrace {
    pub dimension: usize,
    pub grid: Arc<SphereGrid>,
    pub samples: Vec<FlowSample>,
    pub steps: usize,
    pub rejected_steps: usize,
    pub outcome: FlowOutcome,
    keep_fields: bool,
}

pub const CSV_HEADER: &str =
    "t,area,mH,mtilde,Q,minH,maxH,mono_residual,hev_residual,aring_residual,pinch1,pinch2";

/// Weights of the second-order three-point first derivative on a
/// possibly non-uniform stencil t₋ < t₀ < t₊.
fn centered_weights(tm: f64, t0: f64, tp: f64) -> [f64; 3] {
    let (h1, h2) = (t0 - tm, tp - t0);
    [-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2))]
}

impl FlowTrace {
    pub(super) fn new(initial: &GraphSurface, report: &GeometryReport, keep_fields: bool) -> Self {
        let mut trace = FlowTrace {
            dimension: initial.dimension(),
            grid: initial.grid().clone(),
            samples: Vec::new(),
            steps: 0,
            rejected_steps: 0,
            outcome: FlowOutcome::Completed,
            keep_fields,
        };
        trace.push(&FlowState::new(initial.clone()), report);
        trace
    }

    pub(super) fn push(&mut self, state: &FlowState, report: &GeometryReport) {
        let (fields, aring_rhs_integral) = evolution_fields(&state.surface, report);
        self.samples.push(FlowSample {
            t: state.t,
            coeffs: state.surface.coeffs().to_vec(),
            area: report.area,
            hawking: report.hawking,
            mtilde: report.modified,
            q: report.q,
            min_h: report.min_h,
            max_h: report.max_h,
            aring2_integral: report.aring2_integral,
            gradient_integral: report.gradient_integral,
            mtilde_rate: report.mtilde_drift(),
            q_rate: report.q_drift(),
            aring_rhs_integral,
            sup_h2_excess: report.sup_h2_excess,
            sup_excess2_plus_aring2: report.sup_excess2_plus_aring2,
            sup_grad_a2: report.sup_grad_a2,
            fields: self.keep_fields.then_some(fields),
        });
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn initial_area(&self) -> f64 {
        self.samples[0].area
    }

    pub fn surface(&self, k: usize) -> Result<GraphSurface> {
        GraphSurface::from_coeffs(&self.grid, self.samples[k].coeffs.clone())
    }

    pub fn final_surface(&self) -> Result<GraphSurface> {
        self.surface(self.samples.len() - 1)
    }

    /// f_t = r̃(·, t) - t/(n-1) at sample k.
    pub fn profile_snapshot(&self, k: usize) -> Result<SphereField> {
        let shift = self.samples[k].t / (self.dimension as f64 - 1.0);
        Ok(self.surface(k)?.radius().map(|r| r - shift))
    }

    fn interior(&self, k: usize) -> Result<[f64; 3]> {
        if k == 0 || k + 1 >= self.samples.len() {
            return Err(Error::InsufficientData(format!(
                "sample {k} has no neighbours on both sides (trace has {} samples)",
                self.samples.len()
            )));
        }
        let s = &self.samples;
        Ok(centered_weights(s[k - 1].t, s[k].t, s[k + 1].t))
    }

    fn rate_of(&self, k: usize, f: impl Fn(&FlowSample) -> f64) -> Result<f64> {
        let w = self.interior(k)?;
        Ok(w[0] * f(&self.samples[k - 1]) + w[1] * f(&self.samples[k]) + w[2] * f(&self.samples[k + 1]))
    }

    /// Centered dm̃/dt against |Σ|∫|∇H|²/H² (n = 3); for n ≥ 4 the
    /// monotone quantity is Q and the prediction its integrated rate.
    pub fn monotonicity_residual(&self, k: usize) -> Result<Residual> {
        let (lhs, rhs) = if self.dimension == 3 {
            (self.rate_of(k, |s| s.mtilde)?, self.samples[k].mtilde_rate)
        } else {
            (self.rate_of(k, |s| s.q)?, self.samples[k].q_rate)
        };
        Ok(Residual::new(lhs, rhs, (lhs - rhs).abs(), rhs.abs()))
    }

    fn field_residual(
        &self,
        k: usize,
        value: impl Fn(&SampleFields) -> &[f64],
        rhs: impl Fn(&SampleFields) -> &[f64],
        transport: impl Fn(&SampleFields) -> &[f64],
    ) -> Result<Residual> {
        let w = self.interior(k)?;
        let get = |j: usize| {
            self.samples[j].fields.as_ref().ok_or_else(|| {
                Error::InsufficientData("trace was recorded without nodal fields".into())
            })
        };
        let (a, b, c) = (get(k - 1)?, get(k)?, get(k + 1)?);
        let (va, vb, vc) = (value(a), value(b), value(c));
        let (r, tr) = (rhs(b), transport(b));
        let (mut worst, mut scale, mut at) = (0.0_f64, 0.0_f64, 0usize);
        for i in 0..vb.len() {
            let normal_rate = w[0] * va[i] + w[1] * vb[i] + w[2] * vc[i] - tr[i];
            let gap = (normal_rate - r[i]).abs();
            if gap > worst {
                worst = gap;
                at = i;
            }
            scale = scale.max(r[i].abs());
        }
        let lhs = w[0] * va[at] + w[1] * vb[at] + w[2] * vc[at] - tr[at];
        Ok(Residual::new(lhs, r[at], worst, scale))
    }

    /// Sup-norm residual of the mean curvature evolution
    /// ∂H/∂t = ΔH/H² - 2|∇H|²/H³ - |A|²/H + (n-1)/H.
    pub fn h_evolution_residual(&self, k: usize) -> Result<Residual> {
        self.field_residual(k, |f| &f.h, |f| &f.h_rhs, |f| &f.h_transport)
    }

    /// Sup-norm residual of the evolution of |Å|².
    pub fn aring_evolution_residual(&self, k: usize) -> Result<Residual> {
        self.field_residual(k, |f| &f.aring2, |f| &f.aring_rhs, |f| &f.aring_transport)
    }

    /// d/dt ∫|Å|² by finite differences against ∫(evolution rhs) + ∫|Å|²,
    /// the last term coming from ∂dμ/∂t = dμ.
    pub fn integrated_aring_residual(&self, k: usize) -> Result<Residual> {
        let lhs = self.rate_of(k, |s| s.aring2_integral)?;
        let s = &self.samples[k];
        let rhs = s.aring_rhs_integral + s.aring2_integral;
        Ok(Residual::new(lhs, rhs, (lhs - rhs).abs(), rhs.abs()))
    }

    /// Spatial consistency for n = 3: ∫(evolution rhs) + ∫|Å|² against
    /// -∫|Å|² - ∫|∇H|²/H², which follows from the monotonicity formula and
    /// the Gauss–Bonnet identity.
    pub fn gauss_bonnet_consistency(&self, k: usize) -> Result<Residual> {
        if self.dimension != 3 {
            return Err(Error::Unsupported("the consistency identity is specific to n = 3".into()));
        }
        let s = &self.samples[k];
        let lhs = s.aring_rhs_integral + s.aring2_integral;
        let rhs = -s.aring2_integral - s.gradient_integral;
        Ok(Residual::new(lhs, rhs, (lhs - rhs).abs(), rhs.abs()))
    }

    /// n = 3: |Σ₀| sup|H² - 4|; n ≥ 4: |Σ₀|^{4/(n-1)} sup(|H-(n-1)|² + |Å|²).
    pub fn pinch1(&self, k: usize) -> f64 {
        let n = self.dimension as f64;
        let s = &self.samples[k];
        if self.dimension == 3 {
            self.initial_area() * s.sup_h2_excess
        } else {
            self.initial_area().powf(4.0 / (n - 1.0)) * s.sup_excess2_plus_aring2
        }
    }

    /// |Σ₀|^{6/(n-1)} sup|∇A|².
    pub fn pinch2(&self, k: usize) -> f64 {
        let n = self.dimension as f64;
        self.initial_area().powf(6.0 / (n - 1.0)) * self.samples[k].sup_grad_a2
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        let rel = |r: Result<Residual>| r.map(|r| r.relative).unwrap_or(f64::NAN);
        for (k, s) in self.samples.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                s.t,
                s.area,
                s.hawking.unwrap_or(f64::NAN),
                s.mtilde,
                s.q,
                s.min_h,
                s.max_h,
                rel(self.monotonicity_residual(k)),
                rel(self.h_evolution_residual(k)),
                rel(self.aring_evolution_residual(k)),
                self.pinch1(k),
                self.pinch2(k),
            );
        }
        out
    }
}
