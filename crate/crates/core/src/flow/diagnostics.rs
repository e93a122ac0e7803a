use serde::Serialize;

use super::trace::{FlowTrace, SampleFields};
use crate::error::{Error, Result};
use crate::geometry::{GeometryReport, GraphSurface};
use crate::sphere::{analyze_centered, SphereField};

/// Pointwise right-hand sides of the H and |Å|² evolutions, the tangential
/// transport terms, and ∫(|Å|² rhs) dμ.
pub(super) fn evolution_fields(surface: &GraphSurface, report: &GeometryReport) -> (SampleFields, f64) {
    let grid = surface.grid();
    let frame = grid.frame();
    let dim = frame.dim();
    let aring2 = report.aring2.values().to_vec();
    let daring = grid.derivatives(&analyze_centered(grid, &aring2)).grad;
    let len = report.nodes.len();
    let mut fields = SampleFields {
        h: Vec::with_capacity(len),
        aring2,
        h_rhs: Vec::with_capacity(len),
        aring_rhs: Vec::with_capacity(len),
        h_transport: Vec::with_capacity(len),
        aring_transport: Vec::with_capacity(len),
    };
    for (k, g) in report.nodes.iter().enumerate() {
        let h = g.mean_curvature;
        let dh = report.dh[k];
        let ginv = g.inverse_metric();
        let hess = g.induced_hessian(frame, dh, report.d2h[k]);
        let lap = frame.trace_product(&ginv, &hess);
        let grad2 = report.grad_h2.values()[k];
        // (n-1) - |A|², arranged to avoid cancellation near umbilic spheres.
        let defect = -g.aring2 - g.excess * (h + dim) / dim;
        fields.h.push(h);
        fields.h_rhs.push(lap / (h * h) - 2.0 * grad2 / (h * h * h) + defect / h);

        let m = g.traceless;
        let hess_term = frame.trace(&(ginv * hess * m));
        let grad_term = frame.dot(dh, m.apply(ginv.apply(dh)));
        let cubic = frame.trace(&(m * m * m));
        fields.aring_rhs.push(
            2.0 * hess_term / (h * h) - 4.0 * grad_term / (h * h * h) - 4.0 / dim * g.aring2
                - 2.0 * cubic / h,
        );

        let drift = 1.0 / (h * g.sinh * g.v);
        fields.h_transport.push(frame.dot(g.dphi, dh) * drift);
        fields.aring_transport.push(frame.dot(g.dphi, daring[k]) * drift);
    }
    let integral = report.integrate(&fields.aring_rhs);
    (fields, integral)
}

/// Least-squares fit log y = log C + slope·t.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub prefactor: f64,
    pub samples: usize,
}

pub fn fit_decay(ts: &[f64], ys: &[f64]) -> Result<DecayFit> {
    let points: Vec<(f64, f64)> = ts
        .iter()
        .zip(ys)
        .filter(|(_, y)| **y > 0.0 && y.is_finite())
        .map(|(t, y)| (*t, y.ln()))
        .collect();
    if points.len() < 2 {
        return Err(Error::InsufficientData("need two positive samples to fit a decay".into()));
    }
    let m = points.len() as f64;
    let tm = points.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = points.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - tm).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all samples share one time".into()));
    }
    let slope = sxy / sxx;
    Ok(DecayFit {
        slope,
        prefactor: (ym - slope * tm).exp(),
        samples: points.len(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PinchingReport {
    pub dimension: usize,
    pub window: (f64, f64),
    /// Fit of pinch1: |Σ₀| sup|H²-4| (n = 3) or
    /// |Σ₀|^{4/(n-1)} sup(|H-(n-1)|² + |Å|²).
    pub curvature: DecayFit,
    /// Fit of pinch2: |Σ₀|^{6/(n-1)} sup|∇A|².
    pub gradient: DecayFit,
    pub expected_curvature_slope: f64,
    pub expected_gradient_slope: f64,
}

/// Fits the decay of both pinching quantities over samples with t in
/// `window` (whole trace if `None`).
pub fn pinching_diagnostics(trace: &FlowTrace, window: Option<(f64, f64)>) -> Result<PinchingReport> {
    let (lo, hi) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let picked: Vec<usize> = (0..trace.len())
        .filter(|&k| trace.samples[k].t >= lo - 1e-12 && trace.samples[k].t <= hi + 1e-12)
        .collect();
    if picked.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "pinching fit needs at least 5 samples, window has {}",
            picked.len()
        )));
    }
    let ts: Vec<f64> = picked.iter().map(|&k| trace.samples[k].t).collect();
    let span = ts[ts.len() - 1] - ts[0];
    if span < 2.0 {
        return Err(Error::InsufficientData(format!("pinching fit needs a t-span of at least 2, got {span}")));
    }
    let p1: Vec<f64> = picked.iter().map(|&k| trace.pinch1(k)).collect();
    let p2: Vec<f64> = picked.iter().map(|&k| trace.pinch2(k)).collect();
    let n = trace.dimension as f64;
    Ok(PinchingReport {
        dimension: trace.dimension,
        window: (ts[0], ts[ts.len() - 1]),
        curvature: fit_decay(&ts, &p1)?,
        gradient: fit_decay(&ts, &p2)?,
        expected_curvature_slope: if trace.dimension == 3 { -1.0 } else { -4.0 / (n - 1.0) },
        expected_gradient_slope: -6.0 / (n - 1.0),
    })
}

#[derive(Clone, Debug)]
pub struct ProfileExtraction {
    /// Last snapshot of r̃ - t/(n-1).
    pub profile: SphereField,
    /// Sup difference of the last two snapshots.
    pub cauchy: f64,
    /// Sup differences between consecutive snapshots among the last five.
    pub history: Vec<f64>,
    /// Whether `history` is non-increasing.
    pub monotone: bool,
}

/// Asymptotic profile f with r̃ = t/(n-1) + f + o(1). A Cauchy diagnostic
/// above `tolerance` is reported as an error, never silently accepted.
pub fn extract_profile(trace: &FlowTrace, tolerance: f64) -> Result<ProfileExtraction> {
    let count = trace.len();
    if count < 2 {
        return Err(Error::InsufficientData("profile extraction needs two snapshots".into()));
    }
    let first = count.saturating_sub(5);
    let snapshots: Vec<SphereField> = (first..count)
        .map(|k| trace.profile_snapshot(k))
        .collect::<Result<_>>()?;
    let history: Vec<f64> = snapshots
        .windows(2)
        .map(|w| {
            w[0].values()
                .iter()
                .zip(w[1].values())
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
        })
        .collect();
    let cauchy = history[history.len() - 1];
    if !(cauchy <= tolerance) {
        return Err(Error::NotConverged {
            diagnostic: cauchy,
            tolerance,
        });
    }
    let monotone = history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-15);
    Ok(ProfileExtraction {
        profile: snapshots.into_iter().last().unwrap(),
        cauchy,
        history,
        monotone,
    })
}
