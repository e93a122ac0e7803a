//! Limit metrics e^{2f}σ of the rescaled flow, the limit functionals, and
//! roundness verdicts. A conformal metric e^{2f}σ on S^{n-1} is round
//! exactly when e^{-f} lies in span{1, X¹, …, Xⁿ}.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{extract_profile, FlowTrace, ProfileExtraction};
use crate::sphere::{derivatives, laplacian, project_first_eigenspace, SphereField};

/// Pointwise |D̊²w|² and w² + |Dw|² + |D²w|².
fn hessian_densities(w: &SphereField) -> (Vec<f64>, Vec<f64>) {
    let frame = w.grid().frame();
    let d = derivatives(w);
    (0..d.values.len())
        .map(|k| {
            let h = d.hess[k];
            let t = frame.traceless(&h);
            let full = d.values[k].powi(2) + frame.dot(d.grad[k], d.grad[k]) + frame.trace_product(&h, &h);
            (frame.trace_product(&t, &t), full)
        })
        .unzip()
}

/// (∫e^{(n-1)f})^{-(n-5)/(n-1)} with the inner weight e^{(n-3)f} applied to `density`.
fn weighted(f: &SphereField, density: impl Fn(usize) -> f64) -> f64 {
    let n = f.grid().dimension() as f64;
    let volume = f.map(|x| ((n - 1.0) * x).exp()).integrate();
    let grid = f.grid();
    let inner: f64 = f
        .values()
        .iter()
        .enumerate()
        .map(|(k, x)| grid.weight(k) * ((n - 3.0) * x).exp() * density(k))
        .sum();
    volume.powf(-(n - 5.0) / (n - 1.0)) * inner
}

/// L(f) = ∫e^{2f} dμ_σ · ∫|D̊²e^{-f}|² dμ_σ on S².
pub fn limit_functional(f: &SphereField) -> Result<f64> {
    if f.grid().dimension() != 3 {
        return Err(Error::Unsupported("L(f) is defined on S²; use limit_functional_n".into()));
    }
    let w = f.map(|x| (-x).exp());
    let area = f.map(|x| (2.0 * x).exp()).integrate();
    let density = SphereField::new(f.grid().clone(), hessian_densities(&w).0)?;
    Ok(area * density.integrate())
}

/// Q_∞(f) = (∫e^{(n-1)f})^{-(n-5)/(n-1)} ∫e^{(n-3)f}|D̊²e^{-f}|², the limit
/// of Q along r̃ = t/(n-1) + f. Equals L(f) for n = 3.
pub fn limit_functional_n(f: &SphereField) -> f64 {
    let w = f.map(|x| (-x).exp());
    let (density, _) = hessian_densities(&w);
    weighted(f, |k| density[k])
}

/// Gauss curvature of e^{2f}σ on S²: e^{-2f}(1 - Δ_σ f).
pub fn conformal_curvature(f: &SphereField) -> Result<SphereField> {
    if f.grid().dimension() != 3 {
        return Err(Error::Unsupported("conformal curvature channel is implemented on S² only".into()));
    }
    let lap = laplacian(f);
    f.zip_with(&lap, |x, l| (-2.0 * x).exp() * (1.0 - l))
}

/// (max K - min K) / mean K, the mean taken against σ.
pub fn curvature_variation(k: &SphereField) -> f64 {
    let mean = k.integrate() / k.grid().total_area();
    (k.max() - k.min()) / mean.abs()
}

/// ρ_proj = ‖w - Pw‖/‖w‖ for w = e^{-f}, and the K variation when n = 3.
pub fn roundness_residual(f: &SphereField) -> Result<(f64, Option<f64>)> {
    let w = f.map(|x| (-x).exp());
    let projection = project_first_eigenspace(&w)?;
    let rho = projection.residual.l2_norm() / w.l2_norm();
    let kvar = if f.grid().dimension() == 3 {
        Some(curvature_variation(&conformal_curvature(f)?))
    } else {
        None
    };
    Ok((rho, kvar))
}

/// Shifts f so that ∫e^{(n-1)f} dμ_σ = |S^{n-1}|.
pub fn normalize_profile(f: &SphereField) -> SphereField {
    let n = f.grid().dimension() as f64;
    let volume = f.map(|x| ((n - 1.0) * x).exp()).integrate();
    let shift = (f.grid().total_area() / volume).ln() / (n - 1.0);
    f.map(|x| x + shift)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Round,
    NonRound,
    Indeterminate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoundnessThresholds {
    /// ρ_proj below this is round.
    pub round: f64,
    /// ρ_proj above this is non-round.
    pub non_round: f64,
    /// L/scale below this counts as round in the consistency check.
    pub functional: f64,
    /// K variation below this counts as round in the consistency check.
    pub curvature: f64,
}

impl Default for RoundnessThresholds {
    fn default() -> Self {
        RoundnessThresholds {
            round: 1e-4,
            non_round: 1e-2,
            functional: 1e-8,
            curvature: 1e-5,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundnessReport {
    pub dimension: usize,
    /// a₀, a₁, …, a_n of the first-eigenspace projection of e^{-f}.
    pub coefficients: Vec<f64>,
    pub rho_proj: f64,
    /// L(f) for n = 3, Q_∞(f) otherwise.
    pub limit_functional: f64,
    /// The same weights applied to the H² energy of e^{-f}.
    pub functional_scale: f64,
    pub curvature_variation: Option<f64>,
    pub verdict: Verdict,
    /// Whether the functional and curvature channels fall on the same side
    /// as ρ_proj; always true for an indeterminate verdict.
    pub consistent: bool,
    /// Coefficient c of r̃ = ct + f, i.e. 1/(n-1).
    pub asymptotic_slope: f64,
}

pub fn roundness_report(f: &SphereField, thresholds: &RoundnessThresholds) -> Result<RoundnessReport> {
    let grid = f.grid();
    let n = grid.dimension();
    let w = f.map(|x| (-x).exp());
    let projection = project_first_eigenspace(&w)?;
    let (rho, kvar) = roundness_residual(f)?;
    let functional = limit_functional_n(f);
    let (_, h2) = hessian_densities(&w);
    let scale = weighted(f, |k| h2[k]);
    let verdict = if rho < thresholds.round {
        Verdict::Round
    } else if rho > thresholds.non_round {
        Verdict::NonRound
    } else {
        Verdict::Indeterminate
    };
    let round_side = |v: Verdict| -> Option<bool> {
        match v {
            Verdict::Round => Some(true),
            Verdict::NonRound => Some(false),
            Verdict::Indeterminate => None,
        }
    };
    let consistent = match round_side(verdict) {
        None => true,
        Some(side) => {
            (functional / scale < thresholds.functional) == side
                && kvar.is_none_or(|k| (k < thresholds.curvature) == side)
        }
    };
    Ok(RoundnessReport {
        dimension: n,
        coefficients: projection.coefficients,
        rho_proj: rho,
        limit_functional: functional,
        functional_scale: scale,
        curvature_variation: kvar,
        verdict,
        consistent,
        asymptotic_slope: 1.0 / (n as f64 - 1.0),
    })
}

/// Conformal factor e^{2f} of the limit of |Σ_t|^{-2/(n-1)} g_t, with f
/// normalized so that the limit metric has the area of the unit sphere.
pub fn rescaled_limit_metric(trace: &FlowTrace, tolerance: f64) -> Result<(SphereField, ProfileExtraction)> {
    let extraction = extract_profile(trace, tolerance)?;
    let f = normalize_profile(&extraction.profile);
    Ok((f.map(|x| (2.0 * x).exp()), extraction))
}

/// ρ = 2 - 4/(e^r + 1) = 2 tanh(r/2), the Poincaré-ball radius of a point at
/// hyperbolic distance r from the origin.
pub fn ball_model_radius(r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("ball model radius needs r > 0, got {r}")));
    }
    Ok(2.0 * (0.5 * r).tanh())
}

pub fn ball_model_radius_inverse(rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 2.0) {
        return Err(Error::Domain(format!("ball model radius must lie in (0, 2), got {rho}")));
    }
    Ok(2.0 * (0.5 * rho).atanh())
}

/// u - 2 = -4/(e^r + 1), evaluated without cancellation.
fn ball_defect(r: f64) -> f64 {
    -4.0 / (r.exp() + 1.0)
}

#[derive(Clone, Debug)]
pub struct BallModelLimit {
    /// (u - 2) e^{t/(n-1)} at the final sample.
    pub limit: SphereField,
    /// -4 e^{-f} with f the extracted profile.
    pub target: SphereField,
    pub gap: f64,
    /// Sup-norm gap to the target over the last five samples.
    pub history: Vec<f64>,
    pub monotone: bool,
}

/// The ball-model function u of the evolving graph, rescaled as
/// (u - 2)e^{t/(n-1)}, compared against -4e^{-f}.
pub fn ball_model_limit(trace: &FlowTrace, tolerance: f64) -> Result<BallModelLimit> {
    let extraction = extract_profile(trace, tolerance)?;
    let target = extraction.profile.map(|f| -4.0 * (-f).exp());
    let n = trace.dimension as f64;
    let rescaled = |k: usize| -> Result<SphereField> {
        let t = trace.samples[k].t;
        let surface = trace.surface(k)?;
        Ok(surface.radius().map(|r| ball_defect(r) * (t / (n - 1.0)).exp()))
    };
    let first = trace.len().saturating_sub(5);
    let mut history = Vec::new();
    let mut limit = None;
    for k in first..trace.len() {
        let field = rescaled(k)?;
        let gap = field
            .values()
            .iter()
            .zip(target.values())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        history.push(gap);
        limit = Some(field);
    }
    let monotone = history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-15);
    Ok(BallModelLimit {
        limit: limit.expect("trace has samples"),
        target,
        gap: history[history.len() - 1],
        history,
        monotone,
    })
}

#[cfg(test)]
mod tests;
