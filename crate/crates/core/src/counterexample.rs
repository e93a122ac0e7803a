//! Construction and empirical certification of flows whose rescaled limit
//! metric is not round: start from r̃ = s₀ + f̄ with e^{-f̄} outside
//! span{1, Xⁱ}, show the monotone quantity keeps a definite sign in the
//! limit, and confirm the extracted profile is non-round.
//!
//! Everything is phrased through Q(Σ) = |Σ|^{-(n-5)/(n-1)} ∫|Å|², which for
//! n = 3 is exactly -m̃. Conditions therefore read: Q(Σ̃_{s₀}) > c₀/2 and the
//! total drift of Q is at most c₀/4, so that lim Q > c₀/4.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{fit_decay, pinching_diagnostics, run, FlowControls, FlowOutcome, FlowTrace, PinchingReport};
use crate::geometry::{geometry_report, GraphSurface};
use crate::roundness::{ball_model_limit, limit_functional_n, roundness_report, RoundnessReport, RoundnessThresholds, Verdict};
use crate::sphere::{SphereField, SphereGrid};

/// Choice of f̄, always given through w = e^{-f̄}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FbarSpec {
    /// w = 1 + ε P₂(Xⁿ), P₂ the degree-2 Legendre polynomial.
    LegendreP2 { epsilon: f64 },
    /// w = a₀ + Σ aᵢ Xⁱ; lies in the round span by construction.
    Span { coefficients: Vec<f64> },
    /// f̄ = 0.
    Zero,
}

impl Default for FbarSpec {
    fn default() -> Self {
        FbarSpec::LegendreP2 { epsilon: 0.1 }
    }
}

impl FbarSpec {
    pub fn field(&self, grid: &Arc<SphereGrid>) -> Result<SphereField> {
        let w = match self {
            FbarSpec::LegendreP2 { epsilon } => SphereField::legendre_p2(grid).map(|p| 1.0 + epsilon * p),
            FbarSpec::Span { coefficients } => {
                let n = grid.dimension();
                if coefficients.is_empty() || coefficients.len() > n + 1 {
                    return Err(Error::Domain(format!(
                        "span profile takes a₀ and up to {n} coordinate coefficients, got {}",
                        coefficients.len()
                    )));
                }
                let mut w = SphereField::constant(grid, coefficients[0]);
                for (axis, a) in coefficients.iter().enumerate().skip(1) {
                    if *a != 0.0 {
                        let x = SphereField::cartesian(grid, axis)?;
                        w = w.zip_with(&x, |w, x| w + a * x)?;
                    }
                }
                w
            }
            FbarSpec::Zero => SphereField::constant(grid, 1.0),
        };
        if w.min() <= 0.0 {
            return Err(Error::Domain(format!("e^(-f̄) must be positive, min = {}", w.min())));
        }
        Ok(w.map(|w| -w.ln()))
    }
}

/// c₀ of f̄: L(f̄) for n = 3, Q_∞(f̄) for n ≥ 4.
pub fn certification_constant(fbar: &SphereField) -> f64 {
    limit_functional_n(fbar)
}

/// r̃ = s + f̄.
pub fn construct_initial(spec: &FbarSpec, grid: &Arc<SphereGrid>, s: f64) -> Result<GraphSurface> {
    let fbar = spec.field(grid)?;
    let r = fbar.map(|f| s + f);
    if r.min() <= 0.0 {
        return Err(Error::Domain(format!("s = {s} leaves a non-positive radius {}", r.min())));
    }
    GraphSurface::from_field(&r)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifySettings {
    /// Length of the probe flow used for condition (3).
    pub probe_t: f64,
    /// Final time of the main run; `None` picks 10 for n = 3 and 12 otherwise.
    pub t_final: Option<f64>,
    pub flow: FlowControls,
    /// Multiplier on the fitted drift prefactor in the tail bound.
    pub tail_safety: f64,
    /// Allowed tail uncertainty as a fraction of c₀/4.
    pub tail_uncertainty_fraction: f64,
    /// Relative half-width of the band around the expected drift exponent.
    pub drift_band: f64,
    /// Absolute half-width of the bands around the pinching exponents.
    pub pinching_band: f64,
    /// Fit window for pinching decay; `None` uses [2, t_final].
    pub pinching_window: Option<(f64, f64)>,
    pub profile_tolerance: f64,
    pub thresholds: RoundnessThresholds,
    pub s0_start: f64,
    pub s0_step: f64,
    pub s0_max: f64,
    /// Run the flow even when the pre-flow conditions fail.
    pub force: bool,
}

impl Default for CertifySettings {
    fn default() -> Self {
        CertifySettings {
            probe_t: 3.0,
            t_final: None,
            flow: FlowControls {
                cadence: 0.1,
                dt_max: 0.05,
                keep_fields: false,
                ..FlowControls::default()
            },
            tail_safety: 2.0,
            tail_uncertainty_fraction: 0.1,
            drift_band: 0.3,
            pinching_band: 0.3,
            pinching_window: None,
            profile_tolerance: 1e-3,
            thresholds: RoundnessThresholds::default(),
            s0_start: 2.0,
            s0_step: 1.0,
            s0_max: 10.0,
            force: false,
        }
    }
}

impl CertifySettings {
    pub fn t_final_for(&self, n: usize) -> f64 {
        self.t_final.unwrap_or(if n == 3 { 10.0 } else { 12.0 })
    }

    fn controls(&self, t_final: f64) -> FlowControls {
        FlowControls {
            t_final,
            ..self.flow.clone()
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionCheck {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
    pub detail: String,
}

impl ConditionCheck {
    fn new(name: &str, passed: bool, value: f64, bound: f64, detail: String) -> Self {
        ConditionCheck {
            name: name.to_string(),
            passed,
            value,
            bound,
            detail,
        }
    }
}

/// Exponential fit |dQ/dt| ≈ A e^{κt} over a window and the implied bound
/// on ∫_T^∞ |dQ/dt| dt.
#[derive(Clone, Debug, Serialize)]
pub struct DriftFit {
    pub window: (f64, f64),
    pub slope: f64,
    pub prefactor: f64,
    pub expected_slope: f64,
    pub from_time: f64,
    pub tail_bound: f64,
}

fn drift_fit(trace: &FlowTrace, window: (f64, f64), from_time: f64, safety: f64) -> Result<DriftFit> {
    let picked: Vec<&crate::flow::FlowSample> = trace
        .samples
        .iter()
        .filter(|s| s.t >= window.0 - 1e-12 && s.t <= window.1 + 1e-12)
        .collect();
    let ts: Vec<f64> = picked.iter().map(|s| s.t).collect();
    let rates: Vec<f64> = picked.iter().map(|s| s.q_rate.abs()).collect();
    let n = trace.dimension as f64;
    let expected_slope = -2.0 / (n - 1.0);
    // An exactly stationary Q (round data) leaves nothing to fit.
    if rates.iter().all(|r| *r == 0.0) {
        return Ok(DriftFit {
            window,
            slope: f64::NAN,
            prefactor: 0.0,
            expected_slope,
            from_time,
            tail_bound: 0.0,
        });
    }
    let fit = fit_decay(&ts, &rates)?;
    let tail_bound = if fit.slope < 0.0 {
        safety * fit.prefactor * (fit.slope * from_time).exp() / fit.slope.abs()
    } else {
        f64::INFINITY
    };
    Ok(DriftFit {
        window,
        slope: fit.slope,
        prefactor: fit.prefactor,
        expected_slope,
        from_time,
        tail_bound,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct InitialSummary {
    pub area: f64,
    pub q: f64,
    pub mtilde: f64,
    pub min_h: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FinalSummary {
    pub t_final: f64,
    pub q: f64,
    pub mtilde: f64,
    pub drift: DriftFit,
    /// Spread between tail bounds fitted over two nested windows.
    pub tail_uncertainty: f64,
    /// Q(Σ_T) minus the tail bound: a lower bound for lim Q.
    pub limit_lower_bound: f64,
    pub pinching: Option<PinchingReport>,
    pub roundness: Option<RoundnessReport>,
    pub cauchy: Option<f64>,
    /// Sup gap |(u-2)e^{t/(n-1)} + 4e^{-f}| in the ball model.
    pub ball_model_gap: Option<f64>,
    /// Largest relative difference between recorded Q and Q recomputed from
    /// the stored snapshots.
    pub revalidation_error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Failure {
    Condition,
    Breakdown,
    NotConverged,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificationReport {
    pub dimension: usize,
    pub fbar: FbarSpec,
    pub method: String,
    pub c0: f64,
    pub s0: f64,
    pub initial: InitialSummary,
    pub conditions: Vec<ConditionCheck>,
    pub probe: Option<DriftFit>,
    #[serde(rename = "final")]
    pub final_state: Option<FinalSummary>,
    pub passed: bool,
    /// Name of the first failed condition.
    pub failed: Option<String>,
    pub failure: Option<Failure>,
    pub conclusion: String,
}

impl CertificationReport {
    fn push(&mut self, check: ConditionCheck) {
        if !check.passed && self.failed.is_none() {
            self.failed = Some(check.name.clone());
            self.failure.get_or_insert(Failure::Condition);
        }
        self.conditions.push(check);
    }

    fn finish(mut self) -> Self {
        self.passed = self.failed.is_none() && self.final_state.is_some();
        self.conclusion = if self.passed {
            "counterexample certified: the limit of the monotone quantity stays away from zero and the limit metric is not round".into()
        } else if let Some(name) = &self.failed {
            format!("not a counterexample: {name} failed")
        } else {
            "pre-flow conditions hold; flow not yet run".into()
        };
        self
    }
}

fn in_band(value: f64, expected: f64, half_width: f64) -> bool {
    (value - expected).abs() <= half_width
}

/// Checks (1)–(3) and the drift exponent band for r̃ = s₀ + f̄.
pub fn certify_s0(spec: &FbarSpec, grid: &Arc<SphereGrid>, s0: f64, settings: &CertifySettings) -> Result<CertificationReport> {
    let n = grid.dimension();
    let fbar = spec.field(grid)?;
    let c0 = certification_constant(&fbar);
    let fbar_roundness = roundness_report(&fbar, &settings.thresholds)?;
    let c0_relative = fbar_roundness.limit_functional / fbar_roundness.functional_scale;
    let surface = construct_initial(spec, grid, s0)?;
    let report = geometry_report(&surface);
    let mut out = CertificationReport {
        dimension: n,
        fbar: spec.clone(),
        method: "empirical: measured drift plus exponential tail extrapolation".into(),
        c0,
        s0,
        initial: InitialSummary {
            area: report.area,
            q: report.q,
            mtilde: report.modified,
            min_h: report.min_h,
        },
        conditions: Vec::new(),
        probe: None,
        final_state: None,
        passed: false,
        failed: None,
        failure: None,
        conclusion: String::new(),
    };
    out.push(ConditionCheck::new(
        "(1) mean-convex",
        report.mean_convex,
        report.min_h,
        0.0,
        "min H over the initial surface".into(),
    ));
    let name = if n == 3 { "(2) mtilde < -c0/2" } else { "(2) Q > c0/2" };
    let c0_positive = c0_relative >= settings.thresholds.functional;
    let detail = if c0_positive {
        format!("Q of the initial surface (Q = -m̃ when n = 3); c0 / H² scale = {c0_relative:e}")
    } else {
        format!("c0 vanishes (c0 / H² scale = {c0_relative:e}): e^(-f̄) is in the round span")
    };
    out.push(ConditionCheck::new(name, c0_positive && report.q > 0.5 * c0, report.q, 0.5 * c0, detail));
    if !report.mean_convex {
        return Ok(out.finish());
    }

    let probe_controls = settings.controls(settings.probe_t);
    let probe = run(surface, &probe_controls)?;
    if let FlowOutcome::Breakdown { t, .. } = probe.outcome {
        out.push(ConditionCheck::new(
            "(3) drift bound",
            false,
            t,
            settings.probe_t,
            "probe flow lost mean convexity".into(),
        ));
        out.failure = Some(Failure::Breakdown);
        return Ok(out.finish());
    }
    let end = probe.samples.last().expect("probe has samples");
    let window = (settings.probe_t / 3.0, settings.probe_t);
    let fit = drift_fit(&probe, window, end.t, settings.tail_safety)?;
    let observed = (end.q - probe.samples[0].q).abs();
    let total = observed + fit.tail_bound;
    out.push(ConditionCheck::new(
        "(3) drift bound",
        total <= 0.25 * c0,
        total,
        0.25 * c0,
        format!("observed probe drift {observed:e} plus tail bound {:e}", fit.tail_bound),
    ));
    out.push(ConditionCheck::new(
        "drift exponent",
        in_band(fit.slope, fit.expected_slope, settings.drift_band * fit.expected_slope.abs()),
        fit.slope,
        fit.expected_slope,
        format!("fitted over t in [{}, {}]", window.0, window.1),
    ));
    out.probe = Some(fit);
    Ok(out.finish())
}

/// Smallest s₀ on the search ladder passing all pre-flow conditions; the
/// last report examined is returned when none passes.
pub fn search_s0(spec: &FbarSpec, grid: &Arc<SphereGrid>, settings: &CertifySettings) -> Result<CertificationReport> {
    let mut s0 = settings.s0_start;
    let mut last = None;
    while s0 <= settings.s0_max + 1e-12 {
        let report = certify_s0(spec, grid, s0, settings)?;
        // Condition (2) and the negative control do not improve with s₀.
        let hopeless = report.conditions.iter().any(|c| c.name.starts_with("(2)") && !c.passed);
        if report.failed.is_none() || hopeless {
            return Ok(report);
        }
        last = Some(report);
        s0 += settings.s0_step;
    }
    last.ok_or_else(|| Error::Domain("empty s₀ search range".into()))
}

/// Recomputes Q at every stored snapshot and returns the worst relative mismatch.
pub fn revalidate(trace: &FlowTrace) -> Result<f64> {
    let mut worst = 0.0_f64;
    for k in 0..trace.len() {
        let q = geometry_report(&trace.surface(k)?).q;
        let recorded = trace.samples[k].q;
        let scale = recorded.abs().max(1e-300);
        worst = worst.max((q - recorded).abs() / scale);
    }
    Ok(worst)
}

/// Runs the flow from Σ̃_{s₀} and completes the certification.
pub fn run_and_certify(spec: &FbarSpec, grid: &Arc<SphereGrid>, s0: f64, settings: &CertifySettings) -> Result<CertificationReport> {
    let mut out = certify_s0(spec, grid, s0, settings)?;
    if out.failed.is_some() && !settings.force {
        return Ok(out.finish());
    }
    if out.initial.min_h <= 0.0 {
        return Ok(out.finish());
    }
    let n = grid.dimension();
    let c0 = out.c0;
    let t_final = settings.t_final_for(n);
    let trace = run(construct_initial(spec, grid, s0)?, &settings.controls(t_final))?;
    if let FlowOutcome::Breakdown { t, node, h } = trace.outcome {
        out.push(ConditionCheck::new(
            "flow completes",
            false,
            t,
            t_final,
            format!("mean curvature {h} at node {node}"),
        ));
        out.failure = Some(Failure::Breakdown);
        return Ok(out.finish());
    }
    let last = trace.samples.last().expect("trace has samples");
    let drift = drift_fit(&trace, (0.5 * t_final, t_final), t_final, settings.tail_safety)?;
    let inner = drift_fit(&trace, (0.75 * t_final, t_final), t_final, settings.tail_safety)?;
    let tail_uncertainty = (drift.tail_bound - inner.tail_bound).abs();
    let limit_lower_bound = last.q - drift.tail_bound.max(inner.tail_bound);

    let monotone = n != 3
        || trace
            .samples
            .windows(2)
            .all(|w| w[1].mtilde >= w[0].mtilde - 1e-12 * w[0].mtilde.abs().max(1e-300));
    if n == 3 {
        out.push(ConditionCheck::new(
            "mtilde non-decreasing",
            monotone,
            last.mtilde - trace.samples[0].mtilde,
            0.0,
            "every consecutive sample pair".into(),
        ));
    }
    out.push(ConditionCheck::new(
        "tail uncertainty",
        tail_uncertainty < settings.tail_uncertainty_fraction * 0.25 * c0,
        tail_uncertainty,
        settings.tail_uncertainty_fraction * 0.25 * c0,
        "tail bounds fitted over [T/2, T] and [3T/4, T]".into(),
    ));
    let limit_name = if n == 3 { "limit mtilde < -c0/4" } else { "limit Q > c0/4" };
    out.push(ConditionCheck::new(
        limit_name,
        out.conditions[1].passed && limit_lower_bound > 0.25 * c0,
        limit_lower_bound,
        0.25 * c0,
        "Q(Σ_T) minus the tail bound".into(),
    ));

    let pinching_window = settings.pinching_window.unwrap_or((2.0, t_final));
    let pinching = pinching_diagnostics(&trace, Some(pinching_window)).ok();
    match &pinching {
        Some(p) => {
            out.push(ConditionCheck::new(
                "(4) pinching: curvature",
                in_band(p.curvature.slope, p.expected_curvature_slope, settings.pinching_band),
                p.curvature.slope,
                p.expected_curvature_slope,
                format!("fitted over t in [{}, {}]", p.window.0, p.window.1),
            ));
            out.push(ConditionCheck::new(
                "(4) pinching: gradient",
                in_band(p.gradient.slope, p.expected_gradient_slope, settings.pinching_band),
                p.gradient.slope,
                p.expected_gradient_slope,
                format!("fitted over t in [{}, {}]", p.window.0, p.window.1),
            ));
        }
        None => out.push(ConditionCheck::new(
            "(4) pinching",
            false,
            f64::NAN,
            f64::NAN,
            "too few samples in the pinching window".into(),
        )),
    }

    let mut roundness = None;
    let mut cauchy = None;
    match crate::flow::extract_profile(&trace, settings.profile_tolerance) {
        Ok(extraction) => {
            cauchy = Some(extraction.cauchy);
            let r = roundness_report(&extraction.profile, &settings.thresholds)?;
            out.push(ConditionCheck::new(
                "limit metric non-round",
                r.verdict == Verdict::NonRound,
                r.rho_proj,
                settings.thresholds.non_round,
                format!("verdict {:?}, channels consistent: {}", r.verdict, r.consistent),
            ));
            roundness = Some(r);
        }
        Err(Error::NotConverged { diagnostic, tolerance }) => {
            out.push(ConditionCheck::new(
                "profile converged",
                false,
                diagnostic,
                tolerance,
                "Cauchy diagnostic of the last two snapshots".into(),
            ));
            out.failure = Some(Failure::NotConverged);
        }
        Err(e) => return Err(e),
    }
    let ball_model_gap = ball_model_limit(&trace, f64::INFINITY).ok().map(|b| b.gap);

    let revalidation_error = revalidate(&trace)?;
    out.push(ConditionCheck::new(
        "revalidation",
        revalidation_error <= 1e-10,
        revalidation_error,
        1e-10,
        "Q recomputed from stored snapshots".into(),
    ));
    out.final_state = Some(FinalSummary {
        t_final: last.t,
        q: last.q,
        mtilde: last.mtilde,
        drift,
        tail_uncertainty,
        limit_lower_bound,
        pinching,
        roundness,
        cauchy,
        ball_model_gap,
        revalidation_error,
    });
    Ok(out.finish())
}

/// The n ≥ 4 pipeline on a polar-symmetric grid.
pub fn highdim_construct_and_certify(
    spec: &FbarSpec,
    grid: &Arc<SphereGrid>,
    s0: f64,
    settings: &CertifySettings,
) -> Result<CertificationReport> {
    if grid.dimension() < 4 {
        return Err(Error::Unsupported("the higher-dimensional pipeline needs n ≥ 4".into()));
    }
    if grid.mode() != crate::sphere::GridMode::PolarSymmetric {
        return Err(Error::Unsupported("n ≥ 4 runs use the polar-symmetric grid".into()));
    }
    run_and_certify(spec, grid, s0, settings)
}

/// Runs the trace for the given certification settings without checks;
/// exposed for callers that want the raw data.
pub fn certification_trace(spec: &FbarSpec, grid: &Arc<SphereGrid>, s0: f64, settings: &CertifySettings) -> Result<FlowTrace> {
    let t_final = settings.t_final_for(grid.dimension());
    run(construct_initial(spec, grid, s0)?, &settings.controls(t_final))
}
