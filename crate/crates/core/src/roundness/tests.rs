use std::f64::consts::PI;

use super::*;
use crate::flow::{run, FlowControls};
use crate::geometry::{geometry_report, GraphSurface};
use crate::sphere::SphereGrid;

fn from_w(grid: &std::sync::Arc<crate::sphere::SphereGrid>, w: impl Fn(f64, f64, f64) -> f64) -> SphereField {
    SphereField::from_fn(grid, |x, s, lon| -w(x, s, lon).ln()).unwrap()
}

fn p2(x: f64) -> f64 {
    0.5 * (3.0 * x * x - 1.0)
}

/// ∫_{S²}(1 + εP₂)^{-2} · ε² ∫_{S²} (9/2) sin⁴θ by composite Simpson in x = cos θ.
fn l_oracle(eps: f64) -> f64 {
    let m = 20_000;
    let h = 2.0 / m as f64;
    let simpson = |g: &dyn Fn(f64) -> f64| -> f64 {
        (0..=m)
            .map(|i| {
                let x = -1.0 + i as f64 * h;
                let c = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                c * g(x)
            })
            .sum::<f64>()
            * h
            / 3.0
    };
    let area = 2.0 * PI * simpson(&|x| (1.0 + eps * p2(x)).powi(-2));
    let hess = 2.0 * PI * simpson(&|x| 4.5 * (1.0 - x * x).powi(2));
    area * eps * eps * hess
}

#[test]
fn functional_examples() {
    let grid = SphereGrid::full(32).unwrap();
    assert!(limit_functional(&SphereField::constant(&grid, 0.0)).unwrap().abs() < 1e-20);
    let span = from_w(&grid, |_, s, lon| 1.0 + 0.3 * s * lon.cos());
    assert!(limit_functional(&span).unwrap() < 1e-10);
    let bumpy = from_w(&grid, |x, _, _| 1.0 + 0.1 * p2(x));
    let oracle = l_oracle(0.1);
    assert!((oracle - 3.8).abs() < 0.1, "{oracle}");
    let value = limit_functional(&bumpy).unwrap();
    assert!((value - oracle).abs() < 1e-9 * oracle, "{value} vs {oracle}");
    assert!(limit_functional(&SphereField::constant(&SphereGrid::polar_default(4).unwrap(), 0.0)).is_err());
}

#[test]
fn polar_and_full_functionals_agree() {
    let profile = |x: f64, _: f64, _: f64| -(1.0 + 0.1 * p2(x) + 0.05 * x.powi(3)).ln();
    let full = SphereField::from_fn(&SphereGrid::full(32).unwrap(), profile).unwrap();
    let polar = SphereField::from_fn(&SphereGrid::polar(3, 32, 64).unwrap(), profile).unwrap();
    let a = limit_functional(&full).unwrap();
    let b = limit_functional_n(&polar);
    assert!((a - b).abs() < 1e-10 * a);
    assert!((limit_functional_n(&full) - a).abs() < 1e-12 * a);
}

#[test]
fn functional_is_rotation_invariant() {
    let grid = SphereGrid::full(48).unwrap();
    let (a, b) = (0.7_f64, 1.1_f64);
    let profile = |x: f64, s: f64, lon: f64, rotate: bool| {
        let (mut x1, mut x2, mut x3) = (s * lon.cos(), s * lon.sin(), x);
        if rotate {
            // Rotation about X³ by a, then about X¹ by b.
            let (c, d) = (a.cos(), a.sin());
            (x1, x2) = (c * x1 - d * x2, d * x1 + c * x2);
            let (c, d) = (b.cos(), b.sin());
            (x2, x3) = (c * x2 - d * x3, d * x2 + c * x3);
        }
        -(1.2 + 0.1 * p2(x3) + 0.08 * x1 * x2).ln()
    };
    let f = SphereField::from_fn(&grid, |x, s, l| profile(x, s, l, false)).unwrap();
    let g = SphereField::from_fn(&grid, |x, s, l| profile(x, s, l, true)).unwrap();
    let (lf, lg) = (limit_functional(&f).unwrap(), limit_functional(&g).unwrap());
    assert!((lf - lg).abs() < 1e-9 * lf, "{lf} {lg}");
}

#[test]
fn residual_examples() {
    let grid = SphereGrid::full(32).unwrap();
    let (rho, k) = roundness_residual(&from_w(&grid, |_, _, _| 1.5)).unwrap();
    assert!(rho < 1e-12 && k.unwrap() < 1e-10, "{rho} {k:?}");
    let (rho, k) = roundness_residual(&from_w(&grid, |_, s, lon| 1.0 + 0.3 * s * lon.cos())).unwrap();
    assert!(rho < 1e-9 && k.unwrap() < 1e-7, "{rho} {k:?}");
    let (rho, k) = roundness_residual(&from_w(&grid, |x, _, _| 1.0 + 0.1 * p2(x))).unwrap();
    assert!(rho > 0.01 && k.unwrap() > 0.01);
}

#[test]
fn projection_residual_ignores_additive_constants() {
    let grid = SphereGrid::full(24).unwrap();
    let f = from_w(&grid, |x, s, lon| 1.0 + 0.1 * p2(x) + 0.2 * s * lon.sin());
    let (a, _) = roundness_residual(&f).unwrap();
    let (b, _) = roundness_residual(&f.map(|v| v + 0.7)).unwrap();
    assert!((a - b).abs() < 1e-14 * a);
}

#[test]
fn verdicts_and_consistency() {
    let grid = SphereGrid::full(32).unwrap();
    let t = RoundnessThresholds::default();
    let round = roundness_report(&from_w(&grid, |x, _, _| 1.0 - 0.2 * x), &t).unwrap();
    assert_eq!(round.verdict, Verdict::Round);
    assert!(round.consistent);
    assert!((round.coefficients[3] + 0.2).abs() < 1e-12 && (round.coefficients[0] - 1.0).abs() < 1e-12);
    let bumpy = roundness_report(&from_w(&grid, |x, _, _| 1.0 + 0.1 * p2(x)), &t).unwrap();
    assert_eq!(bumpy.verdict, Verdict::NonRound);
    assert!(bumpy.consistent);
    let faint = roundness_report(&from_w(&grid, |x, _, _| 1.0 + 0.005 * p2(x)), &t).unwrap();
    assert_eq!(faint.verdict, Verdict::Indeterminate);
    let polar = roundness_report(&from_w(&SphereGrid::polar_default(4).unwrap(), |x, _, _| 1.0 + 0.3 * x), &t).unwrap();
    assert_eq!(polar.verdict, Verdict::Round);
    assert!(polar.curvature_variation.is_none());
    assert!((polar.asymptotic_slope - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn dimension_five_functional_has_no_area_factor() {
    let grid = SphereGrid::polar_default(5).unwrap();
    let f = from_w(&grid, |x, _, _| 1.0 + 0.1 * p2(x));
    let w = f.map(|x| (-x).exp());
    let (density, _) = hessian_densities(&w);
    let direct: f64 = (0..grid.len())
        .map(|k| grid.weight(k) * (2.0 * f.values()[k]).exp() * density[k])
        .sum();
    assert!((limit_functional_n(&f) - direct).abs() < 1e-14 * direct);
}

#[test]
fn normalization_fixes_limit_area() {
    for grid in [SphereGrid::full(16).unwrap(), SphereGrid::polar_default(4).unwrap()] {
        let n = grid.dimension() as f64;
        let f = from_w(&grid, |x, _, _| 2.0 + 0.3 * p2(x));
        let g = normalize_profile(&f);
        let volume = g.map(|x| ((n - 1.0) * x).exp()).integrate();
        assert!((volume - grid.total_area()).abs() < 1e-12 * volume);
    }
}

#[test]
fn large_graphs_approach_the_limit_functional() {
    let grid = SphereGrid::full(32).unwrap();
    let fbar = from_w(&grid, |x, _, _| 1.0 + 0.1 * p2(x));
    let c0 = limit_functional(&fbar).unwrap();
    let surface = GraphSurface::from_field(&fbar.map(|f| 6.0 + f)).unwrap();
    let m = geometry_report(&surface).modified;
    assert!((m + c0).abs() < 0.02 * c0, "{m} vs {c0}");

    let polar = SphereGrid::polar_default(4).unwrap();
    let fbar = from_w(&polar, |x, _, _| 1.0 + 0.1 * p2(x));
    let q_inf = limit_functional_n(&fbar);
    let q = geometry_report(&GraphSurface::from_field(&fbar.map(|f| 10.0 + f)).unwrap()).q;
    assert!((q - q_inf).abs() < 0.02 * q_inf, "{q} vs {q_inf}");
}

#[test]
fn ball_model_radius_examples() {
    assert!((ball_model_radius(3f64.ln()).unwrap() - 1.0).abs() < 1e-15);
    assert!(ball_model_radius(1e-9).unwrap() < 1e-8);
    let far = ball_model_radius(20.0).unwrap();
    assert!(far < 2.0 && far > 2.0 - 1e-8);
    for r in [1e-6, 0.3, 1.0, 5.0] {
        let rho = ball_model_radius(r).unwrap();
        assert!((rho - (2.0 - 4.0 / (r.exp() + 1.0))).abs() < 1e-15);
        assert!((ball_model_radius_inverse(rho).unwrap() - r).abs() < 1e-12 * r.max(1.0));
    }
    for rho in [1e-9, 0.5, 1.0, 1.9, 2.0 - 1e-9] {
        let r = ball_model_radius_inverse(rho).unwrap();
        assert!((ball_model_radius(r).unwrap() - rho).abs() < 1e-12);
    }
    assert!(ball_model_radius(0.0).is_err());
    assert!(ball_model_radius_inverse(2.0).is_err());
    assert!(ball_model_radius_inverse(-0.1).is_err());
}

#[test]
fn sphere_flow_limits() {
    let grid = SphereGrid::full(4).unwrap();
    let controls = FlowControls {
        t_final: 10.0,
        cadence: 0.5,
        dt_max: 0.25,
        ..FlowControls::default()
    };
    let trace = run(GraphSurface::sphere(&grid, 1.0).unwrap(), &controls).unwrap();
    let ball = ball_model_limit(&trace, 1e-2).unwrap();
    // Exact value at t = 10 from sinh r(t) = e^{t/2} sinh r₀, and its t → ∞ limit.
    let r = (5f64.exp() * 1f64.sinh()).asinh();
    let at_t = -4.0 * 5f64.exp() / (r.exp() + 1.0);
    let expected = -2.0 / 1f64.sinh();
    let worst = ball.limit.values().iter().fold(0.0_f64, |m, v| m.max((v - at_t).abs()));
    // RK4 error at dt = 0.25 accumulated to t = 10.
    assert!(worst < 1e-6, "{worst}");
    assert!(ball.limit.values().iter().all(|v| (v - expected).abs() < 1e-2));
    // The gap is 4e^{-f}/(e^r + 1) ≈ 1e-2 at r(10) ≈ 5.9.
    assert!(ball.gap < 1.2e-2 && ball.monotone, "{:?}", ball.history);
    let (factor, _) = rescaled_limit_metric(&trace, 1e-2).unwrap();
    assert!(factor.values().iter().all(|v| (v - 1.0).abs() < 1e-10));
}
