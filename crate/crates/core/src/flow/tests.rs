use super::*;
use crate::sphere::{SphereField, SphereGrid};

fn sphere_radius(n: usize, r0: f64, t: f64) -> f64 {
    ((t / (n as f64 - 1.0)).exp() * r0.sinh()).asinh()
}

fn p2_graph(grid: &Arc<SphereGrid>, base: f64, eps: f64) -> GraphSurface {
    let p2 = SphereField::legendre_p2(grid);
    GraphSurface::from_field(&p2.map(|p| base + eps * p)).unwrap()
}

fn controls(t_final: f64, cadence: f64) -> FlowControls {
    FlowControls {
        t_final,
        cadence,
        ..FlowControls::default()
    }
}

#[test]
fn geodesic_spheres_follow_the_radial_ode() {
    for (n, grid) in [(3, SphereGrid::full(8).unwrap()), (4, SphereGrid::polar(4, 16, 32).unwrap())] {
        let r0 = 1.0;
        let trace = run(GraphSurface::sphere(&grid, r0).unwrap(), &controls(1.0, 0.1)).unwrap();
        assert_eq!(trace.outcome, FlowOutcome::Completed);
        for (k, s) in trace.samples.iter().enumerate() {
            let exact = sphere_radius(n, r0, s.t);
            let surface = trace.surface(k).unwrap();
            let r = surface.radius();
            assert!((r.max() - exact).abs() < 1e-8 * exact && (r.min() - exact).abs() < 1e-8 * exact);
            let growth = s.area / trace.initial_area();
            assert!((growth / s.t.exp() - 1.0).abs() < 1e-6, "n={n} t={}", s.t);
            assert!(s.mtilde.abs() < 1e-8);
        }
        assert!((trace.samples.last().unwrap().t - 1.0).abs() < 1e-14);
    }
}

#[test]
fn one_step_expands() {
    let grid = SphereGrid::full(16).unwrap();
    let state = FlowState::new(p2_graph(&grid, 2.0, 0.2));
    let before = state.report().area;
    let dt = stable_dt(&state.surface, 0.5).min(0.05);
    let next = step(&state, dt).unwrap();
    assert!(next.report().area > before);
    assert!((next.t - dt).abs() < 1e-15);
}

#[test]
fn rotational_symmetry_is_preserved() {
    let grid = SphereGrid::full(16).unwrap();
    let trace = run(p2_graph(&grid, 2.0, 0.2), &controls(0.5, 0.25)).unwrap();
    let last = &trace.samples.last().unwrap().coeffs;
    for (i, (_, m)) in grid.coeff_labels().iter().enumerate() {
        if *m != 0 {
            assert!(last[i].abs() < 1e-10, "coefficient {i} = {}", last[i]);
        }
    }
}

#[test]
fn non_mean_convex_input_is_refused() {
    let grid = SphereGrid::full(48).unwrap();
    // A narrow dent at the north pole is concave there.
    let surface = GraphSurface::from_field(
        &SphereField::from_fn(&grid, |x, _, _| 1.0 - 0.3 * (20.0 * (x - 1.0)).exp()).unwrap(),
    )
    .unwrap();
    let report = geometry_report(&surface);
    assert!(!report.mean_convex);
    assert!(matches!(run(surface.clone(), &FlowControls::default()), Err(Error::Domain(_))));
    assert!(matches!(step(&FlowState::new(surface), 1e-3), Err(Error::FlowBreakdown { .. })));
}

#[test]
fn invalid_controls_are_refused() {
    let grid = SphereGrid::full(8).unwrap();
    let bad = FlowControls {
        cadence: 0.0,
        ..FlowControls::default()
    };
    assert!(run(GraphSurface::sphere(&grid, 1.0).unwrap(), &bad).is_err());
}

#[test]
fn sphere_residuals_vanish() {
    let grid = SphereGrid::full(8).unwrap();
    let trace = run(GraphSurface::sphere(&grid, 1.0).unwrap(), &controls(0.4, 0.05)).unwrap();
    for k in 1..trace.len() - 1 {
        let mono = trace.monotonicity_residual(k).unwrap();
        assert!(mono.absolute < 1e-9 && mono.rhs.abs() < 1e-12);
        let s = &trace.samples[k];
        let r = sphere_radius(3, 1.0, s.t);
        let exact = -1.0 / (r.sinh() * r.cosh());
        let f = s.fields.as_ref().unwrap();
        assert!(f.h_rhs.iter().all(|v| (v - exact).abs() < 1e-10));
        let hev = trace.h_evolution_residual(k).unwrap();
        // Only the O(cadence²) error of the centered difference remains.
        assert!(hev.relative < 1e-3, "{hev:?}");
        let aring = trace.aring_evolution_residual(k).unwrap();
        assert!(aring.absolute < 1e-10);
    }
    assert!(trace.monotonicity_residual(0).is_err());
}

#[test]
fn perturbed_flow_satisfies_evolution_identities() {
    for grid in [SphereGrid::full(16).unwrap(), SphereGrid::polar(4, 32, 64).unwrap()] {
        let trace = run(p2_graph(&grid, 2.0, 0.15), &controls(0.6, 0.02)).unwrap();
        for k in 1..trace.len() - 1 {
            let mono = trace.monotonicity_residual(k).unwrap();
            let hev = trace.h_evolution_residual(k).unwrap();
            let aring = trace.aring_evolution_residual(k).unwrap();
            let integrated = trace.integrated_aring_residual(k).unwrap();
            assert!(mono.relative < 1e-3, "{k} {mono:?}");
            assert!(hev.relative < 1e-3, "{k} {hev:?}");
            assert!(aring.relative < 1e-3, "{k} {aring:?}");
            assert!(integrated.relative < 1e-3, "{k} {integrated:?}");
            if grid.dimension() == 3 {
                assert!(trace.gauss_bonnet_consistency(k).unwrap().relative < 1e-6);
                assert!(mono.rhs >= 0.0 && trace.samples[k + 1].mtilde >= trace.samples[k].mtilde);
            }
        }
    }
}

#[test]
fn sphere_pinching_decays_like_inverse_area() {
    let grid = SphereGrid::full(8).unwrap();
    let trace = run(GraphSurface::sphere(&grid, 1.0).unwrap(), &controls(3.0, 0.5)).unwrap();
    let report = pinching_diagnostics(&trace, None).unwrap();
    // sup|H²-4| = 4/sinh²r(t) = 4e^{-t}/sinh²r₀.
    assert!((report.curvature.slope + 1.0).abs() < 1e-6, "{report:?}");
    let expected = trace.initial_area() * 4.0 / 1f64.sinh().powi(2);
    assert!((report.curvature.prefactor / expected - 1.0).abs() < 1e-6);
    assert!(matches!(
        pinching_diagnostics(&trace, Some((0.0, 1.0))),
        Err(Error::InsufficientData(_))
    ));
}

#[test]
fn sphere_profile_converges_to_log_sinh() {
    let grid = SphereGrid::full(4).unwrap();
    let c = FlowControls {
        dt_max: 0.25,
        ..controls(8.0, 0.5)
    };
    let trace = run(GraphSurface::sphere(&grid, 1.0).unwrap(), &c).unwrap();
    let extraction = extract_profile(&trace, 1e-2).unwrap();
    let target = (2.0 * 1f64.sinh()).ln();
    assert!(extraction.profile.values().iter().all(|f| (f - target).abs() < 1e-3));
    assert!(extraction.monotone);
    assert!(matches!(extract_profile(&trace, 1e-9), Err(Error::NotConverged { .. })));
}

#[test]
fn csv_has_one_row_per_sample() {
    let grid = SphereGrid::full(8).unwrap();
    let trace = run(GraphSurface::sphere(&grid, 1.0).unwrap(), &controls(0.2, 0.1)).unwrap();
    let csv = trace.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], trace::CSV_HEADER);
    assert_eq!(lines.len(), trace.len() + 1);
    assert!(lines[1].split(',').nth(7).unwrap() == "NaN");
}

#[test]
fn fit_recovers_exponential() {
    let ts: Vec<f64> = (0..8).map(|k| k as f64 * 0.5).collect();
    let ys: Vec<f64> = ts.iter().map(|t| 3.0 * (-1.5 * t).exp()).collect();
    let fit = fit_decay(&ts, &ys).unwrap();
    assert!((fit.slope + 1.5).abs() < 1e-12 && (fit.prefactor - 3.0).abs() < 1e-11);
}
