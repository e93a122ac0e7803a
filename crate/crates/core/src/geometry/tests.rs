use std::f64::consts::PI;
use std::sync::Arc;

use super::*;
use crate::sphere::{grad_sigma, quadrature::sphere_area, SphereField, SphereGrid};

/// Radius of a geodesic sphere of radius `big_r` whose centre sits at
/// distance `d` from the origin along the X^n axis, in direction x = X^n.
/// Hyperboloid model: cosh r cosh d - sinh r sinh d x = cosh R.
fn shifted_sphere_radius(big_r: f64, d: f64, x: f64) -> f64 {
    let a = d.cosh();
    let b = d.sinh() * x;
    let norm = (a * a - b * b).sqrt();
    (b / a).atanh() + (big_r.cosh() / norm).acosh()
}

fn surface_from(grid: &Arc<SphereGrid>, f: impl Fn(f64, f64, f64) -> f64) -> GraphSurface {
    GraphSurface::from_field(&SphereField::from_fn(grid, f).unwrap()).unwrap()
}

#[test]
fn phi_examples() {
    let grid = SphereGrid::full(8).unwrap();
    let r = SphereField::constant(&grid, 3f64.ln());
    let phi = phi_from_r(&r).unwrap();
    assert!((phi.values()[0] + 2f64.ln()).abs() < 1e-15);
    let far = phi_from_r(&SphereField::constant(&grid, 20.0)).unwrap();
    assert!(far.max() < 0.0 && far.sup_norm() < 5e-9);
    assert!(phi_from_r(&SphereField::constant(&grid, 0.0)).is_err());
}

#[test]
fn phi_gradient_is_scaled_radius_gradient() {
    let grid = SphereGrid::full(24).unwrap();
    let surface = surface_from(&grid, |x, s, lon| 2.0 + 0.3 * x + 0.2 * s * s * (2.0 * lon).cos());
    let phi = phi_from_r(surface.radius()).unwrap();
    let dphi = grad_sigma(&phi);
    let nodes = pointwise(&surface);
    let scale = nodes.iter().fold(0.0_f64, |m, g| m.max(g.dphi[0].abs().max(g.dphi[1].abs())));
    for (g, d) in nodes.iter().zip(dphi.comps()) {
        for i in 0..2 {
            assert!((g.dphi[i] - d[i]).abs() < 1e-8 * scale);
        }
    }
}

#[test]
fn geodesic_sphere_about_origin() {
    let grid = SphereGrid::full(32).unwrap();
    let surface = GraphSurface::sphere(&grid, 1.0).unwrap();
    let report = geometry_report(&surface);
    let coth = 1f64.cosh() / 1f64.sinh();
    for g in &report.nodes {
        assert!((g.shape.get(0, 0) - coth).abs() < 1e-10);
        assert!((g.shape.get(1, 1) - coth).abs() < 1e-10);
        assert!(g.shape.get(0, 1).abs() < 1e-10);
        assert!((g.excess * (g.excess + 4.0) - 4.0 / 1f64.sinh().powi(2)).abs() < 1e-10);
    }
    assert!((report.max_h - 2.0 * coth).abs() < 1e-10 && (report.min_h - 2.0 * coth).abs() < 1e-10);
    assert!((report.area - 4.0 * PI * 1f64.sinh().powi(2)).abs() < 1e-10);
    assert!(report.hawking.unwrap().abs() < 1e-10);
    assert!(report.modified.abs() < 1e-10);
    assert!(gauss_identity_check(&surface).unwrap() < 1e-10);
    let metric = induced_metric(&surface);
    assert!(metric.v.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
    for (g, gi) in metric.metric.comps().iter().zip(metric.inverse.comps()) {
        assert!(((*g * *gi) - Mat2::IDENTITY).max_abs() < 1e-12);
        assert!((g.get(0, 0) - 1f64.sinh().powi(2)).abs() < 1e-12);
    }
}

#[test]
fn off_centre_geodesic_spheres_are_umbilic() {
    for (n, grid) in [
        (3, SphereGrid::full(48).unwrap()),
        (3, SphereGrid::polar(3, 64, 128).unwrap()),
        (4, SphereGrid::polar(4, 64, 128).unwrap()),
        (6, SphereGrid::polar(6, 64, 128).unwrap()),
    ] {
        let (big_r, d) = (1.5, 0.4);
        let surface = surface_from(&grid, |x, _, _| shifted_sphere_radius(big_r, d, x));
        let report = geometry_report(&surface);
        let h = (n as f64 - 1.0) * big_r.cosh() / big_r.sinh();
        assert!((report.max_h - h).abs() < 1e-8, "n={n} maxH={}", report.max_h);
        assert!((report.min_h - h).abs() < 1e-8, "n={n}");
        assert!(report.aring2.sup_norm() < 1e-12, "n={n}");
        let area = sphere_area(n - 1) * big_r.sinh().powi(n as i32 - 1);
        assert!((report.area - area).abs() < 1e-9 * area, "n={n}");
        assert!(report.sup_grad_a2 < 1e-10, "n={n} {}", report.sup_grad_a2);
        assert!(report.grad_h2.sup_norm() < 1e-12);
    }
}

#[test]
fn induced_metric_identities() {
    let grid = SphereGrid::full(32).unwrap();
    let surface = surface_from(&grid, |x, s, lon| 1.5 + 0.2 * x * s * lon.cos() + 0.1 * x);
    let metric = induced_metric(&surface);
    let d = surface.derivatives();
    for k in 0..grid.len() {
        let g = metric.metric.comps()[k];
        let gi = metric.inverse.comps()[k];
        assert!(((g * gi) - Mat2::IDENTITY).max_abs() < 1e-10);
        let sh = d.values[k].sinh();
        let dr = d.grad[k];
        let v2 = 1.0 + (dr[0] * dr[0] + dr[1] * dr[1]) / (sh * sh);
        assert!((metric.v.values()[k].powi(2) - v2).abs() < 1e-12);
    }
}

#[test]
fn hessian_of_phi_factorizes() {
    let grid = SphereGrid::full(32).unwrap();
    let surface = surface_from(&grid, |x, s, lon| 2.0 + 0.2 * x + 0.1 * s * (lon + 0.3).sin());
    let phi = phi_from_r(surface.radius()).unwrap();
    let spectral = crate::sphere::hess_sigma(&phi);
    let nodes = pointwise(&surface);
    let scale = nodes.iter().fold(0.0_f64, |m, g| m.max(g.hess_phi.max_abs()));
    for (g, h) in nodes.iter().zip(spectral.comps()) {
        assert!((g.hess_phi - *h).max_abs() < 1e-7 * scale);
    }
}

#[test]
fn closed_traceless_formula_matches() {
    let grid = SphereGrid::full(32).unwrap();
    let surface = surface_from(&grid, |x, s, lon| 3.0 + 0.2 * x + 0.1 * s * s * (2.0 * lon).cos());
    let report = geometry_report(&surface);
    assert!(report.closed_form_gap < 1e-8, "{}", report.closed_form_gap);
    let frame = grid.frame();
    let scale = report.aring2.sup_norm();
    for g in &report.nodes {
        assert!((g.aring2 - g.aring2_from_shape(frame)).abs() < 1e-8 * scale);
        assert!((g.a2 - frame.trace_product(&g.shape, &g.shape)).abs() < 1e-12 * g.a2);
        assert!(g.aring2 >= -1e-10);
    }
    // Quadratic pinning: m_H and m̃ agree in sign through the Gauss identity.
    assert!(report.modified < 0.0 && report.hawking.unwrap() < 0.0);
}

#[test]
fn gauss_identity_examples() {
    let grid = SphereGrid::full(32).unwrap();
    let surface = surface_from(&grid, |x, _, _| 3.0 + 0.2 * x);
    assert!(gauss_identity_check(&surface).unwrap() < 1e-8);
    let polar = GraphSurface::sphere(&SphereGrid::polar_default(4).unwrap(), 1.0).unwrap();
    assert!(gauss_identity_check(&polar).is_err());
}

#[test]
fn gauss_identity_refines() {
    let profile = |x: f64, s: f64, lon: f64| 0.3 / (1.1 + 0.6 * x + 0.3 * s * lon.cos()) + 1.0;
    let mut residuals = Vec::new();
    for l in [8, 16] {
        let grid = SphereGrid::full(l).unwrap();
        residuals.push(gauss_identity_check(&surface_from(&grid, profile)).unwrap());
    }
    // The identity is exact for the band-limited surface; what remains is
    // quadrature error, which is already near round-off at L = 16.
    assert!(residuals[1] * 4.0 <= residuals[0] || residuals[1] < 1e-13, "{residuals:?}");
}

#[test]
fn rotational_and_embedded_gradient_of_a_agree() {
    let profile = |x: f64, _: f64, _: f64| 2.0 + 0.3 * x + 0.2 * (1.5 * x * x - 0.5) + 0.05 * x.powi(3);
    let full = geometry_report(&surface_from(&SphereGrid::full(48).unwrap(), profile));
    let polar_grid = SphereGrid::polar(3, 48, 128).unwrap();
    let polar = geometry_report(&surface_from(&polar_grid, profile));
    assert!(full.sup_grad_a2 > 1e-4);
    // Node sets differ, so compare sup norms loosely and integrals tightly.
    assert!((full.sup_grad_a2 - polar.sup_grad_a2).abs() < 1e-2 * full.sup_grad_a2);
    let a = full.integrate(full.grad_a2.values());
    let b = polar.integrate(polar.grad_a2.values());
    assert!((a - b).abs() < 1e-10 * a.abs(), "{a} {b}");
    assert!((full.q - polar.q).abs() < 1e-10 * full.q);
    assert!((full.gradient_integral - polar.gradient_integral).abs() < 1e-9 * full.gradient_integral);
    // tr(Å³) vanishes for a traceless 2×2 tensor.
    assert!(full.cubic_integral.abs() < 1e-14 && polar.cubic_integral.abs() < 1e-14);
}

#[test]
fn induced_laplacian_integrates_by_parts() {
    let grid = SphereGrid::full(32).unwrap();
    let surface = surface_from(&grid, |x, s, lon| 1.2 + 0.15 * x + 0.1 * s * x * lon.sin());
    let report = geometry_report(&surface);
    let frame = grid.frame();
    let u = SphereField::from_fn(&grid, |x, s, lon| x * x + 0.5 * s * lon.cos()).unwrap();
    let d = crate::sphere::derivatives(&u);
    let lap: Vec<f64> = (0..grid.len())
        .map(|k| report.nodes[k].induced_laplacian(frame, d.grad[k], d.hess[k]))
        .collect();
    let grad2: Vec<f64> = (0..grid.len())
        .map(|k| report.nodes[k].gradient_norm2(frame, d.grad[k]))
        .collect();
    let total = report.integrate(&lap);
    let dirichlet = report.integrate(&grad2);
    let u_lap: Vec<f64> = lap.iter().zip(u.values()).map(|(a, b)| a * b).collect();
    assert!(total.abs() < 1e-10 * dirichlet);
    assert!((report.integrate(&u_lap) + dirichlet).abs() < 1e-10 * dirichlet);
}

#[test]
fn q_exponent_vanishes_in_dimension_five() {
    let grid = SphereGrid::polar_default(5).unwrap();
    let surface = surface_from(&grid, |x, _, _| 2.0 + 0.1 * (1.5 * x * x - 0.5));
    let report = geometry_report(&surface);
    assert!(report.hawking.is_none());
    assert!(report.aring2_integral > 0.0);
    assert!((report.q - report.aring2_integral).abs() < 1e-15 * report.q);
    assert!((report.modified + report.area * report.aring2_integral).abs() == 0.0);
}

#[test]
fn summary_serializes() {
    let grid = SphereGrid::full(8).unwrap();
    let report = geometry_report(&GraphSurface::sphere(&grid, 1.0).unwrap());
    let json = serde_json::to_value(report.summary()).unwrap();
    assert_eq!(json["dimension"], 3);
    assert!(json["mH"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(json["mode"], "full2d");
}
