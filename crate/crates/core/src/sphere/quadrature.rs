//! Gauss quadrature for the colatitude direction.
//!
//! On S^{n-1} a zonal integrand picks up the weight (1 - x²)^a dx with
//! x = cos θ and a = (n - 3)/2, so the nodes are those of the symmetric
//! Jacobi (Gegenbauer) family; a = 0 is plain Gauss–Legendre.

use std::f64::consts::PI;

/// ∫_{-1}^{1} (1 - x²)^a dx for a in {0, 1/2, 1, 3/2, ...}.
pub fn jacobi_mass(a: f64) -> f64 {
    let twice = (2.0 * a).round() as i64;
    assert!(twice >= 0 && (2.0 * a - twice as f64).abs() < 1e-12, "a must be a non-negative half-integer");
    let (mut mass, mut k) = if twice % 2 == 0 { (2.0, 0) } else { (PI / 2.0, 1) };
    while k < twice {
        k += 2;
        let ak = k as f64 / 2.0;
        mass *= 2.0 * ak / (2.0 * ak + 1.0);
    }
    mass
}

/// Recurrence coefficient of the orthonormal polynomials for (1 - x²)^a:
/// x p_l = c_{l+1} p_{l+1} + c_l p_{l-1}.
pub fn recurrence_coefficient(l: usize, a: f64) -> f64 {
    if l == 0 {
        return 0.0;
    }
    let l = l as f64;
    (l * (l + 2.0 * a) / ((2.0 * l + 2.0 * a - 1.0) * (2.0 * l + 2.0 * a + 1.0))).sqrt()
}

/// Orthonormal polynomials p_0..p_{degree} and their first two x-derivatives at x.
pub fn orthonormal_polynomials(x: f64, degree: usize, a: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; degree + 1];
    let mut dp = vec![0.0; degree + 1];
    let mut d2p = vec![0.0; degree + 1];
    p[0] = 1.0 / jacobi_mass(a).sqrt();
    for l in 0..degree {
        let c_next = recurrence_coefficient(l + 1, a);
        let c_here = recurrence_coefficient(l, a);
        let (pm, dpm, d2pm) = if l > 0 {
            (p[l - 1], dp[l - 1], d2p[l - 1])
        } else {
            (0.0, 0.0, 0.0)
        };
        p[l + 1] = (x * p[l] - c_here * pm) / c_next;
        dp[l + 1] = (p[l] + x * dp[l] - c_here * dpm) / c_next;
        d2p[l + 1] = (2.0 * dp[l] + x * d2p[l] - c_here * d2pm) / c_next;
    }
    (p, dp, d2p)
}

fn polynomial_and_derivative(x: f64, degree: usize, a: f64) -> (f64, f64) {
    let mut p_prev = 0.0;
    let mut p = 1.0 / jacobi_mass(a).sqrt();
    let mut dp_prev = 0.0;
    let mut dp = 0.0;
    for l in 0..degree {
        let c_next = recurrence_coefficient(l + 1, a);
        let c_here = recurrence_coefficient(l, a);
        let p_next = (x * p - c_here * p_prev) / c_next;
        let dp_next = (p + x * dp - c_here * dp_prev) / c_next;
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
    }
    (p, dp)
}

/// Nodes (as x = cos θ, θ increasing) and weights of the `count`-point
/// Gauss rule for the weight (1 - x²)^a on [-1, 1].
pub fn gauss_jacobi_symmetric(count: usize, a: f64) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    let nf = count as f64;
    for k in 0..count {
        let theta = (k as f64 + a / 2.0 + 0.75) * PI / (nf + a + 0.5);
        let mut x = theta.cos();
        for _ in 0..100 {
            let (p, dp) = polynomial_and_derivative(x, count, a);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (p, _, _) = orthonormal_polynomials(x, count - 1, a);
        let christoffel: f64 = p.iter().map(|v| v * v).sum();
        nodes.push(x);
        weights.push(1.0 / christoffel);
    }
    (nodes, weights)
}

/// Area of the unit sphere S^k.
pub fn sphere_area(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * sphere_area(k - 2),
    }
}
