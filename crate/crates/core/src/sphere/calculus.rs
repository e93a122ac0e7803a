//! Covariant calculus with respect to the round metric σ.

use serde::Serialize;

use super::field::{SphereField, SphereTensor, SphereVector};
use super::grid::{Derivatives, SphereGrid};
use crate::error::Result;

/// Spectral derivatives of a field: analysis to the grid band limit, then
/// synthesis of the differentiated basis.
pub fn derivatives(u: &SphereField) -> Derivatives {
    let grid = u.grid();
    grid.derivatives(&analyze_centered(grid, u.values()))
}

/// Analysis with the nodal mean removed first, so quadrature round-off
/// scales with the variation of the field rather than its magnitude.
pub(crate) fn analyze_centered(grid: &SphereGrid, values: &[f64]) -> Vec<f64> {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let mut coeffs = grid.analyze(&centered);
    coeffs[0] += mean * grid.total_area().sqrt();
    coeffs
}

/// D_i u.
pub fn grad_sigma(u: &SphereField) -> SphereVector {
    SphereVector::new(u.grid().clone(), derivatives(u).grad)
}

/// D_j D_i u.
pub fn hess_sigma(u: &SphereField) -> SphereTensor {
    SphereTensor::new(u.grid().clone(), derivatives(u).hess)
}

/// D²u - (Δ_σ u)/(n-1) σ.
pub fn traceless_hess(u: &SphereField) -> SphereTensor {
    let frame = u.grid().frame();
    let comps = derivatives(u).hess.iter().map(|h| frame.traceless(h)).collect();
    SphereTensor::new(u.grid().clone(), comps)
}

/// Δ_σ u, computed from the spectrum.
pub fn laplacian(u: &SphereField) -> SphereField {
    let grid = u.grid();
    let lap = grid.apply_laplacian(&analyze_centered(grid, u.values()));
    SphereField::from_coeffs(grid, &lap).expect("synthesized values are finite")
}

pub fn integrate(u: &SphereField) -> f64 {
    u.integrate()
}

/// L²(σ)-orthogonal projection onto span{1, X¹, …, Xⁿ}.
#[derive(Clone, Debug)]
pub struct EigenspaceProjection {
    /// a₀, a₁, …, a_n in w ≈ a₀ + Σ aᵢ Xⁱ.
    pub coefficients: Vec<f64>,
    pub projection: SphereField,
    pub residual: SphereField,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectionSummary {
    pub coefficients: Vec<f64>,
    pub residual_norm: f64,
    pub field_norm: f64,
}

pub fn project_first_eigenspace(w: &SphereField) -> Result<EigenspaceProjection> {
    let grid = w.grid();
    let n = grid.dimension();
    let area = grid.total_area();
    // ∫(Xⁱ)² = |S^{n-1}|/n and the Xⁱ are mutually orthogonal and orthogonal to 1.
    let coord_norm2 = area / n as f64;
    let mut coefficients = vec![w.integrate() / area];
    let mut projection = SphereField::constant(grid, coefficients[0]);
    for axis in 1..=n {
        match SphereField::cartesian(grid, axis) {
            Ok(x) => {
                let a = w.zip_with(&x, |a, b| a * b)?.integrate() / coord_norm2;
                coefficients.push(a);
                projection = projection.zip_with(&x, |p, xi| p + a * xi)?;
            }
            // Non-zonal coordinates are orthogonal to every zonal field.
            Err(_) => coefficients.push(0.0),
        }
    }
    let residual = w.zip_with(&projection, |a, b| a - b)?;
    Ok(EigenspaceProjection {
        coefficients,
        projection,
        residual,
    })
}

impl EigenspaceProjection {
    pub fn summary(&self, w: &SphereField) -> ProjectionSummary {
        ProjectionSummary {
            coefficients: self.coefficients.clone(),
            residual_norm: self.residual.l2_norm(),
            field_norm: w.l2_norm(),
        }
    }
}
