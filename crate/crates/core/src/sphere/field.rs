use std::sync::Arc;

use super::grid::SphereGrid;
use super::mat2::{Mat2, Vec2};
use crate::error::{Error, Result};

/// Scalar function on S^{n-1} sampled at the nodes of a grid.
#[derive(Clone, Debug)]
pub struct SphereField {
    grid: Arc<SphereGrid>,
    values: Vec<f64>,
}

impl SphereField {
    pub fn new(grid: Arc<SphereGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some((node, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { node, value });
        }
        Ok(SphereField { grid, values })
    }

    pub fn constant(grid: &Arc<SphereGrid>, c: f64) -> Self {
        SphereField {
            values: vec![c; grid.len()],
            grid: grid.clone(),
        }
    }

    /// Samples a function of (cos θ, sin θ, longitude) at every node.
    pub fn from_fn(grid: &Arc<SphereGrid>, f: impl Fn(f64, f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nlat() {
            let (x, s) = (grid.cos_theta()[i], grid.sin_theta()[i]);
            for &lon in grid.longitudes() {
                values.push(f(x, s, lon));
            }
        }
        Self::new(grid.clone(), values)
    }

    /// Synthesizes a field from harmonic coefficients.
    pub fn from_coeffs(grid: &Arc<SphereGrid>, coeffs: &[f64]) -> Result<Self> {
        if coeffs.len() != grid.num_coeffs() {
            return Err(Error::InvalidGrid(format!(
                "expected {} coefficients, got {}",
                grid.num_coeffs(),
                coeffs.len()
            )));
        }
        Self::new(grid.clone(), grid.synthesize(coeffs))
    }

    /// X^axis restricted to the sphere.
    pub fn cartesian(grid: &Arc<SphereGrid>, axis: usize) -> Result<Self> {
        let values = grid.cartesian(axis).ok_or_else(|| {
            Error::Unsupported(format!("coordinate X^{axis} is not available on this grid"))
        })?;
        Self::new(grid.clone(), values)
    }

    /// Degree-2 Legendre polynomial of the symmetry-axis coordinate X^n.
    pub fn legendre_p2(grid: &Arc<SphereGrid>) -> Self {
        let mut f = Self::cartesian(grid, grid.dimension()).expect("symmetry axis always exists");
        f.values.iter_mut().for_each(|x| *x = 0.5 * (3.0 * *x * *x - 1.0));
        f
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        SphereField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &SphereField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(SphereField {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn check_same_grid(&self, other: &SphereField) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (k, v) in self.values.iter().enumerate() {
            if *v < self.values[best] {
                best = k;
            }
        }
        best
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// ∫ u dμ_σ by the grid quadrature.
    pub fn integrate(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| self.grid.weight(k) * v)
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.map(|v| v * v).integrate().sqrt()
    }

    pub fn analyze(&self) -> Vec<f64> {
        self.grid.analyze(&self.values)
    }
}

/// Rank-1 tangent tensor field in the orthonormal frame.
#[derive(Clone, Debug)]
pub struct SphereVector {
    grid: Arc<SphereGrid>,
    comps: Vec<Vec2>,
}

impl SphereVector {
    pub fn new(grid: Arc<SphereGrid>, comps: Vec<Vec2>) -> Self {
        assert_eq!(comps.len(), grid.len());
        SphereVector { grid, comps }
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn comps(&self) -> &[Vec2] {
        &self.comps
    }

    /// |V|²_σ at each node.
    pub fn norm_squared(&self) -> SphereField {
        let frame = self.grid.frame();
        SphereField {
            grid: self.grid.clone(),
            values: self.comps.iter().map(|v| frame.dot(*v, *v)).collect(),
        }
    }
}

/// Rank-2 tangent tensor field (covariant or mixed) in the orthonormal frame.
#[derive(Clone, Debug)]
pub struct SphereTensor {
    grid: Arc<SphereGrid>,
    comps: Vec<Mat2>,
}

impl SphereTensor {
    pub fn new(grid: Arc<SphereGrid>, comps: Vec<Mat2>) -> Self {
        assert_eq!(comps.len(), grid.len());
        SphereTensor { grid, comps }
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn comps(&self) -> &[Mat2] {
        &self.comps
    }

    pub fn trace(&self) -> SphereField {
        let frame = self.grid.frame();
        SphereField {
            grid: self.grid.clone(),
            values: self.comps.iter().map(|a| frame.trace(a)).collect(),
        }
    }

    /// tr(A A) at each node; equals |A|²_σ for symmetric A.
    pub fn norm_squared(&self) -> SphereField {
        let frame = self.grid.frame();
        SphereField {
            grid: self.grid.clone(),
            values: self.comps.iter().map(|a| frame.trace_product(a, a)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0_f64, |m, a| m.max(a.max_abs()))
    }

    /// Largest node-wise |A_12 - A_21| relative to the largest component.
    pub fn relative_asymmetry(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        self.comps.iter().fold(0.0_f64, |m, a| m.max(a.asymmetry())) / scale
    }
}
