use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::mat2::{Frame, Mat2, Vec2};
use super::quadrature::{gauss_jacobi_symmetric, orthonormal_polynomials, sphere_area};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridMode {
    /// Functions of colatitude and longitude on S² (n = 3 only).
    Full2d,
    /// Functions of colatitude only on S^{n-1}.
    PolarSymmetric,
}

/// Quadrature grid plus spectral basis on S^{n-1}.
///
/// Nodes are stored latitude-major: node `i * nlon + j` sits at colatitude
/// index `i` (θ increasing from the north pole) and longitude index `j`.
/// Polar-symmetric grids have a single longitude.
#[derive(Debug)]
pub struct SphereGrid {
    dimension: usize,
    mode: GridMode,
    band_limit: usize,
    cos_theta: Vec<f64>,
    sin_theta: Vec<f64>,
    lat_weights: Vec<f64>,
    nlon: usize,
    longitudes: Vec<f64>,
    basis: Basis,
}

#[derive(Debug)]
enum Basis {
    Full(FullBasis),
    Polar(PolarBasis),
}

/// Normalized associated Legendre functions P̄_l^m(cos θ) and θ-derivatives,
/// stored per (m, l) pair, m ascending then l ascending.
#[derive(Debug)]
struct FullBasis {
    m_offset: Vec<usize>,
    p: Vec<Vec<f64>>,
    dp: Vec<Vec<f64>>,
    d2p: Vec<Vec<f64>>,
    cos_table: Vec<f64>,
    sin_table: Vec<f64>,
}

/// Orthonormal zonal harmonics Z_l(x) with x-derivatives.
#[derive(Debug)]
struct PolarBasis {
    p: Vec<Vec<f64>>,
    dp: Vec<Vec<f64>>,
    d2p: Vec<Vec<f64>>,
}

/// Nodal values of a band-limited function together with its covariant
/// gradient and Hessian in the orthonormal (colatitude, tangential) frame.
#[derive(Clone, Debug)]
pub struct Derivatives {
    pub values: Vec<f64>,
    pub grad: Vec<Vec2>,
    pub hess: Vec<Mat2>,
}

impl SphereGrid {
    /// Full S² grid with the default 3/2-rule node counts for band limit `l`.
    pub fn full(band_limit: usize) -> Result<Arc<Self>> {
        let nlat = 3 * band_limit / 2 + 2;
        let nlon = 3 * band_limit + 2;
        Self::full_with_nodes(band_limit, nlat, nlon)
    }

    pub fn full_with_nodes(band_limit: usize, nlat: usize, nlon: usize) -> Result<Arc<Self>> {
        if band_limit == 0 {
            return Err(Error::InvalidGrid("band limit must be positive".into()));
        }
        if nlat < band_limit + 1 {
            return Err(Error::InvalidGrid(format!(
                "need at least {} latitude nodes for band limit {band_limit}, got {nlat}",
                band_limit + 1
            )));
        }
        if nlon < 2 * band_limit + 1 {
            return Err(Error::InvalidGrid(format!(
                "need at least {} longitude nodes for band limit {band_limit}, got {nlon}",
                2 * band_limit + 1
            )));
        }
        let (cos_theta, wx) = gauss_jacobi_symmetric(nlat, 0.0);
        let sin_theta: Vec<f64> = cos_theta.iter().map(|x| (1.0 - x * x).sqrt()).collect();
        let dlon = 2.0 * PI / nlon as f64;
        let lat_weights = wx.iter().map(|w| w * dlon).collect();
        let longitudes: Vec<f64> = (0..nlon).map(|j| j as f64 * dlon).collect();
        let basis = Basis::Full(FullBasis::build(band_limit, &cos_theta, &sin_theta, &longitudes));
        Ok(Arc::new(SphereGrid {
            dimension: 3,
            mode: GridMode::Full2d,
            band_limit,
            cos_theta,
            sin_theta,
            lat_weights,
            nlon,
            longitudes,
            basis,
        }))
    }

    /// Polar-symmetric grid on S^{n-1} with `nodes` colatitudes.
    pub fn polar(dimension: usize, band_limit: usize, nodes: usize) -> Result<Arc<Self>> {
        if dimension < 3 {
            return Err(Error::InvalidGrid(format!("dimension must be at least 3, got {dimension}")));
        }
        if band_limit == 0 {
            return Err(Error::InvalidGrid("band limit must be positive".into()));
        }
        if nodes < band_limit + 1 {
            return Err(Error::InvalidGrid(format!(
                "need at least {} colatitude nodes for band limit {band_limit}, got {nodes}",
                band_limit + 1
            )));
        }
        let a = (dimension as f64 - 3.0) / 2.0;
        let (cos_theta, wx) = gauss_jacobi_symmetric(nodes, a);
        let sin_theta: Vec<f64> = cos_theta.iter().map(|x| (1.0 - x * x).sqrt()).collect();
        let fibre = sphere_area(dimension - 2);
        let lat_weights = wx.iter().map(|w| w * fibre).collect();
        let basis = Basis::Polar(PolarBasis::build(band_limit, a, fibre, &cos_theta));
        Ok(Arc::new(SphereGrid {
            dimension,
            mode: GridMode::PolarSymmetric,
            band_limit,
            cos_theta,
            sin_theta,
            lat_weights,
            nlon: 1,
            longitudes: vec![0.0],
            basis,
        }))
    }

    /// Default polar grid: 256 colatitudes, band limit 64.
    pub fn polar_default(dimension: usize) -> Result<Arc<Self>> {
        Self::polar(dimension, 64, 256)
    }

    /// Same layout at another band limit (node counts rescaled by the default rule).
    pub fn refined(&self, band_limit: usize) -> Result<Arc<Self>> {
        match self.mode {
            GridMode::Full2d => Self::full(band_limit),
            GridMode::PolarSymmetric => Self::polar(self.dimension, band_limit, 2 * band_limit),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn mode(&self) -> GridMode {
        self.mode
    }

    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    pub fn nlat(&self) -> usize {
        self.cos_theta.len()
    }

    pub fn nlon(&self) -> usize {
        self.nlon
    }

    pub fn len(&self) -> usize {
        self.nlat() * self.nlon
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn frame(&self) -> Frame {
        match self.mode {
            GridMode::Full2d => Frame::new(1),
            GridMode::PolarSymmetric => Frame::new(self.dimension - 2),
        }
    }

    /// Area of the unit sphere S^{n-1}.
    pub fn total_area(&self) -> f64 {
        sphere_area(self.dimension - 1)
    }

    pub fn cos_theta(&self) -> &[f64] {
        &self.cos_theta
    }

    pub fn sin_theta(&self) -> &[f64] {
        &self.sin_theta
    }

    pub fn longitudes(&self) -> &[f64] {
        &self.longitudes
    }

    pub fn colatitude_index(&self, node: usize) -> usize {
        node / self.nlon
    }

    /// Quadrature weight attached to a node.
    pub fn weight(&self, node: usize) -> f64 {
        self.lat_weights[node / self.nlon]
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.weight(k)).collect()
    }

    /// Restriction of the Cartesian coordinate X^{axis} (axis in 1..=n) to the
    /// unit sphere. On polar grids only the symmetry axis X^n is a zonal
    /// function; the others are reported as `None`.
    pub fn cartesian(&self, axis: usize) -> Option<Vec<f64>> {
        let n = self.dimension;
        if axis == 0 || axis > n {
            return None;
        }
        match self.mode {
            GridMode::Full2d => {
                let mut out = Vec::with_capacity(self.len());
                for i in 0..self.nlat() {
                    for &lon in &self.longitudes {
                        out.push(match axis {
                            1 => self.sin_theta[i] * lon.cos(),
                            2 => self.sin_theta[i] * lon.sin(),
                            _ => self.cos_theta[i],
                        });
                    }
                }
                Some(out)
            }
            GridMode::PolarSymmetric => (axis == n).then(|| self.cos_theta.clone()),
        }
    }

    pub fn num_coeffs(&self) -> usize {
        match self.mode {
            GridMode::Full2d => (self.band_limit + 1) * (self.band_limit + 1),
            GridMode::PolarSymmetric => self.band_limit + 1,
        }
    }

    /// Coefficient slot of the harmonic of degree l and order m. Real
    /// harmonics: m > 0 multiplies cos(mφ), m < 0 multiplies sin(|m|φ).
    pub fn coeff_index(&self, l: usize, m: i64) -> Option<usize> {
        if l > self.band_limit || m.unsigned_abs() as usize > l {
            return None;
        }
        match self.mode {
            GridMode::Full2d => Some((l as i64 * l as i64 + l as i64 + m) as usize),
            GridMode::PolarSymmetric => (m == 0).then_some(l),
        }
    }

    /// (l, m) labels in coefficient order.
    pub fn coeff_labels(&self) -> Vec<(usize, i64)> {
        match self.mode {
            GridMode::Full2d => (0..=self.band_limit)
                .flat_map(|l| (-(l as i64)..=l as i64).map(move |m| (l, m)))
                .collect(),
            GridMode::PolarSymmetric => (0..=self.band_limit).map(|l| (l, 0)).collect(),
        }
    }

    pub fn degree_of(&self, index: usize) -> usize {
        match self.mode {
            GridMode::Full2d => (index as f64).sqrt().floor() as usize,
            GridMode::PolarSymmetric => index,
        }
    }

    /// Eigenvalue of -Δ_σ on degree-l harmonics of S^{n-1}.
    pub fn laplace_eigenvalue(&self, l: usize) -> f64 {
        (l * (l + self.dimension - 2)) as f64
    }

    /// Orthogonal projection onto harmonics of degree ≤ band limit, by quadrature.
    pub fn analyze(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.len());
        match &self.basis {
            Basis::Polar(b) => (0..=self.band_limit)
                .map(|l| {
                    (0..self.nlat())
                        .map(|i| self.lat_weights[i] * values[i] * b.p[l][i])
                        .sum()
                })
                .collect(),
            Basis::Full(b) => {
                let nlat = self.nlat();
                let nlon = self.nlon;
                let lmax = self.band_limit;
                // Longitudinal projections per latitude.
                let mut fc = vec![vec![0.0; nlat]; lmax + 1];
                let mut fs = vec![vec![0.0; nlat]; lmax + 1];
                for i in 0..nlat {
                    let row = &values[i * nlon..(i + 1) * nlon];
                    for m in 0..=lmax {
                        let ct = &b.cos_table[m * nlon..(m + 1) * nlon];
                        let st = &b.sin_table[m * nlon..(m + 1) * nlon];
                        let mut c = 0.0;
                        let mut s = 0.0;
                        for j in 0..nlon {
                            c += row[j] * ct[j];
                            s += row[j] * st[j];
                        }
                        fc[m][i] = c * self.lat_weights[i];
                        fs[m][i] = s * self.lat_weights[i];
                    }
                }
                let mut coeffs = vec![0.0; self.num_coeffs()];
                for m in 0..=lmax {
                    let norm = if m == 0 { 1.0 } else { 2f64.sqrt() };
                    for l in m..=lmax {
                        let p = &b.p[b.m_offset[m] + l - m];
                        let mut c = 0.0;
                        let mut s = 0.0;
                        for i in 0..nlat {
                            c += p[i] * fc[m][i];
                            s += p[i] * fs[m][i];
                        }
                        let base = l * l + l;
                        coeffs[base + m] = norm * c;
                        if m > 0 {
                            coeffs[base - m] = norm * s;
                        }
                    }
                }
                coeffs
            }
        }
    }

    /// Nodal values of a coefficient vector.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        assert_eq!(coeffs.len(), self.num_coeffs());
        match &self.basis {
            Basis::Polar(b) => (0..self.nlat())
                .map(|i| (0..=self.band_limit).map(|l| coeffs[l] * b.p[l][i]).sum())
                .collect(),
            Basis::Full(b) => {
                let profiles = self.latitude_profiles(b, coeffs, false);
                let mut out = vec![0.0; self.len()];
                for i in 0..self.nlat() {
                    for j in 0..self.nlon {
                        let mut u = 0.0;
                        for m in 0..=self.band_limit {
                            let (c, s) = (profiles.c[m][i], profiles.s[m][i]);
                            u += c * b.cos_table[m * self.nlon + j] + s * b.sin_table[m * self.nlon + j];
                        }
                        out[i * self.nlon + j] = u;
                    }
                }
                out
            }
        }
    }

    /// Values, covariant gradient and covariant Hessian of a band-limited function.
    pub fn derivatives(&self, coeffs: &[f64]) -> Derivatives {
        assert_eq!(coeffs.len(), self.num_coeffs());
        match &self.basis {
            Basis::Polar(b) => {
                let mut values = Vec::with_capacity(self.len());
                let mut grad = Vec::with_capacity(self.len());
                let mut hess = Vec::with_capacity(self.len());
                for i in 0..self.nlat() {
                    let (mut u, mut ux, mut uxx) = (0.0, 0.0, 0.0);
                    for l in 0..=self.band_limit {
                        u += coeffs[l] * b.p[l][i];
                        ux += coeffs[l] * b.dp[l][i];
                        uxx += coeffs[l] * b.d2p[l][i];
                    }
                    let (x, s) = (self.cos_theta[i], self.sin_theta[i]);
                    values.push(u);
                    grad.push([-s * ux, 0.0]);
                    // θθ component and the tangential block cot θ u_θ.
                    hess.push(Mat2::new(s * s * uxx - x * ux, 0.0, 0.0, -x * ux));
                }
                Derivatives { values, grad, hess }
            }
            Basis::Full(b) => {
                let prof = self.latitude_profiles(b, coeffs, true);
                let nlon = self.nlon;
                let mut values = vec![0.0; self.len()];
                let mut grad = vec![[0.0; 2]; self.len()];
                let mut hess = vec![Mat2::ZERO; self.len()];
                for i in 0..self.nlat() {
                    let (x, s) = (self.cos_theta[i], self.sin_theta[i]);
                    let cot = x / s;
                    for j in 0..nlon {
                        let (mut u, mut ut, mut up, mut utt, mut utp, mut upp) =
                            (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
                        for m in 0..=self.band_limit {
                            let ct = b.cos_table[m * nlon + j];
                            let st = b.sin_table[m * nlon + j];
                            let mf = m as f64;
                            let (c, sn) = (prof.c[m][i], prof.s[m][i]);
                            let (dc, ds) = (prof.dc[m][i], prof.ds[m][i]);
                            let (d2c, d2s) = (prof.d2c[m][i], prof.d2s[m][i]);
                            u += c * ct + sn * st;
                            ut += dc * ct + ds * st;
                            up += mf * (-c * st + sn * ct);
                            utt += d2c * ct + d2s * st;
                            utp += mf * (-dc * st + ds * ct);
                            upp += -mf * mf * (c * ct + sn * st);
                        }
                        let k = i * nlon + j;
                        values[k] = u;
                        grad[k] = [ut, up / s];
                        let h12 = (utp - cot * up) / s;
                        hess[k] = Mat2::symmetric(utt, h12, upp / (s * s) + cot * ut);
                    }
                }
                Derivatives { values, grad, hess }
            }
        }
    }

    /// Coefficients of -Δ_σ applied to a band-limited function.
    pub fn apply_laplacian(&self, coeffs: &[f64]) -> Vec<f64> {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| -self.laplace_eigenvalue(self.degree_of(k)) * c)
            .collect()
    }

    fn latitude_profiles(&self, b: &FullBasis, coeffs: &[f64], with_derivs: bool) -> Profiles {
        let nlat = self.nlat();
        let lmax = self.band_limit;
        let zero = || vec![vec![0.0; nlat]; lmax + 1];
        let mut pr = Profiles {
            c: zero(),
            s: zero(),
            dc: zero(),
            ds: zero(),
            d2c: zero(),
            d2s: zero(),
        };
        for m in 0..=lmax {
            let norm = if m == 0 { 1.0 } else { 2f64.sqrt() };
            for l in m..=lmax {
                let base = l * l + l;
                let cc = norm * coeffs[base + m];
                let cs = if m > 0 { norm * coeffs[base - m] } else { 0.0 };
                if cc == 0.0 && cs == 0.0 {
                    continue;
                }
                let idx = b.m_offset[m] + l - m;
                let (p, dp, d2p) = (&b.p[idx], &b.dp[idx], &b.d2p[idx]);
                for i in 0..nlat {
                    pr.c[m][i] += cc * p[i];
                    pr.s[m][i] += cs * p[i];
                    if with_derivs {
                        pr.dc[m][i] += cc * dp[i];
                        pr.ds[m][i] += cs * dp[i];
                        pr.d2c[m][i] += cc * d2p[i];
                        pr.d2s[m][i] += cs * d2p[i];
                    }
                }
            }
        }
        pr
    }
}

struct Profiles {
    c: Vec<Vec<f64>>,
    s: Vec<Vec<f64>>,
    dc: Vec<Vec<f64>>,
    ds: Vec<Vec<f64>>,
    d2c: Vec<Vec<f64>>,
    d2s: Vec<Vec<f64>>,
}

impl FullBasis {
    fn build(lmax: usize, cos_theta: &[f64], sin_theta: &[f64], longitudes: &[f64]) -> Self {
        let nlat = cos_theta.len();
        let mut m_offset = Vec::with_capacity(lmax + 1);
        let mut p = Vec::new();
        let mut dp = Vec::new();
        let mut d2p = Vec::new();
        // P̄_m^m per latitude, carried between orders.
        let mut pmm = vec![1.0 / (4.0 * PI).sqrt(); nlat];
        for m in 0..=lmax {
            if m > 0 {
                let f = ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
                for (v, s) in pmm.iter_mut().zip(sin_theta) {
                    *v *= f * s;
                }
            }
            m_offset.push(p.len());
            let mut column: Vec<Vec<f64>> = Vec::with_capacity(lmax + 1 - m);
            for l in m..=lmax {
                let row: Vec<f64> = if l == m {
                    pmm.clone()
                } else if l == m + 1 {
                    let f = ((2 * m + 3) as f64).sqrt();
                    (0..nlat).map(|i| f * cos_theta[i] * pmm[i]).collect()
                } else {
                    let lf = l as f64;
                    let mf = m as f64;
                    let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                    let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
                    let (p1, p2) = (&column[l - m - 1], &column[l - m - 2]);
                    (0..nlat).map(|i| a * (cos_theta[i] * p1[i] - b * p2[i])).collect()
                };
                column.push(row);
            }
            for l in m..=lmax {
                let lf = l as f64;
                let mf = m as f64;
                let cur = &column[l - m];
                let lower = if l > m { Some(&column[l - m - 1]) } else { None };
                let k = ((2.0 * lf + 1.0) * (lf * lf - mf * mf) / (2.0 * lf - 1.0).max(1.0)).sqrt();
                let mut d1 = Vec::with_capacity(nlat);
                let mut d2 = Vec::with_capacity(nlat);
                for i in 0..nlat {
                    let (x, s) = (cos_theta[i], sin_theta[i]);
                    let below = lower.map_or(0.0, |r| r[i]);
                    let dv = (lf * x * cur[i] - k * below) / s;
                    d1.push(dv);
                    d2.push(-(x / s) * dv - (lf * (lf + 1.0) - mf * mf / (s * s)) * cur[i]);
                }
                dp.push(d1);
                d2p.push(d2);
            }
            p.extend(column);
        }
        let nlon = longitudes.len();
        let mut cos_table = vec![0.0; (lmax + 1) * nlon];
        let mut sin_table = vec![0.0; (lmax + 1) * nlon];
        for m in 0..=lmax {
            for (j, lon) in longitudes.iter().enumerate() {
                let (s, c) = (m as f64 * lon).sin_cos();
                cos_table[m * nlon + j] = c;
                sin_table[m * nlon + j] = s;
            }
        }
        FullBasis {
            m_offset,
            p,
            dp,
            d2p,
            cos_table,
            sin_table,
        }
    }
}

impl PolarBasis {
    fn build(lmax: usize, a: f64, fibre: f64, cos_theta: &[f64]) -> Self {
        let nlat = cos_theta.len();
        let scale = 1.0 / fibre.sqrt();
        let mut p = vec![vec![0.0; nlat]; lmax + 1];
        let mut dp = vec![vec![0.0; nlat]; lmax + 1];
        let mut d2p = vec![vec![0.0; nlat]; lmax + 1];
        for (i, &x) in cos_theta.iter().enumerate() {
            let (v, dv, d2v) = orthonormal_polynomials(x, lmax, a);
            for l in 0..=lmax {
                p[l][i] = scale * v[l];
                dp[l][i] = scale * dv[l];
                d2p[l][i] = scale * d2v[l];
            }
        }
        PolarBasis { p, dp, d2p }
    }
}
