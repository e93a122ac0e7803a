//! Small fixed-size algebra for tangent tensors in an orthonormal frame.
//!
//! Every tensor on S^{n-1} handled here is block diagonal in the frame
//! (e_θ, rest): the first axis is the colatitude direction, the second
//! stands for either the longitude direction (S², multiplicity 1) or the
//! (n-2)-dimensional tangential block of a polar-symmetric field, on which
//! all tensors act as a multiple of the identity. Traces and contractions
//! therefore weight the second diagonal slot by that multiplicity.

use std::ops::{Add, Mul, Sub};

pub type Vec2 = [f64; 2];

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[0.0; 2]; 2]);
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2([[a11, a12], [a21, a22]])
    }

    pub fn symmetric(a11: f64, a12: f64, a22: f64) -> Self {
        Mat2([[a11, a12], [a12, a22]])
    }

    pub fn outer(a: Vec2, b: Vec2) -> Self {
        Mat2([[a[0] * b[0], a[0] * b[1]], [a[1] * b[0], a[1] * b[1]]])
    }

    pub fn scale(self, s: f64) -> Self {
        let a = self.0;
        Mat2([[s * a[0][0], s * a[0][1]], [s * a[1][0], s * a[1][1]]])
    }

    pub fn transpose(self) -> Self {
        let a = self.0;
        Mat2([[a[0][0], a[1][0]], [a[0][1], a[1][1]]])
    }

    pub fn apply(self, x: Vec2) -> Vec2 {
        let a = self.0;
        [a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn asymmetry(&self) -> f64 {
        (self.0[0][1] - self.0[1][0]).abs()
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + o.scale(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        let mut c = [[0.0; 2]; 2];
        for (i, row) in c.iter_mut().enumerate() {
            for (j, cij) in row.iter_mut().enumerate() {
                *cij = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(c)
    }
}

/// Contraction rules of the frame; `multiplicity` is the dimension of the
/// block represented by the second slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub multiplicity: f64,
}

impl Frame {
    pub fn new(multiplicity: usize) -> Self {
        Frame {
            multiplicity: multiplicity as f64,
        }
    }

    /// Dimension of the tangent space, n - 1.
    pub fn dim(&self) -> f64 {
        1.0 + self.multiplicity
    }

    pub fn trace(&self, a: &Mat2) -> f64 {
        a.0[0][0] + self.multiplicity * a.0[1][1]
    }

    pub fn dot(&self, a: Vec2, b: Vec2) -> f64 {
        a[0] * b[0] + self.multiplicity * a[1] * b[1]
    }

    /// tr(A B).
    pub fn trace_product(&self, a: &Mat2, b: &Mat2) -> f64 {
        self.trace(&(*a * *b))
    }

    /// Removes the trace: A - tr(A)/(n-1) I.
    pub fn traceless(&self, a: &Mat2) -> Mat2 {
        *a - Mat2::IDENTITY.scale(self.trace(a) / self.dim())
    }
}
