//! Discrete calculus on the round sphere S^{n-1}.

mod calculus;
mod field;
mod grid;
mod mat2;
pub mod quadrature;

pub(crate) use calculus::analyze_centered;
pub use calculus::{
    derivatives, grad_sigma, hess_sigma, integrate, laplacian, project_first_eigenspace,
    traceless_hess, EigenspaceProjection, ProjectionSummary,
};
pub use field::{SphereField, SphereTensor, SphereVector};
pub use grid::{Derivatives, GridMode, SphereGrid};
pub use mat2::{Frame, Mat2, Vec2};
