//! Numerical laboratory for inverse mean curvature flow of star-shaped
//! hypersurfaces in hyperbolic space H^n, written as radial graphs
//! r = r̃(θ) over the round sphere in the metric dr² + sinh²r σ.

pub mod counterexample;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod io;
pub mod roundness;
pub mod sphere;

pub use error::{Error, Result};
