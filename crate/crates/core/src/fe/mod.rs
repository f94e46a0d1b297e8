//! Reference-element machinery: Lagrange bases of degree 1 to 3, quadrature
//! on the reference triangle and the affine reference-to-physical map.
//!
//! The reference triangle has vertices (0,0), (1,0), (0,1).

mod affine;
mod basis;
mod quadrature;

pub use affine::AffineMap;
pub use basis::{lagrange_basis, ReferenceBasis, Tabulation};
pub use quadrature::{quadrature, QuadratureRule, MAX_EXACTNESS};

/// Default quadrature exactness for the nonlinear forms: 2 * velocity degree + 4.
pub fn default_exactness(velocity_degree: usize) -> usize {
    2 * velocity_degree + 4
}
