//! Shared fixtures for the criterion benchmarks.

use std::sync::Arc;

use carreau_core::{ManufacturedCase, Mesh, MixedSpaces, Result};

/// Taylor-Hood spaces on the n x n unit square with pressure degree `r`.
pub fn spaces(n: usize, r: usize) -> Result<MixedSpaces> {
    MixedSpaces::new(Arc::new(Mesh::unit_square(n)?), r, None)
}

/// The swirl case with the standard parameters.
pub fn test1(p: f64) -> Result<ManufacturedCase> {
    ManufacturedCase::test1(p, 0.5, 2.0, 1.0, 1.0)
}
