//! Mixed finite element solver for the stationary non-isothermal Stokes
//! problem with Carreau-law shear-thinning viscosity.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`]: structured triangulations of the unit square.
//! * [`fe`]: Lagrange bases, quadrature rules and affine element maps.
//! * [`constitutive`]: the Carreau law, temperature-dependent viscosity and
//!   the monotonicity/Lipschitz evaluators.
//! * [`space`], [`sparse`], [`assembly`]: degree-of-freedom management,
//!   compressed-row matrices and the weak forms.
//! * [`solver`]: the Picard fixed-point driver and the direct linear solves.
//! * [`manufactured`]: exact solutions, forcing terms and error norms.
//! * [`harness`]: multi-level convergence studies and their reports.

pub mod assembly;
pub mod constitutive;
pub mod error;
pub mod fe;
pub mod harness;
pub mod manufactured;
pub mod mesh;
pub mod solver;
pub mod space;
pub mod sparse;

pub use constitutive::{CarreauParams, SymTensor2, ViscosityModel};
pub use error::{Error, Result};
pub use manufactured::{CaseKind, ErrorReport, ManufacturedCase};
pub use mesh::{Mesh, MeshMetrics};
pub use solver::{CoupledState, IterationLog, SolverConfig};
pub use space::{FeSpace, MixedSpaces};

/// Version string embedded in report metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
