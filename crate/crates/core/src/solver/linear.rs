//! Sparse direct solves through faer's LU.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::MatMut;

use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, SparseSystem};

/// Relative residual accepted by [`DirectSolver::solve`].
pub const RESIDUAL_TOL: f64 = 1e-9;

/// LU solver that keeps the symbolic factorization while the sparsity
/// pattern stays the same (as it does across fixed-point iterations).
#[derive(Default)]
pub struct DirectSolver {
    cached: Option<(Vec<usize>, Vec<usize>, SymbolicLu<usize>)>,
}

impl std::fmt::Debug for DirectSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirectSolver")
            .field("has_symbolic", &self.cached.is_some())
            .finish()
    }
}

fn singular(m: &CsrMatrix, reason: impl Into<String>) -> Error {
    Error::SingularSystem {
        rows: m.nrows(),
        cols: m.ncols(),
        nnz: m.nnz(),
        reason: reason.into(),
    }
}

impl DirectSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Solves `system.matrix * x = system.rhs` and checks
    /// `|Ax - b|_inf <= 1e-9 (|A|_inf |x|_inf + |b|_inf)`.
    pub fn solve(&mut self, system: &SparseSystem) -> Result<Vec<f64>> {
        let a = &system.matrix;
        let n = a.nrows();
        if a.ncols() != n || system.rhs.len() != n {
            return Err(Error::DimensionMismatch(format!("system {}x{} with rhs {}", n, a.ncols(), system.rhs.len())));
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        if a.values().iter().chain(&system.rhs).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("linear system"));
        }
        // CSR of A is CSC of A^T: factor A^T and use the transposed solve.
        let reuse = matches!(&self.cached, Some((rp, ci, _)) if rp == a.row_ptr() && ci == a.col_idx());
        if !reuse {
            let pattern = SymbolicSparseColMatRef::new_checked(n, n, a.row_ptr(), None, a.col_idx());
            let symbolic = SymbolicLu::try_new(pattern).map_err(|e| singular(a, format!("symbolic analysis: {e:?}")))?;
            self.cached = Some((a.row_ptr().to_vec(), a.col_idx().to_vec(), symbolic));
        }
        let (rp, ci, symbolic) = self.cached.as_ref().expect("cached above");
        let pattern = SymbolicSparseColMatRef::new_checked(n, n, rp, None, ci);
        let at = SparseColMatRef::new(pattern, a.values());
        let lu = Lu::try_new_with_symbolic(symbolic.clone(), at).map_err(|e| singular(a, format!("numeric factorization: {e:?}")))?;
        let mut x = system.rhs.clone();
        lu.solve_transpose_in_place(MatMut::from_column_major_slice_mut(&mut x, n, 1));

        if x.iter().any(|v| !v.is_finite()) {
            return Err(singular(a, "solution is not finite (zero pivot)"));
        }
        let res = system.residual_inf(&x);
        let x_inf = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let b_inf = system.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let bound = RESIDUAL_TOL * (a.norm_inf() * x_inf + b_inf);
        if !(res <= bound) {
            return Err(singular(a, format!("residual {res:e} exceeds {bound:e}")));
        }
        Ok(x)
    }
}

/// One-shot direct solve.
pub fn saddle_solve(system: &SparseSystem) -> Result<Vec<f64>> {
    DirectSolver::new().solve(system)
}
