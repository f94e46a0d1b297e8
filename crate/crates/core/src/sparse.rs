//! Compressed-row sparse matrices and linear systems.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Sparse matrix in compressed row form with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Accumulates (row, col, value) entries; duplicates are summed in insertion order.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, value));
    }

    /// Copies every stored entry of `m` shifted by (`row_off`, `col_off`).
    pub fn push_block(&mut self, m: &CsrMatrix, row_off: usize, col_off: usize) {
        for r in 0..m.nrows {
            for (c, v) in m.row(r) {
                self.push(r + row_off, c + col_off, v);
            }
        }
    }

    /// Like [`push_block`](Self::push_block) but with the block transposed.
    pub fn push_block_transposed(&mut self, m: &CsrMatrix, row_off: usize, col_off: usize) {
        for r in 0..m.nrows {
            for (c, v) in m.row(r) {
                self.push(c + row_off, r + col_off, v);
            }
        }
    }

    pub fn build(mut self) -> CsrMatrix {
        // stable: duplicates are summed in the order they were pushed
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().expect("non-empty") += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

impl CsrMatrix {
    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut b = TripletBuilder::new(rows.len(), ncols);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    b.push(i, j, v);
                }
            }
        }
        b.build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[range.clone()].binary_search(&c) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matvec dimension mismatch");
        (0..self.nrows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    /// x^T A x
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut b = TripletBuilder::with_capacity(self.ncols, self.nrows, self.nnz());
        b.push_block_transposed(self, 0, 0);
        b.build()
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= s);
        m
    }

    /// Entrywise sum; dimensions must agree.
    pub fn add(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        if (self.nrows, self.ncols) != (other.nrows, other.ncols) {
            return Err(Error::DimensionMismatch(format!(
                "cannot add {}x{} and {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut b = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        b.push_block(self, 0, 0);
        b.push_block(other, 0, 0);
        Ok(b.build())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// max |A - A^T|
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let diff = self.add(&t.scaled(-1.0)).expect("square");
        diff.max_abs()
    }

    /// max |A + A^T|
    pub fn skew_defect(&self) -> f64 {
        self.add(&self.transpose()).expect("square").max_abs()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, row) in d.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        d
    }

    /// Coordinate text dump, one `row col value` line per stored entry.
    pub fn to_coo_text(&self) -> String {
        let mut s = String::new();
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                let _ = writeln!(s, "{r} {c} {v:.17e}");
            }
        }
        s
    }

    pub fn write_coo(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_coo_text()).map_err(|e| Error::io(path, e))
    }
}

/// A square sparse system `matrix * x = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

impl SparseSystem {
    pub fn new(matrix: CsrMatrix, rhs: Vec<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() != rhs.len() {
            return Err(Error::DimensionMismatch(format!(
                "system matrix {}x{} with rhs of length {}",
                matrix.nrows(),
                matrix.ncols(),
                rhs.len()
            )));
        }
        Ok(Self { matrix, rhs })
    }

    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }

    /// max |A x - b|
    pub fn residual_inf(&self, x: &[f64]) -> f64 {
        self.matrix
            .matvec(x)
            .iter()
            .zip(&self.rhs)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Replaces the rows of `dofs` by identity rows carrying `values` and
/// eliminates the matching columns from every other row, moving their
/// contribution to the right-hand side. The result stays symmetric when the
/// input was.
///
/// The sparsity of the result depends only on the input pattern and on
/// `dofs`, never on numerical values.
pub fn apply_dirichlet(system: &SparseSystem, dofs: &[usize], values: &[f64]) -> Result<SparseSystem> {
    if dofs.len() != values.len() {
        return Err(Error::DimensionMismatch("Dirichlet dofs and values differ in length".into()));
    }
    let n = system.len();
    let mut prescribed: Vec<Option<f64>> = vec![None; n];
    for (&d, &v) in dofs.iter().zip(values) {
        if d >= n {
            return Err(Error::DimensionMismatch(format!("Dirichlet dof {d} out of range {n}")));
        }
        prescribed[d] = Some(v);
    }
    let a = &system.matrix;
    let mut rhs = system.rhs.clone();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(a.nnz());
    let mut vals = Vec::with_capacity(a.nnz());
    row_ptr.push(0);
    for r in 0..n {
        if let Some(g) = prescribed[r] {
            col_idx.push(r);
            vals.push(1.0);
            rhs[r] = g;
        } else {
            for (c, v) in a.row(r) {
                match prescribed[c] {
                    Some(g) => rhs[r] -= v * g,
                    None => {
                        col_idx.push(c);
                        vals.push(v);
                    }
                }
            }
        }
        row_ptr.push(col_idx.len());
    }
    Ok(SparseSystem {
        matrix: CsrMatrix {
            nrows: n,
            ncols: n,
            row_ptr,
            col_idx,
            values: vals,
        },
        rhs,
    })
}
