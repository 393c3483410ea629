//! Sparse Jacobian storage and factorization, backed by faer's sparse LU.

use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};

/// Square sparse matrix in coordinate form. Duplicate entries are summed.
#[derive(Debug, Clone, Default)]
pub struct SparseMatrix {
    n: usize,
    entries: Vec<Triplet<usize, usize, f64>>,
}

impl SparseMatrix {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(n: usize, nnz: usize) -> Self {
        Self {
            n,
            entries: Vec::with_capacity(nnz),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.n && col < self.n);
        if val != 0.0 {
            self.entries.push(Triplet::new(row, col, val));
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|t| (t.row, t.col, t.val))
    }

    /// Copy of `self` bordered by one extra column and row:
    /// `[[self, column], [row, corner]]`.
    pub fn bordered(&self, column: &[f64], row: &[f64], corner: f64) -> Self {
        let n = self.n;
        let mut out = Self::with_capacity(n + 1, self.entries.len() + 2 * n + 1);
        out.entries.extend(self.entries.iter().cloned());
        for i in 0..n {
            out.push(i, n, column[i]);
            out.push(n, i, row[i]);
        }
        out.push(n, n, corner);
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for t in &self.entries {
            y[t.row] += t.val * x[t.col];
        }
        y
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for t in &self.entries {
            d[t.row][t.col] += t.val;
        }
        d
    }

    pub fn factor(&self) -> Result<SparseLu> {
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &self.entries)
            .map_err(|e| Error::SingularJacobian {
                detail: format!("assembly failed: {e:?}"),
            })?;
        let lu = mat.sp_lu().map_err(|e| Error::SingularJacobian {
            detail: format!("{e:?}"),
        })?;
        Ok(SparseLu { n: self.n, lu })
    }
}

pub struct SparseLu {
    n: usize,
    lu: Lu<usize, f64>,
}

impl SparseLu {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: rhs.len(),
            });
        }
        let b = Mat::<f64>::from_fn(self.n, 1, |i, _| rhs[i]);
        let x = self.lu.solve(&b);
        let out: Vec<f64> = (0..self.n).map(|i| x[(i, 0)]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularJacobian {
                detail: "non-finite solution of the linear system".into(),
            });
        }
        Ok(out)
    }

    /// Solve `Aᵀ x = rhs`.
    pub fn solve_transpose(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: rhs.len(),
            });
        }
        let mut b = Mat::<f64>::from_fn(self.n, 1, |i, _| rhs[i]);
        self.lu.solve_transpose_in_place(b.as_mut());
        let out: Vec<f64> = (0..self.n).map(|i| b[(i, 0)]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularJacobian {
                detail: "non-finite solution of the linear system".into(),
            });
        }
        Ok(out)
    }
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
