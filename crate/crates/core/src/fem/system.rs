//! Sparse complex linear systems and their direct solution.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Mat, Par};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative residual every solve must reach.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Compressed sparse column matrix with merged duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<Complex64>,
}

impl CscMatrix {
    /// Sums duplicate entries; the order of summation is fixed by a stable
    /// sort on `(col, row)` so the result does not depend on insertion
    /// interleaving beyond the triplet order itself.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, Complex64)>) -> Self {
        t.sort_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0; n + 1];
        let mut row_idx = Vec::with_capacity(t.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        Self {
            n,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let range = self.col_ptr[c]..self.col_ptr[c + 1];
        match self.row_idx[range.clone()].binary_search(&r) {
            Ok(k) => self.values[range.start + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.n];
        for c in 0..self.n {
            let xc = x[c];
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[k]] += self.values[k] * xc;
            }
        }
        y
    }

    /// `max |A - A^T|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for c in 0..self.n {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[k];
                worst = worst.max((self.values[k] - self.get(c, r)).norm());
            }
        }
        worst
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, c64>> {
        let mut t = Vec::with_capacity(self.nnz());
        for c in 0..self.n {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                t.push(Triplet::new(self.row_idx[k], c, self.values[k]));
            }
        }
        SparseColMat::try_new_from_triplets(self.n, self.n, &t)
            .map_err(|e| Error::Solver(format!("matrix construction failed: {e:?}")))
    }
}

/// Accumulates a linear system `A u = f`.
#[derive(Debug, Clone, Default)]
pub struct SystemBuilder {
    pub n: usize,
    pub triplets: Vec<(usize, usize, Complex64)>,
    pub rhs: Vec<Complex64>,
}

impl SystemBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            triplets: Vec::new(),
            rhs: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn add(&mut self, r: usize, c: usize, v: Complex64) {
        self.triplets.push((r, c, v));
    }

    pub fn finish(self) -> LinearSystem {
        LinearSystem {
            matrix: CscMatrix::from_triplets(self.n, self.triplets),
            rhs: self.rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub matrix: CscMatrix,
    pub rhs: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub values: Vec<Complex64>,
    pub residual: f64,
}

impl LinearSystem {
    /// Imposes `u[node] = value` by symmetric elimination: the row and
    /// column are cleared and the diagonal set to one.
    pub fn apply_dirichlet(&mut self, fixed: &[(usize, Complex64)]) {
        let n = self.matrix.n;
        let mut value = vec![None; n];
        for &(i, v) in fixed {
            value[i] = Some(v);
        }
        let m = &mut self.matrix;
        for c in 0..n {
            for k in m.col_ptr[c]..m.col_ptr[c + 1] {
                let r = m.row_idx[k];
                match (value[r], value[c]) {
                    (Some(_), _) => m.values[k] = Complex64::new(if r == c { 1.0 } else { 0.0 }, 0.0),
                    (None, Some(vc)) => {
                        self.rhs[r] -= m.values[k] * vc;
                        m.values[k] = Complex64::new(0.0, 0.0);
                    }
                    (None, None) => {}
                }
            }
        }
        for (i, v) in value.iter().enumerate() {
            if let Some(v) = v {
                self.rhs[i] = *v;
            }
        }
    }

    pub fn relative_residual(&self, x: &[Complex64]) -> f64 {
        let ax = self.matrix.matvec(x);
        let num: f64 = ax.iter().zip(&self.rhs).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let den: f64 = self.rhs.iter().map(|b| b.norm_sqr()).sum::<f64>().sqrt();
        if den > 0.0 {
            num / den
        } else {
            num
        }
    }

    /// Sparse LU solve, sequential inside (parallelism lives at the level of
    /// independent solves). One step of iterative refinement is applied if
    /// the first residual misses [`RESIDUAL_TOL`].
    pub fn solve(&self) -> Result<Solution> {
        faer::set_global_parallelism(Par::Seq);
        let n = self.matrix.n;
        let a = self.matrix.to_faer()?;
        let lu = a.sp_lu().map_err(|e| {
            Error::Solver(format!("sparse LU failed ({n} unknowns, {} nonzeros): {e:?}", self.matrix.nnz()))
        })?;
        let b = Mat::<c64>::from_fn(n, 1, |i, _| self.rhs[i]);
        let x = lu.solve(&b);
        let mut values: Vec<Complex64> = (0..n).map(|i| x[(i, 0)]).collect();
        let mut residual = self.relative_residual(&values);
        if !(residual < RESIDUAL_TOL) && residual.is_finite() {
            let ax = self.matrix.matvec(&values);
            let r = Mat::<c64>::from_fn(n, 1, |i, _| self.rhs[i] - ax[i]);
            let dx = lu.solve(&r);
            for (i, v) in values.iter_mut().enumerate() {
                *v += dx[(i, 0)];
            }
            residual = self.relative_residual(&values);
        }
        if !(residual < RESIDUAL_TOL) {
            return Err(Error::Solver(format!(
                "relative residual {residual:e} ({n} unknowns, {} nonzeros)",
                self.matrix.nnz()
            )));
        }
        Ok(Solution { values, residual })
    }
}
