//! Compressed sparse rows for the Liouvillian, plus a thin wrapper around
//! faer's sparse LU.

use std::collections::BTreeMap;

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<Complex64>,
}

impl Csr {
    /// Duplicate entries are summed; exact zeros are dropped.
    pub fn from_entries(n: usize, entries: impl IntoIterator<Item = (usize, usize, Complex64)>) -> Self {
        let mut map: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for (r, c, v) in entries {
            debug_assert!(r < n && c < n);
            *map.entry((r, c)).or_default() += v;
        }
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(map.len());
        let mut vals = Vec::with_capacity(map.len());
        for (&(r, c), &v) in &map {
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    pub fn mul_vec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (r, out) in y.iter_mut().enumerate() {
            *out = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::default(); self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// y = A^† x
    pub fn adjoint_mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::default(); self.n];
        for (r, &xr) in x.iter().enumerate() {
            for (c, v) in self.row(r) {
                y[c] += v.conj() * xr;
            }
        }
        y
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n).map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.n).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }
}

/// Sparse LU factorization (faer, fill-reducing column ordering + partial pivoting).
pub(crate) struct SparseLu {
    n: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, Complex64>,
}

impl SparseLu {
    pub fn factor(n: usize, entries: impl IntoIterator<Item = (usize, usize, Complex64)>) -> Result<Self> {
        let triplets: Vec<Triplet<usize, usize, Complex64>> =
            entries.into_iter().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        let mat = SparseColMat::<usize, Complex64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::SolverBreakdown(format!("sparse matrix assembly failed: {e:?}")))?;
        let lu = mat
            .sp_lu()
            .map_err(|e| Error::SolverBreakdown(format!("sparse LU failed: {e:?}")))?;
        Ok(Self { n, lu })
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let b = Col::<Complex64>::from_fn(self.n, |i| rhs[i]);
        let x = self.lu.solve(&b);
        (0..self.n).map(|i| x[i]).collect()
    }
}

pub(crate) fn norm2(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn norm_inf(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
