//! Compressed-row matrices and unrestarted GMRES.

use crate::error::{check_len, Error, Result};

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed in input order.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of range");
            rows[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// A zero-valued matrix with the given sparsity pattern (rows must be sorted).
    pub fn from_pattern(ncols: usize, pattern: &[Vec<usize>]) -> Self {
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        for row in pattern {
            debug_assert!(row.windows(2).all(|w| w[0] < w[1]));
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        let values = vec![0.0; col_idx.len()];
        Self {
            nrows: pattern.len(),
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let ncols = rows.first().map_or(0, Vec::len);
        let triplets = rows.iter().enumerate().flat_map(|(i, r)| {
            r.iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(move |(j, &v)| (i, j, v))
        });
        Self::from_triplets(rows.len(), ncols, triplets)
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

    /// Position of `(r, c)` in the value array, if stored.
    pub fn position(&self, r: usize, c: usize) -> Option<usize> {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        self.col_idx[lo..hi].binary_search(&c).ok().map(|k| lo + k)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.position(r, c).map_or(0.0, |k| self.values[k])
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn transpose(&self) -> SparseMatrix {
        let triplets = (0..self.nrows).flat_map(|r| self.row(r).map(move |(c, v)| (c, r, v)));
        Self::from_triplets(self.ncols, self.nrows, triplets)
    }

    /// `self * other`, accumulated row by row with a dense scratch row.
    pub fn matmul(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.ncols, other.nrows, "matmul dimension mismatch");
        let mut acc = vec![0.0; other.ncols];
        let mut touched = vec![false; other.ncols];
        let mut cols = Vec::new();
        let mut triplets = Vec::new();
        for r in 0..self.nrows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !touched[c] {
                        touched[c] = true;
                        cols.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            cols.sort_unstable();
            for &c in &cols {
                triplets.push((r, c, acc[c]));
                acc[c] = 0.0;
                touched[c] = false;
            }
            cols.clear();
        }
        Self::from_triplets(self.nrows, other.ncols, triplets)
    }

    /// Galerkin triple product `P^T A P` given `P^T` and `P`.
    pub fn galerkin(pt: &SparseMatrix, a: &SparseMatrix, p: &SparseMatrix) -> SparseMatrix {
        pt.matmul(&a.matmul(p))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        out
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresOutcome {
    pub solution: Vec<f64>,
    /// `||b - A x|| / ||b||`, recomputed from the returned iterate.
    pub relative_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Least-squares residual estimate after each Arnoldi step.
    pub residual_history: Vec<f64>,
}

/// Solves `A x = b` with full (unrestarted) GMRES.
///
/// Arnoldi uses modified Gram-Schmidt; the Hessenberg least-squares problem
/// is reduced with Givens rotations. Iteration stops once the estimated
/// residual satisfies `||b - A x|| <= tol * ||b||`, on happy breakdown, or
/// after `max_iter` Arnoldi steps.
pub fn gmres<A>(apply_a: A, b: &[f64], x0: &[f64], tol: f64, max_iter: usize) -> Result<GmresOutcome>
where
    A: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    check_len("gmres initial guess", n, x0.len())?;
    if b.iter().chain(x0).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gmres input"));
    }
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(GmresOutcome {
            solution: vec![0.0; n],
            relative_residual: 0.0,
            iterations: 0,
            converged: true,
            residual_history: Vec::new(),
        });
    }

    let mut scratch = vec![0.0; n];
    apply_a(x0, &mut scratch);
    let r0: Vec<f64> = b.iter().zip(&scratch).map(|(bi, ai)| bi - ai).collect();
    let beta = norm2(&r0);
    let target = tol * b_norm;

    let mut x = x0.to_vec();
    let mut iterations = 0;
    let mut history = Vec::new();

    if beta > target && max_iter > 0 {
        let m = max_iter;
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r0.iter().map(|v| v / beta).collect());
        // column-major Hessenberg: hess[j] has j + 2 entries
        let mut hess: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs = Vec::with_capacity(m);
        let mut sn = Vec::with_capacity(m);
        let mut rhs = vec![beta];

        for j in 0..m {
            let mut w = vec![0.0; n];
            apply_a(&basis[j], &mut w);
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("gmres operator output"));
            }
            let mut h = vec![0.0; j + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                h[i] = hij;
                for (wk, vk) in w.iter_mut().zip(v) {
                    *wk -= hij * vk;
                }
            }
            let h_next = norm2(&w);
            h[j + 1] = h_next;

            for i in 0..j {
                let (c, s): (f64, f64) = (cs[i], sn[i]);
                let t = c * h[i] + s * h[i + 1];
                h[i + 1] = -s * h[i] + c * h[i + 1];
                h[i] = t;
            }
            let denom = h[j].hypot(h[j + 1]);
            let (c, s) = if denom == 0.0 {
                (1.0, 0.0)
            } else {
                (h[j] / denom, h[j + 1] / denom)
            };
            h[j] = denom;
            h[j + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            let g = rhs[j];
            rhs[j] = c * g;
            rhs.push(-s * g);
            hess.push(h);
            iterations = j + 1;

            let estimate = rhs[j + 1].abs();
            history.push(estimate);
            let breakdown = h_next <= f64::EPSILON * beta;
            if estimate <= target || breakdown {
                break;
            }
            basis.push(w.iter().map(|v| v / h_next).collect());
        }

        // back substitution on the triangularized Hessenberg
        let k = iterations;
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = rhs[i];
            for (l, yl) in y.iter().enumerate().take(k).skip(i + 1) {
                s -= hess[l][i] * yl;
            }
            y[i] = if hess[i][i] != 0.0 { s / hess[i][i] } else { 0.0 };
        }
        for (yi, v) in y.iter().zip(&basis) {
            for (xk, vk) in x.iter_mut().zip(v) {
                *xk += yi * vk;
            }
        }
    }

    apply_a(&x, &mut scratch);
    let res: Vec<f64> = b.iter().zip(&scratch).map(|(bi, ai)| bi - ai).collect();
    let relative_residual = norm2(&res) / b_norm;
    Ok(GmresOutcome {
        solution: x,
        relative_residual,
        iterations,
        converged: relative_residual <= tol,
        residual_history: history,
    })
}

/// GMRES on a sparse matrix.
pub fn gmres_sparse(
    a: &SparseMatrix,
    b: &[f64],
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<GmresOutcome> {
    check_len("gmres matrix rows", a.nrows(), b.len())?;
    gmres(|x, y| a.mul_vec_into(x, y), b, x0, tol, max_iter)
}
