//! Compressed-row sparse matrices and a Jacobi-preconditioned conjugate
//! gradient solver for the symmetric positive definite systems of the scheme.

use crate::error::{Error, Result};

/// Square matrix in compressed row form.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

/// Accumulates `(row, col, value)` triplets; duplicates are summed on
/// [`TripletBuilder::build`].
#[derive(Clone, Debug)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
    symmetric: bool,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new(), symmetric: true }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        Self { n, entries: Vec::with_capacity(cap), symmetric: true }
    }

    /// Adds one entry. Using this for an off-diagonal position drops the
    /// symmetry flag of the result.
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        assert!(row < self.n && col < self.n, "entry ({row}, {col}) outside {0}x{0}", self.n);
        if row != col {
            self.symmetric = false;
        }
        self.entries.push((row, col, value));
    }

    /// Adds `value` at both `(i, j)` and `(j, i)`.
    pub fn add_symmetric(&mut self, i: usize, j: usize, value: f64) {
        assert!(i < self.n && j < self.n, "entry ({i}, {j}) outside {0}x{0}", self.n);
        self.entries.push((i, j, value));
        if i != j {
            self.entries.push((j, i, value));
        }
    }

    pub fn build(mut self) -> SparseMatrix {
        self.entries.sort_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.n {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseMatrix { n: self.n, row_ptr, cols, values, symmetric: self.symmetric }
    }
}

impl SparseMatrix {
    pub fn identity(n: usize) -> Self {
        let mut b = TripletBuilder::with_capacity(n, n);
        for i in 0..n {
            b.add(i, i, 1.0);
        }
        b.build()
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut b = TripletBuilder::new(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    b.add(i, j, v);
                }
            }
        }
        let mut m = b.build();
        m.symmetric = m.is_structurally_symmetric();
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Entries of row `i` as `(col, value)` pairs, columns ascending.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    fn is_structurally_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    /// `scale * A + diag(shift)`. Every diagonal position must already be
    /// stored, which holds for matrices from [`crate::solver::laplacian`].
    pub fn scaled_plus_diagonal(&self, scale: f64, shift: &[f64]) -> SparseMatrix {
        assert_eq!(shift.len(), self.n);
        let mut out = self.clone();
        for (i, &d) in shift.iter().enumerate() {
            let mut found = false;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.values[k] *= scale;
                if self.cols[k] == i {
                    out.values[k] += d;
                    found = true;
                }
            }
            assert!(found, "row {i} has no stored diagonal");
        }
        out
    }

    /// `y = A x`
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }
}

/// Outcome of one linear solve.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final relative residual `||b - Ax|| / ||b||`.
    pub residual: f64,
    pub converged: bool,
    /// Relative residual after each iteration, starting with the initial guess.
    pub history: Vec<f64>,
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` from a zero initial guess.
pub fn cg_solve(a: &SparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveReport)> {
    cg_solve_from(a, b, vec![0.0; b.len()], tol, max_iter)
}

/// Jacobi-preconditioned conjugate gradient started from `x`.
///
/// Convergence is declared on the true residual `||b - Ax|| <= tol ||b||`.
/// Failure to converge within `max_iter` iterations returns
/// [`Error::LinearSolver`] carrying the report.
pub fn cg_solve_from(
    a: &SparseMatrix,
    b: &[f64],
    mut x: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::SizeMismatch { expected: n, found: b.len() });
    }
    if x.len() != n {
        return Err(Error::SizeMismatch { expected: n, found: x.len() });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("cg tolerance {tol}")));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .enumerate()
        .map(|(i, d)| {
            if d > 0.0 {
                Ok(1.0 / d)
            } else {
                Err(Error::InvalidParameter(format!("non-positive diagonal {d} in row {i}")))
            }
        })
        .collect::<Result<_>>()?;

    let b_norm = norm2(b);
    if b_norm == 0.0 {
        let report = SolveReport { iterations: 0, residual: 0.0, converged: true, history: vec![0.0] };
        return Ok((vec![0.0; n], report));
    }

    let mut ax = vec![0.0; n];
    a.mul_vec_into(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut rel = norm2(&r) / b_norm;
    let mut report = SolveReport { history: vec![rel], ..Default::default() };
    if rel <= tol {
        report.residual = rel;
        report.converged = true;
        return Ok((x, report));
    }

    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    while report.iterations < max_iter {
        report.iterations += 1;
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            // loss of positive definiteness or exact breakdown
            break;
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        rel = norm2(&r) / b_norm;
        if rel <= tol {
            // confirm on the true residual; restart from it if drift crept in
            a.mul_vec_into(&x, &mut ax);
            for i in 0..n {
                r[i] = b[i] - ax[i];
            }
            rel = norm2(&r) / b_norm;
            report.history.push(rel);
            if rel <= tol {
                report.residual = rel;
                report.converged = true;
                return Ok((x, report));
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        report.history.push(rel);
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    report.residual = rel;
    Err(Error::LinearSolver(report))
}
