//! Sparse and dense complex linear algebra used by the irrep machinery.
//!
//! Irrep generators in the Gelfand–Tsetlin basis have O(1) non-zeros per row,
//! and so does every operator assembled from one- and two-body lifts. Operators
//! are therefore built in CSR form and only densified for diagonalization.

use std::collections::BTreeMap;

use faer::{Mat, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type DenseMatrix = Mat<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Square complex matrix in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        Self {
            dim: diag.len(),
            row_ptr: (0..=diag.len()).collect(),
            cols: (0..diag.len()).collect(),
            vals: diag.iter().map(|&d| Complex64::new(d, 0.0)).collect(),
        }
    }

    /// Builds from (row, col, value) entries; duplicates are summed.
    pub fn from_triplets<I>(dim: usize, entries: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, Complex64)>,
    {
        let mut rows: Vec<BTreeMap<usize, Complex64>> = vec![BTreeMap::new(); dim];
        for (r, c, v) in entries {
            assert!(r < dim && c < dim, "entry ({r}, {c}) outside {dim}x{dim}");
            *rows[r].entry(c).or_insert(ZERO) += v;
        }
        Self::from_rows(dim, rows)
    }

    fn from_rows(dim: usize, rows: Vec<BTreeMap<usize, Complex64>>) -> Self {
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (c, r, v.conj())))
    }

    /// Linear combination `Σ coeff_k · M_k` over matrices of equal dimension.
    pub fn linear_combination(dim: usize, terms: &[(Complex64, &SparseMatrix)]) -> Self {
        let mut rows: Vec<BTreeMap<usize, Complex64>> = vec![BTreeMap::new(); dim];
        for (coeff, m) in terms {
            assert_eq!(m.dim, dim);
            if *coeff == ZERO {
                continue;
            }
            for (r, row) in rows.iter_mut().enumerate() {
                for (c, v) in m.row(r) {
                    *row.entry(c).or_insert(ZERO) += coeff * v;
                }
            }
        }
        Self::from_rows(dim, rows)
    }

    pub fn add_scaled(&self, alpha: Complex64, other: &SparseMatrix) -> Self {
        Self::linear_combination(self.dim, &[(Complex64::new(1.0, 0.0), self), (alpha, other)])
    }

    pub fn matmul(&self, other: &SparseMatrix) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut rows: Vec<BTreeMap<usize, Complex64>> = vec![BTreeMap::new(); self.dim];
        for (r, row) in rows.iter_mut().enumerate() {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    *row.entry(c).or_insert(ZERO) += a * b;
                }
            }
        }
        Self::from_rows(self.dim, rows)
    }

    /// `y = self · x`
    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (r, out) in y.iter_mut().enumerate().take(self.dim) {
            *out = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    /// `⟨x, self · x⟩`
    pub fn expectation(&self, x: &[Complex64]) -> Complex64 {
        (0..self.dim)
            .map(|r| x[r].conj() * self.row(r).map(|(c, v)| v * x[c]).sum::<Complex64>())
            .sum()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest entry of `self − other` in absolute value.
    pub fn max_abs_diff(&self, other: &SparseMatrix) -> f64 {
        self.add_scaled(Complex64::new(-1.0, 0.0), other).max_abs()
    }

    /// Largest entry of `self − self†` in absolute value.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = Mat::<Complex64>::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn from_dense(m: &DenseMatrix, drop_below: f64) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        let n = m.nrows();
        Self::from_triplets(
            n,
            (0..n)
                .flat_map(|r| (0..n).map(move |c| (r, c)))
                .filter_map(|(r, c)| {
                    let v = m[(r, c)];
                    (v.norm() > drop_below).then_some((r, c, v))
                }),
        )
    }
}

/// Dense row-major dump of a square matrix, entries as `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDump {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixDump {
    pub fn from_sparse(m: &SparseMatrix) -> Self {
        let mut entries = vec![[0.0; 2]; m.dim * m.dim];
        for (r, c, v) in m.triplets() {
            entries[r * m.dim + c] = [v.re, v.im];
        }
        Self { dim: m.dim, entries }
    }

    pub fn to_sparse(&self) -> Result<SparseMatrix> {
        if self.entries.len() != self.dim * self.dim {
            return Err(Error::InvalidInput(format!(
                "{} entries for a {}x{} matrix",
                self.entries.len(),
                self.dim,
                self.dim
            )));
        }
        Ok(SparseMatrix::from_triplets(
            self.dim,
            self.entries
                .iter()
                .enumerate()
                .filter(|(_, e)| e[0] != 0.0 || e[1] != 0.0)
                .map(|(k, e)| (k / self.dim, k % self.dim, Complex64::new(e[0], e[1]))),
        ))
    }
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DenseMatrix) -> Result<Vec<f64>> {
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))
}

/// Full eigendecomposition of a Hermitian matrix: ascending eigenvalues and
/// the matching orthonormal eigenvectors as columns.
pub fn hermitian_eigen(m: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let s = evd.S();
    let values = (0..m.nrows()).map(|i| s[i].re).collect();
    Ok((values, evd.U().to_owned()))
}

/// Lowest eigenpairs of a sparse Hermitian matrix.
#[derive(Debug, Clone)]
pub struct LowestEigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<Complex64>>,
    /// Krylov steps used; equals the dimension when the dense path was taken.
    pub steps: usize,
}

/// Below this dimension [`lowest_eigenpairs`] diagonalizes densely.
pub const DENSE_CUTOFF: usize = 450;

/// Krylov steps (or a third of the dimension, if larger) after which
/// [`lowest_eigenpairs`] gives up on Lanczos and diagonalizes densely.
/// Clustered low levels otherwise drive the iteration towards the full
/// dimension.
pub const LANCZOS_STEP_CAP: usize = 150;

fn dense_lowest(m: &SparseMatrix, count: usize) -> Result<LowestEigenpairs> {
    let (values, vectors) = hermitian_eigen(&m.to_dense())?;
    Ok(LowestEigenpairs {
        values: values[..count].to_vec(),
        vectors: (0..count).map(|j| column(&vectors, j)).collect(),
        steps: m.dim(),
    })
}

/// The `count` lowest eigenpairs of Hermitian `m` by Lanczos iteration with
/// full reorthogonalization, started from `start` when given.
///
/// Exactly degenerate eigenvalues appear only once in a single Krylov
/// sequence, so `count > 1` is reliable only for non-degenerate levels.
pub fn lowest_eigenpairs(
    m: &SparseMatrix,
    count: usize,
    start: Option<&[Complex64]>,
    tol: f64,
) -> Result<LowestEigenpairs> {
    let dim = m.dim();
    let count = count.min(dim);
    if dim <= DENSE_CUTOFF {
        return dense_lowest(m, count);
    }

    let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut q0: Vec<Complex64> = match start {
        Some(s) => s.to_vec(),
        None => (0..dim)
            .map(|i| Complex64::new(1.0 + (i as f64 * 0.618).sin() * 0.1, (i as f64 * 1.7).cos() * 0.1))
            .collect(),
    };
    let n0 = norm(&q0);
    if n0 == 0.0 || !n0.is_finite() {
        return Err(Error::Eigensolver("zero or non-finite start vector".into()));
    }
    q0.iter_mut().for_each(|z| *z /= n0);

    let scale = m.max_abs().max(1.0) * (dim as f64).sqrt();
    let mut basis: Vec<Vec<Complex64>> = vec![q0];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let max_steps = dim.min(LANCZOS_STEP_CAP.max(dim / 3).max(count + 8));
    loop {
        let k = basis.len() - 1;
        m.matvec(&basis[k], &mut w);
        let alpha: f64 = basis[k].iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum();
        alphas.push(alpha);
        // two passes of classical Gram–Schmidt against the whole basis
        for _ in 0..2 {
            for q in &basis {
                let c: Complex64 = q.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let beta = norm(&w);
        let steps = basis.len();
        let exhausted = steps >= max_steps;
        if steps >= count && (steps % 8 == 0 || exhausted) {
            let ritz = tridiagonal_eigen(&alphas, &betas);
            let converged = (0..count).all(|i| (beta * ritz.1[(steps - 1, i)]).abs() <= tol * scale);
            if exhausted && !converged && steps < dim {
                return dense_lowest(m, count);
            }
            if converged || exhausted {
                let vectors = (0..count)
                    .map(|i| {
                        let mut v = vec![Complex64::new(0.0, 0.0); dim];
                        for (j, q) in basis.iter().enumerate() {
                            let y = ritz.1[(j, i)];
                            v.iter_mut().zip(q).for_each(|(x, b)| *x += b * y);
                        }
                        let nv = norm(&v);
                        v.iter_mut().for_each(|x| *x /= nv);
                        v
                    })
                    .collect();
                return Ok(LowestEigenpairs {
                    values: ritz.0[..count].to_vec(),
                    vectors,
                    steps,
                });
            }
        }
        if exhausted {
            return Err(Error::Eigensolver("Krylov space exhausted before convergence".into()));
        }
        if beta <= 1e-12 * scale {
            // invariant subspace: continue from a fresh direction
            w = (0..dim)
                .map(|i| {
                    let t = (i * 7 + steps * 13) as f64;
                    Complex64::new((t * 0.618).sin(), (t * 0.414).cos())
                })
                .collect();
            for _ in 0..2 {
                for q in &basis {
                    let c: Complex64 = q.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                    w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            let fresh = norm(&w);
            if fresh <= 1e-8 {
                return Err(Error::Eigensolver("no direction left to restart the Krylov space".into()));
            }
            w.iter_mut().for_each(|x| *x /= fresh);
            betas.push(0.0);
            basis.push(w.clone());
            continue;
        }
        betas.push(beta);
        basis.push(w.iter().map(|z| z / beta).collect());
    }
}

/// Ascending eigenvalues and eigenvectors (columns) of the real symmetric
/// tridiagonal matrix with diagonal `alphas` and off-diagonal `betas`.
fn tridiagonal_eigen(alphas: &[f64], betas: &[f64]) -> (Vec<f64>, nalgebra::DMatrix<f64>) {
    let k = alphas.len();
    let t = nalgebra::DMatrix::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    let eig = t.symmetric_eigen();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = nalgebra::DMatrix::from_fn(k, k, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn column(m: &DenseMatrix, j: usize) -> Vec<Complex64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

/// Frobenius norm of a dense matrix.
pub fn frobenius_norm(m: &DenseMatrix) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            acc += m[(i, j)].norm_sqr();
        }
    }
    acc.sqrt()
}

/// Memory cap for dense matrices, from `BELLCHAOS_BUDGET_MB` (default 2048).
pub fn budget_mb() -> usize {
    std::env::var("BELLCHAOS_BUDGET_MB")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(2048)
}

/// Checks that a dense `dim × dim` complex matrix fits the memory budget.
/// Diagonalization needs roughly three such buffers.
pub fn check_budget(dim: usize) -> Result<()> {
    let bytes = 3 * dim * dim * std::mem::size_of::<Complex64>();
    let needed_mb = bytes.div_ceil(1 << 20);
    let budget = budget_mb();
    if needed_mb > budget {
        return Err(Error::BudgetExceeded {
            dim,
            needed_mb,
            budget_mb: budget,
        });
    }
    Ok(())
}
