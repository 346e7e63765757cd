//! Sparse storage, factorizations and Krylov norm estimation.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type CVec = Vec<c64>;

#[inline]
pub fn cz() -> c64 {
    c64::new(0.0, 0.0)
}

#[inline]
pub fn cr(x: f64) -> c64 {
    c64::new(x, 0.0)
}

pub fn dot(a: &[c64], b: &[c64]) -> c64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm2(a: &[c64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn axpy(y: &mut [c64], a: c64, x: &[c64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn scale_by(x: &mut [c64], w: &[f64]) {
    for (xi, wi) in x.iter_mut().zip(w) {
        *xi *= *wi;
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_cvec(rng: &mut ChaCha8Rng, n: usize) -> CVec {
    (0..n).map(|_| c64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
}

/// Compressed sparse row matrix over `c64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<c64>,
}

impl Csr {
    /// Builds from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, trips: &[(usize, usize, c64)]) -> Self {
        let mut sorted: Vec<(usize, usize, c64)> = trips.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<c64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            assert!(r < nrows && c < ncols, "triplet out of range");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            indices.push(c);
            values.push(v);
            indptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Self { nrows, ncols, indptr, indices, values }
    }

    pub fn identity(n: usize) -> Self {
        let trips: Vec<_> = (0..n).map(|i| (i, i, cr(1.0))).collect();
        Self::from_triplets(n, n, &trips)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn triplets(&self) -> Vec<(usize, usize, c64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                out.push((r, self.indices[k], self.values[k]));
            }
        }
        out
    }

    pub fn get(&self, r: usize, c: usize) -> c64 {
        for k in self.indptr[r]..self.indptr[r + 1] {
            if self.indices[k] == c {
                return self.values[k];
            }
        }
        cz()
    }

    pub fn matvec(&self, x: &[c64]) -> CVec {
        let mut y = vec![cz(); self.nrows];
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = cz();
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *yr = acc;
        }
        y
    }

    pub fn matvec_adjoint(&self, x: &[c64]) -> CVec {
        let mut y = vec![cz(); self.ncols];
        for (r, xr) in x.iter().enumerate().take(self.nrows) {
            for k in self.indptr[r]..self.indptr[r + 1] {
                y[self.indices[k]] += self.values[k].conj() * xr;
            }
        }
        y
    }

    pub fn adjoint(&self) -> Self {
        let trips: Vec<_> = self.triplets().into_iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.ncols, self.nrows, &trips)
    }

    /// `self + a * other`.
    pub fn add(&self, other: &Csr, a: c64) -> Self {
        let mut trips = self.triplets();
        trips.extend(other.triplets().into_iter().map(|(r, c, v)| (r, c, a * v)));
        Self::from_triplets(self.nrows, self.ncols, &trips)
    }

    /// `self - z I` plus extra diagonal terms.
    pub fn shifted(&self, z: c64, extra_diag: &[(usize, c64)]) -> Self {
        let mut trips = self.triplets();
        trips.extend((0..self.nrows.min(self.ncols)).map(|i| (i, i, -z)));
        trips.extend(extra_diag.iter().map(|&(i, v)| (i, i, v)));
        Self::from_triplets(self.nrows, self.ncols, &trips)
    }

    /// `D_l A D_r` with real diagonal scalings.
    pub fn scaled(&self, left: &[f64], right: &[f64]) -> Self {
        let mut out = self.clone();
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                out.values[k] *= left[r] * right[self.indices[k]];
            }
        }
        out
    }

    pub fn mul(&self, other: &Csr) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut trips = Vec::new();
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let (m, v) = (self.indices[k], self.values[k]);
                for q in other.indptr[m]..other.indptr[m + 1] {
                    trips.push((r, other.indices[q], v * other.values[q]));
                }
            }
        }
        Self::from_triplets(self.nrows, other.ncols, &trips)
    }

    pub fn to_dense(&self) -> Mat<c64> {
        let mut m = Mat::<c64>::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max |A - A*|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (r, c, v) in self.triplets() {
            worst = worst.max((v - self.get(c, r).conj()).norm());
        }
        worst
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, c64>> {
        let trips: Vec<Triplet<usize, usize, c64>> =
            self.triplets().into_iter().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        SparseColMat::<usize, c64>::try_new_from_triplets(self.nrows, self.ncols, &trips)
            .map_err(|e| Error::Numerical(format!("sparse assembly failed: {e:?}")))
    }
}

/// Sparse LU factorization of a square [`Csr`] matrix.
pub struct SparseLu {
    lu: Lu<usize, c64>,
    n: usize,
}

impl SparseLu {
    pub fn new(a: &Csr) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(Error::Numerical("LU needs a square matrix".into()));
        }
        let m = a.to_faer()?;
        let lu = m.sp_lu().map_err(|e| Error::Numerical(format!("factorization failed: {e:?}")))?;
        Ok(Self { lu, n: a.nrows })
    }

    /// Reuses a symbolic analysis computed for the same sparsity pattern.
    pub fn with_symbolic(a: &Csr, sym: &SymbolicLu<usize>) -> Result<Self> {
        let m = a.to_faer()?;
        let lu = Lu::try_new_with_symbolic(sym.clone(), m.as_ref())
            .map_err(|e| Error::Numerical(format!("factorization failed: {e:?}")))?;
        Ok(Self { lu, n: a.nrows })
    }

    pub fn symbolic(a: &Csr) -> Result<SymbolicLu<usize>> {
        let m = a.to_faer()?;
        SymbolicLu::try_new(m.symbolic()).map_err(|e| Error::Numerical(format!("symbolic analysis failed: {e:?}")))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[c64]) -> CVec {
        let mut m = Mat::<c64>::from_fn(self.n, 1, |i, _| rhs[i]);
        self.lu.solve_in_place(m.as_mut());
        (0..self.n).map(|i| m[(i, 0)]).collect()
    }

    /// Solves with the conjugate transpose.
    pub fn solve_adjoint(&self, rhs: &[c64]) -> CVec {
        let mut m = Mat::<c64>::from_fn(self.n, 1, |i, _| rhs[i]);
        self.lu.solve_adjoint_in_place(m.as_mut());
        (0..self.n).map(|i| m[(i, 0)]).collect()
    }

    pub fn solve_many(&self, rhs: &Mat<c64>) -> Mat<c64> {
        let mut m = rhs.to_owned();
        self.lu.solve_in_place(m.as_mut());
        m
    }
}

/// Inner product defining the domain norm in [`lanczos_norm`].
pub enum Gram<'a> {
    Identity,
    /// `B` and `B^{-1}` applied as closures.
    General { apply: &'a dyn Fn(&[c64]) -> CVec, apply_inv: &'a dyn Fn(&[c64]) -> CVec },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    /// Relative change of the last Ritz value.
    pub reached_tol: f64,
}

/// Largest eigenvalue of a small real symmetric tridiagonal matrix.
fn tridiag_max_eig(alpha: &[f64], beta: &[f64]) -> f64 {
    let n = alpha.len();
    let m = Mat::<f64>::from_fn(n, n, |i, j| {
        if i == j {
            alpha[i]
        } else if i == j + 1 {
            beta[j]
        } else if j == i + 1 {
            beta[i]
        } else {
            0.0
        }
    });
    m.self_adjoint_eigenvalues(faer::Side::Lower)
        .map(|v| v.into_iter().fold(f64::NEG_INFINITY, f64::max))
        .unwrap_or(f64::NAN)
}

/// Square root of the largest `theta` with `A x = theta B x`, by Lanczos with full
/// reorthogonalization in the `B` inner product. `apply_a` must be Hermitian
/// positive semidefinite, for instance `T* T` for an operator `T`.
pub fn lanczos_norm(
    n: usize,
    apply_a: &dyn Fn(&[c64]) -> CVec,
    gram: &Gram<'_>,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> NormEstimate {
    let apply_b = |x: &[c64]| -> CVec {
        match gram {
            Gram::Identity => x.to_vec(),
            Gram::General { apply, .. } => apply(x),
        }
    };
    let apply_binv = |x: &[c64]| -> CVec {
        match gram {
            Gram::Identity => x.to_vec(),
            Gram::General { apply_inv, .. } => apply_inv(x),
        }
    };
    let mut r = rng(seed);
    let mut v = random_cvec(&mut r, n);
    let mut bv = apply_b(&v);
    let nv = dot(&v, &bv).re.max(0.0).sqrt();
    if nv == 0.0 || n == 0 {
        return NormEstimate { value: 0.0, iterations: 0, reached_tol: 0.0 };
    }
    v.iter_mut().for_each(|x| *x /= nv);
    bv.iter_mut().for_each(|x| *x /= nv);
    let mut vs: Vec<CVec> = vec![v];
    let mut bvs: Vec<CVec> = vec![bv];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut prev = f64::NAN;
    let mut reached = f64::INFINITY;
    let limit = max_iter.min(n).max(1);
    for j in 0..limit {
        let av = apply_a(&vs[j]);
        let mut w = apply_binv(&av);
        alpha.push(dot(&vs[j], &av).re);
        for _ in 0..2 {
            for (vi, bvi) in vs.iter().zip(&bvs) {
                let c = dot(bvi, &w);
                axpy(&mut w, -c, vi);
            }
        }
        let theta = tridiag_max_eig(&alpha, &beta);
        if prev.is_finite() {
            reached = ((theta - prev) / theta.abs().max(f64::MIN_POSITIVE)).abs();
        }
        prev = theta;
        let bw = apply_b(&w);
        let b = dot(&w, &bw).re.max(0.0).sqrt();
        let done = reached < tol || j + 1 == limit || b <= 1e-14 * theta.abs().sqrt().max(1e-300);
        if done {
            if b <= 1e-14 * theta.abs().sqrt().max(1e-300) {
                reached = 0.0;
            }
            return NormEstimate { value: theta.max(0.0).sqrt(), iterations: j + 1, reached_tol: reached };
        }
        beta.push(b);
        vs.push(w.iter().map(|x| x / b).collect());
        bvs.push(bw.iter().map(|x| x / b).collect());
    }
    NormEstimate { value: prev.max(0.0).sqrt(), iterations: limit, reached_tol: reached }
}

/// Dense singular values in decreasing order.
pub fn singular_values(m: &Mat<c64>) -> Result<Vec<f64>> {
    m.singular_values().map_err(|e| Error::Numerical(format!("svd failed: {e:?}")))
}

pub fn min_singular_value(m: &Mat<c64>) -> Result<f64> {
    Ok(singular_values(m)?.into_iter().fold(f64::INFINITY, f64::min))
}

pub fn max_singular_value(m: &Mat<c64>) -> Result<f64> {
    Ok(singular_values(m)?.into_iter().fold(0.0, f64::max))
}

/// Eigenvalues of a dense Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &Mat<c64>) -> Result<Vec<f64>> {
    let mut v = m
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))?;
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(v)
}

/// Number of eigenvalues below `x` of the real symmetric tridiagonal matrix
/// with diagonal `a` and off-diagonal `b` (Sturm count).
fn sturm_count(a: &[f64], b: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = a[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..a.len() {
        let prev = if q == 0.0 { f64::EPSILON * (b[i - 1].abs() + 1.0) } else { q };
        q = a[i] - x - b[i - 1] * b[i - 1] / prev;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `count` smallest eigenvalues of a real symmetric tridiagonal matrix, by
/// bisection on the Sturm count.
pub fn tridiagonal_eigenvalues(a: &[f64], b: &[f64], count: usize) -> Vec<f64> {
    let n = a.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { b[i - 1].abs() } else { 0.0 } + if i + 1 < n { b[i].abs() } else { 0.0 };
        lo = lo.min(a[i] - r);
        hi = hi.max(a[i] + r);
    }
    (0..count.min(n))
        .map(|k| {
            let (mut l, mut u) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (l + u);
                if sturm_count(a, b, mid) > k {
                    u = mid;
                } else {
                    l = mid;
                }
                if u - l <= 1e-15 * (l.abs() + u.abs()).max(1e-300) {
                    break;
                }
            }
            0.5 * (l + u)
        })
        .collect()
}

/// Inverse of a dense matrix by partial-pivot LU.
pub fn dense_inverse(m: &Mat<c64>) -> Mat<c64> {
    use faer::linalg::solvers::DenseSolveCore;
    m.partial_piv_lu().inverse()
}

/// Solves `m x = rhs` densely.
pub fn dense_solve(m: &Mat<c64>, rhs: &Mat<c64>) -> Mat<c64> {
    m.partial_piv_lu().solve(rhs)
}
