//! Sparse symmetric matrices, sparse Cholesky (backed by faer), the
//! mean-constrained solve, and small dense kernels.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Compressed sparse row matrix, square, with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate entries. Explicit zeros are kept so that patterns stay
    /// stable across reassembly.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(r, c, _) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) out of range for n = {n}");
            counts[r + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0f64; triplets.len()];
        for &(r, c, v) in triplets {
            cols[fill[r]] = c;
            vals[fill[r]] = v;
            fill[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for r in 0..n {
            scratch.clear();
            scratch.extend((counts[r]..counts[r + 1]).map(|k| (cols[k], vals[k])));
            scratch.sort_by_key(|e| e.0);
            for &(c, v) in &scratch {
                if col_idx.len() > row_ptr[r] && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { n, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
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

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let cols = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        match cols.binary_search(&c) {
            Ok(k) => self.values[self.row_ptr[r] + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        for r in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = s;
        }
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.mul_vec(y))
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|r| self.values[self.row_ptr[r]..self.row_ptr[r + 1]].iter().sum())
            .collect()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                t.push((self.col_idx[k], r, self.values[k]));
            }
        }
        CsrMatrix::from_triplets(self.n, &t)
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        let t = self.transpose();
        t.row_ptr == self.row_ptr && t.col_idx == self.col_idx && t.values == self.values
    }

    /// Linear combination `sum_i w_i A_i` over a union pattern.
    pub fn combine(terms: &[(f64, &CsrMatrix)]) -> Self {
        let n = terms.first().map(|t| t.1.n).unwrap_or(0);
        if let Some(&(_, first)) = terms.first() {
            if terms.iter().all(|(_, m)| m.row_ptr == first.row_ptr && m.col_idx == first.col_idx) {
                let mut values = vec![0.0; first.nnz()];
                for &(w, m) in terms {
                    for (v, x) in values.iter_mut().zip(&m.values) {
                        *v += w * x;
                    }
                }
                return CsrMatrix { n, row_ptr: first.row_ptr.clone(), col_idx: first.col_idx.clone(), values };
            }
        }
        let mut trip = Vec::new();
        for &(w, m) in terms {
            assert_eq!(m.n, n, "dimension mismatch in combine");
            for r in 0..n {
                for k in m.row_ptr[r]..m.row_ptr[r + 1] {
                    trip.push((r, m.col_idx[k], w * m.values[k]));
                }
            }
        }
        CsrMatrix::from_triplets(n, &trip)
    }

    /// Same matrix re-expressed on the (superset) pattern of `pattern`.
    pub fn on_pattern_of(&self, pattern: &CsrMatrix) -> Result<Self> {
        let mut values = vec![0.0; pattern.nnz()];
        for r in 0..self.n {
            let pcols = &pattern.col_idx[pattern.row_ptr[r]..pattern.row_ptr[r + 1]];
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                match pcols.binary_search(&self.col_idx[k]) {
                    Ok(j) => values[pattern.row_ptr[r] + j] = self.values[k],
                    Err(_) => return Err(Error::invalid("entry outside target pattern")),
                }
            }
        }
        Ok(CsrMatrix { n: self.n, row_ptr: pattern.row_ptr.clone(), col_idx: pattern.col_idx.clone(), values })
    }

    /// Diagonal matrix of row sums (mass lumping).
    pub fn lumped(&self) -> Self {
        let d = self.row_sums();
        let mut m = self.clone();
        for r in 0..self.n {
            for k in m.row_ptr[r]..m.row_ptr[r + 1] {
                m.values[k] = if m.col_idx[k] == r { d[r] } else { 0.0 };
            }
        }
        m
    }

    /// Copy with row and column `k` replaced by the unit row scaled by the
    /// old diagonal. The pattern is unchanged.
    fn pinned(&self, k: usize) -> Self {
        let mut m = self.clone();
        let d = self.get(k, k);
        let d = if d > 0.0 { d } else { 1.0 };
        for r in 0..self.n {
            for j in m.row_ptr[r]..m.row_ptr[r + 1] {
                let c = m.col_idx[j];
                if r == k || c == k {
                    m.values[j] = if r == c { d } else { 0.0 };
                }
            }
        }
        m
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Sparse LLᵀ of a symmetric positive definite matrix. The symbolic analysis
/// is kept so matrices with the same pattern can be refactored cheaply.
pub struct SpdFactor {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    symbolic: SymbolicLlt<usize>,
    llt: Llt<usize, f64>,
}

impl SpdFactor {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let sym = SymbolicSparseColMatRef::new_checked(a.n, a.n, &a.row_ptr, None, &a.col_idx);
        let symbolic = SymbolicLlt::try_new(sym, Side::Lower)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let mat = SparseColMatRef::new(sym, &a.values);
        let llt = Llt::try_new_with_symbolic(symbolic.clone(), mat, Side::Lower)
            .map_err(|e| Error::Factorization(format!("matrix is not positive definite ({e:?})")))?;
        Ok(SpdFactor { n: a.n, row_ptr: a.row_ptr.clone(), col_idx: a.col_idx.clone(), symbolic, llt })
    }

    /// Numeric refactorization for a matrix with the identical pattern.
    pub fn refactor(&mut self, a: &CsrMatrix) -> Result<()> {
        if a.row_ptr != self.row_ptr || a.col_idx != self.col_idx {
            *self = SpdFactor::new(a)?;
            return Ok(());
        }
        let sym = SymbolicSparseColMatRef::new_checked(a.n, a.n, &a.row_ptr, None, &a.col_idx);
        let mat = SparseColMatRef::new(sym, &a.values);
        self.llt = Llt::try_new_with_symbolic(self.symbolic.clone(), mat, Side::Lower)
            .map_err(|e| Error::Factorization(format!("matrix is not positive definite ({e:?})")))?;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.llt.solve_in_place(rhs.as_mut());
        (0..self.n).map(|i| rhs[(i, 0)]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    #[default]
    Direct,
    ProjectedCg,
}

/// Solves `A x + nu c = rhs`, `c . x = 0` for a symmetric positive
/// semidefinite `A` whose kernel is the constants.
///
/// Direct mode pins one unknown to remove the kernel, which keeps the
/// factored matrix definite; the constraint is then enforced by shifting the
/// solution along the kernel.
pub struct ConstrainedSolver {
    n: usize,
    c: Vec<f64>,
    c_sum: f64,
    inner: Inner,
}

enum Inner {
    Direct { factor: SpdFactor, pin: usize },
    Cg { a: CsrMatrix, tol: f64, max_iter: usize },
}

pub const COMPAT_TOL: f64 = 1e-8;

impl ConstrainedSolver {
    pub fn new(a: &CsrMatrix, c: &[f64], kind: SolverKind) -> Result<Self> {
        let n = a.dim();
        if c.len() != n {
            return Err(Error::invalid("constraint length differs from matrix dimension"));
        }
        let c_sum: f64 = c.iter().sum();
        if !(c_sum.abs() > 0.0) {
            return Err(Error::invalid("constraint weights sum to zero"));
        }
        let inner = match kind {
            SolverKind::Direct => {
                let diag = a.diagonal();
                let pin = (0..n).max_by(|&i, &j| diag[i].total_cmp(&diag[j])).unwrap_or(0);
                Inner::Direct { factor: SpdFactor::new(&a.pinned(pin))?, pin }
            }
            SolverKind::ProjectedCg => Inner::Cg { a: a.clone(), tol: 1e-12, max_iter: 20 * n + 100 },
        };
        Ok(ConstrainedSolver { n, c: c.to_vec(), c_sum, inner })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Checked solve; fails when the data are not orthogonal to constants.
    pub fn solve(&self, rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
        let s: f64 = rhs.iter().sum();
        let limit = COMPAT_TOL * norm2(rhs);
        if s.abs() > limit && s.abs() > f64::MIN_POSITIVE {
            return Err(Error::Compatibility { sum: s.abs(), tol: COMPAT_TOL, limit });
        }
        self.solve_projected(rhs)
    }

    /// Solve without the compatibility check; the multiplier absorbs the
    /// mean of `rhs`.
    pub fn solve_projected(&self, rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
        assert_eq!(rhs.len(), self.n);
        let nu = rhs.iter().sum::<f64>() / self.c_sum;
        let mut f: Vec<f64> = rhs.iter().zip(&self.c).map(|(r, c)| r - nu * c).collect();
        let mut x = match &self.inner {
            Inner::Direct { factor, pin } => {
                f[*pin] = 0.0;
                factor.solve(&f)
            }
            Inner::Cg { a, tol, max_iter } => projected_cg(a, &f, *tol, *max_iter)?,
        };
        let shift = dot(&self.c, &x) / self.c_sum;
        for xi in x.iter_mut() {
            *xi -= shift;
        }
        Ok((x, nu))
    }
}

/// Jacobi-preconditioned CG for a consistent singular system with constant
/// kernel; residuals are kept mean-free.
pub fn projected_cg(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = a.dim();
    let dinv: Vec<f64> = a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let demean = |v: &mut [f64]| {
        let m = v.iter().sum::<f64>() / n as f64;
        v.iter_mut().for_each(|x| *x -= m);
    };
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    demean(&mut r);
    let bnorm = norm2(&r);
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        a.mul_vec_into(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        demean(&mut r);
        if norm2(&r) <= tol * bnorm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: norm2(&r) / bnorm })
}

/// Row-major dense square matrix helpers for the small Rayleigh-Ritz problems.
pub mod dense {
    /// In-place lower Cholesky factor of an SPD matrix (upper part zeroed).
    pub fn cholesky(a: &mut [f64], n: usize) -> Option<()> {
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= a[j * n + k] * a[j * n + k];
            }
            if !(d > 0.0) {
                return None;
            }
            let d = d.sqrt();
            a[j * n + j] = d;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= a[i * n + k] * a[j * n + k];
                }
                a[i * n + j] = s / d;
            }
            for k in j + 1..n {
                a[j * n + k] = 0.0;
            }
        }
        Some(())
    }

    /// Solves `L y = b` in place.
    pub fn forward(l: &[f64], n: usize, b: &mut [f64]) {
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= l[i * n + k] * b[k];
            }
            b[i] = s / l[i * n + i];
        }
    }

    /// Solves `Lᵀ y = b` in place.
    pub fn backward_t(l: &[f64], n: usize, b: &mut [f64]) {
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= l[k * n + i] * b[k];
            }
            b[i] = s / l[i * n + i];
        }
    }

    /// Cyclic Jacobi eigensolver for a symmetric matrix. Returns eigenvalues
    /// and column eigenvectors (row-major `v[i * n + j]` is component i of
    /// vector j), unsorted.
    pub fn symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut a = a.to_vec();
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        for _sweep in 0..100 {
            let mut off = 0.0;
            let mut total = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let x = a[i * n + j] * a[i * n + j];
                    total += x;
                    if i != j {
                        off += x;
                    }
                }
            }
            if off <= 1e-30 * total || off == 0.0 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[p * n + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        ((0..n).map(|i| a[i * n + i]).collect(), v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_laplacian(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n - 1 {
            t.push((i, i, 1.0));
            t.push((i + 1, i + 1, 1.0));
            t.push((i, i + 1, -1.0));
            t.push((i + 1, i, -1.0));
        }
        CsrMatrix::from_triplets(n, &t)
    }

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = CsrMatrix::from_triplets(2, &[(0, 1, 2.0), (0, 0, 1.0), (0, 1, 3.0), (1, 1, 4.0)]);
        assert_eq!(m.col_idx(), &[0, 1, 1]);
        assert_eq!(m.get(0, 1), 5.0);
        assert_eq!(m.get(1, 0), 0.0);
        assert_eq!(m.mul_vec(&[1.0, 1.0]), vec![6.0, 4.0]);
    }

    #[test]
    fn cholesky_solves_spd() {
        let n = 50;
        let mut a = path_laplacian(n);
        a = CsrMatrix::combine(&[(1.0, &a), (0.1, &CsrMatrix::identity(n))]);
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = a.mul_vec(&x);
        let f = SpdFactor::new(&a).unwrap();
        let y = f.solve(&b);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-10);
        }
        assert!(SpdFactor::new(&CsrMatrix::combine(&[(-1.0, &a)])).is_err());
    }

    #[test]
    fn constrained_direct_and_cg_agree() {
        let n = 40;
        let a = path_laplacian(n);
        let c: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * i as f64).collect();
        let rhs: Vec<f64> = (0..n).map(|i| (0.3 * i as f64).cos()).collect();
        let d = ConstrainedSolver::new(&a, &c, SolverKind::Direct).unwrap();
        let g = ConstrainedSolver::new(&a, &c, SolverKind::ProjectedCg).unwrap();
        let (x1, nu1) = d.solve_projected(&rhs).unwrap();
        let (x2, nu2) = g.solve_projected(&rhs).unwrap();
        assert!((nu1 - nu2).abs() < 1e-14);
        assert!(dot(&c, &x1).abs() < 1e-10);
        let ax = a.mul_vec(&x1);
        for i in 0..n {
            assert!((ax[i] + nu1 * c[i] - rhs[i]).abs() < 1e-9);
            assert!((x1[i] - x2[i]).abs() < 1e-7);
        }
        assert!(matches!(d.solve(&c), Err(Error::Compatibility { .. })));
        let (z, nu) = d.solve(&vec![0.0; n]).unwrap();
        assert!(z.iter().all(|&v| v == 0.0) && nu == 0.0);
    }

    #[test]
    fn jacobi_eigen_reconstructs() {
        let n = 4;
        let a = [4.0, 1.0, 0.5, 0.0, 1.0, 3.0, 0.2, 0.1, 0.5, 0.2, 2.0, 0.3, 0.0, 0.1, 0.3, 1.0];
        let (w, v) = dense::symmetric_eigen(&a, n);
        for j in 0..n {
            for i in 0..n {
                let av: f64 = (0..n).map(|k| a[i * n + k] * v[k * n + j]).sum();
                assert!((av - w[j] * v[i * n + j]).abs() < 1e-12);
            }
        }
        let tr: f64 = w.iter().sum();
        assert!((tr - 10.0).abs() < 1e-12);
    }

    #[test]
    fn dense_cholesky_solves() {
        let n = 3;
        let a = [4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0];
        let mut l = a.to_vec();
        dense::cholesky(&mut l, n).unwrap();
        let mut b = [1.0, 2.0, 3.0];
        dense::forward(&l, n, &mut b);
        dense::backward_t(&l, n, &mut b);
        for i in 0..n {
            let r: f64 = (0..n).map(|k| a[i * n + k] * b[k]).sum();
            assert!((r - [1.0, 2.0, 3.0][i]).abs() < 1e-13);
        }
    }
}
