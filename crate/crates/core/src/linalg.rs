//! Dense complex linear algebra used throughout the crate.
//!
//! The matrices handled here are small (boundary data, 2n x 2n) or are the
//! reduced standard-form problems produced by the eigensolver. Storage is
//! row-major.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from nested rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::DimensionMismatch {
                expected: ncols,
                found: rows.iter().map(Vec::len).find(|&l| l != ncols).unwrap_or(0),
            });
        }
        Ok(Self {
            rows: nrows,
            cols: ncols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    /// Combines separate real and imaginary parts into a complex matrix.
    pub fn from_parts(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::DimensionMismatch {
                expected: re.len(),
                found: im.len(),
            });
        }
        let rows: Vec<Vec<C64>> = re
            .iter()
            .zip(im)
            .map(|(r, i)| {
                if r.len() != i.len() {
                    return Err(Error::DimensionMismatch {
                        expected: r.len(),
                        found: i.len(),
                    });
                }
                Ok(r.iter().zip(i).map(|(&a, &b)| C64::new(a, b)).collect())
            })
            .collect::<Result<_>>()?;
        Self::from_rows(&rows)
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[C64]) {
        for (i, &v) in values.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// True when the stored entries satisfy `m[i][j] == conj(m[j][i])` bit for bit.
    pub fn is_exactly_hermitian(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..=i).all(|j| self[(i, j)] == self[(j, i)].conj()))
    }

    /// Replaces the matrix by its Hermitian part, making the storage exactly Hermitian.
    pub fn hermitize(&mut self) {
        let n = self.rows;
        for i in 0..n {
            let d = self[(i, i)].re;
            self[(i, i)] = C64::new(d, 0.0);
            for j in 0..i {
                let v = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
                self[(i, j)] = v;
                self[(j, i)] = v.conj();
            }
        }
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves `a * x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot vanishes exactly.
pub fn lu_solve(a: &CMatrix, b: &CMatrix) -> Option<CMatrix> {
    assert!(a.is_square() && a.nrows() == b.nrows());
    let n = a.nrows();
    let mut lu = a.clone();
    let mut x = b.clone();
    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&p, &q| lu[(p, k)].norm().total_cmp(&lu[(q, k)].norm()))
            .unwrap_or(k);
        if lu[(pivot, k)] == ZERO {
            return None;
        }
        if pivot != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(pivot, j)];
                lu[(pivot, j)] = t;
            }
            for j in 0..x.ncols() {
                let t = x[(k, j)];
                x[(k, j)] = x[(pivot, j)];
                x[(pivot, j)] = t;
            }
        }
        let p = lu[(k, k)];
        for i in k + 1..n {
            let factor = lu[(i, k)] / p;
            if factor == ZERO {
                continue;
            }
            for j in k..n {
                let t = lu[(k, j)];
                lu[(i, j)] -= factor * t;
            }
            for j in 0..x.ncols() {
                let t = x[(k, j)];
                x[(i, j)] -= factor * t;
            }
        }
    }
    for k in (0..n).rev() {
        for j in 0..x.ncols() {
            let mut s = x[(k, j)];
            for m in k + 1..n {
                s -= lu[(k, m)] * x[(m, j)];
            }
            x[(k, j)] = s / lu[(k, k)];
        }
    }
    Some(x)
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

/// Full eigen-decomposition of a Hermitian matrix (Householder reduction to
/// real tridiagonal form followed by implicit QL with accumulation).
pub fn hermitian_eigen(a: &CMatrix) -> Result<HermitianEigen> {
    let n = a.nrows();
    let tri = Tridiagonal::reduce(a.clone());
    let mut d = tri.diag.clone();
    let mut e = tri.off.clone();
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    tql(&mut d, &mut e, Some(&mut z))?;
    let mut vectors = CMatrix::zeros(n, n);
    let mut col = vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            col[i] = z[i * n + j];
        }
        let x = tri.back_transform(&col);
        vectors.set_column(j, &x);
    }
    Ok(HermitianEigen { values: d, vectors })
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Result<Vec<f64>> {
    let tri = Tridiagonal::reduce(a.clone());
    let mut d = tri.diag;
    let mut e = tri.off;
    tql(&mut d, &mut e, None)?;
    Ok(d)
}

/// The `k` algebraically smallest eigenpairs of a Hermitian matrix. All
/// eigenvalues are computed by implicit QL; only the requested eigenvectors
/// are formed, by inverse iteration on the tridiagonal form.
pub fn hermitian_eigen_lowest(a: CMatrix, k: usize) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let n = a.nrows();
    let k = k.min(n);
    let tri = Tridiagonal::reduce(a);
    let mut d = tri.diag.clone();
    let mut e = tri.off.clone();
    tql(&mut d, &mut e, None)?;
    let wanted = &d[..k];
    let tvecs = tridiagonal_inverse_iteration(&tri.diag, &tri.off, wanted);
    let vecs = tvecs.iter().map(|z| tri.back_transform(z)).collect();
    Ok((wanted.to_vec(), vecs))
}

/// Hermitian matrix reduced to real symmetric tridiagonal form `S`, with
/// `A = Q D S D^H Q^H` where `Q` is a product of Householder reflectors and
/// `D` a unimodular diagonal.
struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
    // (start index, v, tau): reflector I - tau v v^H acting on indices start..
    reflectors: Vec<(usize, Vec<C64>, f64)>,
    phases: Vec<C64>,
}

impl Tridiagonal {
    fn reduce(mut a: CMatrix) -> Self {
        let n = a.nrows();
        assert!(a.is_square());
        let mut diag = vec![0.0; n];
        let mut sub = vec![ZERO; n.saturating_sub(1)];
        let mut reflectors = Vec::new();
        let mut p = vec![ZERO; n];
        for k in 0..n.saturating_sub(1) {
            diag[k] = a[(k, k)].re;
            let s = k + 1;
            let m = n - s;
            let x: Vec<C64> = (s..n).map(|i| a[(i, k)]).collect();
            let norm = norm2(&x);
            if m == 1 || norm == 0.0 {
                sub[k] = x[0];
                continue;
            }
            let x0_abs = x[0].norm();
            let unit = if x0_abs == 0.0 { ONE } else { x[0] / x0_abs };
            let alpha = -unit * norm;
            let mut v = x;
            v[0] -= alpha;
            let tau = 1.0 / (norm * (norm + x0_abs));
            sub[k] = alpha;

            // p = tau * S v on the trailing block; only the lower triangle of
            // the trailing block is referenced and updated
            p[..m].iter_mut().for_each(|z| *z = ZERO);
            for i in 0..m {
                let row = &a.row(s + i)[s..s + i];
                let vi = v[i];
                let mut acc = ZERO;
                for ((&r, &vj), pj) in row.iter().zip(&v[..i]).zip(p[..i].iter_mut()) {
                    acc += r * vj;
                    *pj += r.conj() * vi;
                }
                p[i] += acc + a[(s + i, s + i)] * vi;
            }
            p[..m].iter_mut().for_each(|z| *z *= tau);
            let vp: f64 = dot(&v, &p[..m]).re;
            let kk = 0.5 * tau * vp;
            let w: Vec<C64> = (0..m).map(|i| p[i] - v[i] * kk).collect();
            let wc: Vec<C64> = w.iter().map(|z| z.conj()).collect();
            let vc: Vec<C64> = v.iter().map(|z| z.conj()).collect();
            for i in 0..m {
                let (vi, wi) = (v[i], w[i]);
                let row = &mut a.row_mut(s + i)[s..=s + i];
                for ((r, &wcj), &vcj) in row.iter_mut().zip(&wc).zip(&vc) {
                    *r -= vi * wcj + wi * vcj;
                }
            }
            reflectors.push((s, v, tau));
        }
        if n > 0 {
            diag[n - 1] = a[(n - 1, n - 1)].re;
        }
        let mut phases = vec![ONE; n];
        let mut off = vec![0.0; n.saturating_sub(1)];
        for k in 0..n.saturating_sub(1) {
            let r = sub[k].norm();
            off[k] = r;
            phases[k + 1] = if r == 0.0 {
                phases[k]
            } else {
                phases[k] * (sub[k] / r)
            };
        }
        Self {
            diag,
            off,
            reflectors,
            phases,
        }
    }

    fn back_transform(&self, z: &[f64]) -> Vec<C64> {
        let mut y: Vec<C64> = z.iter().zip(&self.phases).map(|(&zi, &p)| p * zi).collect();
        for (s, v, tau) in self.reflectors.iter().rev() {
            let tail = &mut y[*s..];
            let c = dot(v, tail) * *tau;
            for (t, &vi) in tail.iter_mut().zip(v) {
                *t -= vi * c;
            }
        }
        y
    }
}

/// Implicit QL iteration with Wilkinson-type shifts for a real symmetric
/// tridiagonal matrix (diagonal `d`, off-diagonal `e` with `e[i]` coupling
/// rows `i` and `i+1`). On return `d` holds ascending eigenvalues; when `z` is
/// given (row-major n x n) its columns are rotated into the eigenvectors.
fn tql(d: &mut [f64], e_in: &mut [f64], mut z: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&e_in[..n - 1]);
    let max_iterations = 50 * n.max(1);
    let mut iterations = 0usize;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            loop {
                iterations += 1;
                if iterations > max_iterations {
                    return Err(Error::ConvergenceFailure { iterations });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_deref_mut() {
                        for k in 0..n {
                            let zk = &mut z[k * n..(k + 1) * n];
                            h = zk[i + 1];
                            zk[i + 1] = s * zk[i] + c * h;
                            zk[i] = c * zk[i] - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    // selection sort keeps eigenvector columns aligned
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            if let Some(z) = z.as_deref_mut() {
                for row in 0..n {
                    z.swap(row * n + i, row * n + k);
                }
            }
        }
    }
    e_in.iter_mut().for_each(|x| *x = 0.0);
    Ok(())
}

/// Eigenvectors of a real symmetric tridiagonal matrix for the given
/// (accurate, ascending) eigenvalues, by inverse iteration. Vectors whose
/// eigenvalues lie within `1e-3 * ||S||_1` of each other are kept mutually
/// orthogonal.
fn tridiagonal_inverse_iteration(d: &[f64], e: &[f64], values: &[f64]) -> Vec<Vec<f64>> {
    let n = d.len();
    let mut norm1: f64 = 0.0;
    for i in 0..n {
        let mut s = d[i].abs();
        if i > 0 {
            s += e[i - 1].abs();
        }
        if i + 1 < n {
            s += e[i].abs();
        }
        norm1 = norm1.max(s);
    }
    let norm1 = norm1.max(f64::MIN_POSITIVE);
    let ortol = 1e-3 * norm1;
    let pertol = 10.0 * f64::EPSILON * norm1;
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(values.len());
    let mut cluster_start = 0usize;
    let mut prev_shift = f64::NEG_INFINITY;
    // deterministic pseudo-random start vectors
    let mut seed: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut next = move || {
        seed ^= seed << 13;
        seed ^= seed >> 7;
        seed ^= seed << 17;
        (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };

    for (j, &lambda) in values.iter().enumerate() {
        if j > 0 && lambda - values[j - 1] > ortol {
            cluster_start = j;
        }
        let mut shift = lambda;
        if j > cluster_start && shift - prev_shift < pertol {
            shift = prev_shift + pertol;
        }
        prev_shift = shift;

        let factor = TridiagonalLu::new(d, e, shift, pertol.max(f64::EPSILON * norm1));
        let mut x: Vec<f64> = (0..n).map(|_| next()).collect();
        let mut extra = 2;
        for _ in 0..8 {
            factor.solve(&mut x);
            for prev in &out[cluster_start..j] {
                let c: f64 = prev.iter().zip(&x).map(|(a, b)| a * b).sum();
                x.iter_mut().zip(prev).for_each(|(xi, pi)| *xi -= c * pi);
            }
            let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if nrm == 0.0 || !nrm.is_finite() {
                x = (0..n).map(|_| next()).collect();
                continue;
            }
            x.iter_mut().for_each(|v| *v /= nrm);
            // residual of the normalized vector
            let mut res: f64 = 0.0;
            for i in 0..n {
                let mut r = (d[i] - lambda) * x[i];
                if i > 0 {
                    r += e[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    r += e[i] * x[i + 1];
                }
                res = res.max(r.abs());
            }
            if res <= 1e3 * f64::EPSILON * norm1 {
                // a few more steps once converged
                if extra == 0 {
                    break;
                }
                extra -= 1;
            }
        }
        for prev in &out[cluster_start..j] {
            let c: f64 = prev.iter().zip(&x).map(|(a, b)| a * b).sum();
            x.iter_mut().zip(prev).for_each(|(xi, pi)| *xi -= c * pi);
        }
        let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= nrm);
        out.push(x);
    }
    out
}

/// LU factorization with partial pivoting of `S - shift*I` for tridiagonal `S`.
struct TridiagonalLu {
    // upper factor: diagonal u0, first and second superdiagonals u1, u2
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn new(d: &[f64], e: &[f64], shift: f64, tiny: f64) -> Self {
        let n = d.len();
        let mut u0: Vec<f64> = d.iter().map(|&di| di - shift).collect();
        let mut u1: Vec<f64> = (0..n).map(|i| if i + 1 < n { e[i] } else { 0.0 }).collect();
        let mut u2 = vec![0.0; n];
        let mut mult = vec![0.0; n];
        let mut swapped = vec![false; n];
        // sub-diagonal entries below u0[i] are e[i]
        for i in 0..n.saturating_sub(1) {
            let below = e[i];
            if below.abs() > u0[i].abs() {
                // swap rows i and i+1
                swapped[i] = true;
                let (a0, a1, a2) = (u0[i], u1[i], u2[i]);
                let b0 = below;
                let b1 = d[i + 1] - shift;
                let b2 = if i + 2 < n { e[i + 1] } else { 0.0 };
                u0[i] = b0;
                u1[i] = b1;
                u2[i] = b2;
                let m = a0 / b0;
                mult[i] = m;
                u0[i + 1] = a1 - m * b1;
                u1[i + 1] = a2 - m * b2;
            } else {
                let piv = if u0[i].abs() < tiny {
                    tiny.copysign(u0[i])
                } else {
                    u0[i]
                };
                u0[i] = piv;
                let m = below / piv;
                mult[i] = m;
                u0[i + 1] -= m * u1[i];
                // u1[i+1] already holds e[i+1]
            }
        }
        if n > 0 && u0[n - 1].abs() < tiny {
            u0[n - 1] = tiny.copysign(u0[n - 1]);
        }
        Self {
            u0,
            u1,
            u2,
            mult,
            swapped,
        }
    }

    fn solve(&self, x: &mut [f64]) {
        let n = x.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                x.swap(i, i + 1);
            }
            x[i + 1] -= self.mult[i] * x[i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            if i + 1 < n {
                s -= self.u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= self.u2[i] * x[i + 2];
            }
            x[i] = s / self.u0[i];
        }
    }
}

/// Singular values of a square or rectangular matrix in ascending order,
/// from the Hermitian augmented matrix `[[0, M], [M^H, 0]]`.
pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    let (r, c) = (m.nrows(), m.ncols());
    let mut aug = CMatrix::zeros(r + c, r + c);
    for i in 0..r {
        for j in 0..c {
            aug[(i, r + j)] = m[(i, j)];
            aug[(r + j, i)] = m[(i, j)].conj();
        }
    }
    let values = hermitian_eigenvalues(&aug)?;
    let count = r.min(c);
    let mut sv: Vec<f64> = values[values.len() - count..]
        .iter()
        .map(|v| v.abs())
        .collect();
    sv.sort_by(f64::total_cmp);
    Ok(sv)
}

/// 2-norm condition number `sigma_max / sigma_min` (infinite when singular).
pub fn condition_number(m: &CMatrix) -> Result<f64> {
    let sv = singular_values(m)?;
    let (lo, hi) = (sv[0], sv[sv.len() - 1]);
    Ok(if lo == 0.0 { f64::INFINITY } else { hi / lo })
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &CMatrix) -> Result<f64> {
    Ok(singular_values(m)?.last().copied().unwrap_or(0.0))
}

/// Unitary factor of the polar decomposition of a nonsingular square matrix:
/// the nearest unitary matrix in any unitarily invariant norm.
pub fn polar_unitary(m: &CMatrix) -> Result<CMatrix> {
    let gram = {
        let mut g = m.adjoint().matmul(m);
        g.hermitize();
        g
    };
    let eig = hermitian_eigen(&gram)?;
    let n = m.nrows();
    if eig.values.iter().any(|&v| v <= 0.0) {
        return Err(Error::NotUnitary {
            deviation: f64::INFINITY,
        });
    }
    // (M^H M)^{-1/2} = V diag(1/s) V^H
    let inv_sqrt = CMatrix::from_fn(n, n, |i, j| {
        (0..n)
            .map(|k| eig.vectors[(i, k)] * eig.vectors[(j, k)].conj() / eig.values[k].sqrt())
            .sum()
    });
    Ok(m.matmul(&inv_sqrt))
}

/// Haar-distributed random unitary matrix: QR of a complex Gaussian matrix
/// with the phases of R's diagonal fixed positive (Gram-Schmidt, applied twice).
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let mut cols: Vec<Vec<C64>> = (0..dim)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    C64::new(re, im)
                })
                .collect()
        })
        .collect();
    for j in 0..dim {
        for _ in 0..2 {
            for i in 0..j {
                let (head, tail) = cols.split_at_mut(j);
                let c = dot(&head[i], &tail[0]);
                for (t, &q) in tail[0].iter_mut().zip(&head[i]) {
                    *t -= c * q;
                }
            }
        }
        let nrm = norm2(&cols[j]);
        cols[j].iter_mut().for_each(|z| *z /= nrm);
    }
    CMatrix::from_fn(dim, dim, |i, j| cols[j][i])
}
