//! Generalized eigenproblem `A x = λ B x` of the spectral pencil and the
//! eigenfunctions it represents.
//!
//! After moving the boundary functions to the end, `B` is an arrow matrix:
//! tridiagonal in the bulk plus a dense border of width `2n`. Its Cholesky
//! factor has the same shape, which makes the reduction to the standard
//! problem `L⁻¹ A L⁻ᴴ y = λ y` cost `O(|r|² n)` before the dense Hermitian
//! solve.

use crate::boundary::BoundaryUnitary;
use crate::error::{Error, Result};
use crate::fem::{self, BoundaryFunctionSet, BoundaryLinearSystem, PencilMatrix, SpectralPencil};
use crate::linalg::{self, CMatrix, C64, ZERO};
use crate::manifold::{IntervalManifold, Mesh};

/// Relative gap below which eigenvalues are treated as one cluster.
const CLUSTER_GAP: f64 = 1e-10;

// Five-point Gauss-Legendre rule on [-1, 1].
const GAUSS_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// The `k` lowest eigenpairs of a pencil.
#[derive(Clone, Debug)]
pub struct SpectralResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `B`-orthonormal coefficient vectors in basis order.
    pub coefficients: Vec<Vec<C64>>,
    /// Boundary values and outward normal derivatives of each eigenfunction.
    pub traces: Vec<(Vec<C64>, Vec<C64>)>,
    /// `‖A x − λ B x‖₂ / ‖B x‖₂`
    pub residuals: Vec<f64>,
    /// Normwise backward errors `‖A x − λ B x‖₂ / ((‖A‖₁ + |λ| ‖B‖₁) ‖x‖₂)`.
    pub backward_errors: Vec<f64>,
}

impl SpectralResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

/// Cholesky factor of an arrow matrix `[[T, E], [Eᴴ, G]]` with `T`
/// tridiagonal: `L = [[L11, 0], [L21, L22]]`, `L11` lower bidiagonal.
struct ArrowCholesky {
    diag: Vec<f64>,
    sub: Vec<C64>,
    // rows of L21, one per border index
    border: Vec<Vec<C64>>,
    corner: CMatrix,
}

impl ArrowCholesky {
    fn new(t_diag: &[f64], t_sub: &[C64], e: &[Vec<C64>], g: &CMatrix) -> Result<Self> {
        let nb = t_diag.len();
        let mut diag = vec![0.0; nb];
        let mut sub = vec![ZERO; nb.saturating_sub(1)];
        for i in 0..nb {
            let mut pivot = t_diag[i];
            if i > 0 {
                sub[i - 1] = t_sub[i - 1] / diag[i - 1];
                pivot -= sub[i - 1].norm_sqr();
            }
            if !(pivot > 0.0) {
                return Err(Error::NotPositiveDefinite { pivot: i });
            }
            diag[i] = pivot.sqrt();
        }
        let mut chol = Self {
            diag,
            sub,
            border: Vec::new(),
            corner: CMatrix::zeros(0, 0),
        };
        // L11 L21ᴴ = E, column by column
        let border: Vec<Vec<C64>> = e
            .iter()
            .map(|col| chol.solve_bulk(col).iter().map(|z| z.conj()).collect())
            .collect();
        let m = g.nrows();
        let mut s = CMatrix::from_fn(m, m, |p, q| {
            let dotp: C64 = border[p].iter().zip(&border[q]).map(|(a, b)| a * b.conj()).sum();
            g[(p, q)] - dotp
        });
        s.hermitize();
        let mut corner = CMatrix::zeros(m, m);
        for j in 0..m {
            let mut pivot = s[(j, j)].re;
            for k in 0..j {
                pivot -= corner[(j, k)].norm_sqr();
            }
            if !(pivot > 0.0) {
                return Err(Error::NotPositiveDefinite { pivot: nb + j });
            }
            let ljj = pivot.sqrt();
            corner[(j, j)] = C64::new(ljj, 0.0);
            for i in j + 1..m {
                let mut v = s[(i, j)];
                for k in 0..j {
                    v -= corner[(i, k)] * corner[(j, k)].conj();
                }
                corner[(i, j)] = v / ljj;
            }
        }
        chol.border = border;
        chol.corner = corner;
        Ok(chol)
    }

    fn bulk_len(&self) -> usize {
        self.diag.len()
    }

    /// `L11⁻¹ b`
    fn solve_bulk(&self, b: &[C64]) -> Vec<C64> {
        let mut y = b.to_vec();
        for i in 0..y.len() {
            if i > 0 {
                let prev = y[i - 1];
                y[i] -= self.sub[i - 1] * prev;
            }
            y[i] /= self.diag[i];
        }
        y
    }

    /// `L⁻¹ b` in place.
    fn forward(&self, b: &mut [C64]) {
        let nb = self.bulk_len();
        let (bulk, tail) = b.split_at_mut(nb);
        for i in 0..nb {
            if i > 0 {
                let prev = bulk[i - 1];
                bulk[i] -= self.sub[i - 1] * prev;
            }
            bulk[i] /= self.diag[i];
        }
        let m = tail.len();
        for p in 0..m {
            let mut v = tail[p];
            v -= self.border[p].iter().zip(bulk.iter()).map(|(l, y)| l * y).sum::<C64>();
            for q in 0..p {
                v -= self.corner[(p, q)] * tail[q];
            }
            tail[p] = v / self.corner[(p, p)].re;
        }
    }

    /// `L⁻ᴴ y` in place.
    fn backward(&self, y: &mut [C64]) {
        let nb = self.bulk_len();
        let (bulk, tail) = y.split_at_mut(nb);
        let m = tail.len();
        for p in (0..m).rev() {
            let mut v = tail[p];
            for q in p + 1..m {
                v -= self.corner[(q, p)].conj() * tail[q];
            }
            tail[p] = v / self.corner[(p, p)].re;
        }
        for (p, row) in self.border.iter().enumerate() {
            let t = tail[p];
            for (b, l) in bulk.iter_mut().zip(row) {
                *b -= l.conj() * t;
            }
        }
        for i in (0..nb).rev() {
            if i + 1 < nb {
                let next = bulk[i + 1];
                bulk[i] -= self.sub[i].conj() * next;
            }
            bulk[i] /= self.diag[i];
        }
    }
}

/// Basis indices with the bulk functions first and boundary functions last.
fn arrow_order(m: &PencilMatrix) -> Vec<usize> {
    let boundary = m.boundary_indices();
    let mut is_boundary = vec![false; m.dim()];
    for &b in boundary {
        is_boundary[b] = true;
    }
    (0..m.dim())
        .filter(|&i| !is_boundary[i])
        .chain(boundary.iter().copied())
        .collect()
}

fn factor_mass(b: &PencilMatrix, order: &[usize]) -> Result<ArrowCholesky> {
    let m = b.boundary_indices().len();
    let nb = order.len() - m;
    let bulk = &order[..nb];
    let t_diag: Vec<f64> = bulk.iter().map(|&i| b.get(i, i).re).collect();
    let t_sub: Vec<C64> = bulk.windows(2).map(|w| b.get(w[1], w[0])).collect();
    let e: Vec<Vec<C64>> = b
        .boundary_indices()
        .iter()
        .map(|&j| bulk.iter().map(|&i| b.get(i, j)).collect())
        .collect();
    ArrowCholesky::new(&t_diag, &t_sub, &e, b.boundary_block())
}

/// The `k` algebraically smallest eigenpairs of `A x = λ B x`, together with
/// the traces of the eigenfunctions.
pub fn solve_pencil(pencil: &SpectralPencil, bfs: &BoundaryFunctionSet, k: usize) -> Result<SpectralResult> {
    let n = pencil.dim();
    if k == 0 || k > n {
        return Err(Error::IndexOutOfRange { index: k, len: n });
    }
    let order = arrow_order(&pencil.b);
    let chol = factor_mass(&pencil.b, &order)?;

    // W = L⁻¹ P A Pᵀ, then C = L⁻¹ Wᴴ
    let a_perm = |r: usize, c: usize| pencil.a.get(order[r], order[c]);
    let mut w = CMatrix::zeros(n, n);
    let mut col = vec![ZERO; n];
    for c in 0..n {
        for (r, x) in col.iter_mut().enumerate() {
            *x = a_perm(r, c);
        }
        chol.forward(&mut col);
        for (r, &x) in col.iter().enumerate() {
            w[(r, c)] = x;
        }
    }
    // column c of Wᴴ is the conjugate of row c of W
    let mut standard = CMatrix::zeros(n, n);
    for c in 0..n {
        for (x, y) in col.iter_mut().zip(w.row(c)) {
            *x = y.conj();
        }
        chol.forward(&mut col);
        for (r, &x) in col.iter().enumerate() {
            standard[(r, c)] = x;
        }
    }
    drop(w);
    standard.hermitize();

    let (values, vectors) = linalg::hermitian_eigen_lowest(standard, k)?;
    let mut coefficients: Vec<Vec<C64>> = vectors
        .into_iter()
        .map(|mut y| {
            chol.backward(&mut y);
            let mut x = vec![ZERO; n];
            for (pos, &idx) in order.iter().enumerate() {
                x[idx] = y[pos];
            }
            x
        })
        .collect();

    b_orthonormalize_clusters(&pencil.b, &values, &mut coefficients);
    for x in &mut coefficients {
        fix_phase(x);
    }

    let (norm_a, norm_b) = (pencil.a.norm_one(), pencil.b.norm_one());
    let mut residuals = Vec::with_capacity(k);
    let mut backward_errors = Vec::with_capacity(k);
    let mut traces = Vec::with_capacity(k);
    for (lambda, x) in values.iter().zip(&coefficients) {
        let ax = pencil.a.mul_vec(x);
        let bx = pencil.b.mul_vec(x);
        let r: Vec<C64> = ax.iter().zip(&bx).map(|(a, b)| a - b * *lambda).collect();
        let rn = linalg::norm2(&r);
        residuals.push(rn / linalg::norm2(&bx));
        backward_errors.push(rn / ((norm_a + lambda.abs() * norm_b) * linalg::norm2(x)));
        traces.push(fem::trace_of(x, bfs)?);
    }
    Ok(SpectralResult {
        eigenvalues: values,
        coefficients,
        traces,
        residuals,
        backward_errors,
    })
}

fn b_orthonormalize_clusters(b: &PencilMatrix, values: &[f64], vectors: &mut [Vec<C64>]) {
    let scale = values.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && values[end] - values[end - 1] <= CLUSTER_GAP * scale {
            end += 1;
        }
        for j in start..end {
            for i in start..j {
                let bi = b.mul_vec(&vectors[i]);
                let proj = linalg::dot(&bi, &vectors[j]);
                let (head, tail) = vectors.split_at_mut(j);
                for (x, y) in tail[0].iter_mut().zip(&head[i]) {
                    *x -= y * proj;
                }
            }
            let bj = b.mul_vec(&vectors[j]);
            let nrm = linalg::dot(&vectors[j], &bj).re.sqrt();
            vectors[j].iter_mut().for_each(|z| *z /= nrm);
        }
        start = end;
    }
}

/// Makes the first coefficient of non-negligible modulus real and positive.
fn fix_phase(x: &mut [C64]) {
    let max = x.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if let Some(lead) = x.iter().find(|z| z.norm() > 1e-8 * max) {
        let phase = lead.conj() / lead.norm();
        x.iter_mut().for_each(|z| *z *= phase);
    }
}

/// Mesh, boundary data, boundary functions and pencil of one discretization.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub system: BoundaryLinearSystem,
    pub functions: BoundaryFunctionSet,
    pub pencil: SpectralPencil,
}

impl Discretization {
    pub fn new(manifold: &IntervalManifold, u: &BoundaryUnitary, resolution: usize) -> Result<Self> {
        let mesh = Mesh::new(manifold, resolution)?;
        let system = fem::boundary_system(u, &mesh)?;
        let functions = fem::solve_boundary_values(&system)?;
        let pencil = fem::assemble_pencil(&functions)?;
        Ok(Self {
            system,
            functions,
            pencil,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        self.functions.mesh()
    }

    pub fn solve(&self, k: usize) -> Result<SpectralResult> {
        solve_pencil(&self.pencil, &self.functions, k)
    }
}

/// Continuous piecewise-linear function on a mesh, given by its node values.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinear {
    /// Per interval: node coordinates and values, endpoints included.
    pub pieces: Vec<(Vec<f64>, Vec<C64>)>,
    /// Per interval metric coefficient.
    pub metric: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn value(&self, interval: usize, x: f64) -> C64 {
        let (xs, vs) = &self.pieces[interval];
        let s = match xs.partition_point(|&t| t <= x) {
            0 => 0,
            p if p >= xs.len() => xs.len() - 2,
            p => p - 1,
        };
        let t = (x - xs[s]) / (xs[s + 1] - xs[s]);
        vs[s] * (1.0 - t) + vs[s + 1] * t
    }

    /// Riemannian `L²` norm.
    pub fn l2_norm(&self) -> f64 {
        let mut total = 0.0;
        for ((xs, vs), eta) in self.pieces.iter().zip(&self.metric) {
            for s in 0..xs.len() - 1 {
                let h = xs[s + 1] - xs[s];
                let (a, b) = (vs[s], vs[s + 1]);
                total += h / 3.0 * (a.norm_sqr() + b.norm_sqr() + (a.conj() * b).re) * eta.sqrt();
            }
        }
        total.sqrt()
    }

    fn scaled(&self, s: C64) -> Self {
        Self {
            pieces: self
                .pieces
                .iter()
                .map(|(xs, vs)| (xs.clone(), vs.iter().map(|v| v * s).collect()))
                .collect(),
            metric: self.metric.clone(),
        }
    }
}

/// Expansion `Σ c_a f_a` of eigenvector `index` as a piecewise-linear function.
pub fn reconstruct(result: &SpectralResult, index: usize, bfs: &BoundaryFunctionSet) -> Result<PiecewiseLinear> {
    let c = result.coefficients.get(index).ok_or(Error::IndexOutOfRange {
        index,
        len: result.len(),
    })?;
    reconstruct_coefficients(c, bfs)
}

pub fn reconstruct_coefficients(c: &[C64], bfs: &BoundaryFunctionSet) -> Result<PiecewiseLinear> {
    let (phi, _) = fem::trace_of(c, bfs)?;
    let mesh = bfs.mesh();
    let basis = bfs.basis();
    let pieces = mesh
        .counts()
        .iter()
        .enumerate()
        .map(|(alpha, &r)| {
            let xs = mesh.nodes(alpha).to_vec();
            let mut vs = Vec::with_capacity(r + 2);
            vs.push(phi[2 * alpha]);
            vs.extend((1..=r).map(|j| c[basis.index_of(alpha, j)]));
            vs.push(phi[2 * alpha + 1]);
            (xs, vs)
        })
        .collect();
    let metric = (0..mesh.counts().len()).map(|a| mesh.manifold().metric(a)).collect();
    Ok(PiecewiseLinear { pieces, metric })
}

/// Exact function with derivative, used as a reference for error norms.
pub trait ReferenceFunction {
    fn value(&self, interval: usize, x: f64) -> C64;
    fn derivative(&self, interval: usize, x: f64) -> C64;
}

fn gauss_segment(a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    GAUSS_NODES
        .iter()
        .zip(GAUSS_WEIGHTS.iter())
        .map(move |(&t, &w)| (mid + half * t, half * w))
}

/// `⟨u, f⟩` and `‖f‖²` in the Riemannian `L²` product.
fn overlap(u: &PiecewiseLinear, f: &dyn ReferenceFunction) -> (C64, f64) {
    let mut inner = ZERO;
    let mut norm = 0.0;
    for (alpha, ((xs, _), eta)) in u.pieces.iter().zip(&u.metric).enumerate() {
        let root = eta.sqrt();
        for s in 0..xs.len() - 1 {
            for (x, w) in gauss_segment(xs[s], xs[s + 1]) {
                let fv = f.value(alpha, x);
                inner += u.value(alpha, x).conj() * fv * (w * root);
                norm += fv.norm_sqr() * w * root;
            }
        }
    }
    (inner, norm)
}

/// `H¹` distance between a computed eigenfunction and a reference, after
/// aligning the computed one in phase and scaling it to the reference's `L²` norm.
pub fn h1_error(numeric: &PiecewiseLinear, analytic: &dyn ReferenceFunction) -> f64 {
    let (inner, ref_norm_sq) = overlap(numeric, analytic);
    let phase = if inner.norm() > 0.0 { inner / inner.norm() } else { C64::new(1.0, 0.0) };
    let scale = ref_norm_sq.sqrt() / numeric.l2_norm();
    let u = numeric.scaled(phase * scale);
    let mut total = 0.0;
    for (alpha, ((xs, vs), eta)) in u.pieces.iter().zip(&u.metric).enumerate() {
        let root = eta.sqrt();
        for s in 0..xs.len() - 1 {
            let slope = (vs[s + 1] - vs[s]) / (xs[s + 1] - xs[s]);
            for (x, w) in gauss_segment(xs[s], xs[s + 1]) {
                let dv = u.value(alpha, x) - analytic.value(alpha, x);
                let dd = slope - analytic.derivative(alpha, x);
                total += w * (dv.norm_sqr() * root + dd.norm_sqr() / root);
            }
        }
    }
    total.sqrt()
}
