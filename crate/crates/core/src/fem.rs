//! Non-local finite-element space and the spectral pencil.
//!
//! The space on a mesh with `r_α` interior nodes per interval has dimension
//! `|r| = Σ r_α`. Interior node `j` of interval `α` carries basis index
//! `offset_α + j − 1`. Nodes `2..r_α−1` carry ordinary hat functions (bulk
//! functions). Nodes `1` and `r_α` carry the boundary functions `β^(2α)` and
//! `β^(2α+1)`: each equals 1 at its node, 0 at the other interior nodes, and
//! takes the value `V_lk` at every endpoint `l` of the manifold. The endpoint
//! values `V` are fixed by requiring every boundary function to satisfy the
//! boundary condition, which makes the space a subspace of the operator domain.

use std::io::Write;

use crate::boundary::BoundaryUnitary;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, I, ONE, ZERO};
use crate::manifold::Mesh;

/// Distance of `1` from the spectrum of `U0` below which `F` is treated as singular.
pub const SINGULAR_TOL: f64 = 1e-12;

/// Estimated `κ(F)` above which a warning is raised.
pub const ILL_CONDITIONED: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisFunction {
    /// Hat function at interior node `node` (1-based) of interval `interval`.
    Bulk { interval: usize, node: usize },
    /// Boundary function attached to endpoint `endpoint`.
    Boundary { endpoint: usize },
}

/// Ordering of the basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    functions: Vec<BasisFunction>,
    offsets: Vec<usize>,
    boundary_indices: Vec<usize>,
}

impl Basis {
    pub fn new(mesh: &Mesh) -> Self {
        let mut functions = Vec::with_capacity(mesh.dimension());
        let mut offsets = Vec::with_capacity(mesh.counts().len());
        let mut boundary_indices = Vec::with_capacity(2 * mesh.counts().len());
        for (alpha, &r) in mesh.counts().iter().enumerate() {
            offsets.push(functions.len());
            for node in 1..=r {
                if node == 1 || node == r {
                    let endpoint = if node == 1 { 2 * alpha } else { 2 * alpha + 1 };
                    boundary_indices.push(functions.len());
                    functions.push(BasisFunction::Boundary { endpoint });
                } else {
                    functions.push(BasisFunction::Bulk { interval: alpha, node });
                }
            }
        }
        Self {
            functions,
            offsets,
            boundary_indices,
        }
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn functions(&self) -> &[BasisFunction] {
        &self.functions
    }

    /// Basis index of the function attached to interior node `node` (1-based) of `interval`.
    pub fn index_of(&self, interval: usize, node: usize) -> usize {
        self.offsets[interval] + node - 1
    }

    /// Basis index of `β^(k)` for `k = 0..2n`.
    pub fn boundary_indices(&self) -> &[usize] {
        &self.boundary_indices
    }
}

/// Basis functions vanishing with their normal derivative on the boundary.
pub fn bulk_basis(mesh: &Mesh) -> Vec<BasisFunction> {
    Basis::new(mesh)
        .functions
        .into_iter()
        .filter(|f| matches!(f, BasisFunction::Bulk { .. }))
        .collect()
}

/// The linear system `F V = C` for the endpoint values of the boundary functions.
#[derive(Clone, Debug)]
pub struct BoundaryLinearSystem {
    /// `diag(1 − i/h) − U diag(1 + i/h)`
    pub f: CMatrix,
    /// `−i (I + U) diag(1/h)`
    pub c: CMatrix,
    /// Diagonal of `D`, `D_jj = 1 + i/h_j`.
    pub d: Vec<C64>,
    /// `U D D̄⁻¹`
    pub u0: CMatrix,
    /// `(h_max/h_min) · 2 / min |1 − λ(U0)|`
    pub kappa_bound: f64,
    /// Per-endpoint metric steps `h_l √η_l`.
    pub steps: Vec<f64>,
    mesh: Mesh,
    unitary: BoundaryUnitary,
}

impl BoundaryLinearSystem {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn unitary(&self) -> &BoundaryUnitary {
        &self.unitary
    }

    /// Condition number of `F` from its singular values.
    pub fn condition_number(&self) -> Result<f64> {
        linalg::condition_number(&self.f)
    }
}

pub fn boundary_system(u: &BoundaryUnitary, mesh: &Mesh) -> Result<BoundaryLinearSystem> {
    let steps = mesh.boundary_metric_steps();
    boundary_system_with_steps(u, mesh, steps)
}

/// Builds the system with explicitly given per-endpoint steps, e.g. after
/// perturbing them to move `F` away from singularity.
pub fn boundary_system_with_steps(
    u: &BoundaryUnitary,
    mesh: &Mesh,
    steps: Vec<f64>,
) -> Result<BoundaryLinearSystem> {
    let dim = mesh.manifold().boundary_dim();
    if u.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: u.dim(),
        });
    }
    if steps.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: steps.len(),
        });
    }
    let um = u.matrix();
    let d: Vec<C64> = steps.iter().map(|&h| ONE + I / h).collect();
    let f = CMatrix::from_fn(dim, dim, |r, c| {
        let diag = if r == c { ONE - I / steps[r] } else { ZERO };
        diag - um[(r, c)] * d[c]
    });
    let c = CMatrix::from_fn(dim, dim, |r, col| {
        let delta = if r == col { ONE } else { ZERO };
        -I * (delta + um[(r, col)]) / steps[col]
    });
    let u0 = CMatrix::from_fn(dim, dim, |r, c| um[(r, c)] * (d[c] / d[c].conj()));
    let distance = linalg::singular_values(&CMatrix::identity(dim).sub(&u0))?[0];
    if distance <= SINGULAR_TOL {
        return Err(Error::SingularBoundaryMatrix { distance });
    }
    let (hmin, hmax) = steps
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &h| (lo.min(h), hi.max(h)));
    let kappa_bound = hmax / hmin * 2.0 / distance;
    Ok(BoundaryLinearSystem {
        f,
        c,
        d,
        u0,
        kappa_bound,
        steps,
        mesh: mesh.clone(),
        unitary: u.clone(),
    })
}

/// Endpoint values and normal derivatives of the boundary functions.
#[derive(Clone, Debug)]
pub struct BoundaryFunctionSet {
    /// Column `k` holds the endpoint values of `β^(k)`.
    pub v: CMatrix,
    /// `diag(1/h) V`, stored exactly Hermitian.
    pub weighted: CMatrix,
    /// `derivs_lk = −(1/h_l)(δ_lk − V_lk)`, the outward normal derivative of `β^(k)` at `l`.
    pub derivs: CMatrix,
    pub steps: Vec<f64>,
    /// `κ(F)` from singular values.
    pub kappa: f64,
    /// `max |F V − C|` of the raw solve, before symmetrization.
    pub raw_residual: f64,
    pub ill_conditioned: bool,
    mesh: Mesh,
    basis: Basis,
}

impl BoundaryFunctionSet {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn boundary_dim(&self) -> usize {
        self.v.nrows()
    }
}

pub fn solve_boundary_values(sys: &BoundaryLinearSystem) -> Result<BoundaryFunctionSet> {
    let dim = sys.f.nrows();
    let raw = linalg::lu_solve(&sys.f, &sys.c).ok_or(Error::SingularBoundaryMatrix { distance: 0.0 })?;
    let raw_residual = sys.f.matmul(&raw).max_abs_diff(&sys.c);
    log::debug!("boundary solve residual {raw_residual:e}");
    let kappa = sys.condition_number()?;
    let ill_conditioned = kappa > ILL_CONDITIONED;
    if ill_conditioned {
        log::warn!("boundary matrix is ill-conditioned: kappa(F) = {kappa:e}");
    }
    let h = &sys.steps;
    let mut v = CMatrix::from_fn(dim, dim, |k, j| {
        0.5 * (raw[(k, j)] + raw[(j, k)].conj() * (h[k] / h[j]))
    });
    let mut weighted = CMatrix::from_fn(dim, dim, |k, j| v[(k, j)] / h[k]);
    weighted.hermitize();
    // endpoints sharing a step obey the relation bit for bit
    for k in 0..dim {
        for j in 0..k {
            if h[k] == h[j] {
                v[(k, j)] = v[(j, k)].conj();
            }
        }
        if v[(k, k)].im.abs() <= f64::EPSILON * v[(k, k)].re.abs() {
            v[(k, k)].im = 0.0;
        }
    }
    let derivs = CMatrix::from_fn(dim, dim, |l, k| {
        let delta = if l == k { ONE } else { ZERO };
        -(delta - v[(l, k)]) / h[l]
    });
    Ok(BoundaryFunctionSet {
        v,
        weighted,
        derivs,
        steps: h.clone(),
        kappa,
        raw_residual,
        ill_conditioned,
        mesh: sys.mesh.clone(),
        basis: Basis::new(&sys.mesh),
    })
}

/// Result of the first-order perturbation analysis of `F` under changes of the steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbationBound {
    /// Lower bound on `|δλ|` for the eigenvalue of `U0` at `1`.
    pub lower_bound: f64,
    /// `(h_max/h_min) / min |δh|`
    pub kappa_estimate: f64,
}

/// `δ(D D̄⁻¹)_kk = −2i δh_k / (h_k − i)²`.
pub fn diagonal_perturbation(steps: &[f64], dh: &[f64]) -> Vec<C64> {
    steps
        .iter()
        .zip(dh)
        .map(|(&h, &dh)| -2.0 * I * dh / (C64::new(h, -1.0) * C64::new(h, -1.0)))
        .collect()
}

/// Bound on the motion of the eigenvalue `1` of `U0` when the steps move by
/// `dh`; `constant` is the constant of the second-order remainder.
pub fn perturbation_bounds(sys: &BoundaryLinearSystem, dh: &[f64], constant: f64) -> Result<PerturbationBound> {
    if dh.len() != sys.steps.len() {
        return Err(Error::DimensionMismatch {
            expected: sys.steps.len(),
            found: dh.len(),
        });
    }
    let delta = diagonal_perturbation(&sys.steps, dh);
    let smin = delta.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    let smax = delta.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lower_bound = (smin - constant * smax * smax) / (1.0 + constant * smax);
    if !(lower_bound > 0.0) {
        return Err(Error::PerturbationTooLarge { bound: lower_bound });
    }
    let (hmin, hmax) = sys
        .steps
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &h| (lo.min(h), hi.max(h)));
    let dmin = dh.iter().map(|d| d.abs()).fold(f64::INFINITY, f64::min);
    Ok(PerturbationBound {
        lower_bound,
        kappa_estimate: hmax / hmin / dmin,
    })
}

/// Hermitian matrix on the finite-element space stored as tridiagonal bands
/// in basis order plus a dense block among the boundary functions.
#[derive(Clone, Debug, PartialEq)]
pub struct PencilMatrix {
    diag: Vec<C64>,
    upper: Vec<C64>,
    block: CMatrix,
    boundary_indices: Vec<usize>,
    position: Vec<Option<usize>>,
}

impl PencilMatrix {
    fn zeros(basis: &Basis) -> Self {
        let n = basis.len();
        let mut position = vec![None; n];
        for (p, &idx) in basis.boundary_indices.iter().enumerate() {
            position[idx] = Some(p);
        }
        let m = basis.boundary_indices.len();
        Self {
            diag: vec![ZERO; n],
            upper: vec![ZERO; n.saturating_sub(1)],
            block: CMatrix::zeros(m, m),
            boundary_indices: basis.boundary_indices.clone(),
            position,
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Adds to entry `(a, b)` with `a ≤ b`; `None` if it lies outside the stored pattern.
    fn add_upper(&mut self, a: usize, b: usize, value: C64) -> Option<()> {
        match (self.position[a], self.position[b]) {
            (Some(p), Some(q)) => self.block[(p, q)] += value,
            _ if a == b => self.diag[a] += value,
            _ if b == a + 1 => self.upper[a] += value,
            _ => return None,
        }
        Some(())
    }

    fn finish(&mut self) {
        for d in &mut self.diag {
            d.im = 0.0;
        }
        let m = self.block.nrows();
        for p in 0..m {
            self.block[(p, p)].im = 0.0;
            for q in 0..p {
                self.block[(p, q)] = self.block[(q, p)].conj();
            }
        }
        for (a, u) in self.upper.iter_mut().enumerate() {
            if self.position[a].is_some() && self.position[a + 1].is_some() {
                *u = ZERO;
            }
        }
    }

    pub fn get(&self, a: usize, b: usize) -> C64 {
        match (self.position[a], self.position[b]) {
            (Some(p), Some(q)) => self.block[(p, q)],
            _ if a == b => self.diag[a],
            _ if b == a + 1 => self.upper[a],
            _ if a == b + 1 => self.upper[b].conj(),
            _ => ZERO,
        }
    }

    /// Main diagonal of the bulk part (entries of boundary functions live in the block).
    pub fn bulk_diagonal(&self) -> &[C64] {
        &self.diag
    }

    /// Entries `(a, a+1)` with at least one bulk function.
    pub fn bulk_superdiagonal(&self) -> &[C64] {
        &self.upper
    }

    /// Block among the boundary functions, ordered like [`Basis::boundary_indices`].
    pub fn boundary_block(&self) -> &CMatrix {
        &self.block
    }

    pub fn boundary_indices(&self) -> &[usize] {
        &self.boundary_indices
    }

    pub fn to_dense(&self) -> CMatrix {
        let n = self.dim();
        CMatrix::from_fn(n, n, |a, b| self.get(a, b))
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let mut y = vec![ZERO; n];
        for a in 0..n {
            if self.position[a].is_none() {
                y[a] += self.diag[a] * x[a];
            }
        }
        for a in 0..n.saturating_sub(1) {
            if self.position[a].is_none() || self.position[a + 1].is_none() {
                y[a] += self.upper[a] * x[a + 1];
                y[a + 1] += self.upper[a].conj() * x[a];
            }
        }
        for (p, &a) in self.boundary_indices.iter().enumerate() {
            for (q, &b) in self.boundary_indices.iter().enumerate() {
                y[a] += self.block[(p, q)] * x[b];
            }
        }
        y
    }

    /// Stored nonzero entries as `(row, col, value)`, both triangles.
    pub fn entries(&self) -> Vec<(usize, usize, C64)> {
        let n = self.dim();
        let mut out = Vec::new();
        for a in 0..n {
            for b in a.saturating_sub(1)..(a + 2).min(n) {
                if self.position[a].is_some() && self.position[b].is_some() {
                    continue;
                }
                let v = self.get(a, b);
                if v != ZERO {
                    out.push((a, b, v));
                }
            }
        }
        for (p, &a) in self.boundary_indices.iter().enumerate() {
            for (q, &b) in self.boundary_indices.iter().enumerate() {
                let v = self.block[(p, q)];
                if v != ZERO {
                    out.push((a, b, v));
                }
            }
        }
        out.sort_by_key(|&(a, b, _)| (a, b));
        out
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let mut sums = vec![0.0; self.dim()];
        for (_, c, v) in self.entries() {
            sums[c] += v.norm();
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn is_exactly_hermitian(&self) -> bool {
        self.diag.iter().all(|d| d.im == 0.0) && self.block.is_exactly_hermitian()
    }
}

/// The pencil `(A, B)`: `A_ab = ⟨df_a, df_b⟩ − Σ_l conj(f_a(l)) ∂_ν f_b(l)` and
/// `B_ab = ⟨f_a, f_b⟩`, in the Riemannian inner products.
#[derive(Clone, Debug)]
pub struct SpectralPencil {
    pub a: PencilMatrix,
    pub b: PencilMatrix,
}

impl SpectralPencil {
    pub fn dim(&self) -> usize {
        self.a.dim()
    }
}

// Values of the basis functions at the two nodes of a subinterval.
struct Local {
    index: usize,
    left: C64,
    right: C64,
}

fn push_local(locals: &mut Vec<Local>, index: usize, left: C64, right: C64) {
    match locals.iter_mut().find(|l| l.index == index) {
        Some(l) => {
            l.left += left;
            l.right += right;
        }
        None => locals.push(Local { index, left, right }),
    }
}

pub fn assemble_pencil(bfs: &BoundaryFunctionSet) -> Result<SpectralPencil> {
    let mesh = bfs.mesh();
    let manifold = mesh.manifold();
    let basis = bfs.basis();
    let bidx = basis.boundary_indices();
    let dim_b = bfs.boundary_dim();
    let mut a = PencilMatrix::zeros(basis);
    let mut b = PencilMatrix::zeros(basis);
    let mut locals: Vec<Local> = Vec::with_capacity(dim_b + 2);
    for (alpha, &r) in mesh.counts().iter().enumerate() {
        let h = mesh.steps()[alpha];
        let root = manifold.metric(alpha).sqrt();
        let mass = h / 6.0 * root;
        let stiff = 1.0 / (h * root);
        for s in 0..=r {
            locals.clear();
            if s >= 1 {
                push_local(&mut locals, basis.index_of(alpha, s), ONE, ZERO);
            }
            if s < r {
                push_local(&mut locals, basis.index_of(alpha, s + 1), ZERO, ONE);
            }
            if s == 0 {
                for (k, &idx) in bidx.iter().enumerate() {
                    push_local(&mut locals, idx, bfs.v[(2 * alpha, k)], ZERO);
                }
            }
            if s == r {
                for (k, &idx) in bidx.iter().enumerate() {
                    push_local(&mut locals, idx, ZERO, bfs.v[(2 * alpha + 1, k)]);
                }
            }
            for p in &locals {
                for q in &locals {
                    if p.index > q.index {
                        continue;
                    }
                    let (p0, p1) = (p.left.conj(), p.right.conj());
                    let m = (2.0 * p0 * q.left + 2.0 * p1 * q.right + p0 * q.right + p1 * q.left) * mass;
                    let k = (p1 - p0) * (q.right - q.left) * stiff;
                    if m != ZERO {
                        b.add_upper(p.index, q.index, m).ok_or(Error::IndexOutOfRange {
                            index: q.index,
                            len: basis.len(),
                        })?;
                    }
                    if k != ZERO {
                        a.add_upper(p.index, q.index, k).ok_or(Error::IndexOutOfRange {
                            index: q.index,
                            len: basis.len(),
                        })?;
                    }
                }
            }
        }
    }
    // boundary term, only boundary functions have nonzero traces
    for p in 0..dim_b {
        for q in p..dim_b {
            let mut term = ZERO;
            for l in 0..dim_b {
                term += bfs.v[(l, p)].conj() * bfs.derivs[(l, q)];
            }
            a.block[(p, q)] -= term;
        }
    }
    a.finish();
    b.finish();
    Ok(SpectralPencil { a, b })
}

/// Boundary values `φ` and outward normal derivatives `φ̇` of `Σ c_a f_a`.
pub fn trace_of(coefficients: &[C64], bfs: &BoundaryFunctionSet) -> Result<(Vec<C64>, Vec<C64>)> {
    let basis = bfs.basis();
    if coefficients.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            found: coefficients.len(),
        });
    }
    let cb: Vec<C64> = basis.boundary_indices().iter().map(|&i| coefficients[i]).collect();
    Ok((bfs.v.mul_vec(&cb), bfs.derivs.mul_vec(&cb)))
}

/// Writes `(row, col, re, im)` lines for the given entries.
pub fn write_entries_csv<W: Write>(mut w: W, entries: &[(usize, usize, C64)]) -> std::io::Result<()> {
    writeln!(w, "row,col,re,im")?;
    for &(r, c, v) in entries {
        writeln!(w, "{r},{c},{:.16e},{:.16e}", v.re, v.im)?;
    }
    Ok(())
}

/// All entries of a dense matrix in the `(row, col, re, im)` layout.
pub fn dense_entries(m: &CMatrix) -> Vec<(usize, usize, C64)> {
    (0..m.nrows())
        .flat_map(|r| (0..m.ncols()).map(move |c| (r, c)))
        .map(|(r, c)| (r, c, m[(r, c)]))
        .collect()
}
