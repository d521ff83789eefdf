//! Boundary unitaries `U ∈ U(2n)` parameterizing self-adjoint boundary
//! conditions `φ − iφ̇ = U(φ + iφ̇)` on the boundary values `φ` and outward
//! normal derivatives `φ̇` of a function.
//!
//! A validated [`BoundaryUnitary`] carries its spectral resolution, the
//! orthogonal projector `P⊥` onto the eigenspace of `−1`, its complement `P`
//! and the partial Cayley transform `A_U`. In terms of these the boundary
//! condition splits into `P⊥φ = 0` and `Pφ̇ = A_U φ`.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, I, ONE, ZERO};

/// Bound on `max |U^H U − I|` accepted as unitary.
pub const TOL_UNITARY: f64 = 1e-12;

/// Eigenvalues within this distance of `−1` are treated as exactly `−1`.
pub const TOL_GAP: f64 = 1e-8;

// Eigenvalues of (U + U^H)/2 closer than this are resolved together in the
// second stage of the decomposition.
const CLUSTER_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct BoundaryUnitary {
    matrix: CMatrix,
    eigenvalues: Vec<C64>,
    eigenphases: Vec<f64>,
    eigenvectors: CMatrix,
    minus_one_projector: CMatrix,
    projector: CMatrix,
    cayley: CMatrix,
}

impl BoundaryUnitary {
    /// Validates `m` as a unitary of even dimension and computes its spectral data.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let dim = m.nrows();
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim + dim % 2,
                found: dim,
            });
        }
        let deviation = unitarity_defect(&m);
        if !(deviation <= TOL_UNITARY) {
            return Err(Error::NotUnitary { deviation });
        }
        let (eigenvalues, eigenvectors) = unitary_eigen(&m)?;
        let eigenphases: Vec<f64> = eigenvalues.iter().map(|z| z.arg()).collect();

        let mut minus_one_projector = CMatrix::zeros(dim, dim);
        let mut cayley = CMatrix::zeros(dim, dim);
        for (j, lambda) in eigenvalues.iter().enumerate() {
            let y = eigenvectors.column(j);
            let (target, weight) = if (lambda + ONE).norm() <= TOL_GAP {
                (&mut minus_one_projector, 1.0)
            } else {
                (&mut cayley, -(0.5 * eigenphases[j]).tan())
            };
            for r in 0..dim {
                for c in 0..dim {
                    target[(r, c)] += y[r] * y[c].conj() * weight;
                }
            }
        }
        minus_one_projector.hermitize();
        cayley.hermitize();
        let projector = CMatrix::identity(dim).sub(&minus_one_projector);
        Ok(Self {
            matrix: m,
            eigenvalues,
            eigenphases,
            eigenvectors,
            minus_one_projector,
            projector,
            cayley,
        })
    }

    /// Like [`BoundaryUnitary::new`], additionally requiring dimension `2 * intervals`.
    pub fn for_intervals(m: CMatrix, intervals: usize) -> Result<Self> {
        if m.nrows() != 2 * intervals {
            return Err(Error::DimensionMismatch {
                expected: 2 * intervals,
                found: m.nrows(),
            });
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Unit-modulus eigenvalues; column `j` of [`Self::eigenvectors`] belongs to entry `j`.
    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    /// Eigenphases in `(−π, π]`.
    pub fn eigenphases(&self) -> &[f64] {
        &self.eigenphases
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    /// `P⊥`, the orthogonal projector onto the eigenspace of `−1`.
    pub fn minus_one_projector(&self) -> &CMatrix {
        &self.minus_one_projector
    }

    /// `P = I − P⊥`.
    pub fn projector(&self) -> &CMatrix {
        &self.projector
    }

    /// Partial Cayley transform `A_U = Σ −tan(θ_j/2) y_j y_jᴴ` over eigenphases away from `π`.
    pub fn partial_cayley(&self) -> &CMatrix {
        &self.cayley
    }

    /// Multiplicity of the eigenvalue `−1`.
    pub fn minus_one_multiplicity(&self) -> usize {
        self.eigenvalues
            .iter()
            .filter(|z| (*z + ONE).norm() <= TOL_GAP)
            .count()
    }

    /// A unitary on a finite-dimensional boundary space always has an
    /// isolated (possibly empty) spectrum at `−1`.
    pub fn has_gap(&self) -> bool {
        self.eigenvalues
            .iter()
            .all(|z| (z + ONE).norm() <= TOL_GAP || (z + ONE).norm() > TOL_GAP)
    }

    /// Boundedness on the order-1/2 boundary Sobolev space. Every Sobolev norm
    /// on a finite boundary is equivalent to the Euclidean one, so this holds.
    pub fn is_admissible(&self) -> bool {
        true
    }

    /// Residuals of the boundary condition for data `(φ, φ̇)`.
    pub fn residual(&self, phi: &[C64], dphi: &[C64]) -> Result<BoundaryResidual> {
        let dim = self.dim();
        for v in [phi, dphi] {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
        }
        let minus: Vec<C64> = phi.iter().zip(dphi).map(|(&p, &d)| p - I * d).collect();
        let plus: Vec<C64> = phi.iter().zip(dphi).map(|(&p, &d)| p + I * d).collect();
        let u_plus = self.matrix.mul_vec(&plus);
        let full = linalg::norm2(&minus.iter().zip(&u_plus).map(|(&a, &b)| a - b).collect::<Vec<_>>());
        let p_dphi = self.projector.mul_vec(dphi);
        let a_phi = self.cayley.mul_vec(phi);
        let derivative_part =
            linalg::norm2(&p_dphi.iter().zip(&a_phi).map(|(&a, &b)| a - b).collect::<Vec<_>>());
        let dirichlet_part = linalg::norm2(&self.minus_one_projector.mul_vec(phi));
        Ok(BoundaryResidual {
            full,
            derivative_part,
            dirichlet_part,
        })
    }
}

/// Residual norms of `φ − iφ̇ = U(φ + iφ̇)` and of its split form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryResidual {
    /// `‖(φ − iφ̇) − U(φ + iφ̇)‖₂`
    pub full: f64,
    /// `‖Pφ̇ − A_U φ‖₂`
    pub derivative_part: f64,
    /// `‖P⊥φ‖₂`
    pub dirichlet_part: f64,
}

/// `max |M^H M − I|`.
pub fn unitarity_defect(m: &CMatrix) -> f64 {
    m.adjoint()
        .matmul(m)
        .max_abs_diff(&CMatrix::identity(m.nrows()))
}

/// Spectral decomposition of a unitary through two Hermitian problems: the
/// real part `(U + Uᴴ)/2` fixes invariant subspaces, the imaginary part
/// `(U − Uᴴ)/(2i)` resolves each cluster of equal real parts.
fn unitary_eigen(u: &CMatrix) -> Result<(Vec<C64>, CMatrix)> {
    let dim = u.nrows();
    let uh = u.adjoint();
    let mut re_part = u.add(&uh).scale(C64::new(0.5, 0.0));
    re_part.hermitize();
    let mut im_part = u.sub(&uh).scale(C64::new(0.0, -0.5));
    im_part.hermitize();

    let first = linalg::hermitian_eigen(&re_part)?;
    let mut vectors = CMatrix::zeros(dim, dim);
    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim && first.values[end] - first.values[end - 1] <= CLUSTER_TOL {
            end += 1;
        }
        let basis: Vec<Vec<C64>> = (start..end).map(|j| first.vectors.column(j)).collect();
        let m = basis.len();
        if m == 1 {
            vectors.set_column(start, &basis[0]);
        } else {
            let mut small = CMatrix::from_fn(m, m, |a, b| {
                linalg::dot(&basis[a], &im_part.mul_vec(&basis[b]))
            });
            small.hermitize();
            let second = linalg::hermitian_eigen(&small)?;
            for c in 0..m {
                let mut y = vec![ZERO; dim];
                for (a, b) in basis.iter().enumerate() {
                    let w = second.vectors[(a, c)];
                    for (yi, &bi) in y.iter_mut().zip(b) {
                        *yi += bi * w;
                    }
                }
                let nrm = linalg::norm2(&y);
                y.iter_mut().for_each(|z| *z /= nrm);
                vectors.set_column(start + c, &y);
            }
        }
        start = end;
    }
    let values = (0..dim)
        .map(|j| {
            let y = vectors.column(j);
            let z = linalg::dot(&y, &u.mul_vec(&y));
            z / z.norm()
        })
        .collect();
    Ok((values, vectors))
}

/// Named families of boundary conditions.
#[derive(Clone, Debug, PartialEq)]
pub enum Preset {
    /// `U = −I`
    Dirichlet,
    /// `U = I`
    Neumann,
    /// `U = diag(e^{iβ_l})`: `φ̇_l = −tan(β_l/2) φ_l`.
    Robin { angles: Vec<f64> },
    /// Each matched pair `(l, m)` of endpoints is glued: `φ_l = φ_m`, derivatives matched.
    Periodic { pairs: Vec<(usize, usize)> },
    /// Each matched pair `(l, m)` gets the block `[[0, e^{iα}], [e^{−iα}, 0]]`.
    QuasiPeriodic { pairs: Vec<(usize, usize)>, alpha: f64 },
    /// Single interval, `U = diag(1, e^{−iθ})`: Neumann at the left end,
    /// `Ψ'(b) = tan(θ/2) Ψ(b)` at the right end.
    RobinLocal { theta: f64 },
}

impl Preset {
    /// Endpoints of every interval paired with each other.
    pub fn periodic_per_interval(intervals: usize) -> Self {
        Preset::Periodic {
            pairs: (0..intervals).map(|a| (2 * a, 2 * a + 1)).collect(),
        }
    }

    pub fn quasi_periodic_per_interval(intervals: usize, alpha: f64) -> Self {
        Preset::QuasiPeriodic {
            pairs: (0..intervals).map(|a| (2 * a, 2 * a + 1)).collect(),
            alpha,
        }
    }

    /// The raw matrix of the preset for a boundary of dimension `dim`.
    pub fn matrix(&self, dim: usize) -> Result<CMatrix> {
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim + dim % 2,
                found: dim,
            });
        }
        match self {
            Preset::Dirichlet => Ok(CMatrix::identity(dim).scale(C64::new(-1.0, 0.0))),
            Preset::Neumann => Ok(CMatrix::identity(dim)),
            Preset::Robin { angles } => {
                if angles.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: angles.len(),
                    });
                }
                check_finite(angles)?;
                let diag: Vec<C64> = angles.iter().map(|&b| C64::from_polar(1.0, b)).collect();
                Ok(CMatrix::from_diag(&diag))
            }
            Preset::Periodic { pairs } => pairing_matrix(dim, pairs, 0.0),
            Preset::QuasiPeriodic { pairs, alpha } => {
                check_finite(&[*alpha])?;
                pairing_matrix(dim, pairs, *alpha)
            }
            Preset::RobinLocal { theta } => {
                if dim != 2 {
                    return Err(Error::DimensionMismatch {
                        expected: 2,
                        found: dim,
                    });
                }
                check_finite(&[*theta])?;
                Ok(CMatrix::from_diag(&[ONE, C64::from_polar(1.0, -theta)]))
            }
        }
    }

    pub fn build(&self, dim: usize) -> Result<BoundaryUnitary> {
        BoundaryUnitary::new(self.matrix(dim)?)
    }

    /// Rejects Robin angles at `π`, whose condition is Dirichlet rather than
    /// Robin. Such data is still accepted by [`Preset::build`].
    pub fn require_invertible(&self) -> Result<()> {
        if let Preset::Robin { angles } = self {
            for (index, &b) in angles.iter().enumerate() {
                if (C64::from_polar(1.0, b) + ONE).norm() <= TOL_GAP {
                    return Err(Error::AngleAtMinusPi { index });
                }
            }
        }
        Ok(())
    }
}

fn check_finite(angles: &[f64]) -> Result<()> {
    match angles.iter().find(|a| !a.is_finite()) {
        Some(&a) => Err(Error::NonFiniteAngle(a)),
        None => Ok(()),
    }
}

fn pairing_matrix(dim: usize, pairs: &[(usize, usize)], alpha: f64) -> Result<CMatrix> {
    let mut seen = vec![false; dim];
    for &(l, m) in pairs {
        if l >= dim || m >= dim {
            return Err(Error::InvalidPairing(format!(
                "pair ({l}, {m}) outside 0..{dim}"
            )));
        }
        if l == m {
            return Err(Error::InvalidPairing(format!("endpoint {l} paired with itself")));
        }
        for e in [l, m] {
            if seen[e] {
                return Err(Error::InvalidPairing(format!("endpoint {e} used twice")));
            }
            seen[e] = true;
        }
    }
    if let Some(free) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidPairing(format!("endpoint {free} is unpaired")));
    }
    let mut u = CMatrix::zeros(dim, dim);
    let phase = C64::from_polar(1.0, alpha);
    for &(l, m) in pairs {
        let (lo, hi) = (l.min(m), l.max(m));
        u[(lo, hi)] = phase;
        u[(hi, lo)] = phase.conj();
    }
    Ok(u)
}

/// Unitary representation of a symmetry group on the boundary space, given by
/// its elements or a generating set.
#[derive(Clone, Debug)]
pub struct SymmetryRep {
    elements: Vec<CMatrix>,
}

impl SymmetryRep {
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        for e in &elements {
            if !e.is_square() {
                return Err(Error::DimensionMismatch {
                    expected: e.nrows(),
                    found: e.ncols(),
                });
            }
            let deviation = unitarity_defect(e);
            if !(deviation <= TOL_UNITARY) {
                return Err(Error::NotUnitary { deviation });
            }
        }
        Ok(Self { elements })
    }

    pub fn trivial(dim: usize) -> Self {
        Self {
            elements: vec![CMatrix::identity(dim)],
        }
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    /// `max |v(g) U − U v(g)|` for every element `g`.
    pub fn commutator_norms(&self, u: &BoundaryUnitary) -> Result<Vec<f64>> {
        self.elements
            .iter()
            .map(|v| {
                if v.nrows() != u.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: u.dim(),
                        found: v.nrows(),
                    });
                }
                Ok(v.matmul(u.matrix()).max_abs_diff(&u.matrix().matmul(v)))
            })
            .collect()
    }
}

/// The self-adjoint extension given by `u` is invariant under the group iff
/// `u` commutes with every representing matrix.
pub fn commutant_check(u: &BoundaryUnitary, rep: &SymmetryRep, tol: f64) -> Result<bool> {
    Ok(rep.commutator_norms(u)?.iter().all(|&c| c <= tol))
}
