//! Finite-element spectral analysis of Laplace–Beltrami operators on finite
//! unions of intervals under arbitrary self-adjoint boundary conditions.

pub mod boundary;
pub mod eigensolve;
pub mod error;
pub mod fem;
pub mod harness;
pub mod linalg;
pub mod manifold;
pub mod oracles;

pub use boundary::{BoundaryUnitary, Preset, SymmetryRep};
pub use error::{Error, Result};
pub use linalg::{CMatrix, C64};
pub use manifold::{IntervalManifold, Mesh};
