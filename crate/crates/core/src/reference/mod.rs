//! Deterministic references: Dirichlet-to-Neumann spectra on the disk, the
//! Lévy kernel of the boundary process, closed-form disk kernels, finite-volume
//! solvers on the square and the disk, and the integro-differential split of
//! the Dirichlet-to-Neumann map.

pub mod dtn;
pub mod fd;
pub mod integro;
pub mod kernel;
pub mod poisson;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReferenceError {
    #[error("conductivity profile is not positive (min {0})")]
    NotElliptic(f64),
    #[error("kernel is singular on the diagonal (Δ = 0)")]
    Diagonal,
    #[error("point lies outside the open unit disk")]
    OutsideDisk,
    #[error("boundary data violates current conservation: ∫ f dσ = {0}")]
    Incompatible(f64),
    #[error("solver did not converge: residual {residual} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
