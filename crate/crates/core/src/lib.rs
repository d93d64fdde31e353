//! Reflecting divergence-form diffusions on planar domains, their boundary
//! local time and time-changed boundary process, and deterministic
//! Dirichlet-to-Neumann references to check them against.
//!
//! Every numerical type is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`, which is what the experiments use.

pub mod boundary;
pub mod conductivity;
pub mod estimators;
pub mod excursions;
pub mod geometry;
pub mod linalg;
pub mod quadrature;
pub mod reference;
pub mod rng;
pub mod scalar;
pub mod simulate;
pub mod stats;

pub use rng::{seed_rng, RngStream};
pub use scalar::Real;

pub type Vector = linalg::Vec2<f64>;
pub type Matrix = linalg::Sym2<f64>;
pub type Domain = geometry::DomainSpec<f64>;
pub type Point = geometry::BoundaryPoint<f64>;
pub type Field = conductivity::ConductivityField<f64>;
