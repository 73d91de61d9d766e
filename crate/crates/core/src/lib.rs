//! Numerical laboratory for Dirichlet-Laplacian eigenvalues under boundary
//! perturbation on graph-bounded 2D domains: first-order shape derivatives,
//! remainder-rate measurements across regularity regimes, and the
//! boundary-layer cell problem of the oscillatory counterexample.

pub mod cell;
pub mod eigen;
pub mod error;
pub mod experiments;
pub mod fem;
pub mod geometry;
pub mod hadamard;
pub mod mesh;
pub mod probe;

pub use error::{Error, Result};
