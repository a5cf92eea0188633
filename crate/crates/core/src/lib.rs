//! Low-rank sparse subspace clustering.
//!
//! The pipeline learns a self-expressive representation `X ≈ XC` with an
//! ADMM solver that averages a low-rank proximal step on the singular values
//! of `C` with an elementwise sparsity proximal step. The representation is
//! truncated per column, symmetrized into an affinity graph and partitioned by
//! spectral clustering.
//!
//! Modules:
//! - [`penalty`] regularizers (`l0`, `l1`, `l1/2`, `l2/3`, exponential surrogate)
//! - [`prox`] their proximal operators plus a brute-force reference
//! - [`linalg`] SVD, symmetric eigenpairs and shifted Gram solves
//! - [`solver`] the ADMM iteration
//! - [`graph`] thresholding, affinity, Laplacian, spectral clustering
//! - [`metrics`] ACC, NMI, pairwise F1 and the rank-sum test
//! - [`data`] synthetic data, loaders and partition sampling

pub mod data;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod penalty;
pub mod prox;
pub mod solver;

pub use error::{Error, Result};
pub use penalty::{PenaltyKind, PenaltySpec};
pub use prox::{NumericProxSettings, ProxRequest};
pub use solver::{SolverConfig, SolverResult};
