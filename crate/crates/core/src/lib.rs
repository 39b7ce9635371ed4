//! Decentralized, federated recovery of low-rank matrices from column-wise
//! compressive sketches.
//!
//! The columns of an `n x q` rank-`r` matrix are sketched independently
//! (`y_k = A_k x_k`) and the sketches are spread over `p` nodes of a
//! communication graph. Nodes never exchange raw sketches. They share only
//! per-iteration summaries (threshold sums, power-method products, gradients),
//! aggregated by synchronous average consensus, and jointly estimate the
//! column span of the matrix with projected gradient descent.
//!
//! Module map:
//!
//! * [`numerics`]: dense matrices, positive-diagonal QR, least squares,
//!   subspace distance, seeded Gaussian sampling.
//! * [`problem`]: synthetic instances, sketches and column partitions.
//! * [`topology`]: Erdős–Rényi graphs, connectivity, Metropolis weights.
//! * [`consensus`]: synchronous average consensus.
//! * [`init`]: federated truncated spectral initialization.
//! * [`solver`]: the decentralized solver and its exact-aggregation baseline.
//! * [`harness`]: run configuration, presets, multi-trial experiments, reports.

pub mod consensus;
pub mod error;
pub mod harness;
pub mod init;
pub mod numerics;
pub mod problem;
pub mod solver;
pub mod topology;

mod textio;

pub use error::{Error, Result};
pub use numerics::{Matrix, OrthonormalBasis, Rng};
