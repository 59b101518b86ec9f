//! Conditional min-entropy, singlet fractions and the inequalities that tie
//! them to estimation error, computed on finite-dimensional instances.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: dense complex matrices and a Jacobi eigensolver.
//! - [`quantum`]: density operators, channels, partial traces, Choi matrices.
//! - [`entropy`]: Shannon, von Neumann and classical min-entropies.
//! - [`sdp`]: the min-entropy semidefinite program and its optimal decoder.
//! - [`discretize`]: ε-packings, ε-nets and covering partitions.
//! - [`bounds`]: both sides of the Fano-type inequalities as [`BoundReport`]s.
//! - [`learning`]: cell-constant learning tasks, MAP decoding, Monte Carlo risk.
//! - [`entfrac`]: partition singlets, grid states and the entanglement-fraction theorems.

pub mod bounds;
pub mod discretize;
pub mod entfrac;
pub mod entropy;
mod error;
pub mod learning;
pub mod linalg;
pub mod quantum;
pub mod random;
pub mod sdp;

pub use bounds::BoundReport;
pub use discretize::{Discretization, MetricSpace};
pub use entropy::JointTable;
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, C64};
pub use quantum::{Channel, DensityOperator};
pub use sdp::{solve_hmin, SdpSolution, SdpStatus};
