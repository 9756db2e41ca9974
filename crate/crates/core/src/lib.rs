//! Majorization analysis of quantum measurements.
//!
//! The crate compares mixed states by the majorization order on their
//! spectra and tracks how measurements move states around in that order:
//!
//! - [`linalg`]: dense complex matrices and a Hermitian eigensolver;
//! - [`state`]: density matrices, spectra, entropy;
//! - [`measurement`]: measurement families, outcome probabilities,
//!   posteriors, the trace-preserving channel and the expected spectrum;
//! - [`majorization`]: the partial order itself, doubly stochastic
//!   matrices, transfer construction and permutation decomposition;
//! - [`uhlmann`]: synthesis of a bi-stochastic family mapping σ to τ
//!   whenever `σ ⪰ τ`, and the reverse-direction check;
//! - [`multiparty`]: tensor spaces, partial traces, lifted local
//!   measurements and observer invariance;
//! - [`locc`]: adaptive local-operation protocols over an exhaustive
//!   branch tree;
//! - [`verify`]: seeded randomized suites for all of the above, runnable
//!   from the CLI and the acceptance tests;
//! - [`files`]: the JSON wire formats.
//!
//! With the default `parallel` feature, randomized suites and protocol
//! branch expansion fan out over threads via rayon; results are identical
//! to the sequential fallback (`--no-default-features`).

pub mod config;
pub mod error;
pub mod files;
pub mod linalg;
pub mod locc;
pub mod majorization;
pub mod measurement;
pub mod multiparty;
pub mod state;
pub mod uhlmann;
pub mod verify;

pub use config::Config;
pub use error::{Error, Result};
