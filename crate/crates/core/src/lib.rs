//! Semidefinite-programming certification of local-hidden-state models.
//!
//! The crate is organised bottom-up:
//!
//! * [`operator`]: Hermitian operators, partial traces/transposes, negativity.
//! * [`geometry`]: qubit measurement sets on the Bloch sphere and their insphere radius.
//! * [`conic`]: solver-agnostic SDP layer backed by an interior-point solver.
//! * [`lhs`]: LHS certification, family optimisation and local-state generation.
//! * [`witness`]: entanglement quantifiers, optimal witnesses and GME witnesses.
//! * [`states`]: named state families and random state sampling.

extern crate openblas_src;

pub mod conic;
pub mod geometry;
pub mod lhs;
pub mod operator;
pub mod rng;
pub mod states;
pub mod witness;

pub use operator::{BipartiteCut, DensityMatrix, HermitianOperator};
pub use rng::RngStream;
