//! Matrix discrepancy minimization toolkit.
//!
//! Given symmetric matrices A₁,…,Aₙ, the central problem is to pick signs
//! x ∈ {±1}ⁿ making ‖Σ xᵢAᵢ‖ small. The `coloring` module does this through
//! partial fractional colorings found by a spectral-norm-constrained convex
//! program and composed into a full signing. The remaining modules provide
//! numerically checkable implementations of the machinery behind the
//! guarantees: Gaussian sketching of quadratic forms (`sketch`), density
//! matrix purification and spectahedron rank reduction (`purify`), and
//! index-function protocol simulators with entropy bounds (`rac`).

pub mod coloring;
pub mod error;
pub mod matcore;
pub mod purify;
pub mod rac;
pub mod rng;
pub mod sketch;

pub use error::{Error, Result};
