//! Subspace semantics for first-order Birkhoff–von Neumann quantum logic with
//! quantum variables, quantum while-programs over it, and a checker for
//! Hoare-logic proof scripts.
//!
//! Every assertion denotes a closed subspace of the global state space of the
//! declared quantum variables. Formulas are evaluated exactly (up to the
//! numeric tolerances in [`Tolerances`]) by lattice operations, and loops and
//! quantifiers are evaluated as lattice fixpoints, which terminate because the
//! subspace lattice of a finite-dimensional space has finite height.
//!
//! The crate is `no_std` (it needs `alloc`). Parsing, file formats and the
//! command-line driver live in the `bvn` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
pub mod formulas;
pub mod hoare;
pub mod interp;
pub mod linalg;
pub mod programs;
pub mod sample;
pub mod terms;

pub use error::{Error, Result};
pub use formulas::Formula;
pub use hoare::{HoareTriple, Judgment, ProofScript, Rule};
pub use interp::{Declaration, Interpretation, Layout};
pub use linalg::{CMatrix, Channel, ChannelKind, StateDensity, Subspace, C64};
pub use programs::Program;
pub use terms::{Op, Term};

/// Numeric thresholds shared by every semantic computation.
///
/// The logic itself is exact; these are the engineering cut-offs used to decide
/// rank, inclusion and matrix identities in floating point. Reports print them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// General matrix-identity tolerance (Hermiticity, unitarity, trace bounds,
    /// Choi comparison).
    pub num: f64,
    /// Rank cut-off, relative to the largest singular value or eigenvalue.
    pub rank: f64,
    /// Maximum residual norm of a basis vector projected out of a subspace for
    /// it to count as included.
    pub sub: f64,
    /// Largest admissible total ambient dimension.
    pub max_dim: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            num: 1e-9,
            rank: 1e-9,
            sub: 1e-7,
            max_dim: 1024,
        }
    }
}
