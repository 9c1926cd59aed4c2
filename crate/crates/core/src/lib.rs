//! First-detection statistics of a single particle hopping on an open
//! tight-binding chain that is measured stroboscopically at one site and
//! sharply restarted to its initial position.
//!
//! The crate provides three engines for the no-restart problem:
//!
//! * the exact projected evolution `|φ⟩ ← (I − |s⟩⟨s|) U_τ |φ⟩`,
//! * the renewal recursion for first-detection amplitudes (an independent
//!   route to the same probabilities),
//! * non-unitary evolution under two effective non-Hermitian Hamiltonians,
//!
//! and builds restart statistics (restarted PMF, mean first-detection time,
//! reset survival) plus the derived analysis quantities on top of any of
//! them. Sites are 1-based in every public interface.

pub mod analysis;
pub mod dynamics;
mod error;
pub mod lattice;
pub mod linalg;
pub mod par;
pub mod restart;

pub use error::{Error, Result};
pub use lattice::{EvolutionOperator, LatticeSpec, ModelKind};
pub use linalg::{CMatrix, CVector, C64};
