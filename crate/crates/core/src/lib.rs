//! Quantum Markov semigroups on lattices, weakly coupled.
//!
//! Single-site generators with a spectral gap, perturbed by a local
//! interaction, relax to a unique stationary state in infinite volume. This
//! crate provides the pieces needed to check that statement numerically:
//!
//! - [`algebra`]: volumes, local (super)operators, induced and cb norms.
//! - [`generators`]: Lindblad generators, spectral data, interaction families.
//! - [`finite_volume`]: exact finite-volume dynamics and stationary states.
//! - [`expansion`]: the diagram expansion of the infinite-volume state.
//! - [`certificates`]: explicit constants and feasibility checks.
//! - [`models`]: the dissipative Ising chain and a heat-bath chain.
//!
//! The crate is `no_std` (it needs `alloc`). The `parallel` feature enables
//! rayon for diagram evaluation and Jacobian columns.

#![no_std]
// `!(x > 0.0)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod algebra;
pub mod certificates;
mod error;
mod parallel;
pub mod expansion;
pub mod finite_volume;
pub mod generators;
pub mod linalg;
pub mod models;

pub use self::error::{Error, Result};
