//! Lattice volumes, local operators and superoperators, and their norms.

pub mod kernel;
mod lattice;
mod norms;
mod operator;
mod superop;

pub use self::{
    kernel::DigitKernel,
    lattice::{Site, Volume},
    norms::{cb_norm, cb_norm_of_matrix, induced_norm, induced_norm_with, operator_norm, AscentOptions, CbMode},
    operator::{embed_operator, lift, pauli, unvectorize, vectorize, LocalOperator},
    superop::{embed_superoperator, hs_adjoint, LocalSuperoperator},
};
