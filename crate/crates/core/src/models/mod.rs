//! Ready-made models: the dissipative Ising chain and a chain of qubits
//! driven by self-consistent heat baths.

mod heatbath;
mod ising;

pub use heatbath::{
    currents, davies_qubit_bath, detailed_balance_residual, fourier_scaling, qubit_gibbs_state,
    self_consistent_profile, CurrentReport, HeatBathChain, NewtonOptions, ScalingRow, SelfConsistentProfile,
};
pub use ising::{ising_coupling, ising_model, ising_site_spec, IsingModel};
