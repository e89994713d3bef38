//! Exact dynamics and stationary states in finite volumes.

mod analysis;
mod evolve;
mod gap;
mod generator;
mod gmres;
mod krylov;
mod model;
mod stationary;

pub use analysis::{
    boundary_sensitivity, fit_decay_rate, lr_velocity_fit, relaxation_profile, truncated_correlation,
    volume_convergence, BoundarySensitivity, ExponentialFit, LightConeFit, RelaxationProfile, RelaxationRow,
    VolumeConvergence, VolumeRow, FIT_FLOOR,
};
pub use evolve::{evolve_heisenberg, evolve_schrodinger};
pub use gap::{spectral_gap, spectral_gap_with, GapOptions, DENSE_SPECTRUM_LIMIT};
pub use generator::{assemble, Boundary, CatalogEntry, FiniteVolumeGenerator, TermKind, DENSE_LIMIT};
pub use gmres::{gmres, GmresOptions, GmresResult};
pub use krylov::{expv, KrylovOptions, KrylovResult};
pub use model::LatticeModel;
pub use stationary::{
    stationary_state, stationary_state_with, StationaryOptions, StationaryState, DENSE_KERNEL_LIMIT,
};
