//! Single-site generators, their spectral data, and interaction families.

mod interaction;
mod lindblad;
mod profile;
mod sites;

pub use self::{
    interaction::{interaction_norm, InteractionFamily, InteractionTerm},
    lindblad::{build_lindblad, check_qms_generator, LindbladSpec, QmsReport},
    profile::{certify_m, spectral_profile, SpectralProfile, ZERO_EIGENVALUE_TOLERANCE},
    sites::{ProfileSet, SiteGenerators},
};
