use crate::algebra::Volume;
use crate::error::Result;
use crate::generators::{InteractionFamily, SiteGenerators};

use super::generator::{assemble, Boundary, FiniteVolumeGenerator};

/// Site generators plus interactions, assembled on demand for any volume.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeModel {
    pub generators: SiteGenerators,
    pub interactions: InteractionFamily,
}

impl LatticeModel {
    pub fn new(generators: SiteGenerators, interactions: InteractionFamily) -> Self {
        LatticeModel { generators, interactions }
    }

    /// `L_Λ`.
    ///
    /// # Errors
    /// See [`assemble`].
    pub fn assemble(&self, volume: &Volume) -> Result<FiniteVolumeGenerator> {
        assemble(volume, &self.generators, &self.interactions, None)
    }

    /// `L_{Λ'}` plus the boundary terms of `boundary` inside `outer ∖ bulk`.
    ///
    /// # Errors
    /// See [`assemble`].
    pub fn assemble_with_boundary(
        &self,
        bulk: &Volume,
        outer: &Volume,
        boundary: &InteractionFamily,
    ) -> Result<FiniteVolumeGenerator> {
        assemble(outer, &self.generators, &self.interactions, Some(Boundary { bulk, terms: boundary }))
    }
}
