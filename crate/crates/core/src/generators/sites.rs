use alloc::collections::BTreeMap;

use super::profile::SpectralProfile;
use crate::algebra::{LocalSuperoperator, Site, Volume};
use crate::error::{Error, Result};

/// Single-site generators `G(x)`, one per lattice site.
#[derive(Debug, Clone, PartialEq)]
pub enum SiteGenerators {
    /// The same generator at every site.
    Uniform(LocalSuperoperator),
    PerSite(BTreeMap<Site, LocalSuperoperator>),
}

impl SiteGenerators {
    /// `G(x)` placed on `{x}`.
    pub fn at(&self, site: &Site) -> Result<LocalSuperoperator> {
        match self {
            SiteGenerators::Uniform(g) => g.relabel(Volume::singleton(site.clone())),
            SiteGenerators::PerSite(map) => map
                .get(site)
                .cloned()
                .ok_or_else(|| Error::InvalidArgument(alloc::format!("no generator at site {site}"))),
        }
    }

    pub fn q(&self) -> usize {
        match self {
            SiteGenerators::Uniform(g) => g.q(),
            SiteGenerators::PerSite(map) => map.values().next().map_or(2, |g| g.q()),
        }
    }
}

/// Spectral profiles of the single-site generators.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSet {
    Uniform(SpectralProfile),
    PerSite(BTreeMap<Site, SpectralProfile>),
}

impl ProfileSet {
    pub fn at(&self, site: &Site) -> Result<&SpectralProfile> {
        match self {
            ProfileSet::Uniform(p) => Ok(p),
            ProfileSet::PerSite(map) => {
                map.get(site).ok_or_else(|| Error::InvalidArgument(alloc::format!("no profile at site {site}")))
            }
        }
    }

    pub fn q(&self) -> usize {
        match self {
            ProfileSet::Uniform(p) => p.generator.q(),
            ProfileSet::PerSite(map) => map.values().next().map_or(2, |p| p.generator.q()),
        }
    }

    /// Smallest gap over all sites.
    pub fn min_gap(&self) -> f64 {
        match self {
            ProfileSet::Uniform(p) => p.gap,
            ProfileSet::PerSite(map) => map.values().map(|p| p.gap).fold(f64::INFINITY, f64::min),
        }
    }

    /// Largest certified amplitude over all sites.
    pub fn max_amplitude(&self) -> f64 {
        match self {
            ProfileSet::Uniform(p) => p.amplitude_m,
            ProfileSet::PerSite(map) => map.values().map(|p| p.amplitude_m).fold(1.0, f64::max),
        }
    }

    pub fn generators(&self) -> SiteGenerators {
        match self {
            ProfileSet::Uniform(p) => SiteGenerators::Uniform(p.generator.clone()),
            ProfileSet::PerSite(map) => {
                SiteGenerators::PerSite(map.iter().map(|(s, p)| (s.clone(), p.generator.clone())).collect())
            }
        }
    }
}
