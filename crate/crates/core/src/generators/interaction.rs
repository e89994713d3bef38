use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::algebra::{cb_norm, CbMode, LocalSuperoperator, Site, Volume};
use crate::error::{Error, Result};
use crate::linalg::CompensatedSum;

const IDENTITY_TOLERANCE: f64 = 1e-12;

/// One perturbation term `V(Γ)` with its cached cb-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionTerm {
    map: LocalSuperoperator,
    cb_norm: f64,
}

impl InteractionTerm {
    /// # Errors
    /// `DisconnectedSupport` or `IdentityNotAnnihilated`.
    pub fn new(map: LocalSuperoperator) -> Result<Self> {
        if !map.support().is_connected() {
            return Err(Error::DisconnectedSupport(format!("{}", map.support())));
        }
        let residual = map.identity_residual();
        if residual > IDENTITY_TOLERANCE {
            return Err(Error::IdentityNotAnnihilated { support: format!("{}", map.support()), residual });
        }
        let cb_norm = cb_norm(&map, CbMode::Exact);
        Ok(InteractionTerm { map, cb_norm })
    }

    pub fn support(&self) -> &Volume {
        self.map.support()
    }

    pub fn map(&self) -> &LocalSuperoperator {
        &self.map
    }

    pub fn cb_norm(&self) -> f64 {
        self.cb_norm
    }

    fn translate(&self, by: &[i64]) -> InteractionTerm {
        InteractionTerm { map: self.map.translate(by), cb_norm: self.cb_norm }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Terms {
    Finite(Vec<InteractionTerm>),
    /// Every lattice translate of every cell term.
    Periodic(Vec<InteractionTerm>),
}

/// A family `{V(Γ)}` of local perturbation terms.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionFamily {
    terms: Terms,
    decay_length: f64,
}

impl InteractionFamily {
    pub fn empty() -> Self {
        InteractionFamily { terms: Terms::Finite(Vec::new()), decay_length: 1.0 }
    }

    /// Finitely many terms; supports must be distinct.
    pub fn finite(maps: Vec<LocalSuperoperator>) -> Result<Self> {
        let mut terms = maps.into_iter().map(InteractionTerm::new).collect::<Result<Vec<_>>>()?;
        terms.sort_by(|a, b| a.support().cmp(b.support()));
        if terms.windows(2).any(|w| w[0].support() == w[1].support()) {
            return Err(Error::InvalidArgument("repeated support in interaction family".into()));
        }
        Ok(InteractionFamily { terms: Terms::Finite(terms), decay_length: 1.0 })
    }

    /// All translates of the cell terms. No two cell terms may be translates
    /// of one another.
    pub fn translation_invariant(cell: Vec<LocalSuperoperator>) -> Result<Self> {
        let terms = cell.into_iter().map(InteractionTerm::new).collect::<Result<Vec<_>>>()?;
        Ok(InteractionFamily { terms: Terms::Periodic(terms), decay_length: 1.0 })
    }

    pub fn with_decay_length(mut self, l: f64) -> Self {
        self.decay_length = l;
        self
    }

    pub fn decay_length(&self) -> f64 {
        self.decay_length
    }

    pub fn is_translation_invariant(&self) -> bool {
        matches!(self.terms, Terms::Periodic(_))
    }

    pub fn is_empty(&self) -> bool {
        match &self.terms {
            Terms::Finite(t) | Terms::Periodic(t) => t.is_empty(),
        }
    }

    /// Largest support diameter.
    pub fn max_diameter(&self) -> u64 {
        match &self.terms {
            Terms::Finite(t) | Terms::Periodic(t) => t.iter().map(|t| t.support().diameter()).max().unwrap_or(0),
        }
    }

    /// Terms whose support contains `site`, ordered by support.
    pub fn terms_containing(&self, site: &Site) -> Vec<InteractionTerm> {
        let mut out: Vec<InteractionTerm> = match &self.terms {
            Terms::Finite(terms) => terms.iter().filter(|t| t.support().contains(site)).cloned().collect(),
            Terms::Periodic(cell) => cell
                .iter()
                .flat_map(|t| {
                    t.support().iter().map(move |anchor| t.translate(&site.relative_to(anchor)))
                })
                .collect(),
        };
        out.sort_by(|a, b| a.support().cmp(b.support()));
        out
    }

    /// Terms intersecting `set`, ordered by support, without repetition.
    pub fn terms_touching(&self, set: &Volume) -> Vec<InteractionTerm> {
        let mut seen: BTreeMap<(Volume, usize), InteractionTerm> = BTreeMap::new();
        for site in set {
            let mut rank: BTreeMap<Volume, usize> = BTreeMap::new();
            for t in self.terms_containing(site) {
                let k = rank.entry(t.support().clone()).or_insert(0);
                seen.entry((t.support().clone(), *k)).or_insert(t);
                *k += 1;
            }
        }
        seen.into_values().collect()
    }

    /// Terms with support inside `volume`.
    pub fn terms_within(&self, volume: &Volume) -> Vec<InteractionTerm> {
        match &self.terms {
            Terms::Finite(terms) => terms.iter().filter(|t| t.support().is_subset(volume)).cloned().collect(),
            Terms::Periodic(_) => self
                .terms_touching(volume)
                .into_iter()
                .filter(|t| t.support().is_subset(volume))
                .collect(),
        }
    }

    /// Terms of a finite family that are not inside `volume`.
    pub fn terms_outside(&self, volume: &Volume) -> Vec<InteractionTerm> {
        match &self.terms {
            Terms::Finite(terms) => terms.iter().filter(|t| !t.support().is_subset(volume)).cloned().collect(),
            Terms::Periodic(_) => Vec::new(),
        }
    }

    /// The same terms restricted to `volume`, as a finite family.
    pub fn restrict(&self, volume: &Volume) -> InteractionFamily {
        InteractionFamily { terms: Terms::Finite(self.terms_within(volume)), decay_length: self.decay_length }
    }

    /// Sites carrying at least one term (finite families only).
    fn occupied_sites(&self) -> Vec<Site> {
        match &self.terms {
            Terms::Finite(terms) => {
                let all: Volume = terms.iter().flat_map(|t| t.support().iter().cloned()).collect();
                all.sites().to_vec()
            }
            Terms::Periodic(cell) => cell.first().and_then(|t| t.support().first().cloned()).into_iter().collect(),
        }
    }
}

/// `sup_x Σ_{Γ ∋ x} e^{|Γ|/l} ‖V(Γ)‖_cb`.
pub fn interaction_norm(fam: &InteractionFamily, l: f64) -> f64 {
    fam.occupied_sites()
        .iter()
        .map(|x| {
            fam.terms_containing(x)
                .iter()
                .map(|t| (t.support().len() as f64 / l).exp() * t.cb_norm())
                .collect::<CompensatedSum>()
                .value()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{pauli, LocalOperator};
    use crate::linalg::c;

    fn xx_edge(j: f64) -> LocalSuperoperator {
        let xx = LocalOperator::product(&[(Site::on_line(0), pauli::sigma_x()), (Site::on_line(1), pauli::sigma_x())])
            .unwrap()
            .scale(c(j, 0.0));
        LocalSuperoperator::commutator(&xx)
    }

    #[test]
    fn empty_family_has_zero_norm() {
        assert_eq!(interaction_norm(&InteractionFamily::empty(), 1.0), 0.0);
    }

    #[test]
    fn ising_chain_norm_counts_two_edges() {
        let j = 0.05;
        let fam = InteractionFamily::translation_invariant(alloc::vec![xx_edge(j)]).unwrap();
        let inv_l = core::f64::consts::LN_2 + 1.0;
        let want = 2.0 * (2.0 * inv_l).exp() * 2.0 * j;
        let got = interaction_norm(&fam, 1.0 / inv_l);
        assert!((got - want).abs() < 1e-10 * want);
    }

    #[test]
    fn translates_and_restrictions() {
        let fam = InteractionFamily::translation_invariant(alloc::vec![xx_edge(1.0)]).unwrap();
        let around: Vec<Volume> = fam.terms_containing(&Site::on_line(3)).iter().map(|t| t.support().clone()).collect();
        assert_eq!(around, alloc::vec![Volume::chain(2, 2), Volume::chain(3, 2)]);
        assert_eq!(fam.terms_within(&Volume::chain(0, 4)).len(), 3);
        assert_eq!(fam.terms_within(&Volume::chain(0, 1)).len(), 0);
    }

    #[test]
    fn single_edge_seen_from_outside() {
        let fam = InteractionFamily::finite(alloc::vec![xx_edge(1.0)]).unwrap();
        assert!(fam.terms_containing(&Site::on_line(5)).is_empty());
        assert!((interaction_norm(&fam, 1.0) - 2.0 * 2f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn disconnected_or_non_unital_terms_are_rejected() {
        let z = LocalOperator::product(&[(Site::on_line(0), pauli::sigma_z()), (Site::on_line(2), pauli::sigma_z())]).unwrap();
        assert!(matches!(
            InteractionTerm::new(LocalSuperoperator::commutator(&z)),
            Err(Error::DisconnectedSupport(_))
        ));
        let k = LocalOperator::on_site(Site::on_line(0), pauli::sigma_minus()).unwrap();
        assert!(matches!(
            InteractionTerm::new(LocalSuperoperator::sandwich(&k)),
            Err(Error::IdentityNotAnnihilated { .. })
        ));
    }
}
