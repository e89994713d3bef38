//! Dissipative transverse-field Ising chain.

use alloc::vec;

use crate::algebra::{pauli, LocalOperator, LocalSuperoperator, Site, Volume};
use crate::error::{Error, Result};
use crate::finite_volume::LatticeModel;
use crate::generators::{build_lindblad, spectral_profile, InteractionFamily, LindbladSpec, ProfileSet};
use crate::linalg::c;

/// `G(A) = i[hσ³, A] + σ⁺Aσ⁻ − ½{σ⁺σ⁻, A}` at every site and
/// `V({x,x+1}) = i[Jσ¹_xσ¹_{x+1}, ·]` on every bond.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    pub h: f64,
    pub j: f64,
    pub n: usize,
    pub site_spec: LindbladSpec,
    pub profiles: ProfileSet,
    pub interactions: InteractionFamily,
    /// Centered chain of `n` sites.
    pub volume: Volume,
}

impl IsingModel {
    pub fn lattice_model(&self) -> LatticeModel {
        LatticeModel::new(self.profiles.generators(), self.interactions.clone())
    }
}

/// Single-site Ising generator on site 0.
pub fn ising_site_spec(h: f64) -> LindbladSpec {
    let on0 = |m| LocalOperator::on_site(Site::on_line(0), m).expect("2x2 matrix on one site");
    LindbladSpec::new(on0(pauli::sigma_z() * c(h, 0.0)), vec![on0(pauli::sigma_minus())])
}

/// `i[Jσ¹σ¹, ·]` on the bond `{0, 1}`.
pub fn ising_coupling(j: f64) -> LocalSuperoperator {
    let xx = LocalOperator::product(&[(Site::on_line(0), pauli::sigma_x()), (Site::on_line(1), pauli::sigma_x())])
        .expect("two distinct sites")
        .scale(c(j, 0.0));
    LocalSuperoperator::commutator(&xx)
}

/// Builds the Ising preset on a centered chain of `n` sites.
///
/// # Errors
/// `InvalidArgument` for `n = 0`; spectral failures are propagated.
pub fn ising_model(h: f64, j: f64, n: usize) -> Result<IsingModel> {
    if n == 0 {
        return Err(Error::InvalidArgument("the chain needs at least one site".into()));
    }
    let site_spec = ising_site_spec(h);
    let profiles = ProfileSet::Uniform(spectral_profile(&build_lindblad(&site_spec)?)?);
    let interactions = InteractionFamily::translation_invariant(vec![ising_coupling(j)])?;
    Ok(IsingModel { h, j, n, site_spec, profiles, interactions, volume: Volume::centered_chain(n) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_volume::{stationary_state, TermKind};
    use crate::generators::interaction_norm;

    #[test]
    fn site_data_is_independent_of_the_field() {
        let reference = ising_model(0.0, 0.05, 3).unwrap();
        let ProfileSet::Uniform(p0) = &reference.profiles else { unreachable!() };
        assert!((p0.gap - 0.5).abs() < 1e-10);
        assert!(p0.amplitude_m <= 4.0);
        for h in [0.3, 1.0] {
            let m = ising_model(h, 0.05, 3).unwrap();
            let ProfileSet::Uniform(p) = &m.profiles else { unreachable!() };
            assert!((p.gap - p0.gap).abs() < 1e-12);
            assert_eq!(p.stationary_state, p0.stationary_state);
            assert_eq!(p.projection_q, p0.projection_q);
        }
    }

    #[test]
    fn coupling_norm_closed_form() {
        let m = ising_model(0.3, 0.05, 3).unwrap();
        let inv_l = core::f64::consts::LN_2 + 1.0;
        let want = 2.0 * (2.0 * inv_l).exp() * 0.1;
        assert!((interaction_norm(&m.interactions, 1.0 / inv_l) - want).abs() < 1e-10 * want);
    }

    #[test]
    fn single_site_chain_has_no_bonds() {
        let m = ising_model(0.3, 0.05, 1).unwrap();
        let gen = m.lattice_model().assemble(&m.volume).unwrap();
        assert!(gen.catalog().iter().all(|e| e.kind != TermKind::Interaction));
        assert!(ising_model(0.3, 0.05, 0).is_err());
    }

    #[test]
    fn decoupled_chain_points_down() {
        let m = ising_model(0.3, 0.0, 4).unwrap();
        let state = stationary_state(&m.lattice_model().assemble(&m.volume).unwrap()).unwrap();
        for x in &m.volume {
            let z = LocalOperator::on_site(x.clone(), pauli::sigma_z()).unwrap();
            assert!((state.expectation(&z).unwrap() + 1.0).norm() < 1e-10);
        }
    }
}
