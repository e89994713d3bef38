//! Per-site operator bases adapted to the local stationary states.
//!
//! At each site `f_0 = 1` spans the range of `Q` and the operators
//! `(1−Q)E_ij`, for all matrix units but one diagonal unit, span the range
//! of `1−Q`. In these coordinates `Q = diag(1, 0, …)` and the generator is
//! `0 ⊕ g` with `g` invertible, so projections select index patterns and
//! resolvents are inverses of Kronecker sums.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::algebra::{LocalSuperoperator, Site, Volume};
use crate::error::{Error, Result};
use crate::generators::ProfileSet;
use crate::linalg::{self, CMatrix, C64, ONE};

/// Adapted coordinates at one site.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteBasis {
    pub q: usize,
    /// Columns are the vectorized basis operators, `f_0 = 1` first.
    pub change: CMatrix,
    pub inverse: CMatrix,
    /// Generator block on the range of `1−Q`, size `(q²−1)²`.
    pub excited_generator: CMatrix,
}

impl SiteBasis {
    /// # Errors
    /// `SingularRestriction` if the basis is numerically degenerate.
    pub fn new(rho: &CMatrix, generator: &CMatrix, site: &Site) -> Result<Self> {
        let q = rho.nrows();
        let dim = q * q;
        let anchor = (0..q).fold(0, |best, k| if rho[(k, k)].re > rho[(best, best)].re { k } else { best });
        let mut change = CMatrix::zeros(dim, dim);
        for i in 0..q {
            change[(i + q * i, 0)] = ONE;
        }
        let mut col = 1;
        for j in 0..q {
            for i in 0..q {
                if i == j && i == anchor {
                    continue;
                }
                // (1−Q)E_ij = E_ij − Tr(ρ E_ij) 1 = E_ij − ρ_ji 1.
                change[(i + q * j, col)] += ONE;
                for k in 0..q {
                    change[(k + q * k, col)] -= rho[(j, i)];
                }
                col += 1;
            }
        }
        let inverse = change.clone().try_inverse().ok_or_else(|| Error::SingularRestriction {
            support: format!("{{{site}}}"),
            sigma: 0.0,
        })?;
        let adapted = &inverse * generator * &change;
        let excited_generator = adapted.view((1, 1), (dim - 1, dim - 1)).into_owned();
        Ok(SiteBasis { q, change, inverse, excited_generator })
    }

    /// `q² − 1`.
    pub fn excited_dim(&self) -> usize {
        self.q * self.q - 1
    }
}

/// Adapted bases for every site a computation touches.
#[derive(Debug, Clone)]
pub struct AdaptedBases {
    q: usize,
    uniform: Option<SiteBasis>,
    per_site: BTreeMap<Site, SiteBasis>,
    profiles: ProfileSet,
}

impl AdaptedBases {
    /// # Errors
    /// Propagated from [`SiteBasis::new`].
    pub fn new(profiles: &ProfileSet) -> Result<Self> {
        let q = profiles.q();
        let (uniform, per_site) = match profiles {
            ProfileSet::Uniform(p) => {
                let b = SiteBasis::new(&p.stationary_state, p.generator.matrix(), &Site::on_line(0))?;
                (Some(b), BTreeMap::new())
            }
            ProfileSet::PerSite(map) => {
                let mut out = BTreeMap::new();
                for (site, p) in map {
                    out.insert(site.clone(), SiteBasis::new(&p.stationary_state, p.generator.matrix(), site)?);
                }
                (None, out)
            }
        };
        Ok(AdaptedBases { q, uniform, per_site, profiles: profiles.clone() })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// True when every site shares one basis.
    pub fn is_uniform(&self) -> bool {
        self.uniform.is_some()
    }

    pub fn profiles(&self) -> &ProfileSet {
        &self.profiles
    }

    /// # Errors
    /// `InvalidArgument` for a site without a profile.
    pub fn at(&self, site: &Site) -> Result<&SiteBasis> {
        if let Some(b) = &self.uniform {
            return Ok(b);
        }
        self.per_site.get(site).ok_or_else(|| Error::InvalidArgument(format!("no profile at site {site}")))
    }

    /// `⊗_x T_x` over `volume`, in site-major vector order.
    pub(crate) fn change_on(&self, volume: &Volume) -> Result<(CMatrix, CMatrix)> {
        let mut t = CMatrix::identity(1, 1);
        let mut t_inv = CMatrix::identity(1, 1);
        for x in volume {
            let b = self.at(x)?;
            t = linalg::kron(&t, &b.change);
            t_inv = linalg::kron(&t_inv, &b.inverse);
        }
        Ok((t, t_inv))
    }
}

/// Permutation `p` with `site_major[s] = column_stacked[p[s]]` for `n`
/// sites of dimension `q`.
pub(crate) fn site_major_permutation(q: usize, n: usize) -> Vec<usize> {
    let d = q.pow(n as u32);
    let size = d * d;
    let mut p = Vec::with_capacity(size);
    for s in 0..size {
        // Site-major digits (j_0, i_0, j_1, i_1, …), most significant first.
        let mut rest = s;
        let mut row = 0;
        let mut col = 0;
        let mut weight = 1;
        for _ in 0..n {
            let i = rest % q;
            rest /= q;
            let j = rest % q;
            rest /= q;
            row += i * weight;
            col += j * weight;
            weight *= q;
        }
        p.push(row + d * col);
    }
    p
}

/// Re-indexes a column-stacked superoperator matrix into site-major order.
pub(crate) fn to_site_major(m: &CMatrix, q: usize, n: usize) -> CMatrix {
    let p = site_major_permutation(q, n);
    CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(p[r], p[c])])
}

/// Inverse of [`to_site_major`].
pub(crate) fn from_site_major(m: &CMatrix, q: usize, n: usize) -> CMatrix {
    let p = site_major_permutation(q, n);
    let mut out = CMatrix::zeros(m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out[(p[r], p[c])] = m[(r, c)];
        }
    }
    out
}

/// `P_Λ(E)`: `1−Q_x` on `E`, `Q_x` on `Λ∖E`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionOperator {
    pub excited_set: Volume,
    pub map: LocalSuperoperator,
}

/// Builds `P_Λ(E)` as a dense superoperator on `Λ`.
///
/// # Errors
/// `SupportNotContained` unless `E ⊆ Λ`.
pub fn projection(excited: &Volume, ambient: &Volume, profiles: &ProfileSet) -> Result<ProjectionOperator> {
    if !excited.is_subset(ambient) {
        return Err(Error::SupportNotContained { inner: format!("{excited}"), outer: format!("{ambient}") });
    }
    let q = profiles.q();
    let mut m = CMatrix::identity(1, 1);
    for x in ambient {
        let qx = profiles.at(x)?.projection_q.matrix().clone();
        let factor = if excited.contains(x) { CMatrix::identity(q * q, q * q) - qx } else { qx };
        m = linalg::kron(&m, &factor);
    }
    let map = LocalSuperoperator::new(ambient.clone(), q, from_site_major(&m, q, ambient.len()))?;
    Ok(ProjectionOperator { excited_set: excited.clone(), map })
}

/// Coefficients of a vectorized operator on `volume` in the adapted basis,
/// indexed site-major with radix `q²`.
pub(crate) fn adapted_coefficients(bases: &AdaptedBases, volume: &Volume, vec_cs: &[C64]) -> Result<Vec<C64>> {
    let q = bases.q();
    let n = volume.len();
    let p = site_major_permutation(q, n);
    let sm = linalg::CVector::from_iterator(p.len(), p.iter().map(|&k| vec_cs[k]));
    let (_, t_inv) = bases.change_on(volume)?;
    Ok((t_inv * sm).as_slice().to_vec())
}

/// Operator on `volume` from adapted coefficients, column-stacked.
#[cfg(test)]
pub(crate) fn from_adapted_coefficients(bases: &AdaptedBases, volume: &Volume, coef: &[C64]) -> Result<Vec<C64>> {
    let q = bases.q();
    let n = volume.len();
    let p = site_major_permutation(q, n);
    let (t, _) = bases.change_on(volume)?;
    let sm = t * linalg::CVector::from_column_slice(coef);
    let mut out = alloc::vec![linalg::ZERO; sm.len()];
    for (s, &k) in p.iter().enumerate() {
        out[k] = sm[s];
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::algebra::{pauli, vectorize, LocalOperator};
    use crate::generators::{build_lindblad, spectral_profile, LindbladSpec};
    use crate::linalg::c;
    use alloc::vec;

    pub(crate) fn ising_profiles(h: f64) -> ProfileSet {
        let on0 = |m| LocalOperator::on_site(Site::on_line(0), m).unwrap();
        let g = build_lindblad(&LindbladSpec::new(on0(pauli::sigma_z() * c(h, 0.0)), vec![on0(pauli::sigma_minus())])).unwrap();
        ProfileSet::Uniform(spectral_profile(&g).unwrap())
    }

    #[test]
    fn adapted_generator_is_block_diagonal() {
        let profiles = ising_profiles(0.3);
        let ProfileSet::Uniform(p) = &profiles else { unreachable!() };
        let b = SiteBasis::new(&p.stationary_state, p.generator.matrix(), &Site::on_line(0)).unwrap();
        let adapted = &b.inverse * p.generator.matrix() * &b.change;
        for k in 0..4 {
            assert!(adapted[(0, k)].norm() < 1e-13 && adapted[(k, 0)].norm() < 1e-13);
        }
        let q_adapted = &b.inverse * p.projection_q.matrix() * &b.change;
        let mut want = CMatrix::zeros(4, 4);
        want[(0, 0)] = ONE;
        assert!((q_adapted - want).norm() < 1e-13);
    }

    #[test]
    fn empty_excited_set_gives_stationary_expectation() {
        let profiles = ising_profiles(0.3);
        let vol = Volume::chain(0, 2);
        let p = projection(&Volume::empty(), &vol, &profiles).unwrap();
        let a = LocalOperator::product(&[(Site::on_line(0), pauli::sigma_z()), (Site::on_line(1), pauli::sigma_x())]).unwrap();
        let image = p.map.apply(&a).unwrap();
        // ρ = |↓⟩⟨↓| ⊗ |↓⟩⟨↓| gives ⟨σ³⟩ = −1 and ⟨σ¹⟩ = 0.
        assert!(image.matrix().norm() < 1e-13);
        let z = LocalOperator::on_site(Site::on_line(0), pauli::sigma_z()).unwrap().embed(&vol).unwrap();
        let image = p.map.apply(&z).unwrap();
        assert!((image.matrix() + CMatrix::identity(4, 4)).norm() < 1e-13);
    }

    #[test]
    fn excited_projection_of_sigma_z() {
        let profiles = ising_profiles(0.3);
        let x = Volume::chain(0, 1);
        let p = projection(&x, &x, &profiles).unwrap();
        let image = p.map.apply_matrix(&pauli::sigma_z());
        assert!((image - pauli::sigma_z() - CMatrix::identity(2, 2)).norm() < 1e-13);
    }

    #[test]
    fn projections_resolve_identity_and_are_idempotent() {
        let profiles = ising_profiles(0.7);
        let vol = Volume::chain(0, 2);
        let mut total = CMatrix::zeros(16, 16);
        for e in vol.subsets() {
            let p = projection(&e, &vol, &profiles).unwrap();
            assert!((p.map.matrix() * p.map.matrix() - p.map.matrix()).norm() < 1e-10);
            total += p.map.matrix();
        }
        assert!((total - CMatrix::identity(16, 16)).norm() < 1e-12);
    }

    #[test]
    fn coefficient_round_trip() {
        let profiles = ising_profiles(0.3);
        let bases = AdaptedBases::new(&profiles).unwrap();
        let vol = Volume::chain(0, 2);
        let a = LocalOperator::product(&[(Site::on_line(0), pauli::sigma_y()), (Site::on_line(1), pauli::sigma_plus())]).unwrap();
        let v = vectorize(a.matrix());
        let coef = adapted_coefficients(&bases, &vol, v.as_slice()).unwrap();
        let back = from_adapted_coefficients(&bases, &vol, &coef).unwrap();
        assert!(back.iter().zip(v.iter()).all(|(x, y)| (x - y).norm() < 1e-13));
        let id = vectorize(&CMatrix::identity(4, 4));
        let coef = adapted_coefficients(&bases, &vol, id.as_slice()).unwrap();
        assert!((coef[0] - ONE).norm() < 1e-13 && coef[1..].iter().all(|z| z.norm() < 1e-13));
    }

    #[test]
    fn site_major_matches_kronecker_of_local_maps() {
        let a = CMatrix::from_fn(4, 4, |r, c| C64::new((r * 4 + c) as f64, 0.0));
        let b = CMatrix::from_fn(4, 4, |r, c| C64::new(0.0, (r + 3 * c) as f64));
        let l0 = LocalSuperoperator::new(Volume::chain(0, 1), 2, a.clone()).unwrap();
        let l1 = LocalSuperoperator::new(Volume::chain(1, 1), 2, b.clone()).unwrap();
        let joint = l0.embed(&Volume::chain(0, 2)).unwrap().compose(&l1.embed(&Volume::chain(0, 2)).unwrap()).unwrap();
        let sm = to_site_major(joint.matrix(), 2, 2);
        assert!((sm - linalg::kron(&a, &b)).norm() < 1e-12);
    }
}
