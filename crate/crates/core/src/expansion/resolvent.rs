//! Resolvents `R(E) = ∫_0^∞ e^{sG} P(E) ds = −(G|_{range P(E)})^{-1} P(E)`.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::basis::{from_site_major, AdaptedBases};
use crate::algebra::{LocalSuperoperator, Volume};
use crate::error::{Error, Result};
use crate::generators::ProfileSet;
use crate::linalg::{self, CMatrix, C64};

/// Reciprocal condition number below which a restriction counts as singular.
pub const RCOND_FLOOR: f64 = 1e-10;

/// `Σ_x 1⊗…⊗g_x⊗…⊗1` on the excited subspace of `e`.
pub(crate) fn excited_generator(bases: &AdaptedBases, e: &Volume) -> Result<CMatrix> {
    let blocks: Vec<&CMatrix> = e.iter().map(|x| bases.at(x).map(|b| &b.excited_generator)).collect::<Result<_>>()?;
    let dims: Vec<usize> = blocks.iter().map(|b| b.nrows()).collect();
    let total: usize = dims.iter().product();
    let mut k = CMatrix::zeros(total, total);
    for (pos, block) in blocks.iter().enumerate() {
        let before: usize = dims[..pos].iter().product();
        let after: usize = dims[pos + 1..].iter().product();
        let term = linalg::kron(&linalg::kron(&CMatrix::identity(before, before), block), &CMatrix::identity(after, after));
        k += term;
    }
    Ok(k)
}

/// `−K^{-1}` on the excited subspace of `e`, in adapted coordinates.
///
/// # Errors
/// `SingularRestriction` when `1/(‖K‖₁‖K⁻¹‖₁) < 1e-10`.
pub(crate) fn excited_resolvent(bases: &AdaptedBases, e: &Volume) -> Result<CMatrix> {
    let k = excited_generator(bases, e)?;
    let singular = |rcond: f64| Error::SingularRestriction { support: format!("{e}"), sigma: rcond };
    let inv = k.clone().try_inverse().ok_or_else(|| singular(0.0))?;
    let rcond = 1.0 / (linalg::one_norm(&k) * linalg::one_norm(&inv));
    if !(rcond >= RCOND_FLOOR) {
        return Err(singular(rcond));
    }
    Ok(-inv)
}

/// Embeds an excited-subspace matrix on `e` into the full adapted space
/// (radix `q²` per site, site-major), zero off the all-excited pattern.
fn embed_excited(q: usize, n: usize, excited: &CMatrix) -> CMatrix {
    let radix = q * q;
    let dim = radix.pow(n as u32);
    let index: Vec<usize> = (0..excited.nrows())
        .map(|mut flat| {
            let mut full = 0;
            let mut weight = 1;
            for _ in 0..n {
                full += (flat % (radix - 1) + 1) * weight;
                flat /= radix - 1;
                weight *= radix;
            }
            full
        })
        .collect();
    let mut out = CMatrix::zeros(dim, dim);
    for (r, &fr) in index.iter().enumerate() {
        for (c, &fc) in index.iter().enumerate() {
            out[(fr, fc)] = excited[(r, c)];
        }
    }
    out
}

/// `R(E)` as a superoperator on `E` in the standard basis.
///
/// # Errors
/// `InvalidArgument` for empty `E`; `SingularRestriction` if the generator
/// restricted to the excited subspace is numerically singular.
pub fn resolvent(e: &Volume, profiles: &ProfileSet) -> Result<LocalSuperoperator> {
    if e.is_empty() {
        return Err(Error::InvalidArgument("resolvent needs a non-empty excited set".into()));
    }
    let bases = AdaptedBases::new(profiles)?;
    let q = bases.q();
    let n = e.len();
    let adapted = embed_excited(q, n, &excited_resolvent(&bases, e)?);
    let (t, t_inv) = bases.change_on(e)?;
    let sm = t * adapted * t_inv;
    LocalSuperoperator::new(e.clone(), q, from_site_major(&sm, q, n))
}

/// `⊗_{x∈E} e^{sG_x}(1−Q_x)` in site-major order.
pub(crate) fn decaying_propagator(e: &Volume, profiles: &ProfileSet, s: f64) -> Result<CMatrix> {
    let mut m = CMatrix::identity(1, 1);
    for x in e {
        let p = profiles.at(x)?;
        let g = p.generator.matrix();
        let dim = g.nrows();
        let factor = linalg::expm(&(g * C64::new(s, 0.0))) * (CMatrix::identity(dim, dim) - p.projection_q.matrix());
        m = linalg::kron(&m, &factor);
    }
    Ok(m)
}

/// `∫_0^T e^{sG}P(E) ds` on `E` by composite Gauss–Legendre quadrature
/// with `panels` equal panels of 8 nodes.
///
/// # Errors
/// `InvalidArgument` for empty `E` or zero panels.
pub fn resolvent_quadrature(e: &Volume, profiles: &ProfileSet, horizon: f64, panels: usize) -> Result<LocalSuperoperator> {
    if e.is_empty() || panels == 0 {
        return Err(Error::InvalidArgument("quadrature needs a non-empty set and at least one panel".into()));
    }
    let q = profiles.q();
    let n = e.len();
    let (nodes, weights) = linalg::gauss_legendre(8);
    let width = horizon / panels as f64;
    let dim = (q * q).pow(n as u32);
    let mut acc = CMatrix::zeros(dim, dim);
    for k in 0..panels {
        let mid = (k as f64 + 0.5) * width;
        for (x, w) in nodes.iter().zip(&weights) {
            let s = mid + 0.5 * width * x;
            acc += decaying_propagator(e, profiles, s)? * C64::new(0.5 * width * w, 0.0);
        }
    }
    LocalSuperoperator::new(e.clone(), q, from_site_major(&acc, q, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{pauli, Site};
    use crate::expansion::basis::tests::ising_profiles;
    use crate::expansion::basis::{projection, to_site_major};

    #[test]
    fn ising_excited_eigenvector_is_fixed() {
        let profiles = ising_profiles(0.3);
        let e = Volume::singleton(Site::on_line(0));
        let r = resolvent(&e, &profiles).unwrap();
        let x = pauli::sigma_z() + CMatrix::identity(2, 2);
        assert!((r.apply_matrix(&x) - &x).norm() < 1e-12);
        assert!(r.apply_matrix(&CMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn resolvent_inverts_generator_on_range() {
        let profiles = ising_profiles(0.7);
        let e = Volume::chain(0, 2);
        let r = resolvent(&e, &profiles).unwrap();
        let g = profiles.generators();
        let gen = g.at(&Site::on_line(0)).unwrap().embed(&e).unwrap().add(&g.at(&Site::on_line(1)).unwrap().embed(&e).unwrap()).unwrap();
        let p = projection(&e, &e, &profiles).unwrap();
        let lhs = gen.matrix() * r.matrix();
        assert!((lhs + p.map.matrix()).norm() < 1e-11);
        assert!((r.matrix() * p.map.matrix() - r.matrix()).norm() < 1e-11);
    }

    #[test]
    fn pair_resolvent_is_not_a_product_but_agrees_on_product_eigenvectors() {
        let profiles = ising_profiles(0.0);
        let pair = Volume::chain(0, 2);
        let r = resolvent(&pair, &profiles).unwrap();
        let z1 = pauli::sigma_z() + CMatrix::identity(2, 2);
        // G(σ³+1) = −(σ³+1) at each site, so the pair eigenvalue is −2.
        let x = linalg::kron(&z1, &z1);
        assert!((r.apply_matrix(&x) - x * C64::new(0.5, 0.0)).norm() < 1e-12);
        let single = resolvent(&Volume::singleton(Site::on_line(0)), &profiles).unwrap();
        let prod = linalg::kron(&to_site_major(single.matrix(), 2, 1), &to_site_major(single.matrix(), 2, 1));
        assert!((to_site_major(r.matrix(), 2, 2) - prod).norm() > 1e-3);
    }

    #[test]
    fn quadrature_converges_to_resolvent() {
        let profiles = ising_profiles(0.3);
        for e in [Volume::singleton(Site::on_line(0)), Volume::chain(0, 2)] {
            let exact = resolvent(&e, &profiles).unwrap();
            let errors: Vec<f64> = [10.0, 20.0, 80.0]
                .iter()
                .map(|&h| (resolvent_quadrature(&e, &profiles, h, 40).unwrap().matrix() - exact.matrix()).norm())
                .collect();
            assert!(errors[1] < errors[0] && errors[2] < 1e-6, "{errors:?}");
            // The tail beyond T decays like e^{−gT}.
            let rate = (errors[0] / errors[1]).ln() / 10.0;
            assert!(rate >= 0.5 * 0.9, "rate {rate}");
        }
    }
}
