//! Spectral gap `−max{Re λ : λ ∈ spec L, |λ| > 1e-8}`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::algebra::vectorize;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, ZERO};

use super::generator::FiniteVolumeGenerator;
use super::krylov::{axpy, dotc, expv, norm2, KrylovOptions};
use super::stationary::stationary_state;

/// Superoperator dimension up to which the full spectrum is computed.
pub const DENSE_SPECTRUM_LIMIT: usize = 256;
const ZERO_EIGENVALUE: f64 = 1e-8;
const PROPAGATION_TIME: f64 = 1.0;
const ARNOLDI_DIMENSION: usize = 30;
const ARNOLDI_RESTARTS: usize = 40;
const ARNOLDI_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapOptions {
    pub dense_limit: usize,
}

impl Default for GapOptions {
    fn default() -> Self {
        GapOptions { dense_limit: DENSE_SPECTRUM_LIMIT }
    }
}

/// # Errors
/// `EigensolverFailure` when the eigensolver does not converge.
pub fn spectral_gap(gen: &FiniteVolumeGenerator) -> Result<f64> {
    spectral_gap_with(gen, GapOptions::default())
}

/// Dense spectrum for small volumes; otherwise the dominant eigenvalue `μ`
/// of the propagator `e^{τL}` deflated against the identity, with
/// gap `−ln|μ| / τ`.
///
/// # Errors
/// `EigensolverFailure` when the eigensolver does not converge.
pub fn spectral_gap_with(gen: &FiniteVolumeGenerator, options: GapOptions) -> Result<f64> {
    if gen.dim() <= options.dense_limit {
        let values = linalg::eigenvalues(&gen.to_dense()?).map_err(|_| Error::EigensolverFailure("dense spectrum"))?;
        return Ok(gap_of(&values));
    }
    let state = stationary_state(gen).map_err(|_| Error::EigensolverFailure("stationary state for deflation"))?;
    if !state.is_unique() {
        return Ok(0.0);
    }
    let d = gen.hilbert_dim();
    let identity = vectorize(&CMatrix::identity(d, d));
    let rho = vectorize(&state.density_matrix);
    let propagate = |x: &[C64], out: &mut [C64]| -> Result<()> {
        // e^{τL} (x − 1·Tr(ρ x)) keeps only the decaying part.
        let overlap = dotc(rho.as_slice(), x);
        let mut y = x.to_vec();
        axpy(-overlap, identity.as_slice(), &mut y);
        let r = expv(PROPAGATION_TIME, |a, b| gen.apply(a, b), &y, gen.norm_bound(), KrylovOptions::default())?;
        out.copy_from_slice(&r.vector);
        Ok(())
    };
    let mu = dominant_modulus(gen.dim(), propagate)?;
    if mu <= 0.0 {
        return Err(Error::EigensolverFailure("propagator vanishes"));
    }
    Ok((-mu.ln() / PROPAGATION_TIME).max(0.0))
}

fn gap_of(values: &[C64]) -> f64 {
    let top = values.iter().filter(|z| z.norm() > ZERO_EIGENVALUE).map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return 0.0;
    }
    let gap = -top;
    if gap.abs() < 1e-12 {
        0.0
    } else {
        gap
    }
}

/// Largest eigenvalue modulus by restarted Arnoldi, restarting from the
/// Ritz vector of the dominant Ritz value.
fn dominant_modulus(n: usize, op: impl Fn(&[C64], &mut [C64]) -> Result<()>) -> Result<f64> {
    let m = ARNOLDI_DIMENSION.min(n);
    // Deterministic start with support on every basis vector.
    let mut start: Vec<C64> = (0..n).map(|k| C64::new(1.0 + (k % 7) as f64 * 0.1, (k % 5) as f64 * 0.05)).collect();
    let mut previous = f64::NAN;
    let mut basis = vec![ZERO; (m + 1) * n];
    let mut p = vec![ZERO; n];
    for _ in 0..ARNOLDI_RESTARTS {
        let beta = norm2(&start);
        if beta == 0.0 {
            return Ok(0.0);
        }
        for (b, x) in basis[..n].iter_mut().zip(&start) {
            *b = x / beta;
        }
        let mut h = CMatrix::zeros(m + 1, m);
        let mut size = m;
        for j in 0..m {
            let (head, tail) = basis.split_at_mut((j + 1) * n);
            op(&head[j * n..], &mut p)?;
            for _ in 0..2 {
                for i in 0..=j {
                    let vi = &head[i * n..(i + 1) * n];
                    let hij = dotc(vi, &p);
                    axpy(-hij, vi, &mut p);
                    h[(i, j)] += hij;
                }
            }
            let s = norm2(&p);
            h[(j + 1, j)] = C64::new(s, 0.0);
            if s < 1e-14 {
                size = j + 1;
                break;
            }
            for (b, x) in tail[..n].iter_mut().zip(&p) {
                *b = x / s;
            }
        }
        let hm = h.view((0, 0), (size, size)).into_owned();
        let ritz = linalg::eigenvalues(&hm).map_err(|_| Error::EigensolverFailure("ritz values"))?;
        let mu = ritz.iter().fold(ZERO, |acc, z| if z.norm() > acc.norm() { *z } else { acc });
        let modulus = mu.norm();
        // Ritz vector of μ from the null space of H − μ.
        let shifted = &hm - CMatrix::identity(size, size) * mu;
        let (_, vecs) = linalg::ascending_right_singular(&shifted);
        let y = &vecs[0];
        let residual = h[(size.min(m), size - 1)].norm() * y[size - 1].norm();
        if residual <= ARNOLDI_TOLERANCE * modulus.max(f64::MIN_POSITIVE)
            || (previous - modulus).abs() <= ARNOLDI_TOLERANCE * modulus
            || size < m
        {
            return Ok(modulus);
        }
        previous = modulus;
        start.iter_mut().for_each(|z| *z = ZERO);
        for (i, yi) in y.iter().enumerate() {
            axpy(*yi, &basis[i * n..(i + 1) * n], &mut start);
        }
        // Complex-conjugate partners share the modulus; mixing in the real
        // part keeps both in the restart.
        for z in start.iter_mut() {
            *z = C64::new(z.re + z.im, z.re - z.im);
        }
    }
    Err(Error::EigensolverFailure("arnoldi restarts exhausted"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{pauli, LocalOperator, LocalSuperoperator, Site, Volume};
    use crate::finite_volume::generator::assemble;
    use crate::generators::{build_lindblad, InteractionFamily, LindbladSpec, SiteGenerators};
    use crate::linalg::c;

    fn ising(h: f64, j: f64) -> (SiteGenerators, InteractionFamily) {
        let on0 = |m| LocalOperator::on_site(Site::on_line(0), m).unwrap();
        let g = build_lindblad(&LindbladSpec::new(on0(pauli::sigma_z() * c(h, 0.0)), vec![on0(pauli::sigma_minus())])).unwrap();
        let xx = LocalOperator::product(&[(Site::on_line(0), pauli::sigma_x()), (Site::on_line(1), pauli::sigma_x())])
            .unwrap()
            .scale(c(j, 0.0));
        (SiteGenerators::Uniform(g), InteractionFamily::translation_invariant(vec![LocalSuperoperator::commutator(&xx)]).unwrap())
    }

    #[test]
    fn decoupled_chain_has_single_site_gap() {
        let (g, _) = ising(0.3, 0.0);
        let gen = assemble(&Volume::chain(0, 3), &g, &InteractionFamily::empty(), None).unwrap();
        assert!((spectral_gap(&gen).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn weak_coupling_moves_gap_by_order_coupling() {
        let (g, fam) = ising(0.3, 0.02);
        let gen = assemble(&Volume::chain(0, 2), &g, &fam, None).unwrap();
        let gap = spectral_gap(&gen).unwrap();
        assert!((gap - 0.5).abs() <= 4.0 * 0.02, "{gap}");
    }

    #[test]
    fn pure_hamiltonian_does_not_relax() {
        let h = LocalOperator::on_site(Site::on_line(0), pauli::sigma_z()).unwrap();
        let g = SiteGenerators::Uniform(LocalSuperoperator::commutator(&h));
        let gen = assemble(&Volume::chain(0, 2), &g, &InteractionFamily::empty(), None).unwrap();
        assert_eq!(spectral_gap(&gen).unwrap(), 0.0);
    }

    #[test]
    fn iterative_gap_matches_dense_gap() {
        let (g, fam) = ising(0.3, 0.05);
        let gen = assemble(&Volume::chain(0, 4), &g, &fam, None).unwrap();
        let dense = spectral_gap(&gen).unwrap();
        let iterative = spectral_gap_with(&gen, GapOptions { dense_limit: 0 }).unwrap();
        assert!((dense - iterative).abs() < 1e-7, "{dense} vs {iterative}");
    }
}
