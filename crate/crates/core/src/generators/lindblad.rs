use alloc::vec::Vec;

use crate::algebra::{LocalOperator, LocalSuperoperator};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, ONE, ZERO};

const HERMITIAN_TOLERANCE: f64 = 1e-12;
const VERDICT_TOLERANCE: f64 = 1e-10;

/// Hamiltonian and jump operators of a generator in Lindblad form.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladSpec {
    pub hamiltonian: LocalOperator,
    pub kraus_ops: Vec<LocalOperator>,
}

impl LindbladSpec {
    pub fn new(hamiltonian: LocalOperator, kraus_ops: Vec<LocalOperator>) -> Self {
        LindbladSpec { hamiltonian, kraus_ops }
    }
}

/// Heisenberg-picture generator `A ↦ i[H,A] + Σ K*AK − ½{K*K, A}`.
///
/// # Errors
/// `NonHermitianHamiltonian`, `MismatchedSupports`.
pub fn build_lindblad(spec: &LindbladSpec) -> Result<LocalSuperoperator> {
    let h = &spec.hamiltonian;
    let residual = (h.matrix() - h.matrix().adjoint()).norm();
    if residual > HERMITIAN_TOLERANCE {
        return Err(Error::NonHermitianHamiltonian { residual });
    }
    if spec.kraus_ops.iter().any(|k| k.support() != h.support() || k.q() != h.q()) {
        return Err(Error::MismatchedSupports);
    }
    let d = h.dim();
    let id = CMatrix::identity(d, d);
    let mut g = LocalSuperoperator::commutator(h).matrix().clone();
    for k in &spec.kraus_ops {
        let kk = k.matrix().adjoint() * k.matrix();
        g += LocalSuperoperator::sandwich(k).matrix();
        g -= (crate::algebra::lift(&kk, &id) + crate::algebra::lift(&id, &kk)) * C64::new(0.5, 0.0);
    }
    LocalSuperoperator::new(h.support().clone(), h.q(), g)
}

/// Diagnostics for the defining properties of a QMS generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QmsReport {
    /// `‖G(1)‖`.
    pub identity_residual: f64,
    /// `max_{ij} ‖G(E_ij)* − G(E_ji)‖`.
    pub hermiticity_residual: f64,
    /// Smallest eigenvalue of the Choi matrix of `G*` compressed to the
    /// orthogonal complement of the maximally entangled vector.
    pub ccp_min_eigenvalue: f64,
    pub verdict: bool,
}

/// Checks identity preservation, Hermiticity preservation and
/// conditional complete positivity.
pub fn check_qms_generator(g: &LocalSuperoperator) -> QmsReport {
    let d = g.hilbert_dim();
    let identity_residual = g.identity_residual();

    let unit = |i: usize, j: usize| {
        let mut m = CMatrix::zeros(d, d);
        m[(i, j)] = ONE;
        m
    };
    let mut hermiticity_residual = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let a = g.apply_matrix(&unit(i, j)).adjoint();
            let b = g.apply_matrix(&unit(j, i));
            hermiticity_residual = hermiticity_residual.max(linalg::spectral_norm(&(a - b)));
        }
    }

    let schrodinger = g.hs_adjoint();
    let mut choi = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let image = schrodinger.apply_matrix(&unit(i, j));
            for a in 0..d {
                for b in 0..d {
                    choi[(i * d + a, j * d + b)] = image[(a, b)];
                }
            }
        }
    }
    let mut omega = linalg::CVector::from_element(d * d, ZERO);
    for i in 0..d {
        omega[i * d + i] = ONE;
    }
    let compress = CMatrix::identity(d * d, d * d) - &omega * omega.adjoint() * C64::new(1.0 / d as f64, 0.0);
    let compressed = &compress * choi * &compress;
    let ccp_min_eigenvalue = linalg::min_hermitian_eigenvalue(&compressed);

    let verdict = identity_residual <= VERDICT_TOLERANCE
        && hermiticity_residual <= VERDICT_TOLERANCE
        && ccp_min_eigenvalue >= -VERDICT_TOLERANCE;
    QmsReport { identity_residual, hermiticity_residual, ccp_min_eigenvalue, verdict }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{pauli, Site, Volume};
    use crate::linalg::c;

    fn on0(m: CMatrix) -> LocalOperator {
        LocalOperator::on_site(Site::on_line(0), m).unwrap()
    }

    fn ising(h: f64) -> LocalSuperoperator {
        build_lindblad(&LindbladSpec::new(on0(pauli::sigma_z() * c(h, 0.0)), alloc::vec![on0(pauli::sigma_minus())])).unwrap()
    }

    #[test]
    fn ising_generator_on_sigma_z() {
        let g = ising(0.3);
        let out = g.apply_matrix(&pauli::sigma_z());
        let want = -(pauli::sigma_z() + pauli::identity());
        assert!((out - want).norm() < 1e-14);
        assert!(check_qms_generator(&g).verdict);
    }

    #[test]
    fn zero_spec_gives_zero_map() {
        let g = build_lindblad(&LindbladSpec::new(on0(CMatrix::zeros(2, 2)), alloc::vec![])).unwrap();
        assert!(g.matrix().norm() == 0.0);
    }

    #[test]
    fn hamiltonian_flow_is_a_qms_with_imaginary_spectrum() {
        let h = CMatrix::from_row_slice(2, 2, &[c(0.7, 0.0), c(0.2, -0.4), c(0.2, 0.4), c(-0.1, 0.0)]);
        let g = build_lindblad(&LindbladSpec::new(on0(h), alloc::vec![])).unwrap();
        assert!(check_qms_generator(&g).verdict);
        for ev in linalg::eigenvalues(g.matrix()).unwrap() {
            assert!(ev.re.abs() < 1e-12);
        }
    }

    #[test]
    fn wrong_sign_anticommutator_is_rejected() {
        let p = pauli::sigma_plus() * pauli::sigma_minus();
        let g = LocalSuperoperator::from_map(Volume::chain(0, 1), 2, |x| &p * x + x * &p);
        let report = check_qms_generator(&g);
        assert!(!report.verdict);
        assert!((report.identity_residual - 2.0).abs() < 1e-12);
    }

    #[test]
    fn non_hermitian_hamiltonian_is_rejected() {
        let err = build_lindblad(&LindbladSpec::new(on0(pauli::sigma_plus()), alloc::vec![])).unwrap_err();
        assert!(matches!(err, Error::NonHermitianHamiltonian { .. }));
    }

    #[test]
    fn mismatched_supports_are_rejected() {
        let k = LocalOperator::on_site(Site::on_line(1), pauli::sigma_minus()).unwrap();
        let err = build_lindblad(&LindbladSpec::new(on0(pauli::sigma_z()), alloc::vec![k])).unwrap_err();
        assert_eq!(err, Error::MismatchedSupports);
    }

    #[test]
    fn schrodinger_generator_is_trace_annihilating() {
        let g = ising(1.0).hs_adjoint();
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let mut e = CMatrix::zeros(2, 2);
            e[(i, j)] = ONE;
            assert!(linalg::trace(&g.apply_matrix(&e)).norm() < 1e-14);
        }
    }
}
