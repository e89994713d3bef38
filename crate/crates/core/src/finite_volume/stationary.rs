//! Stationary states of finite-volume generators.

use alloc::vec;
use alloc::vec::Vec;

use crate::algebra::{unvectorize, vectorize, DigitKernel, LocalOperator, Volume};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, ONE, ZERO};

use super::generator::FiniteVolumeGenerator;
use super::gmres::{gmres, GmresOptions};
use super::krylov::norm2;

/// Superoperator dimension up to which the kernel is found by dense SVD.
pub const DENSE_KERNEL_LIMIT: usize = 64;
/// Singular values below this (relative to the largest) count as zero.
const KERNEL_TOLERANCE: f64 = 1e-10;
/// A second singular value below this makes uniqueness ambiguous.
const AMBIGUITY_TOLERANCE: f64 = 1e-7;
const POSITIVITY_FLOOR: f64 = -1e-9;
const RESIDUAL_LIMIT: f64 = 1e-9;
/// Two bordered solves differing by more than this reveal a degenerate kernel.
const UNIQUENESS_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryState {
    pub density_matrix: CMatrix,
    pub volume: Volume,
    pub q: usize,
    pub kernel_dimension: usize,
    /// Hilbert-Schmidt orthonormal kernel basis when the kernel is degenerate.
    pub kernel_basis: Vec<CMatrix>,
    /// `‖L*(ρ)‖` in the Euclidean norm of the vectorization.
    pub residual: f64,
    pub min_eigenvalue: f64,
}

impl StationaryState {
    /// `ρ(A)` for `A` supported inside the volume.
    ///
    /// # Errors
    /// `SupportNotContained` otherwise.
    pub fn expectation(&self, a: &LocalOperator) -> Result<C64> {
        a.expectation(&self.density_matrix, &self.volume)
    }

    pub fn is_unique(&self) -> bool {
        self.kernel_dimension == 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryOptions {
    /// Above this superoperator dimension the kernel is found iteratively.
    pub dense_limit: usize,
    /// Repeat the iterative solve from a second bordering vector.
    pub check_uniqueness: bool,
    pub gmres: GmresOptions,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        StationaryOptions { dense_limit: DENSE_KERNEL_LIMIT, check_uniqueness: true, gmres: GmresOptions::default() }
    }
}

/// Stationary state with default options.
///
/// # Errors
/// See [`stationary_state_with`].
pub fn stationary_state(gen: &FiniteVolumeGenerator) -> Result<StationaryState> {
    stationary_state_with(gen, StationaryOptions::default())
}

/// Kernel of the Schrödinger generator `L*`.
///
/// # Errors
/// `IllConditionedKernel` when the second singular value is below 1e-7;
/// `NotPositive` when the unique state has an eigenvalue below −1e-9;
/// `NonConvergence` from the iterative solver.
pub fn stationary_state_with(gen: &FiniteVolumeGenerator, options: StationaryOptions) -> Result<StationaryState> {
    if gen.dim() <= options.dense_limit {
        dense_kernel(gen)
    } else {
        bordered_solve(gen, options)
    }
}

fn dense_kernel(gen: &FiniteVolumeGenerator) -> Result<StationaryState> {
    let d = gen.hilbert_dim();
    let schrodinger = gen.to_dense()?.adjoint();
    let (values, vectors) = linalg::ascending_right_singular(&schrodinger);
    let scale = values.last().copied().unwrap_or(0.0).max(1.0);
    let zeros = values.iter().take_while(|&&s| s < KERNEL_TOLERANCE * scale).count();
    match zeros {
        0 if values[0] >= AMBIGUITY_TOLERANCE * scale => {
            Err(Error::NonConvergence { what: "stationary kernel", residual: values[0] })
        }
        0 | 1 => {
            if values.len() > 1 && values[1] < AMBIGUITY_TOLERANCE * scale {
                return Err(Error::IllConditionedKernel { sigma: values[1] });
            }
            finish_unique(gen, unvectorize(vectors[0].as_slice(), d))
        }
        k => {
            let basis: Vec<CMatrix> = vectors[..k].iter().map(|v| unvectorize(v.as_slice(), d)).collect();
            finish_degenerate(gen, basis)
        }
    }
}

fn finish_unique(gen: &FiniteVolumeGenerator, rho: CMatrix) -> Result<StationaryState> {
    let rho = normalize_state(rho)?;
    let residual = schrodinger_residual(gen, &rho);
    if residual > RESIDUAL_LIMIT {
        return Err(Error::NonConvergence { what: "stationary residual", residual });
    }
    let min_eigenvalue = linalg::min_hermitian_eigenvalue(&rho);
    if min_eigenvalue < POSITIVITY_FLOOR {
        return Err(Error::NotPositive { min_eigenvalue });
    }
    Ok(StationaryState {
        density_matrix: rho,
        volume: gen.volume().clone(),
        q: gen.q(),
        kernel_dimension: 1,
        kernel_basis: Vec::new(),
        residual,
        min_eigenvalue,
    })
}

/// Degenerate kernels report the projection of the maximally mixed state
/// onto the kernel, which is stationary and trace one when nonzero.
fn finish_degenerate(gen: &FiniteVolumeGenerator, basis: Vec<CMatrix>) -> Result<StationaryState> {
    let d = gen.hilbert_dim();
    let mixed = CMatrix::identity(d, d) / C64::new(d as f64, 0.0);
    let mut rho = CMatrix::zeros(d, d);
    for b in &basis {
        rho += b * linalg::trace(&(b.adjoint() * &mixed));
    }
    let rho = normalize_state(rho).or_else(|_| normalize_state(basis[0].clone()))?;
    let residual = schrodinger_residual(gen, &rho);
    let min_eigenvalue = linalg::min_hermitian_eigenvalue(&rho);
    Ok(StationaryState {
        density_matrix: rho,
        volume: gen.volume().clone(),
        q: gen.q(),
        kernel_dimension: basis.len(),
        kernel_basis: basis,
        residual,
        min_eigenvalue,
    })
}

fn normalize_state(rho: CMatrix) -> Result<CMatrix> {
    let tr = linalg::trace(&rho);
    if tr.norm() < 1e-12 * rho.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::NonConvergence { what: "traceless kernel vector", residual: tr.norm() });
    }
    Ok(linalg::hermitian_part(&(rho / tr)))
}

fn schrodinger_residual(gen: &FiniteVolumeGenerator, rho: &CMatrix) -> f64 {
    let v = vectorize(rho);
    let mut out = vec![ZERO; v.len()];
    gen.apply_adjoint(v.as_slice(), &mut out);
    norm2(&out)
}

/// Solves `(L* − w ⟨1|) x = −w`, whose solution is the stationary state
/// when the kernel is one-dimensional.
fn bordered_solve(gen: &FiniteVolumeGenerator, options: StationaryOptions) -> Result<StationaryState> {
    let d = gen.hilbert_dim();
    let preconditioner = ProductPreconditioner::new(gen);
    let product = preconditioner.as_ref().map(|p| p.product_state.clone());
    let mixed = vectorize(&(CMatrix::identity(d, d) / C64::new(d as f64, 0.0)));
    let first = product.unwrap_or_else(|| mixed.as_slice().to_vec());
    let rho = solve_bordered(gen, preconditioner.as_ref(), &first, options.gmres)?;
    if options.check_uniqueness {
        let second = solve_bordered(gen, preconditioner.as_ref(), mixed.as_slice(), options.gmres)?;
        let gap = norm2(&rho.iter().zip(&second).map(|(a, b)| a - b).collect::<Vec<_>>());
        if gap > UNIQUENESS_TOLERANCE {
            let basis = orthonormalize(&[unvectorize(&rho, d), unvectorize(&second, d)]);
            return finish_degenerate(gen, basis);
        }
    }
    finish_unique(gen, unvectorize(&rho, d))
}

fn solve_bordered(
    gen: &FiniteVolumeGenerator,
    preconditioner: Option<&ProductPreconditioner>,
    w: &[C64],
    options: GmresOptions,
) -> Result<Vec<C64>> {
    let d = gen.hilbert_dim();
    let n = gen.dim();
    let op = |x: &[C64], out: &mut [C64]| {
        gen.apply_adjoint(x, out);
        let tr: C64 = (0..d).map(|i| x[i + d * i]).sum();
        for (o, wi) in out.iter_mut().zip(w) {
            *o -= wi * tr;
        }
    };
    let rhs: Vec<C64> = w.iter().map(|z| -z).collect();
    let result = match preconditioner {
        Some(p) => gmres(op, |x, out| p.apply(x, out), &rhs, w, options)?,
        None => gmres(op, |x: &[C64], out: &mut [C64]| out.copy_from_slice(x), &rhs, w, options)?,
    };
    debug_assert_eq!(result.solution.len(), n);
    Ok(result.solution)
}

fn orthonormalize(ms: &[CMatrix]) -> Vec<CMatrix> {
    let mut out: Vec<CMatrix> = Vec::new();
    for m in ms {
        let mut v = m.clone();
        for b in &out {
            let proj = linalg::trace(&(b.adjoint() * &v));
            v -= b * proj;
        }
        let n = v.norm();
        if n > 1e-12 {
            out.push(v / C64::new(n, 0.0));
        }
    }
    out
}

/// Inverse of the bordered free Schrödinger generator, diagonal in the
/// product of single-site eigenbases.
struct ProductPreconditioner {
    to_eigen: Vec<DigitKernel>,
    from_eigen: Vec<DigitKernel>,
    inverse_diagonal: Vec<C64>,
    product_state: Vec<C64>,
}

const EIGEN_TOLERANCE: f64 = 1e-8;

impl ProductPreconditioner {
    fn new(gen: &FiniteVolumeGenerator) -> Option<Self> {
        let n = gen.volume().len();
        let q = gen.q();
        let mut to_eigen = Vec::with_capacity(n);
        let mut from_eigen = Vec::with_capacity(n);
        let mut spectra = Vec::with_capacity(n);
        let mut zero_index = Vec::with_capacity(n);
        let mut states = Vec::with_capacity(n);
        for (x, part) in gen.site_parts().iter().enumerate() {
            let (values, vectors, zero) = eigenbasis(&part.adjoint(), q)?;
            let inverse = vectors.clone().try_inverse()?;
            states.push(unvectorize(vectors.column(zero).as_slice(), q));
            to_eigen.push(DigitKernel::new(inverse, q, 2 * n, &[x, n + x]));
            from_eigen.push(DigitKernel::new(vectors, q, 2 * n, &[x, n + x]));
            spectra.push(values);
            zero_index.push(zero);
        }
        let dim = gen.dim();
        let mut inverse_diagonal = vec![ZERO; dim];
        let mut digits = vec![0usize; 2 * n];
        for (idx, slot) in inverse_diagonal.iter_mut().enumerate() {
            let mut rest = idx;
            for k in (0..2 * n).rev() {
                digits[k] = rest % q;
                rest /= q;
            }
            let mut sum = ZERO;
            let mut all_zero = true;
            for x in 0..n {
                let local = digits[x] * q + digits[n + x];
                sum += spectra[x][local];
                all_zero &= local == zero_index[x];
            }
            *slot = if all_zero { -ONE } else { ONE / sum };
        }
        let rho = states.iter().skip(1).fold(states[0].clone(), |acc, s| linalg::kron(&acc, s));
        Some(ProductPreconditioner {
            to_eigen,
            from_eigen,
            inverse_diagonal,
            product_state: vectorize(&rho).as_slice().to_vec(),
        })
    }

    fn apply(&self, x: &[C64], out: &mut [C64]) {
        let mut a = x.to_vec();
        let mut b = vec![ZERO; x.len()];
        for k in &self.to_eigen {
            b.iter_mut().for_each(|z| *z = ZERO);
            k.apply_add(&a, &mut b);
            core::mem::swap(&mut a, &mut b);
        }
        for (z, s) in a.iter_mut().zip(&self.inverse_diagonal) {
            *z *= s;
        }
        for k in &self.from_eigen {
            b.iter_mut().for_each(|z| *z = ZERO);
            k.apply_add(&a, &mut b);
            core::mem::swap(&mut a, &mut b);
        }
        out.copy_from_slice(&a);
    }
}

/// Eigenvalues and eigenvector matrix of a diagonalizable single-site
/// Schrödinger generator, with the index of its unique zero eigenvalue.
/// The zero eigenvector is normalized to trace one.
fn eigenbasis(s: &CMatrix, q: usize) -> Option<(Vec<C64>, CMatrix, usize)> {
    let dim = s.nrows();
    let scale = linalg::spectral_norm(s).max(1.0);
    let values = linalg::eigenvalues(s).ok()?;
    let mut clusters: Vec<C64> = Vec::new();
    for &v in &values {
        if !clusters.iter().any(|c| (c - v).norm() < EIGEN_TOLERANCE * scale) {
            clusters.push(v);
        }
    }
    let mut out_values = Vec::with_capacity(dim);
    let mut columns: Vec<linalg::CVector> = Vec::with_capacity(dim);
    for &lambda in &clusters {
        let multiplicity = values.iter().filter(|v| (*v - lambda).norm() < EIGEN_TOLERANCE * scale).count();
        let shifted = s - CMatrix::identity(dim, dim) * lambda;
        let (sv, vecs) = linalg::ascending_right_singular(&shifted);
        let null = sv.iter().take_while(|&&x| x < 1e3 * EIGEN_TOLERANCE * scale).count();
        if null != multiplicity {
            return None;
        }
        for v in vecs.into_iter().take(null) {
            out_values.push(lambda);
            columns.push(v);
        }
    }
    let zeros: Vec<usize> = (0..dim).filter(|&k| out_values[k].norm() < EIGEN_TOLERANCE * scale).collect();
    if zeros.len() != 1 {
        return None;
    }
    let zero = zeros[0];
    let tr: C64 = (0..q).map(|i| columns[zero][i + q * i]).sum();
    if tr.norm() < 1e-8 {
        return None;
    }
    columns[zero] /= tr;
    out_values[zero] = ZERO;
    let vectors = CMatrix::from_columns(&columns);
    let sv = linalg::svd(&vectors).values;
    if sv.last().copied().unwrap_or(0.0) < 1e-10 * sv[0] {
        return None;
    }
    Some((out_values, vectors, zero))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{pauli, LocalSuperoperator, Site};
    use crate::finite_volume::generator::assemble;
    use crate::generators::{build_lindblad, InteractionFamily, LindbladSpec, SiteGenerators};
    use crate::linalg::c;

    fn ising(h: f64, j: f64) -> (SiteGenerators, InteractionFamily) {
        let on0 = |m| LocalOperator::on_site(Site::on_line(0), m).unwrap();
        let g = build_lindblad(&LindbladSpec::new(on0(pauli::sigma_z() * c(h, 0.0)), vec![on0(pauli::sigma_minus())])).unwrap();
        let xx = LocalOperator::product(&[(Site::on_line(0), pauli::sigma_x()), (Site::on_line(1), pauli::sigma_x())])
            .unwrap()
            .scale(c(j, 0.0));
        let fam = if j == 0.0 {
            InteractionFamily::empty()
        } else {
            InteractionFamily::translation_invariant(vec![LocalSuperoperator::commutator(&xx)]).unwrap()
        };
        (SiteGenerators::Uniform(g), fam)
    }

    fn all_down(n: usize) -> CMatrix {
        (1..n).fold(pauli::spin_down(), |acc, _| linalg::kron(&acc, &pauli::spin_down()))
    }

    #[test]
    fn decoupled_chain_relaxes_to_product_of_down_states() {
        let (g, fam) = ising(0.3, 0.0);
        for n in [1, 3, 5] {
            let gen = assemble(&Volume::chain(0, n), &g, &fam, None).unwrap();
            let st = stationary_state(&gen).unwrap();
            assert_eq!(st.kernel_dimension, 1);
            assert!((&st.density_matrix - all_down(n)).norm() < 1e-12, "n={n}");
            let z = LocalOperator::on_site(Site::on_line(0), pauli::sigma_z()).unwrap();
            assert!((st.expectation(&z).unwrap() + ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn iterative_and_dense_kernels_agree() {
        let (g, fam) = ising(0.3, 0.05);
        let gen = assemble(&Volume::chain(0, 4), &g, &fam, None).unwrap();
        let dense = stationary_state(&gen).unwrap();
        let iterative = stationary_state_with(&gen, StationaryOptions { dense_limit: 0, ..Default::default() }).unwrap();
        assert_eq!(iterative.kernel_dimension, 1);
        assert!((&dense.density_matrix - &iterative.density_matrix).norm() < 1e-10);
        assert!(iterative.residual < 1e-10);
    }

    #[test]
    fn five_site_chain_has_unique_state() {
        let (g, fam) = ising(0.3, 0.05);
        let gen = assemble(&Volume::chain(0, 5), &g, &fam, None).unwrap();
        let st = stationary_state(&gen).unwrap();
        assert_eq!(st.kernel_dimension, 1);
        assert!(st.residual <= 1e-9);
        assert!(st.min_eigenvalue >= -1e-9);
        assert!((linalg::trace(&st.density_matrix) - ONE).norm() < 1e-12);
    }

    #[test]
    fn pure_hamiltonian_dynamics_has_degenerate_kernel() {
        let h = LocalOperator::on_site(Site::on_line(0), pauli::sigma_z()).unwrap();
        let g = SiteGenerators::Uniform(LocalSuperoperator::commutator(&h));
        let gen = assemble(&Volume::chain(0, 2), &g, &InteractionFamily::empty(), None).unwrap();
        let st = stationary_state(&gen).unwrap();
        assert_eq!(st.kernel_dimension, 6);
        assert_eq!(st.kernel_basis.len(), 6);
        assert!((&st.density_matrix - CMatrix::identity(4, 4) * c(0.25, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn single_site_eigenbasis_diagonalizes() {
        let (g, _) = ising(0.3, 0.0);
        let SiteGenerators::Uniform(g) = g else { unreachable!() };
        let s = g.matrix().adjoint();
        let (values, vectors, zero) = eigenbasis(&s, 2).unwrap();
        assert!((&s * &vectors - &vectors * CMatrix::from_diagonal(&linalg::CVector::from_vec(values))).norm() < 1e-12);
        assert!((unvectorize(vectors.column(zero).as_slice(), 2) - pauli::spin_down()).norm() < 1e-12);
    }
}
