//! Induced and completely bounded norms of superoperators.
//!
//! `‖T‖ = sup ‖T(X)‖ / ‖X‖` with the spectral norm on both sides. The
//! supremum is attained at a unitary, so it equals the maximum of
//! `|⟨φ|T(U)|ψ⟩|` over unitaries `U` and unit vectors `φ, ψ`. Each variable
//! block has a closed-form maximizer, which gives a monotone ascent; several
//! deterministic starting points guard against local maxima.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::kernel::DigitKernel;
use super::operator::{unvectorize, vectorize};
use super::superop::LocalSuperoperator;
use crate::linalg::{self, CMatrix};

const TOLERANCE: f64 = 1e-10;
const MAX_ITERATIONS: usize = 500;
const RANDOM_STARTS: usize = 4;
/// Largest superoperator dimension for which singular-vector starts are used.
const DENSE_START_LIMIT: usize = 256;
const SEED: u64 = 0x6e6f_726d;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbMode {
    /// `‖T ⊗ id‖` with an ancilla as large as the system.
    Exact,
    /// `dim(H) · ‖T‖`.
    FootnoteBound,
}

/// Induced spectral-to-spectral norm.
pub fn operator_norm(sop: &LocalSuperoperator) -> f64 {
    induced_norm(sop.matrix(), sop.hilbert_dim())
}

/// Completely bounded norm, exact or via the dimension bound.
pub fn cb_norm(sop: &LocalSuperoperator, mode: CbMode) -> f64 {
    let d = sop.hilbert_dim();
    match mode {
        CbMode::FootnoteBound => d as f64 * operator_norm(sop),
        CbMode::Exact => induced_norm(&with_ancilla(sop.matrix(), d), d * d),
    }
}

/// Completely bounded norm of a raw vectorized map on `C^d`.
pub fn cb_norm_of_matrix(matrix: &CMatrix, d: usize, options: AscentOptions) -> f64 {
    induced_norm_with(&with_ancilla(matrix, d), d * d, options)
}

/// Matrix of `T ⊗ id_d` on `C^d ⊗ C^d`, column-stacked.
fn with_ancilla(matrix: &CMatrix, d: usize) -> CMatrix {
    // Global vec digits (radix d): column system, column ancilla, row system, row ancilla.
    DigitKernel::new(matrix.clone(), d, 4, &[0, 2]).to_dense()
}

/// Stopping rule of the norm ascent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentOptions {
    /// Stop a start once one step gains less than `tolerance · max(1, value)`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub random_starts: usize,
}

impl Default for AscentOptions {
    fn default() -> Self {
        AscentOptions { tolerance: TOLERANCE, max_iterations: MAX_ITERATIONS, random_starts: RANDOM_STARTS }
    }
}

/// Induced norm of the map with matrix `matrix` on `d × d` operators.
pub fn induced_norm(matrix: &CMatrix, d: usize) -> f64 {
    induced_norm_with(matrix, d, AscentOptions::default())
}

/// [`induced_norm`] with an explicit stopping rule. Every returned value is
/// attained, hence a lower bound on the true norm.
pub fn induced_norm_with(matrix: &CMatrix, d: usize, options: AscentOptions) -> f64 {
    assert_eq!(matrix.nrows(), d * d);
    if matrix.iter().all(|z| z.norm() == 0.0) {
        return 0.0;
    }
    let adjoint = matrix.adjoint();
    let apply = |m: &CMatrix, x: &CMatrix| unvectorize((m * vectorize(x)).as_slice(), d);

    let mut starts: Vec<CMatrix> = Vec::new();
    starts.push(CMatrix::identity(d, d));
    if matrix.nrows() <= DENSE_START_LIMIT {
        let (values, vectors) = linalg::ascending_right_singular(matrix);
        for v in vectors.iter().rev().take(values.len().min(4)) {
            starts.push(linalg::polar_unitary(&unvectorize(v.as_slice(), d)));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..options.random_starts {
        starts.push(linalg::random_unitary(d, &mut rng));
    }

    let mut best = 0.0f64;
    for start in starts {
        let mut u = start;
        let mut value = 0.0;
        for _ in 0..options.max_iterations {
            let image = apply(matrix, &u);
            let (sigma, phi, psi) = linalg::top_singular_triple(&image);
            let improved = sigma - value;
            value = sigma;
            if improved <= options.tolerance * sigma.max(1.0) && value > 0.0 {
                break;
            }
            let pulled = apply(&adjoint, &(phi * psi.adjoint()));
            u = linalg::polar_unitary(&pulled);
        }
        best = best.max(value);
    }
    best
}

impl LocalSuperoperator {
    pub fn operator_norm(&self) -> f64 {
        operator_norm(self)
    }

    pub fn cb_norm(&self, mode: CbMode) -> f64 {
        cb_norm(self, mode)
    }
}
