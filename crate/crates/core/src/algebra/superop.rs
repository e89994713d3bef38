use alloc::format;
use alloc::vec::Vec;

use super::kernel::DigitKernel;
use super::lattice::Volume;
use super::operator::{lift, unvectorize, vectorize, LocalOperator};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, I};

/// A linear map on operators over `support`, stored as a matrix acting on
/// column-stacked vectorizations.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSuperoperator {
    support: Volume,
    q: usize,
    matrix: CMatrix,
}

impl LocalSuperoperator {
    /// # Errors
    /// `DimensionMismatch` unless the matrix is `q^{2|support|}` square.
    pub fn new(support: Volume, q: usize, matrix: CMatrix) -> Result<Self> {
        let expected = q.pow(2 * support.len() as u32);
        if matrix.nrows() != expected || matrix.ncols() != expected {
            return Err(Error::DimensionMismatch {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
                expected,
            });
        }
        Ok(LocalSuperoperator { support, q, matrix })
    }

    pub fn identity(support: Volume, q: usize) -> Self {
        let d = q.pow(2 * support.len() as u32);
        LocalSuperoperator { support, q, matrix: CMatrix::identity(d, d) }
    }

    pub fn zero(support: Volume, q: usize) -> Self {
        let d = q.pow(2 * support.len() as u32);
        LocalSuperoperator { support, q, matrix: CMatrix::zeros(d, d) }
    }

    /// Tabulates a linear map by its action on matrix units.
    pub fn from_map(support: Volume, q: usize, map: impl Fn(&CMatrix) -> CMatrix) -> Self {
        let d = q.pow(support.len() as u32);
        let mut matrix = CMatrix::zeros(d * d, d * d);
        for j in 0..d {
            for i in 0..d {
                let mut unit = CMatrix::zeros(d, d);
                unit[(i, j)] = linalg::ONE;
                let image = vectorize(&map(&unit));
                matrix.set_column(i + d * j, &image);
            }
        }
        LocalSuperoperator { support, q, matrix }
    }

    /// `X ↦ i[H, X]`.
    pub fn commutator(h: &LocalOperator) -> Self {
        let id = CMatrix::identity(h.dim(), h.dim());
        let m = (lift(h.matrix(), &id) - lift(&id, h.matrix())) * I;
        LocalSuperoperator { support: h.support().clone(), q: h.q(), matrix: m }
    }

    /// `X ↦ K* X K`.
    pub fn sandwich(k: &LocalOperator) -> Self {
        let m = lift(&k.matrix().adjoint(), k.matrix());
        LocalSuperoperator { support: k.support().clone(), q: k.q(), matrix: m }
    }

    /// `X ↦ A X B`.
    pub fn two_sided(support: Volume, q: usize, a: &CMatrix, b: &CMatrix) -> Result<Self> {
        LocalSuperoperator::new(support, q, lift(a, b))
    }

    pub fn support(&self) -> &Volume {
        &self.support
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Dimension of the underlying Hilbert space.
    pub fn hilbert_dim(&self) -> usize {
        self.q.pow(self.support.len() as u32)
    }

    /// Applies the map to a matrix on the same support.
    pub fn apply_matrix(&self, x: &CMatrix) -> CMatrix {
        let v = &self.matrix * vectorize(x);
        unvectorize(v.as_slice(), self.hilbert_dim())
    }

    /// Applies the map to an operator; the result lives on the union of supports.
    pub fn apply(&self, op: &LocalOperator) -> Result<LocalOperator> {
        let joint = self.support.union(op.support());
        let map = self.embed(&joint)?;
        let x = op.embed(&joint)?;
        LocalOperator::new(joint, self.q, map.apply_matrix(x.matrix()))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &LocalSuperoperator) -> Result<LocalSuperoperator> {
        let joint = self.support.union(&other.support);
        let a = self.embed(&joint)?;
        let b = other.embed(&joint)?;
        LocalSuperoperator::new(joint, self.q, a.matrix * b.matrix)
    }

    pub fn add(&self, other: &LocalSuperoperator) -> Result<LocalSuperoperator> {
        let joint = self.support.union(&other.support);
        let a = self.embed(&joint)?;
        let b = other.embed(&joint)?;
        LocalSuperoperator::new(joint, self.q, a.matrix + b.matrix)
    }

    pub fn sub(&self, other: &LocalSuperoperator) -> Result<LocalSuperoperator> {
        self.add(&other.scale(-linalg::ONE))
    }

    pub fn scale(&self, z: C64) -> LocalSuperoperator {
        LocalSuperoperator { support: self.support.clone(), q: self.q, matrix: &self.matrix * z }
    }

    /// Adjoint for the Hilbert–Schmidt inner product `Tr(A* B)`.
    pub fn hs_adjoint(&self) -> LocalSuperoperator {
        LocalSuperoperator { support: self.support.clone(), q: self.q, matrix: self.matrix.adjoint() }
    }

    /// Same map moved by a lattice vector.
    pub fn translate(&self, by: &[i64]) -> LocalSuperoperator {
        LocalSuperoperator { support: self.support.translate(by), q: self.q, matrix: self.matrix.clone() }
    }

    /// Same map placed on another support of equal size.
    pub fn relabel(&self, support: Volume) -> Result<LocalSuperoperator> {
        LocalSuperoperator::new(support, self.q, self.matrix.clone())
    }

    /// Kernel applying this map inside the column-stacked vectorization over `target`.
    pub fn kernel_in(&self, target: &Volume) -> Result<DigitKernel> {
        let positions = self.support.positions_in(target).ok_or_else(|| Error::SupportNotContained {
            inner: format!("{}", self.support),
            outer: format!("{target}"),
        })?;
        let n = target.len();
        let digits: Vec<usize> = positions.iter().copied().chain(positions.iter().map(|p| n + p)).collect();
        Ok(DigitKernel::new(self.matrix.clone(), self.q, 2 * n, &digits))
    }

    /// `self ⊗ id` on `target`.
    ///
    /// # Errors
    /// `SupportNotContained` unless `support ⊆ target`.
    pub fn embed(&self, target: &Volume) -> Result<LocalSuperoperator> {
        if &self.support == target {
            return Ok(self.clone());
        }
        let kernel = self.kernel_in(target)?;
        LocalSuperoperator::new(target.clone(), self.q, kernel.to_dense())
    }

    /// `‖self(1)‖`.
    pub fn identity_residual(&self) -> f64 {
        let d = self.hilbert_dim();
        linalg::spectral_norm(&self.apply_matrix(&CMatrix::identity(d, d)))
    }
}

/// Free-function form of [`LocalSuperoperator::embed`].
pub fn embed_superoperator(sop: &LocalSuperoperator, target: &Volume) -> Result<LocalSuperoperator> {
    sop.embed(target)
}

/// Free-function form of [`LocalSuperoperator::hs_adjoint`].
pub fn hs_adjoint(sop: &LocalSuperoperator) -> LocalSuperoperator {
    sop.hs_adjoint()
}
