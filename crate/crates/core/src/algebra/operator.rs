use alloc::format;
use alloc::vec::Vec;

use super::kernel::DigitKernel;
use super::lattice::{Site, Volume};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64};

/// An operator on `⊗_{x ∈ support} C^q`, tensor factors in site order.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOperator {
    support: Volume,
    q: usize,
    matrix: CMatrix,
}

impl LocalOperator {
    /// # Errors
    /// `DimensionMismatch` unless the matrix is `q^|support|` square.
    pub fn new(support: Volume, q: usize, matrix: CMatrix) -> Result<Self> {
        let expected = q.pow(support.len() as u32);
        if matrix.nrows() != expected || matrix.ncols() != expected {
            return Err(Error::DimensionMismatch {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
                expected,
            });
        }
        Ok(LocalOperator { support, q, matrix })
    }

    pub fn identity(support: Volume, q: usize) -> Self {
        let d = q.pow(support.len() as u32);
        LocalOperator { support, q, matrix: CMatrix::identity(d, d) }
    }

    /// Single-site operator; `q` is read from the matrix.
    pub fn on_site(site: Site, matrix: CMatrix) -> Result<Self> {
        let q = matrix.nrows();
        LocalOperator::new(Volume::singleton(site), q, matrix)
    }

    /// Tensor product of single-site factors on distinct sites.
    pub fn product(factors: &[(Site, CMatrix)]) -> Result<Self> {
        let Some((_, first)) = factors.first() else {
            return Err(Error::InvalidArgument("empty product".into()));
        };
        let q = first.nrows();
        let mut sorted: Vec<&(Site, CMatrix)> = factors.iter().collect();
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("repeated site in product".into()));
        }
        let mut matrix = CMatrix::identity(1, 1);
        for (_, m) in &sorted {
            matrix = linalg::kron(&matrix, m);
        }
        LocalOperator::new(sorted.iter().map(|(s, _)| s.clone()).collect(), q, matrix)
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

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        linalg::spectral_norm(&self.matrix)
    }

    pub fn adjoint(&self) -> LocalOperator {
        LocalOperator { support: self.support.clone(), q: self.q, matrix: self.matrix.adjoint() }
    }

    pub fn scale(&self, z: C64) -> LocalOperator {
        LocalOperator { support: self.support.clone(), q: self.q, matrix: &self.matrix * z }
    }

    /// `self · other`, both embedded in the union of supports.
    pub fn mul(&self, other: &LocalOperator) -> Result<LocalOperator> {
        let joint = self.support.union(&other.support);
        let a = self.embed(&joint)?;
        let b = other.embed(&joint)?;
        LocalOperator::new(joint, self.q, a.matrix * b.matrix)
    }

    pub fn add(&self, other: &LocalOperator) -> Result<LocalOperator> {
        let joint = self.support.union(&other.support);
        let a = self.embed(&joint)?;
        let b = other.embed(&joint)?;
        LocalOperator::new(joint, self.q, a.matrix + b.matrix)
    }

    /// `self ⊗ 1` on `target`.
    ///
    /// # Errors
    /// `SupportNotContained` unless `support ⊆ target`.
    pub fn embed(&self, target: &Volume) -> Result<LocalOperator> {
        if &self.support == target {
            return Ok(self.clone());
        }
        let positions = self.support.positions_in(target).ok_or_else(|| Error::SupportNotContained {
            inner: format!("{}", self.support),
            outer: format!("{target}"),
        })?;
        let kernel = DigitKernel::new(self.matrix.clone(), self.q, target.len(), &positions);
        LocalOperator::new(target.clone(), self.q, kernel.to_dense())
    }

    /// Vectorized form (column stacking).
    pub fn vectorize(&self) -> CVector {
        vectorize(&self.matrix)
    }

    /// Expectation `Tr(ρ A)` in a state on `state_support ⊇ support`.
    pub fn expectation(&self, state: &CMatrix, state_support: &Volume) -> Result<C64> {
        let a = self.embed(state_support)?;
        Ok((state * a.matrix).trace())
    }
}

/// Free-function form of [`LocalOperator::embed`].
pub fn embed_operator(op: &LocalOperator, target: &Volume) -> Result<LocalOperator> {
    op.embed(target)
}

/// `vec(X)[i + d·j] = X[i, j]`.
pub fn vectorize(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vectorize`] for a `d × d` matrix.
pub fn unvectorize(v: &[C64], d: usize) -> CMatrix {
    assert_eq!(v.len(), d * d, "vector length is not a square");
    CMatrix::from_column_slice(d, d, v)
}

/// The matrix `Bᵀ ⊗ A`, so that `vec(A X B) = lift(A, B) vec(X)`.
pub fn lift(a: &CMatrix, b: &CMatrix) -> CMatrix {
    linalg::kron(&b.transpose(), a)
}

/// Pauli matrices in the basis `(|↑⟩, |↓⟩)`, so `σ³ = diag(1, −1)`.
pub mod pauli {
    use crate::linalg::{c, CMatrix, ONE, ZERO};

    pub fn identity() -> CMatrix {
        CMatrix::identity(2, 2)
    }

    pub fn sigma_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    pub fn sigma_y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO])
    }

    pub fn sigma_z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
    }

    /// `|↑⟩⟨↓|`.
    pub fn sigma_plus() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])
    }

    /// `|↓⟩⟨↑|`.
    pub fn sigma_minus() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO])
    }

    /// `|↓⟩⟨↓|`.
    pub fn spin_down() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, ONE])
    }

    /// `|↑⟩⟨↑|`.
    pub fn spin_up() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO])
    }
}
