use alloc::format;

use crate::algebra::{unvectorize, vectorize, LocalOperator};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

use super::generator::FiniteVolumeGenerator;
use super::krylov::{expv, KrylovOptions};

/// `e^{tL}(A)`, returned on the full volume.
///
/// # Errors
/// `SupportNotContained` if `A` leaves the volume; `NonConvergence` from
/// the Krylov exponential.
pub fn evolve_heisenberg(gen: &FiniteVolumeGenerator, a: &LocalOperator, t: f64) -> Result<LocalOperator> {
    let embedded = a.embed(gen.volume())?;
    if t == 0.0 {
        return Ok(embedded);
    }
    let v = vectorize(embedded.matrix());
    let out = expv(t, |x, y| gen.apply(x, y), v.as_slice(), gen.norm_bound(), KrylovOptions::default())?;
    LocalOperator::new(gen.volume().clone(), gen.q(), unvectorize(&out.vector, gen.hilbert_dim()))
}

/// `e^{tL*}(ρ)` for a density matrix on the full volume.
///
/// # Errors
/// `DimensionMismatch` for a wrongly sized state; `NonConvergence` from the
/// Krylov exponential.
pub fn evolve_schrodinger(gen: &FiniteVolumeGenerator, rho: &CMatrix, t: f64) -> Result<CMatrix> {
    let d = gen.hilbert_dim();
    if rho.nrows() != d || rho.ncols() != d {
        return Err(Error::DimensionMismatch { rows: rho.nrows(), cols: rho.ncols(), expected: d });
    }
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("negative time {t}")));
    }
    if t == 0.0 {
        return Ok(rho.clone());
    }
    let v = vectorize(rho);
    let out = expv(t, |x, y| gen.apply_adjoint(x, y), v.as_slice(), gen.norm_bound(), KrylovOptions::default())?;
    Ok(unvectorize(&out.vector, d))
}
