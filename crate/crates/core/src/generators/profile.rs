use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::algebra::{cb_norm_of_matrix, unvectorize, vectorize, AscentOptions, LocalSuperoperator};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};

/// Eigenvalues with modulus below this count as zero.
pub const ZERO_EIGENVALUE_TOLERANCE: f64 = 1e-8;
const GRID_POINTS: usize = 200;
const GRID_START: f64 = 1e-3;
const GRID_END: f64 = 20.0;
const SAFETY_MARGIN: f64 = 1.05;
const REFINED_POINTS: usize = 3;
const COARSE: AscentOptions = AscentOptions { tolerance: 1e-7, max_iterations: 20, random_starts: 1 };

/// Spectral data of a single-site generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProfile {
    pub generator: LocalSuperoperator,
    /// `Q(X) = Tr(ρ X) 1`, the spectral projection onto the kernel.
    pub projection_q: LocalSuperoperator,
    pub stationary_state: CMatrix,
    pub gap: f64,
    /// Certified amplitude `M` in `‖e^{tG}(1−Q)‖_cb ≤ M e^{−rate·t}`.
    pub amplitude_m: f64,
    pub rate_used: f64,
}

impl SpectralProfile {
    /// `ρ(X) = Tr(ρ X)`.
    pub fn expectation(&self, x: &CMatrix) -> C64 {
        (&self.stationary_state * x).trace()
    }

    /// Same profile with `M` certified at another rate.
    pub fn recertified(&self, rate: f64) -> Result<SpectralProfile> {
        let amplitude_m = certify_m(self, rate)?;
        Ok(SpectralProfile { amplitude_m, rate_used: rate, ..self.clone() })
    }
}

/// Eigen-analysis of a single-site generator; `M` is certified at `rate = gap`.
///
/// # Errors
/// `DegenerateKernel` unless zero is a simple eigenvalue.
pub fn spectral_profile(g: &LocalSuperoperator) -> Result<SpectralProfile> {
    let eigenvalues = linalg::eigenvalues(g.matrix())?;
    let multiplicity = eigenvalues.iter().filter(|l| l.norm() < ZERO_EIGENVALUE_TOLERANCE).count();
    if multiplicity != 1 {
        return Err(Error::DegenerateKernel { multiplicity });
    }
    let gap = -eigenvalues
        .iter()
        .filter(|l| l.norm() >= ZERO_EIGENVALUE_TOLERANCE)
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max);

    let d = g.hilbert_dim();
    let (_, vectors) = linalg::ascending_right_singular(&g.matrix().adjoint());
    let mut rho = unvectorize(vectors[0].as_slice(), d);
    let tr = linalg::trace(&rho);
    rho /= tr;
    let rho = linalg::hermitian_part(&rho);

    let q_matrix = vectorize(&CMatrix::identity(d, d)) * vectorize(&rho).adjoint();
    let projection_q = LocalSuperoperator::new(g.support().clone(), g.q(), q_matrix)?;
    let mut profile = SpectralProfile {
        generator: g.clone(),
        projection_q,
        stationary_state: rho,
        gap,
        amplitude_m: 1.0,
        rate_used: gap,
    };
    profile.amplitude_m = certify_m(&profile, gap)?;
    Ok(profile)
}

/// `M = 1.05 · max_t e^{rate·t} ‖e^{tG}(1−Q)‖_cb` over `t = 0` and a
/// geometric grid on `[10⁻³/gap, 20/gap]`, floored at 1.
///
/// Beyond the grid the sampled quantity decays like `e^{−(gap−rate)t}`.
///
/// # Errors
/// `RateExceedsGap` if `rate > gap` or `rate < 0`.
pub fn certify_m(profile: &SpectralProfile, rate: f64) -> Result<f64> {
    let gap = profile.gap;
    if !(0.0..=gap * (1.0 + 1e-12)).contains(&rate) {
        return Err(Error::RateExceedsGap { rate, gap });
    }
    let g = profile.generator.matrix();
    let dim = g.nrows();
    let complement = CMatrix::identity(dim, dim) - profile.projection_q.matrix();
    let d = profile.generator.hilbert_dim();
    let sample = |t: f64, options: AscentOptions| {
        let evolved = linalg::expm(&(g * C64::new(t, 0.0))) * &complement;
        (rate * t).exp() * cb_norm_of_matrix(&evolved, d, options)
    };
    // Coarse pass over the grid, then full precision at the leading points.
    let mut coarse: Vec<(f64, f64)> = certification_grid(gap).into_iter().map(|t| (sample(t, COARSE), t)).collect();
    coarse.sort_by(|a, b| b.0.total_cmp(&a.0));
    let worst = coarse
        .iter()
        .take(REFINED_POINTS)
        .map(|&(value, t)| value.max(sample(t, AscentOptions::default())))
        .chain(coarse.first().map(|p| p.0))
        .fold(0.0, f64::max);
    Ok((SAFETY_MARGIN * worst).max(1.0))
}

fn certification_grid(gap: f64) -> Vec<f64> {
    let (lo, hi) = (GRID_START / gap, GRID_END / gap);
    let mut times = Vec::with_capacity(GRID_POINTS + 1);
    times.push(0.0);
    for k in 0..GRID_POINTS {
        let s = k as f64 / (GRID_POINTS - 1) as f64;
        times.push(lo * (hi / lo).powf(s));
    }
    times
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{pauli, LocalOperator, Site};
    use crate::generators::lindblad::{build_lindblad, LindbladSpec};
    use crate::linalg::c;

    fn on0(m: CMatrix) -> LocalOperator {
        LocalOperator::on_site(Site::on_line(0), m).unwrap()
    }

    fn ising(h: f64) -> LocalSuperoperator {
        build_lindblad(&LindbladSpec::new(on0(pauli::sigma_z() * c(h, 0.0)), alloc::vec![on0(pauli::sigma_minus())])).unwrap()
    }

    #[test]
    fn ising_profile() {
        for h in [0.0, 0.3, 1.0] {
            let p = spectral_profile(&ising(h)).unwrap();
            assert!((p.gap - 0.5).abs() < 1e-10);
            assert!((&p.stationary_state - pauli::spin_down()).norm() < 1e-12);
            assert!(p.amplitude_m <= 4.0, "M = {}", p.amplitude_m);
            let q = p.projection_q.matrix();
            assert!((q * q - q).norm() < 1e-10);
            assert!((p.generator.matrix() * q).norm() < 1e-10);
            assert!((q * p.generator.matrix()).norm() < 1e-10);
        }
    }

    #[test]
    fn pure_commutator_has_degenerate_kernel() {
        let g = build_lindblad(&LindbladSpec::new(on0(pauli::sigma_z()), alloc::vec![])).unwrap();
        assert_eq!(spectral_profile(&g).unwrap_err(), Error::DegenerateKernel { multiplicity: 2 });
    }

    #[test]
    fn certification_is_monotone_in_rate() {
        let p = spectral_profile(&ising(0.3)).unwrap();
        let zero = certify_m(&p, 0.0).unwrap();
        assert!(zero >= 1.0);
        let mid = certify_m(&p, 0.25).unwrap();
        assert!(zero <= mid && mid <= p.amplitude_m);
        assert!(matches!(certify_m(&p, 0.6), Err(Error::RateExceedsGap { .. })));
    }
}
