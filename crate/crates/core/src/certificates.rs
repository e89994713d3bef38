//! Explicit constants of the relaxation theorem and their feasibility checks.
//!
//! Pure arithmetic; no linear algebra.

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

const LN_2: f64 = core::f64::consts::LN_2;

/// Which relation ties the decay lengths together.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMode {
    /// `1/l = log 2 + 1/l′`, `l″ = l′`, per-site factor 1.
    Theorem,
    /// `1/l = log 2 + log(M+1)(1 + 1/l′)`, `1/l″ = log(M+1)(1 + 1/l′)`, factor `M+1`.
    General,
    /// Nearest-neighbour style regime: `ε` is the interaction norm at `l′`
    /// itself, with no `log 2` shift, so `l = l″ = l′`.
    FiniteRange,
}

/// The constants `l, l′, l″, g, g′, ε, M, K, C` of one certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParameters {
    pub l: f64,
    pub l_prime: f64,
    pub l_dprime: f64,
    pub g: f64,
    pub g_prime: f64,
    pub epsilon: f64,
    pub m: f64,
    /// `K = (g−g′)/(g−g′−ε)`.
    pub k: f64,
    /// Constant in front of `C^{|X|}` in the relaxation, volume and
    /// correlation bounds; `max(1, 2(M+1))`, traced through the proof.
    pub c: f64,
    /// Per-site factor of the diagram majorant (1, or `M+1` in general mode).
    pub lemma_factor: f64,
    pub mode: BoundMode,
}

impl BoundParameters {
    /// `r = ε/(g−g′)`.
    pub fn ratio(&self) -> f64 {
        self.epsilon / (self.g - self.g_prime)
    }
}

fn check_rates(g: f64, g_prime: f64, epsilon: f64, m: f64) -> Result<()> {
    if !(g > 0.0) {
        return Err(Error::HypothesisViolation { inequality: "g > 0", lhs: g, rhs: 0.0 });
    }
    if !(g_prime > 0.0 && g_prime < g) {
        return Err(Error::HypothesisViolation { inequality: "0 < g' < g", lhs: g_prime, rhs: g });
    }
    if !(epsilon >= 0.0) {
        return Err(Error::HypothesisViolation { inequality: "epsilon >= 0", lhs: epsilon, rhs: 0.0 });
    }
    if !(m >= 1.0) {
        return Err(Error::HypothesisViolation { inequality: "M >= 1", lhs: m, rhs: 1.0 });
    }
    if !(epsilon < g - g_prime) {
        return Err(Error::HypothesisViolation { inequality: "epsilon < g - g'", lhs: epsilon, rhs: g - g_prime });
    }
    Ok(())
}

fn theorem_c(m: f64) -> f64 {
    (2.0 * (m + 1.0)).max(1.0)
}

/// Fills in `l′, l″, K, C` from `l, g, g′, ε, M`.
///
/// # Errors
/// `HypothesisViolation` naming the failed inequality. `FiniteRange` mode
/// is not derived from `l`; use [`finite_range_parameters`].
pub fn derive_parameters(l: f64, g: f64, g_prime: f64, epsilon: f64, m: f64, mode: BoundMode) -> Result<BoundParameters> {
    if !(l > 0.0) {
        return Err(Error::HypothesisViolation { inequality: "l > 0", lhs: l, rhs: 0.0 });
    }
    let inv_l = 1.0 / l;
    if !(inv_l > LN_2) {
        return Err(Error::HypothesisViolation { inequality: "1/l > log 2", lhs: inv_l, rhs: LN_2 });
    }
    check_rates(g, g_prime, epsilon, m)?;
    let (l_prime, l_dprime, lemma_factor) = match mode {
        BoundMode::Theorem => {
            let lp = 1.0 / (inv_l - LN_2);
            (lp, lp, 1.0)
        }
        BoundMode::General => {
            let log_m = (m + 1.0).ln();
            let inv_lp = (inv_l - LN_2) / log_m - 1.0;
            if !(inv_lp > 0.0) {
                return Err(Error::HypothesisViolation {
                    inequality: "1/l > log 2 + log(M+1)",
                    lhs: inv_l,
                    rhs: LN_2 + log_m,
                });
            }
            (1.0 / inv_lp, 1.0 / (log_m * (1.0 + inv_lp)), m + 1.0)
        }
        BoundMode::FiniteRange => {
            return Err(Error::InvalidArgument("finite-range parameters are built from l' directly".into()))
        }
    };
    Ok(BoundParameters {
        l,
        l_prime,
        l_dprime,
        g,
        g_prime,
        epsilon,
        m,
        k: (g - g_prime) / (g - g_prime - epsilon),
        c: theorem_c(m),
        lemma_factor,
        mode,
    })
}

/// Parameters for the finite-range regime, with `ε` the interaction norm
/// evaluated at the target decay length `l′`.
///
/// # Errors
/// `HypothesisViolation` when `ε ≥ g − g′` or `l′ ≤ 0`.
pub fn finite_range_parameters(l_prime: f64, g: f64, g_prime: f64, epsilon: f64, m: f64) -> Result<BoundParameters> {
    if !(l_prime > 0.0) {
        return Err(Error::HypothesisViolation { inequality: "l' > 0", lhs: l_prime, rhs: 0.0 });
    }
    check_rates(g, g_prime, epsilon, m)?;
    Ok(BoundParameters {
        l: l_prime,
        l_prime,
        l_dprime: l_prime,
        g,
        g_prime,
        epsilon,
        m,
        k: (g - g_prime) / (g - g_prime - epsilon),
        c: theorem_c(m),
        lemma_factor: 1.0,
        mode: BoundMode::FiniteRange,
    })
}

/// Bound on the orders beyond `n_max`: `F^x 2^x r^{n_max+1}/(1−r)` with
/// `F` the per-site factor.
///
/// # Errors
/// `DivergentSeries` if `r ≥ 1`.
pub fn truncation_tail(params: &BoundParameters, n_max: usize, x_size: usize) -> Result<f64> {
    let r = params.ratio();
    if !(r < 1.0) {
        return Err(Error::DivergentSeries { ratio: r });
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let exponent = i32::try_from(n_max.saturating_add(1)).unwrap_or(i32::MAX);
    let prefactor = (2.0 * params.lemma_factor).powi(x_size as i32);
    Ok(prefactor * r.powi(exponent) / (1.0 - r))
}

/// Majorant of the order-`n` contribution: `F^x 2^x r^n`.
pub fn order_majorant(params: &BoundParameters, order: usize, x_size: usize) -> f64 {
    (2.0 * params.lemma_factor).powi(x_size as i32) * params.ratio().powi(order as i32)
}

/// Largest admissible `|||V|||_0`: `(g−g′) e^{−R^d/l′}`.
pub fn finite_range_window(range: u32, lattice_dim: u32, l_prime: f64, g: f64, g_prime: f64) -> f64 {
    let volume = (range as f64).powi(lattice_dim as i32);
    (g - g_prime) * (-volume / l_prime).exp()
}

/// The bound shapes of the relaxation, volume and correlation estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCurves {
    pub k: f64,
    pub c: f64,
    pub g_prime: f64,
    pub l_prime: f64,
    pub x_size: usize,
    pub y_size: Option<usize>,
}

impl BoundCurves {
    /// `K e^{−g′t} C^x`.
    pub fn relaxation(&self, t: f64) -> f64 {
        self.k * (-self.g_prime * t).exp() * self.c.powi(self.x_size as i32)
    }

    /// `(K−1) e^{−d/l′} C^x`.
    pub fn volume(&self, d: f64) -> f64 {
        (self.k - 1.0) * (-d / self.l_prime).exp() * self.c.powi(self.x_size as i32)
    }

    /// `(K−1) e^{−d/l′} C^{x+y}`; `None` without a second support.
    pub fn correlation(&self, d: f64) -> Option<f64> {
        let y = self.y_size?;
        Some((self.k - 1.0) * (-d / self.l_prime).exp() * self.c.powi((self.x_size + y) as i32))
    }
}

pub fn bound_curves(params: &BoundParameters, x_size: usize, y_size: Option<usize>) -> BoundCurves {
    BoundCurves { k: params.k, c: params.c, g_prime: params.g_prime, l_prime: params.l_prime, x_size, y_size }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn theorem_mode_examples() {
        let p = derive_parameters(1.0 / (LN_2 + 1.0), 0.5, 0.25, 0.1, 4.0, BoundMode::Theorem).unwrap();
        assert!((p.l_prime - 1.0).abs() < 1e-14);
        assert!((p.k - 5.0 / 3.0).abs() < 1e-14);
        assert_eq!(p.l_dprime, p.l_prime);
        assert_eq!(p.c, 10.0);
        let err = derive_parameters(1.0 / LN_2, 0.5, 0.25, 0.1, 4.0, BoundMode::Theorem).unwrap_err();
        assert!(matches!(err, Error::HypothesisViolation { inequality: "1/l > log 2", .. }));
        let err = derive_parameters(0.5, 0.5, 0.25, 0.25, 4.0, BoundMode::Theorem).unwrap_err();
        assert!(matches!(err, Error::HypothesisViolation { inequality: "epsilon < g - g'", .. }));
    }

    #[test]
    fn general_mode_relation() {
        let m: f64 = 4.0;
        let inv_lp = 0.5;
        let inv_l = LN_2 + (m + 1.0).ln() * (1.0 + inv_lp);
        let p = derive_parameters(1.0 / inv_l, 0.5, 0.2, 0.1, m, BoundMode::General).unwrap();
        assert!((1.0 / p.l_prime - inv_lp).abs() < 1e-13);
        assert!((1.0 / p.l - (LN_2 + 1.0 / p.l_dprime)).abs() < 1e-14);
        assert_eq!(p.lemma_factor, 5.0);
    }

    #[test]
    fn tail_examples() {
        let mut p = derive_parameters(0.5, 0.5, 0.0 + 1e-300, 0.2, 1.0, BoundMode::Theorem).unwrap();
        p.epsilon = 0.4 * (p.g - p.g_prime);
        let tail = truncation_tail(&p, 3, 1).unwrap();
        assert!((tail - 2.0 * 0.4f64.powi(4) / 0.6).abs() < 1e-15);
        assert_eq!(truncation_tail(&p, usize::MAX, 1).unwrap(), 0.0);
        p.epsilon = 0.0;
        assert_eq!(truncation_tail(&p, 0, 3).unwrap(), 0.0);
        p.epsilon = p.g;
        assert!(matches!(truncation_tail(&p, 3, 1), Err(Error::DivergentSeries { .. })));
    }

    #[test]
    fn finite_range_examples() {
        assert!((finite_range_window(1, 1, 1.0, 0.25, 0.0) - 0.25 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((finite_range_window(1, 1, 1e12, 0.5, 0.25) - 0.25).abs() < 1e-11);
        let ising_window = finite_range_window(1, 1, 1.0 / (2.0 * LN_2), 0.5, 0.0);
        assert!((ising_window - 0.125).abs() < 1e-15);
        assert!(2.0 * 0.05 < ising_window);
    }

    #[test]
    fn curve_shapes() {
        let p = derive_parameters(0.5, 0.5, 0.25, 0.1, 1.0, BoundMode::Theorem).unwrap();
        let curves = bound_curves(&p, 1, Some(1));
        assert!((curves.relaxation(0.0) - p.k * p.c).abs() < 1e-14);
        assert!((curves.correlation(0.0).unwrap() - (p.k - 1.0) * p.c * p.c).abs() < 1e-14);
        assert!(curves.relaxation(1.0) < curves.relaxation(0.5));
        assert!(curves.volume(2.0) < curves.volume(1.0));
    }

    proptest! {
        #[test]
        fn derived_constants_match_closed_forms(inv_l in 0.70f64..5.0, eps_frac in 0.0f64..0.99, gp_frac in 0.01f64..0.99) {
            prop_assume!(inv_l > LN_2);
            let g = 0.5;
            let g_prime = gp_frac * g;
            let epsilon = eps_frac * (g - g_prime);
            let p = derive_parameters(1.0 / inv_l, g, g_prime, epsilon, 4.0, BoundMode::Theorem).unwrap();
            let lp = 1.0 / (inv_l - LN_2);
            prop_assert!((p.l_prime - lp).abs() <= 1e-14 * lp.max(1.0));
            let k = (g - g_prime) / (g - g_prime - epsilon);
            prop_assert!((p.k - k).abs() <= 1e-14 * k);
            prop_assert!((1.0 / p.l - (LN_2 + 1.0 / p.l_dprime)).abs() <= 1e-14 * inv_l);
        }

        #[test]
        fn tail_monotone(n in 0usize..30, eps_a in 0.0f64..0.2, eps_b in 0.0f64..0.2) {
            let lo = eps_a.min(eps_b);
            let hi = eps_a.max(eps_b);
            let pa = derive_parameters(0.5, 0.5, 0.25, lo, 1.0, BoundMode::Theorem).unwrap();
            let pb = derive_parameters(0.5, 0.5, 0.25, hi, 1.0, BoundMode::Theorem).unwrap();
            prop_assert!(truncation_tail(&pa, n, 1).unwrap() <= truncation_tail(&pb, n, 1).unwrap());
            prop_assert!(truncation_tail(&pb, n + 1, 1).unwrap() <= truncation_tail(&pb, n, 1).unwrap());
        }
    }
}
