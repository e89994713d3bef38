//! Diagnostics comparing exact finite-volume data with bound curves.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::algebra::{LocalOperator, Volume};
use crate::certificates::BoundCurves;
use crate::error::{Error, Result};
use crate::generators::InteractionFamily;
use crate::linalg::{self, CMatrix, C64};
use crate::parallel;

use super::evolve::evolve_heisenberg;
use super::generator::FiniteVolumeGenerator;
use super::model::LatticeModel;
use super::stationary::{stationary_state, StationaryState};

/// Values below this are treated as numerical zero in logarithmic fits.
pub const FIT_FLOOR: f64 = 1e-13;
const FIT_SKIP_HEAD: f64 = 0.2;
const FIT_SKIP_TAIL: f64 = 0.1;
const LR_MIN_POINTS: usize = 6;

/// Least-squares fit `ln y ≈ intercept − rate · t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialFit {
    pub rate: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Fits an exponential decay rate over the window that drops the first 20%
/// and last 10% of samples and any value below [`FIT_FLOOR`]. `None` when
/// fewer than two points remain.
pub fn fit_decay_rate(times: &[f64], values: &[f64]) -> Option<ExponentialFit> {
    let n = times.len().min(values.len());
    let head = (FIT_SKIP_HEAD * n as f64).floor() as usize;
    let tail = n - (FIT_SKIP_TAIL * n as f64).floor() as usize;
    let points: Vec<(f64, f64)> = (head..tail)
        .filter(|&k| values[k] >= FIT_FLOOR)
        .map(|k| (times[k], values[k].ln()))
        .collect();
    let (slope, intercept) = line_fit(&points)?;
    Some(ExponentialFit { rate: -slope, intercept, points: points.len() })
}

fn line_fit(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationRow {
    pub t: f64,
    /// `‖e^{tL}(A) − ρ(A)1‖`.
    pub value: f64,
    /// `K e^{−g′t} C^{|X|} ‖A‖` when bound curves are supplied.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationProfile {
    pub rows: Vec<RelaxationRow>,
    pub fit: Option<ExponentialFit>,
    /// Whether every value lies below its bound; `None` without bounds.
    pub dominated: Option<bool>,
    pub stationary_value: C64,
}

/// Distance of `e^{tL}(A)` from its limit `ρ(A)1` on a time grid.
///
/// # Errors
/// `DegenerateKernel` when the stationary state is not unique; errors from
/// evolution and the stationary solve.
pub fn relaxation_profile(
    gen: &FiniteVolumeGenerator,
    a: &LocalOperator,
    times: &[f64],
    curves: Option<&BoundCurves>,
) -> Result<RelaxationProfile> {
    let state = unique_state(gen)?;
    let rho_a = state.expectation(a)?;
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidArgument("negative time".into()));
    }
    let a_norm = linalg::spectral_norm(a.matrix());
    let d = gen.hilbert_dim();
    let limit = CMatrix::identity(d, d) * rho_a;
    let mut current = a.embed(gen.volume())?;
    let mut now = 0.0;
    let mut rows = Vec::with_capacity(sorted.len());
    for &t in &sorted {
        current = evolve_heisenberg(gen, &current, t - now)?;
        now = t;
        let value = linalg::spectral_norm(&(current.matrix() - &limit));
        rows.push(RelaxationRow { t, value, bound: curves.map(|c| c.relaxation(t) * a_norm) });
    }
    let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let fit = fit_decay_rate(&sorted, &values);
    let dominated = curves.map(|_| rows.iter().all(|r| r.value <= r.bound.unwrap_or(f64::INFINITY)));
    Ok(RelaxationProfile { rows, fit, dominated, stationary_value: rho_a })
}

fn unique_state(gen: &FiniteVolumeGenerator) -> Result<StationaryState> {
    let state = stationary_state(gen)?;
    if !state.is_unique() {
        return Err(Error::DegenerateKernel { multiplicity: state.kernel_dimension });
    }
    Ok(state)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeRow {
    pub volume: Volume,
    /// `d(X, Λ^c)` for the smaller volume of the pair.
    pub distance: u64,
    /// `‖e^{tL_Λ}(A) − e^{tL_{Λ'}}(A)‖` with `Λ'` the next volume.
    pub difference: f64,
    /// `(K−1) e^{−d/l′} C^{|X|} ‖A‖` when bound curves are supplied.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeConvergence {
    pub rows: Vec<VolumeRow>,
    pub dominated: Option<bool>,
}

/// Successive differences of the evolved observable over nested volumes.
///
/// # Errors
/// `SupportNotContained` unless the volumes are nested and contain
/// `supp(A)`; errors from assembly and evolution.
pub fn volume_convergence(
    model: &LatticeModel,
    a: &LocalOperator,
    volumes: &[Volume],
    t: f64,
    curves: Option<&BoundCurves>,
) -> Result<VolumeConvergence> {
    check_nested(a.support(), volumes)?;
    let evolved = parallel::map(volumes, |v| -> Result<LocalOperator> {
        let gen = model.assemble(v)?;
        evolve_heisenberg(&gen, a, t)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let a_norm = linalg::spectral_norm(a.matrix());
    let mut rows = Vec::new();
    for k in 0..volumes.len().saturating_sub(1) {
        let small = evolved[k].embed(&volumes[k + 1])?;
        let difference = linalg::spectral_norm(&(small.matrix() - evolved[k + 1].matrix()));
        let distance = a.support().distance_to_complement(&volumes[k]);
        let bound = curves.map(|c| c.volume(distance as f64) * a_norm);
        rows.push(VolumeRow { volume: volumes[k].clone(), distance, difference, bound });
    }
    let dominated = curves.map(|_| rows.iter().all(|r| r.difference <= r.bound.unwrap_or(f64::INFINITY)));
    Ok(VolumeConvergence { rows, dominated })
}

fn check_nested(support: &Volume, volumes: &[Volume]) -> Result<()> {
    for (k, v) in volumes.iter().enumerate() {
        if !support.is_subset(v) {
            return Err(Error::SupportNotContained { inner: format!("{support}"), outer: format!("{v}") });
        }
        if k > 0 && !volumes[k - 1].is_subset(v) {
            return Err(Error::SupportNotContained { inner: format!("{}", volumes[k - 1]), outer: format!("{v}") });
        }
    }
    Ok(())
}

/// `ρ(AB) − ρ(A)ρ(B)`.
///
/// # Errors
/// `OverlappingSupport` when the supports meet; `SupportNotContained` when
/// either leaves the state's volume.
pub fn truncated_correlation(state: &StationaryState, a: &LocalOperator, b: &LocalOperator) -> Result<C64> {
    if a.support().intersects(b.support()) {
        return Err(Error::OverlappingSupport);
    }
    let ab = a.mul(b)?;
    Ok(state.expectation(&ab)? - state.expectation(a)? * state.expectation(b)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySensitivity {
    /// `|σ(A) − ρ(A)|`, maximized over a kernel basis when `σ` is not unique.
    pub difference: f64,
    /// `d(supp A, bulk^c)`.
    pub distance: u64,
    pub kernel_dimension: usize,
    /// Set when the boundary-perturbed state is not unique.
    pub flagged: bool,
}

/// Compares the stationary state of `L_{outer}` with and without boundary
/// terms `W` in `outer ∖ bulk`.
///
/// # Errors
/// `SupportNotContained` unless `supp(A) ⊆ bulk ⊆ outer`; errors from
/// assembly and the stationary solves.
pub fn boundary_sensitivity(
    model: &LatticeModel,
    a: &LocalOperator,
    bulk: &Volume,
    outer: &Volume,
    boundary: &InteractionFamily,
) -> Result<BoundarySensitivity> {
    check_nested(a.support(), &[bulk.clone(), outer.clone()])?;
    let perturbed = stationary_state(&model.assemble_with_boundary(bulk, outer, boundary)?)?;
    let reference = unique_state(&model.assemble(outer)?)?;
    let rho_a = reference.expectation(a)?;
    let distance = a.support().distance_to_complement(bulk);
    if perturbed.is_unique() {
        let difference = (perturbed.expectation(a)? - rho_a).norm();
        return Ok(BoundarySensitivity { difference, distance, kernel_dimension: 1, flagged: false });
    }
    let mut difference = 0.0f64;
    for sigma in &perturbed.kernel_basis {
        let tr = linalg::trace(sigma);
        if tr.norm() < 1e-10 {
            continue;
        }
        let value = a.expectation(&(sigma / tr), outer)?;
        difference = difference.max((value - rho_a).norm());
    }
    Ok(BoundarySensitivity { difference, distance, kernel_dimension: perturbed.kernel_dimension, flagged: true })
}

/// Empirical Lieb-Robinson fit `ln D ≈ α − μ d + μ v t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LightConeFit {
    pub mu: f64,
    pub velocity: f64,
    /// Root-mean-square residual of the logarithmic fit.
    pub residual: f64,
    /// Samples used in the fit (differences above [`FIT_FLOOR`]).
    pub points: usize,
    /// Set when too few differences are nonzero to determine the fit.
    pub degenerate: bool,
    /// `(d, t, D)` for every sample.
    pub table: Vec<(u64, f64, f64)>,
}

/// Fits `D(d, t) = ‖e^{tL_{Λ,Λ'}}(A) − e^{tL_Λ}(A)‖` over bulk volumes `Λ`
/// inside a fixed `outer` volume `Λ'`, where `L_{Λ,Λ'}` adds the boundary
/// terms in `Λ' ∖ Λ`.
///
/// # Errors
/// `InsufficientData` below six samples; nesting and solver errors.
pub fn lr_velocity_fit(
    model: &LatticeModel,
    a: &LocalOperator,
    times: &[f64],
    bulks: &[Volume],
    outer: &Volume,
    boundary: &InteractionFamily,
) -> Result<LightConeFit> {
    let total = times.len() * bulks.len();
    if total < LR_MIN_POINTS {
        return Err(Error::InsufficientData { got: total, needed: LR_MIN_POINTS });
    }
    let mut chain = bulks.to_vec();
    chain.push(outer.clone());
    check_nested(a.support(), &chain)?;
    let rows = parallel::map(bulks, |bulk| -> Result<Vec<(u64, f64, f64)>> {
        let inner = model.assemble(bulk)?;
        let perturbed = model.assemble_with_boundary(bulk, outer, boundary)?;
        let d = a.support().distance_to_complement(bulk);
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            let x = evolve_heisenberg(&inner, a, t)?.embed(outer)?;
            let y = evolve_heisenberg(&perturbed, a, t)?;
            out.push((d, t, linalg::spectral_norm(&(x.matrix() - y.matrix()))));
        }
        Ok(out)
    });
    let mut table = Vec::with_capacity(total);
    for r in rows {
        table.extend(r?);
    }
    let samples: Vec<(u64, f64, f64)> = table.iter().copied().filter(|s| s.2 >= FIT_FLOOR).collect();
    let points = samples.len();
    let degenerate_fit = |table| LightConeFit { mu: 0.0, velocity: 0.0, residual: 0.0, points, degenerate: true, table };
    if samples.len() < 3 {
        return Ok(degenerate_fit(table));
    }
    // Normal equations for ln D = α + β d + γ t.
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut atb = nalgebra::Vector3::<f64>::zeros();
    for s in &samples {
        let row = nalgebra::Vector3::new(1.0, s.0 as f64, s.1);
        ata += row * row.transpose();
        atb += row * s.2.ln();
    }
    let Some(coef) = ata.lu().solve(&atb) else {
        return Ok(degenerate_fit(table));
    };
    let mu = -coef[1];
    let velocity = if mu != 0.0 { coef[2] / mu } else { 0.0 };
    let sq: f64 = samples
        .iter()
        .map(|s| {
            let r = s.2.ln() - (coef[0] + coef[1] * s.0 as f64 + coef[2] * s.1);
            r * r
        })
        .sum();
    let residual = (sq / points as f64).sqrt();
    Ok(LightConeFit { mu, velocity, residual, points, degenerate: false, table })
}
