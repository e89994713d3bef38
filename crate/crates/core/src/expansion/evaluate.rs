//! Resolvent-chain evaluation of stationary diagram terms and the
//! certified sums built from them.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::basis::{adapted_coefficients, to_site_major, AdaptedBases};
use super::diagram::{check_diagram, enumerate_diagrams, Diagram, Enumeration};
use super::resolvent::excited_resolvent;
use crate::algebra::{vectorize, LocalOperator, LocalSuperoperator, Volume};
use crate::certificates::{order_majorant, truncation_tail, BoundMode, BoundParameters};
use crate::error::{Error, Result};
use crate::generators::{interaction_norm, InteractionFamily, ProfileSet};
use crate::linalg::{self, CMatrix, C64, ZERO};
use crate::parallel;

const HYPOTHESIS_SLACK: f64 = 1e-12;

/// An expansion estimate with its certified error bound.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifiedValue {
    pub value: C64,
    /// Bound on the discarded orders plus the mass cut by the weight floor.
    pub truncation_bound: f64,
    pub order_used: usize,
    pub diagram_count: usize,
    /// Partial sums by order; entry 0 is the product-state term.
    pub order_sums: Vec<C64>,
    /// Majorant mass of the diagrams cut by the weight floor.
    pub pruned_mass: f64,
}

/// `V(Γ)`: the sum of the family's terms supported exactly on `Γ`.
pub(crate) fn coupling_on(fam: &InteractionFamily, gamma: &Volume, q: usize) -> Result<LocalSuperoperator> {
    fam.terms_within(gamma)
        .iter()
        .filter(|t| t.support() == gamma)
        .try_fold(LocalSuperoperator::zero(gamma.clone(), q), |acc, t| acc.add(t.map()))
}

fn digits(mut flat: usize, radix: usize, n: usize) -> Vec<usize> {
    let mut out = alloc::vec![0; n];
    for k in (0..n).rev() {
        out[k] = flat % radix;
        flat /= radix;
    }
    out
}

fn compose(digits: impl IntoIterator<Item = usize>, radix: usize) -> usize {
    digits.into_iter().fold(0, |acc, d| acc * radix + d)
}

/// Cached adapted-coordinate matrices for a batch of diagrams.
pub(crate) struct Evaluator {
    bases: AdaptedBases,
    resolvents: BTreeMap<Volume, CMatrix>,
    couplings: BTreeMap<Volume, CMatrix>,
}

impl Evaluator {
    pub(crate) fn new(profiles: &ProfileSet) -> Result<Self> {
        Ok(Evaluator { bases: AdaptedBases::new(profiles)?, resolvents: BTreeMap::new(), couplings: BTreeMap::new() })
    }

    pub(crate) fn bases(&self) -> &AdaptedBases {
        &self.bases
    }

    fn resolvent_key(&self, e: &Volume) -> Volume {
        if self.bases.is_uniform() {
            Volume::chain(0, e.len())
        } else {
            e.clone()
        }
    }

    /// Computes every `R(E)` and `V′(Γ)` the diagrams need.
    pub(crate) fn prepare<'a>(&mut self, diags: impl IntoIterator<Item = &'a Diagram>, fam: &InteractionFamily) -> Result<()> {
        let q = self.bases.q();
        for d in diags {
            for e in d.ees.iter().filter(|e| !e.is_empty()) {
                let key = self.resolvent_key(e);
                if !self.resolvents.contains_key(&key) {
                    let r = excited_resolvent(&self.bases, e)?;
                    self.resolvents.insert(key, r);
                }
            }
            for g in &d.gammas {
                if !self.couplings.contains_key(g) {
                    let v = coupling_on(fam, g, q)?;
                    let (t, t_inv) = self.bases.change_on(g)?;
                    let adapted = t_inv * to_site_major(v.matrix(), q, g.len()) * t;
                    self.couplings.insert(g.clone(), adapted);
                }
            }
        }
        Ok(())
    }

    fn apply_resolvent(&self, e: &Volume, tensor: &[C64]) -> Vec<C64> {
        if e.is_empty() {
            return tensor.to_vec();
        }
        let r = &self.resolvents[&self.resolvent_key(e)];
        (r * linalg::CVector::from_column_slice(tensor)).as_slice().to_vec()
    }

    /// Excited tensor on `E_{n+1}` after the full resolvent chain;
    /// `coef` holds the adapted coefficients of the observable on `x`.
    pub(crate) fn chain(&self, diag: &Diagram, x: &Volume, coef: &[C64]) -> Vec<C64> {
        let radix = self.bases.q() * self.bases.q();
        let m = radix - 1;
        let e1 = &diag.ees[0];
        let mut tensor: Vec<C64> = (0..m.pow(e1.len() as u32))
            .map(|flat| {
                let d = digits(flat, m, e1.len());
                let mut it = d.iter();
                let full = x.iter().map(|s| if e1.contains(s) { it.next().map_or(0, |v| v + 1) } else { 0 });
                coef[compose(full, radix)]
            })
            .collect();
        tensor = self.apply_resolvent(e1, &tensor);
        for (gamma, pair) in diag.gammas.iter().zip(diag.ees.windows(2)) {
            tensor = self.step(gamma, &pair[0], &pair[1], &tensor);
            tensor = self.apply_resolvent(&pair[1], &tensor);
        }
        tensor
    }

    /// `P(E′) V(Γ)` restricted to pattern `E` on the input side.
    fn step(&self, gamma: &Volume, e: &Volume, next: &Volume, tensor: &[C64]) -> Vec<C64> {
        let radix = self.bases.q() * self.bases.q();
        let m = radix - 1;
        let v = &self.couplings[gamma];
        let spectators = e.difference(gamma);
        let in_part = e.intersection(gamma);
        let out_part = next.intersection(gamma);
        let pattern_index = |part: &Volume, flat: usize| {
            let d = digits(flat, m, part.len());
            let mut it = d.iter();
            compose(gamma.iter().map(|s| if part.contains(s) { it.next().map_or(0, |v| v + 1) } else { 0 }), radix)
        };
        let n_in = m.pow(in_part.len() as u32);
        let n_out = m.pow(out_part.len() as u32);
        let n_spec = m.pow(spectators.len() as u32);
        let cols: Vec<usize> = (0..n_in).map(|p| pattern_index(&in_part, p)).collect();
        let rows: Vec<usize> = (0..n_out).map(|p| pattern_index(&out_part, p)).collect();
        let sub = CMatrix::from_fn(n_out, n_in, |r, c| v[(rows[r], cols[c])]);

        let mut input = CMatrix::zeros(n_in, n_spec);
        for (flat, &val) in tensor.iter().enumerate() {
            let d = digits(flat, m, e.len());
            let (mut pat, mut spec) = (0, 0);
            for (s, digit) in e.iter().zip(d) {
                if gamma.contains(s) {
                    pat = pat * m + digit;
                } else {
                    spec = spec * m + digit;
                }
            }
            input[(pat, spec)] = val;
        }
        let output = sub * input;
        let mut out = alloc::vec![ZERO; m.pow(next.len() as u32)];
        for spec in 0..n_spec {
            let sd = digits(spec, m, spectators.len());
            for pat in 0..n_out {
                let pd = digits(pat, m, out_part.len());
                let (mut si, mut pi) = (sd.iter(), pd.iter());
                let flat = compose(
                    next.iter().map(|s| if gamma.contains(s) { *pi.next().unwrap_or(&0) } else { *si.next().unwrap_or(&0) }),
                    m,
                );
                out[flat] = output[(pat, spec)];
            }
        }
        out
    }
}

fn observable_coefficients(bases: &AdaptedBases, a: &LocalOperator) -> Result<Vec<C64>> {
    adapted_coefficients(bases, a.support(), vectorize(a.matrix()).as_slice())
}

/// The scalar `c` with `Q V(Γ_n) R(E_n) ⋯ V(Γ_1) R(E_1)(A) = c·1`.
///
/// # Errors
/// `ConstraintViolation` for an invalid or non-stationary diagram;
/// `SingularRestriction` from the resolvents.
pub fn stationary_term(diag: &Diagram, a: &LocalOperator, profiles: &ProfileSet, fam: &InteractionFamily) -> Result<C64> {
    check_diagram(diag, a.support())?;
    if !diag.is_stationary() {
        return Err(Error::ConstraintViolation("stationary terms need E_{n+1} empty"));
    }
    let mut ev = Evaluator::new(profiles)?;
    ev.prepare([diag], fam)?;
    let coef = observable_coefficients(ev.bases(), a)?;
    Ok(ev.chain(diag, a.support(), &coef)[0])
}

fn check_hypotheses(profiles: &ProfileSet, fam: &InteractionFamily, params: &BoundParameters) -> Result<()> {
    if params.mode == BoundMode::FiniteRange {
        return Err(Error::InvalidArgument("the expansion needs theorem or general parameters".into()));
    }
    let r = params.ratio();
    if !(r < 1.0) {
        return Err(Error::DivergentSeries { ratio: r });
    }
    let norm = interaction_norm(fam, params.l);
    if norm > params.epsilon * (1.0 + HYPOTHESIS_SLACK) {
        return Err(Error::HypothesisViolation { inequality: "|||V|||_l <= epsilon", lhs: norm, rhs: params.epsilon });
    }
    let gap = profiles.min_gap();
    if params.g > gap * (1.0 + HYPOTHESIS_SLACK) {
        return Err(Error::HypothesisViolation { inequality: "g <= single-site gap", lhs: params.g, rhs: gap });
    }
    let amplitude = profiles.max_amplitude();
    if amplitude > params.m * (1.0 + HYPOTHESIS_SLACK) {
        return Err(Error::HypothesisViolation { inequality: "M >= certified amplitude", lhs: params.m, rhs: amplitude });
    }
    Ok(())
}

/// Per-order sums of the stationary terms, summed pairwise in emission order.
pub(crate) fn order_sums(
    a: &LocalOperator,
    profiles: &ProfileSet,
    fam: &InteractionFamily,
    enumeration: &Enumeration,
    n_max: usize,
) -> Result<(C64, Vec<C64>, usize)> {
    let stationary: Vec<&Diagram> = enumeration.stationary().map(|(d, _)| d).collect();
    let mut ev = Evaluator::new(profiles)?;
    ev.prepare(stationary.iter().copied(), fam)?;
    let coef = observable_coefficients(ev.bases(), a)?;
    let x = a.support();
    let terms = parallel::map(&stationary, |d| ev.chain(d, x, &coef)[0]);
    let mut sums = alloc::vec![ZERO; n_max + 1];
    sums[0] = coef[0];
    let mut start = 0;
    while start < stationary.len() {
        let order = stationary[start].order();
        let end = start + stationary[start..].iter().take_while(|d| d.order() == order).count();
        sums[order] = linalg::pairwise_sum(&terms[start..end]);
        start = end;
    }
    Ok((coef[0], sums, stationary.len()))
}

/// `ρ(A)` in infinite volume, expanded to order `n_max` around the
/// product of single-site stationary states.
///
/// # Errors
/// `HypothesisViolation` or `DivergentSeries` when the parameters do not
/// certify the model; `SingularRestriction` from the resolvents.
pub fn stationary_expectation(
    a: &LocalOperator,
    profiles: &ProfileSet,
    fam: &InteractionFamily,
    n_max: usize,
    weight_floor: f64,
    params: &BoundParameters,
) -> Result<CertifiedValue> {
    check_hypotheses(profiles, fam, params)?;
    let x = a.support();
    let enumeration = enumerate_diagrams(x, fam, n_max, weight_floor, params);
    let (_, sums, count) = order_sums(a, profiles, fam, &enumeration, n_max)?;
    let value = sums.iter().fold(ZERO, |acc, &s| acc + s);
    let norm = a.norm();
    let per_site = params.lemma_factor.powi(x.len() as i32);
    let truncation_bound = truncation_tail(params, n_max, x.len())? * norm + enumeration.pruned_mass * per_site * norm;
    Ok(CertifiedValue {
        value,
        truncation_bound,
        order_used: n_max,
        diagram_count: count,
        order_sums: sums,
        pruned_mass: enumeration.pruned_mass,
    })
}

/// `ρ(AB) − ρ(A)ρ(B)` to order `n_max`: `Σ_{k≤n} c_k(AB) − Σ_{i+j≤n} a_i b_j`.
///
/// # Errors
/// `OverlappingSupport` unless the supports are disjoint; otherwise as
/// [`stationary_expectation`].
pub fn correlation_estimate(
    a: &LocalOperator,
    b: &LocalOperator,
    profiles: &ProfileSet,
    fam: &InteractionFamily,
    n_max: usize,
    weight_floor: f64,
    params: &BoundParameters,
) -> Result<CertifiedValue> {
    if a.support().intersects(b.support()) {
        return Err(Error::OverlappingSupport);
    }
    let xy = a.support().union(b.support());
    let ab = a.embed(&xy)?.mul(&b.embed(&xy)?)?;
    let joint = stationary_expectation(&ab, profiles, fam, n_max, weight_floor, params)?;
    let left = stationary_expectation(a, profiles, fam, n_max, weight_floor, params)?;
    let right = stationary_expectation(b, profiles, fam, n_max, weight_floor, params)?;

    // Product states carry no correlations between disjoint supports.
    let order_sums: Vec<C64> = (0..=n_max)
        .map(|k| {
            if k == 0 {
                return ZERO;
            }
            let cross: Vec<C64> = (0..=k).map(|i| left.order_sums[i] * right.order_sums[k - i]).collect();
            joint.order_sums[k] - linalg::pairwise_sum(&cross)
        })
        .collect();
    let reach = (n_max as u64).saturating_mul(fam.max_diameter());
    let value = if a.support().distance(b.support()) > reach {
        ZERO
    } else {
        order_sums.iter().fold(ZERO, |acc, &s| acc + s)
    };

    let (nx, ny) = (a.support().len(), b.support().len());
    let (na, nb) = (a.norm(), b.norm());
    let full = |x_size: usize| (0..=n_max).map(|i| order_majorant(params, i, x_size)).sum::<f64>() + truncation_tail(params, n_max, x_size).unwrap_or(f64::INFINITY);
    let (sa, sb) = (full(nx) * na, full(ny) * nb);
    let mut inside = 0.0;
    for i in 0..=n_max {
        for j in 0..=n_max - i {
            inside += order_majorant(params, i, nx) * order_majorant(params, j, ny);
        }
    }
    let cross_tail = (sa * sb - inside * na * nb).max(0.0);
    let truncation_bound =
        joint.truncation_bound + cross_tail + left.truncation_bound * sb + right.truncation_bound * sa;
    Ok(CertifiedValue {
        value,
        truncation_bound,
        order_used: n_max,
        diagram_count: joint.diagram_count + left.diagram_count + right.diagram_count,
        order_sums,
        pruned_mass: joint.pruned_mass + left.pruned_mass + right.pruned_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{pauli, Site};
    use crate::certificates::derive_parameters;
    use crate::expansion::basis::projection;
    use crate::expansion::basis::tests::ising_profiles;
    use crate::expansion::diagram::tests::nn_family;
    use crate::expansion::resolvent::resolvent;
    use crate::finite_volume::{stationary_state, LatticeModel};
    use crate::generators::interaction_norm;
    use crate::linalg::c;

    const INV_L: f64 = core::f64::consts::LN_2 + 1.0;

    fn z0() -> LocalOperator {
        LocalOperator::on_site(Site::on_line(0), pauli::sigma_z()).unwrap()
    }

    fn params_for(fam: &InteractionFamily, profiles: &ProfileSet) -> BoundParameters {
        let eps = interaction_norm(fam, 1.0 / INV_L);
        derive_parameters(1.0 / INV_L, 0.5, 0.2, eps, profiles.max_amplitude(), BoundMode::Theorem).unwrap()
    }

    /// The same chain with dense superoperators on `volume`.
    fn dense_term(diag: &Diagram, a: &LocalOperator, profiles: &ProfileSet, fam: &InteractionFamily, volume: &Volume) -> C64 {
        let mut op = a.embed(volume).unwrap();
        for (i, e) in diag.ees.iter().enumerate() {
            let p = projection(e, volume, profiles).unwrap().map;
            op = if e.is_empty() {
                p.apply(&op).unwrap()
            } else {
                let r = resolvent(e, profiles).unwrap().embed(volume).unwrap().compose(&p).unwrap();
                r.apply(&op).unwrap()
            };
            if let Some(g) = diag.gammas.get(i) {
                let v = coupling_on(fam, g, 2).unwrap().embed(volume).unwrap();
                op = v.apply(&op).unwrap();
            }
        }
        let m = op.matrix();
        assert!((m - CMatrix::identity(m.nrows(), m.nrows()) * m[(0, 0)]).norm() < 1e-10);
        m[(0, 0)]
    }

    #[test]
    fn first_order_terms_of_sigma_z_vanish() {
        let profiles = ising_profiles(0.3);
        let fam = nn_family(0.03);
        let en = enumerate_diagrams(&z0().support().clone(), &fam, 1, 0.0, &params_for(&nn_family(0.001), &profiles));
        let mut count = 0;
        for (d, _) in en.stationary() {
            assert!(stationary_term(d, &z0(), &profiles, &fam).unwrap().norm() < 1e-14);
            count += 1;
        }
        assert_eq!(count, 2);
    }

    #[test]
    fn chain_matches_dense_superoperators_on_any_volume() {
        let profiles = ising_profiles(0.3);
        let fam = nn_family(0.2);
        let a = LocalOperator::product(&[(Site::on_line(0), pauli::sigma_z()), (Site::on_line(1), pauli::sigma_z())]).unwrap();
        let params = params_for(&nn_family(0.001), &profiles);
        let en = enumerate_diagrams(a.support(), &fam, 2, 0.0, &params);
        let mut nonzero = 0;
        for (d, _) in en.stationary().filter(|(d, _)| d.domain().len() <= 3) {
            let fast = stationary_term(d, &a, &profiles, &fam).unwrap();
            let minimal = a.support().union(&d.domain());
            let on_min = dense_term(d, &a, &profiles, &fam, &minimal);
            let larger = minimal.union(&Volume::chain(-2, 5)).union(&minimal.translate(&[1]));
            let on_large = if larger.len() <= 4 { dense_term(d, &a, &profiles, &fam, &larger) } else { on_min };
            assert!((fast - on_min).norm() < 1e-10, "{d:?}: {fast} vs {on_min}");
            assert!((on_min - on_large).norm() < 1e-10);
            if fast.norm() > 1e-8 {
                nonzero += 1;
            }
        }
        assert!(nonzero > 0);
    }

    #[test]
    fn trivial_couplings_and_observables() {
        let profiles = ising_profiles(0.3);
        let zero = nn_family(0.0);
        let params = params_for(&zero, &profiles);
        let v = stationary_expectation(&z0(), &profiles, &zero, 3, 0.0, &params).unwrap();
        assert_eq!(v.value, c(-1.0, 0.0));
        assert_eq!(v.truncation_bound, 0.0);
        assert_eq!(v.diagram_count, 0);

        let weak = nn_family(0.001);
        let params = params_for(&weak, &profiles);
        let one = LocalOperator::identity(Volume::chain(0, 2), 2);
        let v = stationary_expectation(&one, &profiles, &weak, 2, 0.0, &params).unwrap();
        assert!((v.value - c(1.0, 0.0)).norm() < 1e-14);
        assert!(v.diagram_count > 0);
        assert!(v.order_sums[1..].iter().all(|s| s.norm() < 1e-15));
    }

    #[test]
    fn low_order_sum_matches_exact_chain() {
        let j = 0.002;
        let profiles = ising_profiles(0.3);
        let fam = nn_family(j);
        let params = params_for(&fam, &profiles);
        let v = stationary_expectation(&z0(), &profiles, &fam, 2, 0.0, &params).unwrap();
        assert!(v.order_sums[1].norm() < 1e-14);
        let model = LatticeModel::new(profiles.generators(), fam.clone());
        let gen = model.assemble(&Volume::centered_chain(5)).unwrap();
        let exact = stationary_state(&gen).unwrap().expectation(&z0()).unwrap();
        let volume_tail = (params.k - 1.0) * (-2.0 / params.l_prime).exp() * params.c;
        let diff = (v.value - exact).norm();
        assert!(diff <= v.truncation_bound + volume_tail, "{diff}");
        // The J² correction itself is resolved, not just bounded.
        assert!(((v.value - exact).norm()) < 0.05 * (exact + c(1.0, 0.0)).norm());
    }

    #[test]
    fn order_sums_respect_majorant_and_are_reproducible() {
        let profiles = ising_profiles(0.3);
        let fam = nn_family(0.002);
        let params = params_for(&fam, &profiles);
        let a = z0();
        let en = enumerate_diagrams(a.support(), &fam, 3, 0.0, &params);
        let mut per_order = [0.0f64; 4];
        for (d, _) in en.stationary() {
            per_order[d.order()] += stationary_term(d, &a, &profiles, &fam).unwrap().norm();
        }
        for (n, sum) in per_order.iter().enumerate().skip(1) {
            assert!(*sum <= order_majorant(&params, n, 1) * a.norm(), "order {n}");
        }
        let first = stationary_expectation(&a, &profiles, &fam, 3, 0.0, &params).unwrap();
        let second = stationary_expectation(&a, &profiles, &fam, 3, 0.0, &params).unwrap();
        assert_eq!(first.value.re.to_bits(), second.value.re.to_bits());
        assert_eq!(first.value.im.to_bits(), second.value.im.to_bits());
    }

    #[test]
    fn hypotheses_are_enforced() {
        let profiles = ising_profiles(0.3);
        let fam = nn_family(0.05);
        let params = params_for(&nn_family(0.001), &profiles);
        let err = stationary_expectation(&z0(), &profiles, &fam, 2, 0.0, &params).unwrap_err();
        assert!(err.is_hypothesis_violation(), "{err}");
        let mut diverging = params;
        diverging.epsilon = 0.4;
        assert!(matches!(
            stationary_expectation(&z0(), &profiles, &fam, 2, 0.0, &diverging),
            Err(Error::DivergentSeries { .. })
        ));
    }

    #[test]
    fn correlations() {
        let profiles = ising_profiles(0.3);
        let z2 = LocalOperator::on_site(Site::on_line(2), pauli::sigma_z()).unwrap();
        let zero = nn_family(0.0);
        let v = correlation_estimate(&z0(), &z2, &profiles, &zero, 2, 0.0, &params_for(&zero, &profiles)).unwrap();
        assert_eq!(v.value, c(0.0, 0.0));

        let fam = nn_family(0.002);
        let params = params_for(&fam, &profiles);
        let far = LocalOperator::on_site(Site::on_line(4), pauli::sigma_z()).unwrap();
        let v = correlation_estimate(&z0(), &far, &profiles, &fam, 3, 0.0, &params).unwrap();
        assert_eq!(v.value, c(0.0, 0.0));
        assert!(v.truncation_bound > 0.0);

        let near = LocalOperator::on_site(Site::on_line(1), pauli::sigma_z()).unwrap();
        let v = correlation_estimate(&z0(), &near, &profiles, &fam, 3, 0.0, &params).unwrap();
        let model = LatticeModel::new(profiles.generators(), fam.clone());
        let state = stationary_state(&model.assemble(&Volume::centered_chain(6)).unwrap()).unwrap();
        let exact = crate::finite_volume::truncated_correlation(&state, &z0(), &near).unwrap();
        assert!((v.value - exact).norm() <= v.truncation_bound + 1e-9);
        assert!(matches!(
            correlation_estimate(&z0(), &z0(), &profiles, &fam, 1, 0.0, &params),
            Err(Error::OverlappingSupport)
        ));
    }
}
