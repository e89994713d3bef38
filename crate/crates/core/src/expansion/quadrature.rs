//! Direct nested quadrature of time-ordered diagram integrands, used to
//! cross-check the resolvent chain.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::basis::{site_major_permutation, to_site_major};
use super::diagram::{check_diagram, Diagram};
use super::evaluate::coupling_on;
use crate::algebra::{vectorize, LocalOperator, Volume};
use crate::error::{Error, Result};
use crate::generators::{InteractionFamily, ProfileSet};
use crate::linalg::{self, CMatrix, CVector, C64, ZERO};

/// Largest order the quadrature accepts.
pub const MAX_QUADRATURE_ORDER: usize = 3;

/// Composite Gauss–Legendre rule per time variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureGrid {
    pub panels: usize,
    pub nodes: usize,
    /// Maximum number of integrand evaluations.
    pub budget: u64,
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        QuadratureGrid { panels: 16, nodes: 8, budget: 2_000_000 }
    }
}

/// Applies a `k`-site matrix at `positions` of a site-major vector.
fn apply_local(v: &[C64], radix: usize, n: usize, positions: &[usize], m: &CMatrix) -> Vec<C64> {
    let k = positions.len();
    let local = radix.pow(k as u32);
    let rest: Vec<usize> = (0..n).filter(|p| !positions.contains(p)).collect();
    let stride = |p: usize| radix.pow((n - 1 - p) as u32);
    let mut out = alloc::vec![ZERO; v.len()];
    let mut gathered = CVector::zeros(local);
    for r in 0..radix.pow(rest.len() as u32) {
        let mut base = 0;
        let mut rr = r;
        for &p in rest.iter().rev() {
            base += (rr % radix) * stride(p);
            rr /= radix;
        }
        let offset = |mut l: usize| {
            let mut idx = base;
            for &p in positions.iter().rev() {
                idx += (l % radix) * stride(p);
                l /= radix;
            }
            idx
        };
        for l in 0..local {
            gathered[l] = v[offset(l)];
        }
        let image = m * &gathered;
        for l in 0..local {
            out[offset(l)] = image[l];
        }
    }
    out
}

struct Integrand<'a> {
    profiles: &'a ProfileSet,
    volume: Volume,
    radix: usize,
    couplings: Vec<(Vec<usize>, CMatrix)>,
    ees: &'a [Volume],
    nodes: Vec<f64>,
    weights: Vec<f64>,
    panels: usize,
}

impl Integrand<'_> {
    /// `e^{sG}P(E)` on the whole volume, one site at a time.
    fn propagate(&self, v: &[C64], e: &Volume, s: f64) -> Result<Vec<C64>> {
        let mut out = v.to_vec();
        for (pos, x) in self.volume.iter().enumerate() {
            let p = self.profiles.at(x)?;
            let q_map = p.projection_q.matrix();
            let factor = if e.contains(x) {
                let g = p.generator.matrix();
                let dim = g.nrows();
                linalg::expm(&(g * C64::new(s, 0.0))) * (CMatrix::identity(dim, dim) - q_map)
            } else {
                q_map.clone()
            };
            out = apply_local(&out, self.radix, self.volume.len(), &[pos], &factor);
        }
        Ok(out)
    }

    fn integrate(&self, level: usize, remaining: f64, v: &[C64], acc: &mut [C64], weight: f64) -> Result<()> {
        let n = self.couplings.len();
        if level == n {
            let image = self.propagate(v, &self.ees[n], remaining)?;
            for (a, b) in acc.iter_mut().zip(image) {
                *a += b * weight;
            }
            return Ok(());
        }
        let width = remaining / self.panels as f64;
        if width <= 0.0 {
            return Ok(());
        }
        for k in 0..self.panels {
            let mid = (k as f64 + 0.5) * width;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                let s = mid + 0.5 * width * x;
                let propagated = self.propagate(v, &self.ees[level], s)?;
                let (positions, vm) = &self.couplings[level];
                let next = apply_local(&propagated, self.radix, self.volume.len(), positions, vm);
                self.integrate(level + 1, remaining - s, &next, acc, weight * 0.5 * width * w)?;
            }
        }
        Ok(())
    }
}

/// The time-`t` diagram term
/// `∫_{Σs ≤ t} e^{s_{n+1}G}P(E_{n+1}) V(Γ_n) e^{s_nG}P(E_n) ⋯ V(Γ_1) e^{s_1G}P(E_1)(A)`
/// on `X ∪ D`, by nested composite Gauss–Legendre quadrature.
///
/// # Errors
/// `ConstraintViolation` for an invalid diagram, `InvalidArgument` above
/// order 3, `QuadratureBudgetExceeded` if the grid needs too many points.
pub fn quadrature_term(
    diag: &Diagram,
    a: &LocalOperator,
    profiles: &ProfileSet,
    fam: &InteractionFamily,
    t: f64,
    grid: &QuadratureGrid,
) -> Result<LocalOperator> {
    check_diagram(diag, a.support())?;
    let n = diag.order();
    if n > MAX_QUADRATURE_ORDER {
        return Err(Error::InvalidArgument(alloc::format!("quadrature supports order <= 3, got {n}")));
    }
    let needed = ((grid.panels * grid.nodes) as u64).saturating_pow(n as u32);
    if needed > grid.budget {
        return Err(Error::QuadratureBudgetExceeded { needed, budget: grid.budget });
    }
    let q = profiles.q();
    let volume = a.support().union(&diag.domain());
    let sites = volume.len();
    let radix = q * q;
    let couplings = diag
        .gammas
        .iter()
        .map(|g| {
            let v = coupling_on(fam, g, q)?;
            let positions = g.positions_in(&volume).unwrap_or_default();
            Ok((positions, to_site_major(v.matrix(), q, g.len())))
        })
        .collect::<Result<Vec<_>>>()?;
    let (nodes, weights) = linalg::gauss_legendre(grid.nodes);
    let integrand = Integrand { profiles, volume: volume.clone(), radix, couplings, ees: &diag.ees, nodes, weights, panels: grid.panels };

    let perm = site_major_permutation(q, sites);
    let full = a.embed(&volume)?;
    let cs = vectorize(full.matrix());
    let sm: Vec<C64> = perm.iter().map(|&k| cs[k]).collect();
    let mut acc = alloc::vec![ZERO; sm.len()];
    if t > 0.0 {
        integrand.integrate(0, t, &sm, &mut acc, 1.0)?;
    }
    let mut out = alloc::vec![ZERO; acc.len()];
    for (s, &k) in perm.iter().enumerate() {
        out[k] = acc[s];
    }
    let d = q.pow(sites as u32);
    LocalOperator::new(volume, q, CMatrix::from_column_slice(d, d, &out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{pauli, LocalSuperoperator, Site};
    use crate::expansion::basis::tests::ising_profiles;
    use crate::expansion::diagram::tests::nn_family;
    use crate::expansion::evaluate::stationary_term;
    use crate::generators::{build_lindblad, LindbladSpec};

    /// Pair pumping `K = σ⁺⊗σ⁺`, which gives non-vanishing first-order terms.
    fn pair_pump(strength: f64) -> InteractionFamily {
        let k = LocalOperator::product(&[(Site::on_line(0), pauli::sigma_plus()), (Site::on_line(1), pauli::sigma_plus())])
            .unwrap()
            .scale(C64::new(strength.sqrt(), 0.0));
        let h = LocalOperator::identity(Volume::chain(0, 2), 2).scale(ZERO);
        let map: LocalSuperoperator = build_lindblad(&LindbladSpec::new(h, alloc::vec![k])).unwrap();
        InteractionFamily::translation_invariant(alloc::vec![map]).unwrap()
    }

    fn x0() -> LocalOperator {
        LocalOperator::on_site(Site::on_line(0), pauli::sigma_plus() * pauli::sigma_minus()).unwrap()
    }

    fn first_order(e2: Volume) -> Diagram {
        Diagram { gammas: alloc::vec![Volume::chain(0, 2)], ees: alloc::vec![Volume::singleton(Site::on_line(0)), e2] }
    }

    #[test]
    fn long_times_reproduce_the_resolvent_chain() {
        let profiles = ising_profiles(0.3);
        let fam = pair_pump(0.1);
        let d = first_order(Volume::empty());
        let closed = stationary_term(&d, &x0(), &profiles, &fam).unwrap();
        assert!(closed.norm() > 1e-4);
        let grid = QuadratureGrid { panels: 24, nodes: 8, budget: 10_000 };
        let quad = quadrature_term(&d, &x0(), &profiles, &fam, 40.0, &grid).unwrap();
        let want = CMatrix::identity(4, 4) * closed;
        let err = (quad.matrix() - want).norm();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn second_order_quadrature_matches() {
        let profiles = ising_profiles(0.3);
        let fam = nn_family(0.2);
        let d = Diagram {
            gammas: alloc::vec![Volume::chain(0, 2), Volume::chain(0, 2)],
            ees: alloc::vec![Volume::singleton(Site::on_line(0)), Volume::chain(0, 2), Volume::empty()],
        };
        let z = LocalOperator::on_site(Site::on_line(0), pauli::sigma_z()).unwrap();
        let closed = stationary_term(&d, &z, &profiles, &fam).unwrap();
        assert!(closed.norm() > 1e-4);
        let grid = QuadratureGrid { panels: 24, nodes: 8, budget: 100_000 };
        let quad = quadrature_term(&d, &z, &profiles, &fam, 40.0, &grid).unwrap();
        assert!((quad.matrix() - CMatrix::identity(4, 4) * closed).norm() < 1e-6);
    }

    #[test]
    fn zero_time_and_budget() {
        let profiles = ising_profiles(0.3);
        let fam = pair_pump(0.1);
        let d = first_order(Volume::empty());
        let quad = quadrature_term(&d, &x0(), &profiles, &fam, 0.0, &QuadratureGrid::default()).unwrap();
        assert_eq!(quad.matrix().norm(), 0.0);
        let tiny = QuadratureGrid { panels: 16, nodes: 8, budget: 10 };
        assert!(matches!(
            quadrature_term(&d, &x0(), &profiles, &fam, 1.0, &tiny),
            Err(Error::QuadratureBudgetExceeded { needed: 128, budget: 10 })
        ));
    }

    #[test]
    fn excited_terms_obey_the_product_bound() {
        let profiles = ising_profiles(0.3);
        let fam = nn_family(0.1);
        let p = profiles.at(&Site::on_line(0)).unwrap();
        let z = LocalOperator::on_site(Site::on_line(0), pauli::sigma_z()).unwrap();
        let d = first_order(Volume::chain(0, 2));
        let cb = fam.terms_containing(&Site::on_line(0))[0].cb_norm();
        for t in [0.5, 2.0, 8.0] {
            let quad = quadrature_term(&d, &z, &profiles, &fam, t, &QuadratureGrid::default()).unwrap();
            // ‖e^{tG}P(E)‖ ≤ M^{|E|} e^{−g|E|t} per factor; integrate over s_1.
            let bound: f64 = (0..400)
                .map(|k| {
                    let s = (k as f64 + 0.5) * t / 400.0;
                    p.amplitude_m * (-p.gap * s).exp() * cb * p.amplitude_m.powi(2) * (-2.0 * p.gap * (t - s)).exp() * t / 400.0
                })
                .sum::<f64>()
                * z.norm();
            assert!(quad.norm() <= bound * 1.01, "t = {t}");
        }
    }
}
