//! Qubit chain with a thermal bath at every site and energy-conserving
//! flip-flop couplings, plus the self-consistent temperature profile.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::algebra::{lift, pauli, LocalOperator, LocalSuperoperator, Site, Volume};
use crate::error::{Error, Result};
use crate::finite_volume::{stationary_state, LatticeModel, StationaryState};
use crate::generators::{build_lindblad, InteractionFamily, LindbladSpec, SiteGenerators};
use crate::linalg::{self, c, CMatrix, C64};
use crate::parallel;

/// Davies generator of a qubit with `H = hσ³` coupled to a bath at
/// temperature `T`: jumps `√(γ(n̄+1)) σ⁻` and `√(γn̄) σ⁺` with
/// `n̄ = 1/(e^{2h/T} − 1)`, on site 0. The Hamiltonian part is zero.
///
/// # Errors
/// `NonPositiveTemperature` for `T ≤ 0`; `InvalidArgument` for `γ ≤ 0` or `h ≤ 0`.
pub fn davies_qubit_bath(temperature: f64, h: f64, gamma: f64) -> Result<LindbladSpec> {
    if !(temperature > 0.0) {
        return Err(Error::NonPositiveTemperature(temperature));
    }
    if !(gamma > 0.0) || !(h > 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("need gamma > 0 and h > 0, got {gamma} and {h}")));
    }
    let occupation = 1.0 / (2.0 * h / temperature).exp_m1();
    let on0 = |m: CMatrix| LocalOperator::on_site(Site::on_line(0), m).expect("2x2 matrix on one site");
    Ok(LindbladSpec::new(
        on0(CMatrix::zeros(2, 2)),
        vec![
            on0(pauli::sigma_minus() * c((gamma * (occupation + 1.0)).sqrt(), 0.0)),
            on0(pauli::sigma_plus() * c((gamma * occupation).sqrt(), 0.0)),
        ],
    ))
}

/// Gibbs state `e^{−hσ³/T}/Z` in the basis `(|↑⟩, |↓⟩)`.
pub fn qubit_gibbs_state(temperature: f64, h: f64) -> CMatrix {
    let up = 1.0 / (1.0 + (2.0 * h / temperature).exp());
    CMatrix::from_diagonal(&linalg::CVector::from_vec(vec![c(up, 0.0), c(1.0 - up, 0.0)]))
}

fn hermitian_power(rho: &CMatrix, s: f64) -> CMatrix {
    let eig = rho.clone().symmetric_eigen();
    let powered = eig.eigenvalues.map(|l| c(l.max(0.0).powf(s), 0.0));
    &eig.eigenvectors * CMatrix::from_diagonal(&powered) * eig.eigenvectors.adjoint()
}

/// `max |ΩG − G†Ω|` with `Ω(B) = ρ^s B ρ^{1−s}`: zero iff `G` is
/// self-adjoint for `⟨A,B⟩ = Tr(A* ρ^s B ρ^{1−s})`.
pub fn detailed_balance_residual(g: &LocalSuperoperator, rho: &CMatrix, s: f64) -> f64 {
    let omega = lift(&hermitian_power(rho, s), &hermitian_power(rho, 1.0 - s));
    let gm = g.matrix();
    (&omega * gm - gm.adjoint() * &omega).iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Chain of `N` qubits on sites `1..=N`, bath temperatures `T_1..T_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatBathChain {
    pub temperatures: Vec<f64>,
    pub h: f64,
    pub gamma: f64,
    pub j: f64,
    /// Interpolation parameter of the weighted inner product.
    pub kms_s: f64,
    /// Translates of the bond `{1, 2}` coupling, built once.
    bonds: InteractionFamily,
}

impl HeatBathChain {
    /// # Errors
    /// `NonPositiveTemperature`, or `InvalidArgument` for an empty chain.
    pub fn new(temperatures: Vec<f64>, h: f64, gamma: f64, j: f64) -> Result<Self> {
        if temperatures.is_empty() {
            return Err(Error::InvalidArgument("the chain needs at least one site".into()));
        }
        if let Some(&t) = temperatures.iter().find(|t| !(**t > 0.0)) {
            return Err(Error::NonPositiveTemperature(t));
        }
        let bonds = InteractionFamily::translation_invariant(vec![flip_flop(1, j)])?;
        Ok(HeatBathChain { temperatures, h, gamma, j, kms_s: 0.5, bonds })
    }

    /// Same couplings, `n` sites at a common temperature.
    pub fn uniform(n: usize, temperature: f64, h: f64, gamma: f64, j: f64) -> Result<Self> {
        Self::new(vec![temperature; n], h, gamma, j)
    }

    pub fn with_temperatures(&self, temperatures: Vec<f64>) -> Result<Self> {
        if temperatures.is_empty() {
            return Err(Error::InvalidArgument("the chain needs at least one site".into()));
        }
        if let Some(&t) = temperatures.iter().find(|t| !(**t > 0.0)) {
            return Err(Error::NonPositiveTemperature(t));
        }
        Ok(HeatBathChain { temperatures, ..self.clone() })
    }

    pub fn n(&self) -> usize {
        self.temperatures.len()
    }

    pub fn site(x: usize) -> Site {
        Site::on_line(x as i64)
    }

    /// Sites `1..=N`.
    pub fn volume(&self) -> Volume {
        Volume::chain(1, self.n())
    }

    /// `H_x = hσ³_x`, for `x` in `1..=N`.
    pub fn site_hamiltonian(&self, x: usize) -> LocalOperator {
        LocalOperator::on_site(Self::site(x), pauli::sigma_z() * c(self.h, 0.0)).expect("2x2 matrix on one site")
    }

    /// `G(x)` placed on site `x`.
    pub fn site_generator(&self, x: usize) -> Result<LocalSuperoperator> {
        let g = build_lindblad(&davies_qubit_bath(self.temperatures[x - 1], self.h, self.gamma)?)?;
        g.relabel(Volume::singleton(Self::site(x)))
    }

    /// `i[J(σ⁺σ⁻ + σ⁻σ⁺), ·]` on the bond `{x, x+1}`.
    pub fn bond_coupling(&self, x: usize) -> LocalSuperoperator {
        flip_flop(x, self.j)
    }

    pub fn model(&self) -> Result<LatticeModel> {
        let generators: BTreeMap<Site, LocalSuperoperator> =
            (1..=self.n()).map(|x| Ok((Self::site(x), self.site_generator(x)?))).collect::<Result<_>>()?;
        Ok(LatticeModel::new(SiteGenerators::PerSite(generators), self.bonds.clone()))
    }

    /// `⊗_x e^{−H_x/T_x}/Z_x`.
    pub fn gibbs_product(&self) -> CMatrix {
        self.temperatures
            .iter()
            .fold(CMatrix::identity(1, 1), |acc, &t| linalg::kron(&acc, &qubit_gibbs_state(t, self.h)))
    }

    /// `‖L*(⊗ Gibbs)‖` in the Euclidean norm of the vectorization.
    pub fn gibbs_residual(&self) -> Result<f64> {
        let gen = self.model()?.assemble(&self.volume())?;
        let rho = crate::algebra::vectorize(&self.gibbs_product());
        let mut out = vec![C64::new(0.0, 0.0); rho.len()];
        gen.apply_adjoint(rho.as_slice(), &mut out);
        Ok(out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
    }

    pub fn stationary(&self) -> Result<StationaryState> {
        stationary_state(&self.model()?.assemble(&self.volume())?)
    }
}

fn flip_flop(x: usize, j: f64) -> LocalSuperoperator {
    let (a, b) = (HeatBathChain::site(x), HeatBathChain::site(x + 1));
    let pm = LocalOperator::product(&[(a.clone(), pauli::sigma_plus()), (b.clone(), pauli::sigma_minus())]);
    let mp = LocalOperator::product(&[(a, pauli::sigma_minus()), (b, pauli::sigma_plus())]);
    let v = pm.and_then(|pm| pm.add(&mp?)).expect("two distinct sites").scale(c(j, 0.0));
    LocalSuperoperator::commutator(&v)
}

/// Energy currents in a stationary state.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentReport {
    /// `j_x = ρ(V({x−1,x})(H_x))` for `x = 2..N`: current from `x−1` into `x`.
    pub bond_currents: Vec<f64>,
    /// `J_x = ρ(G(x)(H_x))` for `x = 1..N`: current out of the bath at `x`.
    pub bath_currents: Vec<f64>,
    /// `j_x − j_{x+1} + J_x` per site, with `j_1 = j_{N+1} = 0`.
    pub conservation_residuals: Vec<f64>,
}

/// Bond and bath currents of `state`.
///
/// # Errors
/// Propagated from the generators and expectations.
pub fn currents(chain: &HeatBathChain, state: &StationaryState) -> Result<CurrentReport> {
    let n = chain.n();
    let bond_currents = (2..=n)
        .map(|x| {
            let v = chain.bond_coupling(x - 1);
            let hx = chain.site_hamiltonian(x).embed(v.support())?;
            Ok(state.expectation(&v.apply(&hx)?)?.re)
        })
        .collect::<Result<Vec<f64>>>()?;
    let bath_currents = (1..=n)
        .map(|x| {
            let g = chain.site_generator(x)?;
            Ok(state.expectation(&g.apply(&chain.site_hamiltonian(x))?)?.re)
        })
        .collect::<Result<Vec<f64>>>()?;
    let bond = |x: usize| if (2..=n).contains(&x) { bond_currents[x - 2] } else { 0.0 };
    let conservation_residuals = (1..=n).map(|x| bond(x) - bond(x + 1) + bath_currents[x - 1]).collect();
    Ok(CurrentReport { bond_currents, bath_currents, conservation_residuals })
}

/// Settings of the damped Newton iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Converged when every bulk bath current is at most this.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    /// Relative central-difference step.
    pub relative_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tolerance: 1e-8, max_iterations: 30, max_halvings: 8, relative_step: 1e-4 }
    }
}

/// Solution of the self-consistency problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfConsistentProfile {
    pub temperatures: Vec<f64>,
    /// `J_1`, equal to every `j_x` and to `−J_N` at convergence.
    pub j_sc: f64,
    pub report: CurrentReport,
    pub iterations: usize,
    /// `max_x |J_x|` over the bulk after each iteration.
    pub residual_trace: Vec<f64>,
}

fn bulk_residual(template: &HeatBathChain, temps: &[f64]) -> Result<(Vec<f64>, CurrentReport)> {
    let chain = template.with_temperatures(temps.to_vec())?;
    let report = currents(&chain, &chain.stationary()?)?;
    let n = temps.len();
    Ok((report.bath_currents[1..n - 1].to_vec(), report))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

fn with_bulk(t_left: f64, t_right: f64, bulk: &[f64]) -> Vec<f64> {
    let mut temps = Vec::with_capacity(bulk.len() + 2);
    temps.push(t_left);
    temps.extend_from_slice(bulk);
    temps.push(t_right);
    temps
}

/// Bulk temperatures `T_2..T_{N−1}` making every bulk bath current vanish,
/// by damped Newton iteration from the linear profile.
///
/// # Errors
/// `InvalidArgument` for `N < 3`, `NonPositiveTemperature`, and
/// `NewtonDivergence` with the residual trace when the iteration stalls.
pub fn self_consistent_profile(
    template: &HeatBathChain,
    t_left: f64,
    t_right: f64,
    options: NewtonOptions,
) -> Result<SelfConsistentProfile> {
    let n = template.n();
    if n < 3 {
        return Err(Error::InvalidArgument(alloc::format!("self-consistent chains need N >= 3, got {n}")));
    }
    for t in [t_left, t_right] {
        if !(t > 0.0) {
            return Err(Error::NonPositiveTemperature(t));
        }
    }
    let mut bulk: Vec<f64> =
        (2..n).map(|x| t_left + (t_right - t_left) * (x - 1) as f64 / (n - 1) as f64).collect();
    let (mut residual, mut report) = bulk_residual(template, &with_bulk(t_left, t_right, &bulk))?;
    let mut trace = vec![max_abs(&residual)];
    let mut iterations = 0;
    while max_abs(&residual) > options.tolerance {
        if iterations == options.max_iterations {
            return Err(Error::NewtonDivergence { trace });
        }
        iterations += 1;
        let m = bulk.len();
        let columns = parallel::map(&(0..m).collect::<Vec<_>>(), |&k| -> Result<Vec<f64>> {
            let step = options.relative_step * bulk[k];
            let mut plus = bulk.clone();
            let mut minus = bulk.clone();
            plus[k] += step;
            minus[k] -= step;
            let (fp, _) = bulk_residual(template, &with_bulk(t_left, t_right, &plus))?;
            let (fm, _) = bulk_residual(template, &with_bulk(t_left, t_right, &minus))?;
            Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * step)).collect())
        });
        let mut jac = nalgebra::DMatrix::<f64>::zeros(m, m);
        for (k, col) in columns.into_iter().enumerate() {
            for (i, v) in col?.into_iter().enumerate() {
                jac[(i, k)] = v;
            }
        }
        let rhs = nalgebra::DVector::from_iterator(m, residual.iter().map(|r| -r));
        let Some(delta) = jac.lu().solve(&rhs) else {
            return Err(Error::NewtonDivergence { trace });
        };
        let current = max_abs(&residual);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=options.max_halvings {
            let trial: Vec<f64> = bulk.iter().zip(delta.iter()).map(|(t, d)| t + lambda * d).collect();
            if trial.iter().all(|t| *t > 0.0) {
                let (r, rep) = bulk_residual(template, &with_bulk(t_left, t_right, &trial))?;
                if max_abs(&r) < current {
                    accepted = Some((trial, r, rep));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((trial, r, rep)) = accepted else {
            return Err(Error::NewtonDivergence { trace });
        };
        bulk = trial;
        residual = r;
        report = rep;
        trace.push(max_abs(&residual));
    }
    Ok(SelfConsistentProfile {
        temperatures: with_bulk(t_left, t_right, &bulk),
        j_sc: report.bath_currents[0],
        report,
        iterations,
        residual_trace: trace,
    })
}

/// One row of the size-scaling table.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub j_sc: f64,
    pub j_sc_times_n: f64,
    /// `max_x |T_{x+1} − T_x|`.
    pub max_temperature_step: f64,
    pub max_step_times_n: f64,
    /// `j_sc/(T_x − T_{x+1})` per bulk bond; heat flows towards lower temperature.
    pub conductivities: Vec<f64>,
    pub temperatures: Vec<f64>,
}

/// Self-consistent profiles for each chain length in `sizes`.
///
/// # Errors
/// Propagated from [`self_consistent_profile`].
pub fn fourier_scaling(
    template: &HeatBathChain,
    t_left: f64,
    t_right: f64,
    sizes: &[usize],
    options: NewtonOptions,
) -> Result<Vec<ScalingRow>> {
    sizes
        .iter()
        .map(|&n| {
            let chain = template.with_temperatures(vec![t_left; n])?;
            let sol = self_consistent_profile(&chain, t_left, t_right, options)?;
            let t = &sol.temperatures;
            let steps: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
            let max_step = max_abs(&steps);
            let conductivities = if t_left == t_right {
                vec![0.0; n.saturating_sub(3)]
            } else {
                steps[1..n - 2].iter().map(|d| sol.j_sc / -d).collect()
            };
            Ok(ScalingRow {
                n,
                j_sc: sol.j_sc,
                j_sc_times_n: sol.j_sc * n as f64,
                max_temperature_step: max_step,
                max_step_times_n: max_step * n as f64,
                conductivities,
                temperatures: sol.temperatures,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::spectral_profile;

    const H: f64 = 0.5;
    const GAMMA: f64 = 0.5;
    const J: f64 = 0.05;

    #[test]
    fn davies_generator_is_thermal() {
        for (t, h) in [(1.0, 0.5), (0.3, 0.2), (5.0, 1.0)] {
            let g = build_lindblad(&davies_qubit_bath(t, h, GAMMA).unwrap()).unwrap();
            let rho = qubit_gibbs_state(t, h);
            let p = spectral_profile(&g).unwrap();
            assert!((&p.stationary_state - &rho).norm() < 1e-12);
            // Populations are e^{∓h/T}/Z.
            let z = (h / t).exp() + (-h / t).exp();
            assert!((rho[(0, 0)].re - (-h / t).exp() / z).abs() < 1e-14);
            for s in [0.5, 0.2, 0.9] {
                assert!(detailed_balance_residual(&g, &rho, s) < 1e-12);
            }
        }
        assert_eq!(davies_qubit_bath(0.0, H, GAMMA), Err(Error::NonPositiveTemperature(0.0)));
        let cold = davies_qubit_bath(1e-4, H, GAMMA).unwrap();
        assert_eq!(cold.kraus_ops[1].norm(), 0.0);
    }

    #[test]
    fn ising_site_is_not_balanced_for_a_mismatched_state() {
        let g = build_lindblad(&davies_qubit_bath(1.0, H, GAMMA).unwrap()).unwrap();
        assert!(detailed_balance_residual(&g, &qubit_gibbs_state(2.0, H), 0.5) > 1e-3);
    }

    #[test]
    fn flip_flop_conserves_local_energy() {
        let chain = HeatBathChain::uniform(2, 1.0, H, GAMMA, J).unwrap();
        let v = chain.bond_coupling(1);
        let energy = chain.site_hamiltonian(1).embed(v.support()).unwrap().add(&chain.site_hamiltonian(2).embed(v.support()).unwrap()).unwrap();
        assert_eq!(v.apply(&energy).unwrap().matrix().norm(), 0.0);
    }

    #[test]
    fn equilibrium_has_no_currents() {
        let chain = HeatBathChain::uniform(4, 1.0, H, GAMMA, J).unwrap();
        assert!(chain.gibbs_residual().unwrap() < 1e-10);
        let report = currents(&chain, &chain.stationary().unwrap()).unwrap();
        assert!(report.bond_currents.iter().chain(&report.bath_currents).all(|j| j.abs() < 1e-10));
    }

    #[test]
    fn two_sites_telescope() {
        let chain = HeatBathChain::new(vec![1.0, 0.8], H, GAMMA, J).unwrap();
        let r = currents(&chain, &chain.stationary().unwrap()).unwrap();
        assert!(r.bath_currents[0] > 0.0);
        assert!((r.bath_currents[0] - r.bond_currents[0]).abs() < 1e-12);
        assert!((r.bath_currents[0] + r.bath_currents[1]).abs() < 1e-12);
    }

    #[test]
    fn linear_profile_conserves_energy_per_site() {
        let chain = HeatBathChain::new(vec![1.0, 0.95, 0.9, 0.85], H, GAMMA, J).unwrap();
        let r = currents(&chain, &chain.stationary().unwrap()).unwrap();
        assert!(r.conservation_residuals.iter().all(|x| x.abs() <= 1e-9));
    }

    #[test]
    fn self_consistent_profile_and_its_mirror() {
        let template = HeatBathChain::uniform(4, 1.0, H, GAMMA, J).unwrap();
        let forward = self_consistent_profile(&template, 1.0, 0.9, NewtonOptions::default()).unwrap();
        let t = &forward.temperatures;
        assert!(t.windows(2).all(|w| w[1] < w[0]));
        assert!(forward.j_sc > 0.0);
        assert!(forward.report.bath_currents[1..3].iter().all(|j| j.abs() <= 1e-8));
        assert!(forward.report.conservation_residuals.iter().all(|x| x.abs() <= 1e-9));
        for j in &forward.report.bond_currents {
            assert!((j - forward.j_sc).abs() <= 1e-8);
        }
        let back = self_consistent_profile(&template, 0.9, 1.0, NewtonOptions::default()).unwrap();
        assert!((back.j_sc + forward.j_sc).abs() < 1e-9);
        for (a, b) in forward.temperatures.iter().zip(back.temperatures.iter().rev()) {
            assert!((a - b).abs() < 1e-6);
        }
        let flat = self_consistent_profile(&template, 1.0, 1.0, NewtonOptions::default()).unwrap();
        assert_eq!(flat.iterations, 0);
        assert!(flat.j_sc.abs() < 1e-10);
        assert!(self_consistent_profile(&HeatBathChain::uniform(2, 1.0, H, GAMMA, J).unwrap(), 1.0, 0.9, NewtonOptions::default()).is_err());
    }

    #[test]
    fn scaling_rows_for_equal_temperatures_vanish() {
        let template = HeatBathChain::uniform(3, 1.0, H, GAMMA, J).unwrap();
        let rows = fourier_scaling(&template, 1.0, 1.0, &[3, 4], NewtonOptions::default()).unwrap();
        assert!(rows.iter().all(|r| r.j_sc.abs() < 1e-10 && r.max_temperature_step == 0.0));
    }
}
