//! Cross-module checks of the finite-volume semigroup through the public API.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use weakqms_core::algebra::{pauli, LocalOperator, Site, Volume};
use weakqms_core::certificates::{bound_curves, finite_range_parameters};
use weakqms_core::finite_volume::{evolve_heisenberg, evolve_schrodinger, stationary_state, volume_convergence};
use weakqms_core::generators::interaction_norm;
use weakqms_core::linalg::{random_density_matrix, trace, CMatrix};
use weakqms_core::models::ising_model;

fn z_at(x: i64) -> LocalOperator {
    LocalOperator::on_site(Site::on_line(x), pauli::sigma_z()).unwrap()
}

#[test]
fn stationary_state_is_fixed_by_the_schrodinger_flow() {
    let m = ising_model(0.3, 0.05, 3).unwrap();
    let gen = m.lattice_model().assemble(&m.volume).unwrap();
    let rho = stationary_state(&gen).unwrap().density_matrix;
    let later = evolve_schrodinger(&gen, &rho, 5.0).unwrap();
    assert!((later - &rho).norm() < 1e-9);
    let id = LocalOperator::identity(m.volume.clone(), 2);
    assert!((evolve_heisenberg(&gen, &id, 3.0).unwrap().matrix() - id.matrix()).norm() < 1e-10);
}

#[test]
fn volume_differences_stay_below_the_bound() {
    let m = ising_model(0.3, 0.05, 1).unwrap();
    let eps = interaction_norm(&m.interactions, 4.0);
    let params = finite_range_parameters(4.0, 0.5, 0.1, eps, m.profiles.max_amplitude()).unwrap();
    let curves = bound_curves(&params, 1, None);
    let volumes: Vec<Volume> = [1, 3, 5].iter().map(|&n| Volume::centered_chain(n)).collect();
    let report = volume_convergence(&m.lattice_model(), &z_at(0), &volumes, 2.0, Some(&curves)).unwrap();
    assert_eq!(report.dominated, Some(true));
    assert!(report.rows[1].difference < report.rows[0].difference);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// `Tr(ρ e^{tL}(A)) = Tr(e^{tL*}(ρ) A)`, and the flow keeps states normalized.
    #[test]
    fn heisenberg_and_schrodinger_pictures_agree(seed in 0u64..1000, t in 0.0f64..4.0, j in 0.0f64..0.3) {
        let m = ising_model(0.7, j, 2).unwrap();
        let gen = m.lattice_model().assemble(&m.volume).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho: CMatrix = random_density_matrix(4, &mut rng);
        let a = z_at(0).embed(&m.volume).unwrap();
        let heis = trace(&(&rho * evolve_heisenberg(&gen, &a, t).unwrap().matrix()));
        let evolved = evolve_schrodinger(&gen, &rho, t).unwrap();
        let schr = trace(&(&evolved * a.matrix()));
        prop_assert!((heis - schr).norm() < 1e-9);
        prop_assert!((trace(&evolved).re - 1.0).abs() < 1e-10);
    }
}
