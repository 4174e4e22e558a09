//! Property tests for the structural invariants.

use proptest::prelude::*;

use num_complex::Complex64;
use schlab_core::operator::{
    density_rho, eigenvalues_all, principal_arg, sturm_count, Hamiltonian, SpectralWindow,
};
use schlab_core::rng::{make_tape, Channel, SeedSpec};
use schlab_core::transfer::lattice_count_half_open;

/// Cheap deterministic diagonal for property inputs.
fn hash_diagonal(seed: u64, n: usize, amplitude: f64) -> Vec<f64> {
    (0..n as u64)
        .map(|i| {
            let x = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(i.wrapping_mul(1442695040888963407));
            let u = (x >> 11) as f64 / (1u64 << 53) as f64;
            (u - 0.5) * amplitude
        })
        .collect()
}

proptest! {
    #[test]
    fn rho_at_least_one(e in -1.999f64..1.999) {
        let rho = density_rho(e).unwrap();
        prop_assert!(rho >= 1.0);
        prop_assert!((rho - 1.0 / (1.0 - e * e / 4.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn principal_arg_in_range(x in -1e4f64..1e4) {
        let y = principal_arg(x);
        prop_assert!(y > -std::f64::consts::PI - 1e-12);
        prop_assert!(y <= std::f64::consts::PI + 1e-12);
        // Same angle mod 2 pi.
        let diff = (x - y) / std::f64::consts::TAU;
        prop_assert!((diff - diff.round()).abs() < 1e-9);
    }

    #[test]
    fn sturm_count_monotone_and_bounded(
        seed in 0u64..1000,
        mu1 in -3.0f64..3.0,
        mu2 in -3.0f64..3.0,
    ) {
        let h = Hamiltonian::from_diagonal(hash_diagonal(seed, 40, 2.0));
        let (lo, hi) = if mu1 <= mu2 { (mu1, mu2) } else { (mu2, mu1) };
        prop_assert!(sturm_count(&h, lo) <= sturm_count(&h, hi));
        prop_assert!(sturm_count(&h, 4.0) == 40);
        prop_assert!(sturm_count(&h, -4.0) == 0);
    }

    #[test]
    fn window_count_matches_interval_solver(
        seed in 0u64..200,
        a in -2.5f64..2.5,
        width in 0.01f64..1.0,
    ) {
        let h = Hamiltonian::from_diagonal(hash_diagonal(seed, 30, 1.5));
        let b = a + width;
        let eigs = schlab_core::operator::eigenvalues_in_interval(&h, a, b, 1e-10).unwrap();
        prop_assert_eq!(eigs.len(), sturm_count(&h, b) - sturm_count(&h, a));
        for pair in eigs.windows(2) {
            prop_assert!(pair[0] < pair[1]);
        }
    }

    #[test]
    fn lattice_count_partition(a in -50.0f64..50.0, b in -50.0f64..50.0, c in -50.0f64..50.0) {
        let mut v = [a, b, c];
        v.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let [x, y, z] = v;
        prop_assert_eq!(
            lattice_count_half_open(x, z),
            lattice_count_half_open(x, y) + lattice_count_half_open(y, z)
        );
    }

    #[test]
    fn mobius_step_stays_on_circle(
        phi0 in 0.0f64..std::f64::consts::TAU,
        eps in -0.6f64..0.6,
        e in -1.9f64..1.9,
    ) {
        let w = SpectralWindow::new(e, 1.0, 1.0).unwrap();
        let state = schlab_core::transfer::DiscretePhaseState {
            ell: 3,
            unit: Complex64::from_polar(1.0, phi0),
            lifted: phi0,
        };
        if let Ok(next) = schlab_core::transfer::discrete_phase_step(&state, &w, eps) {
            prop_assert!((next.unit.norm() - 1.0).abs() < 1e-12);
            prop_assert!((Complex64::from_polar(1.0, next.lifted) - next.unit).norm() < 1e-9);
        }
    }

    #[test]
    fn tape_slices_partition_increments(
        steps in 4usize..64,
        cut in 1usize..63,
    ) {
        prop_assume!(cut < steps);
        let dt = 0.125;
        let tape = make_tape(SeedSpec::new(5150, 0), dt, steps, &[Channel::B2]).unwrap();
        let t_cut = cut as f64 * dt;
        let t_end = steps as f64 * dt;
        let left = tape.slice(0.0, t_cut).unwrap();
        let right = tape.slice(t_cut, t_end).unwrap();
        let mut glued = left.channel(Channel::B2).unwrap().to_vec();
        glued.extend_from_slice(right.channel(Channel::B2).unwrap());
        prop_assert_eq!(glued, tape.channel(Channel::B2).unwrap().to_vec());
    }
}

#[test]
fn interlacing_under_proptest_sizes() {
    // Deterministic spot check complementing the unit test: interlacing for
    // a handful of sizes.
    for n in [5, 9, 17] {
        let diag: Vec<f64> = (0..n).map(|i| ((i * 37 + 11) % 7) as f64 * 0.3 - 0.9).collect();
        let h = Hamiltonian::from_diagonal(diag);
        let big = eigenvalues_all(&h, 1e-11).unwrap();
        let small = eigenvalues_all(&h.leading_principal(), 1e-11).unwrap();
        for i in 0..small.len() {
            assert!(big[i] <= small[i] + 1e-9);
            assert!(small[i] <= big[i + 1] + 1e-9);
        }
    }
}
