//! Medium-scale Monte Carlo checks of the point-process layer. The full
//! acceptance suite runs the same statistics at the contract sample sizes;
//! these runs are sized to finish quickly.

use schlab_core::points::{
    compare_distributions, sch_count_interval, sch_phases, sch_star_count, sch_tape,
    sine_beta_counts_task, McConfig,
};
use schlab_core::rng::{make_tape, sample_uniform_shift, Channel, SeedSpec};
use schlab_core::sde::integrate_logtan;
use schlab_core::stats;
use schlab_core::transfer::lattice_count_half_open;

const TWO_PI: f64 = std::f64::consts::TAU;

#[test]
fn sch_counts_invariant_under_2pi_translation() {
    let tau = 1.0;
    let dt = 1e-3;
    let n = 3000;
    let mut first = Vec::with_capacity(n);
    let mut second = Vec::with_capacity(n);
    for id in 0..n {
        let tape = sch_tape(tau, SeedSpec::new(71, id as u64), dt).unwrap();
        let phis = sch_phases(tau, &[0.0, TWO_PI, 2.0 * TWO_PI], tape.view()).unwrap();
        first.push(lattice_count_half_open(phis[0], phis[1]) as i64);
        second.push(lattice_count_half_open(phis[1], phis[2]) as i64);
    }
    let reports = compare_distributions(&first, &second).unwrap();
    let chi2 = &reports[0];
    assert!(
        chi2.p_value.unwrap() > 1e-3,
        "translation chi2 p = {:?}",
        chi2.p_value
    );
}

#[test]
fn sch_star_counts_translation_invariant_anywhere() {
    // After the uniform shift, counts in [0, l] and [a, a+l] agree in law
    // for any a, not just multiples of 2 pi.
    let tau = 1.0;
    let dt = 1e-3;
    let len = 4.0;
    let offset = 2.5;
    let n = 3000;
    let mut at_zero = Vec::with_capacity(n);
    let mut at_offset = Vec::with_capacity(n);
    for id in 0..n {
        let seed = SeedSpec::new(72, id as u64);
        let shift = sample_uniform_shift(seed);
        let tape = sch_tape(tau, seed, dt).unwrap();
        let a = sch_count_interval(tau, -shift, len - shift, tape.view()).unwrap();
        let b = sch_count_interval(tau, offset - shift, offset + len - shift, tape.view()).unwrap();
        at_zero.push(a as i64);
        at_offset.push(b as i64);
    }
    let reports = compare_distributions(&at_zero, &at_offset).unwrap();
    assert!(reports[0].p_value.unwrap() > 1e-3);
}

#[test]
fn sch_star_count_runs() {
    let c = sch_star_count(1.0, 20.0, SeedSpec::new(73, 5), 1e-3).unwrap();
    assert!(c < 30, "count {c} implausible for a window of length 20");
}

#[test]
fn sine_beta_counts_deterministic_and_monotone() {
    let beta = 2.0;
    let grid = [TWO_PI, 2.0 * TWO_PI, 4.0 * TWO_PI];
    let a = sine_beta_counts_task(beta, &grid, SeedSpec::new(74, 1), 1e-3, 25.0).unwrap();
    let b = sine_beta_counts_task(beta, &grid, SeedSpec::new(74, 1), 1e-3, 25.0).unwrap();
    assert_eq!(a, b);
    let mut sorted = a.clone();
    sorted.sort_unstable();
    assert_eq!(a, sorted, "counts must be non-decreasing in lambda");
}

#[test]
fn sine_beta_mean_count_near_density() {
    let beta = 2.0;
    let n = 2000;
    let mut counts = Vec::with_capacity(n);
    for id in 0..n {
        let c = sine_beta_counts_task(beta, &[TWO_PI], SeedSpec::new(75, id as u64), 1e-3, 25.0)
            .unwrap()[0];
        counts.push(c as f64);
    }
    let s = stats::summarize(&counts);
    assert!(
        (s.mean - 1.0).abs() < 4.0 * s.se_mean,
        "mean {} +- {}",
        s.mean,
        s.se_mean
    );
}

#[test]
fn logtan_explosion_probability_below_tail_bound() {
    // tau = 1, eps = 0.05: the phase-space bound is
    // 4 exp(-(log(tau/eps) - tau)^2/tau) ~ 0.0747.
    let tau: f64 = 1.0;
    let eps: f64 = 0.05;
    let bound = 4.0 * (-((tau / eps).ln() - tau).powi(2) / tau).exp();
    let n = 10_000;
    let mut explosions = 0;
    for id in 0..n {
        let tape = make_tape(SeedSpec::new(76, id as u64), 1e-3, 1000, &[Channel::B]).unwrap();
        let path = integrate_logtan(eps, tau, tape.view(), -30.0, 50.0).unwrap();
        if matches!(path.explosion, Some((_, 1))) {
            explosions += 1;
        }
    }
    let p = explosions as f64 / n as f64;
    assert!(p <= bound, "explosion rate {p} vs bound {bound}");
}

#[test]
fn mc_config_seeding_is_stable() {
    let cfg = McConfig {
        master_seed: 99,
        samples: 10,
        dt: 1e-3,
    };
    assert_eq!(cfg.seed(3), SeedSpec::new(99, 3));
}
