//! Acceptance suite: every contract statistic at its full sample size and
//! stated tolerance, one test per criterion, one printed verdict line per
//! checked statistic. Run with
//!
//!     cargo test -p schlab-cli --test acceptance -- --nocapture --test-threads 1
//!
//! The whole suite is Monte Carlo at fixed seeds, so outcomes are
//! bit-reproducible. Two sub-checks are known to be unmeasurable by plain
//! sampling at these scales and fail honestly rather than being loosened;
//! their tests document the measured values (see c06 and c14).

use schlab_cli::{config::Config, experiments};

fn run_criterion(criterion: &str, experiment: &str, overrides: &[(&str, &str)]) -> Vec<(String, bool, f64, f64)> {
    let mut cfg = Config::new();
    cfg.set("experiment", experiment);
    for (k, v) in overrides {
        cfg.set(k, v);
    }
    let outcome = experiments::run(&cfg).unwrap_or_else(|e| panic!("{criterion}: {e}"));
    let mut rows = Vec::new();
    for r in &outcome.reports {
        let ok = r.verdict.passed();
        println!(
            "[{}] {criterion} {}: estimate {:.6e}, reference {:.6e}",
            if ok { "PASS" } else { "FAIL" },
            r.name,
            r.estimate,
            r.reference,
        );
        rows.push((r.name.clone(), ok, r.estimate, r.reference));
    }
    println!(
        "[{}] {criterion} ({experiment})",
        if outcome.passed() { "PASS" } else { "FAIL" }
    );
    rows
}

fn assert_all(criterion: &str, rows: &[(String, bool, f64, f64)]) {
    for (name, ok, est, reference) in rows {
        assert!(*ok, "{criterion}: {name} failed (estimate {est}, reference {reference})");
    }
}

#[test]
fn c01_zero_noise_exactness() {
    // sigma = 0, n = 2000, E = 1, R = 20: eigenvalues within 1e-9 of the
    // cosine spectrum, eigenvectors within 1e-8 of the discrete sines.
    let rows = run_criterion("criterion-01", "zero-noise-spectrum", &[]);
    assert_all("criterion-01", &rows);
}

#[test]
fn c02_oracle_agreement() {
    // 100 critical instances at n = 500: Sturm bisection, oscillation
    // counting and secular roots agree exactly in count and to 1e-6 in
    // location.
    let rows = run_criterion("criterion-02", "oracle-agreement", &[]);
    assert_all("criterion-02", &rows);
}

#[test]
fn c03_phase_marginal() {
    // tau = 1, lambda = 3, dt = 1e-4, 5e4 tapes: mean within 3 SE of 3,
    // variance within 3 SE of 1.5.
    let rows = run_criterion("criterion-03", "phase-marginal", &[]);
    assert_all("criterion-03", &rows);
}

#[test]
fn c04_derivative_identities() {
    // E[varpi(1)] = 1 within 3 SE over 1e4 tapes; two-sample KS against the
    // exponential functional passes at 1e-2.
    let rows = run_criterion("criterion-04", "derivative-identities", &[]);
    assert_all("criterion-04", &rows);
}

#[test]
fn c05_intensity() {
    // tau = 1, 2e4 samples: chi-squared against the wrapped-normal density
    // over 24 bins at significance 1e-3; mean count per 2 pi window = 1
    // within 3 SE.
    let rows = run_criterion("criterion-05", "intensity", &[]);
    assert_all("criterion-05", &rows);
}

#[test]
fn c06_repulsion() {
    // tau = 1, eps in {0.05, 0.1, 0.2}, 1e5 samples. The tail bounds hold
    // (with zero observed events the rule-of-three upper bound sits below
    // each applicable bound). The log-log slope check is asserted as
    // specified and fails honestly: pair probabilities at these eps are
    // below 1.5e-6 (verified independently via the log-tan route over 2e6
    // tapes and via located point samples), so no slope is measurable by
    // plain Monte Carlo at this scale -- the repulsion is far stronger than
    // any eps^{2+beta} law, which is the substance the check gestures at.
    let rows = run_criterion("criterion-06", "repulsion", &[]);
    for (name, ok, est, reference) in &rows {
        if name == "repulsion-loglog-slope" {
            assert!(
                *ok,
                "criterion-06: {name} unmeasurable (estimate {est}, needs > {reference}): \
                 zero pair events at every eps at 1e5 samples"
            );
        } else {
            assert!(*ok, "criterion-06: {name} failed (estimate {est}, bound {reference})");
        }
    }
}

#[test]
fn c07_clt() {
    // tau = 1, lambda = 200, 5e4 samples: covariance matrix of
    // (phi^0, phi^lambda - lambda) within 0.1 entrywise of [[1.5,1],[1,1.5]].
    let rows = run_criterion("criterion-07", "clt", &[]);
    assert_all("criterion-07", &rows);
}

#[test]
fn c08_sine_beta() {
    // beta = 2: mean count on [0, 2 pi] = 1 within 3 SE over 2e4 tapes;
    // Var(count - lambda/2pi)/log lambda within 25% of 1/pi^2 at
    // lambda = 2 pi * 200.
    let rows = run_criterion("criterion-08", "sine-beta", &[]);
    assert_all("criterion-08", &rows);
}

#[test]
fn c09_time_change() {
    // Decaying relative phase on the warped grid vs the Sine_beta equation
    // on matched tapes: pathwise within 10 sqrt(dt) for 100 tapes.
    let rows = run_criterion("criterion-09", "time-change", &[]);
    assert_all("criterion-09", &rows);
}

#[test]
fn c10_carousel_equivalence() {
    // Counts on [0, 20]: carousel realization vs uniformly shifted Sch_tau,
    // two-sample chi-squared p > 1e-3 at 2e4 samples each.
    let rows = run_criterion("criterion-10", "carousel-equivalence", &[]);
    assert_all("criterion-10", &rows);
}

#[test]
fn c11_discrete_to_continuum() {
    // Critical model at n in {500, 2000, 8000}: KS distance between the
    // shifted spectrum's count distribution on [0, 2 pi] and the Sch counts
    // is non-increasing in n and < 0.05 at n = 8000 (5e3 samples each).
    let rows = run_criterion("criterion-11", "discrete-to-continuum", &[]);
    assert_all("criterion-11", &rows);
}

#[test]
fn c12_invariance() {
    // (lambda, theta, t) = (5, 2, 1), 1e4 tapes per arm: means and
    // variances agree within 3 SE, two-sample KS passes at 1e-2.
    let rows = run_criterion("criterion-12", "invariance", &[]);
    assert_all("criterion-12", &rows);
}

#[test]
fn c13_conservation_and_order() {
    // det X and Im(X11 conj(X12)) drifts shrink by >= 1.3 under dt halving
    // over 1e3 tapes; every integrator passes its zero-tape closed-form
    // check at O(dt).
    let rows = run_criterion("criterion-13", "conservation-order", &[]);
    assert_all("criterion-13", &rows);
}

#[test]
fn c14_gap_trend() {
    // tau = 1, lambda in {4, 6}, 1e6 samples. Strict decrease of the gap
    // probability holds. The band check on -log P/(lambda^2/4) is asserted
    // as specified and fails honestly at these lambda: both intervals are
    // shorter than one 2 pi period of the jittered-lattice structure, so
    // gaps cost only wrapped-normal positioning (measured ratios ~ 0.19,
    // cross-checked against located point samples) and the asymptotic
    // band [0.5, 1.8] cannot apply yet; lambda large enough to enter the
    // band has gap probabilities below plain-MC resolution.
    let rows = run_criterion("criterion-14", "gap-trend", &[]);
    // Monotonicity first so a regression there is not masked by the known
    // band failures.
    for (name, ok, est, reference) in &rows {
        if name == "gap-probability-strictly-decreasing" {
            assert!(*ok, "criterion-14: {name} failed");
        }
        let _ = (est, reference);
    }
    for (name, ok, est, reference) in &rows {
        assert!(
            *ok,
            "criterion-14: {name} failed: measured P = {est}, decay ratio outside [0.5, 1.8] \
             (rate denominator {reference}); both windows are shorter than one 2 pi period, \
             where gaps cost only positioning"
        );
    }
}

#[test]
fn c15_bounds_diagnostics() {
    // Wegner and Minami bounds hold on 1e3 gaussian instances at n = 500;
    // the delocalization violation rate at t = 10 sits strictly below the
    // rate at t = 3.
    let rows = run_criterion("criterion-15", "bounds-diagnostics", &[]);
    assert_all("criterion-15", &rows);
}
