//! Statistical test machinery: sample summaries, goodness-of-fit tests and
//! the special functions they need. Everything is hand-rolled so results are
//! bit-reproducible and dependency-free.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Mean, unbiased variance and standard errors of a sample.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub var: f64,
    pub se_mean: f64,
    /// Standard error of the variance estimate (normal approximation).
    pub se_var: f64,
}

pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len();
    assert!(n >= 2, "summary needs at least two samples");
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    Summary {
        n,
        mean,
        var,
        se_mean: (var / n as f64).sqrt(),
        se_var: var * (2.0 / (n - 1) as f64).sqrt(),
    }
}

pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    xs.iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / (n - 1.0)
}

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

/// Regularized lower incomplete gamma P(a, x).
pub fn gammp(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        0.0
    } else if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_cf(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
pub fn gammq(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_cf(a, x)
    }
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos, g = 7, n = 9.
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..500 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-15 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_cf(a: f64, x: f64) -> f64 {
    // Modified Lentz continued fraction.
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-15 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

pub fn erf(x: f64) -> f64 {
    if x >= 0.0 {
        gammp(0.5, x * x)
    } else {
        -gammp(0.5, x * x)
    }
}

pub fn erfc(x: f64) -> f64 {
    if x >= 0.0 {
        gammq(0.5, x * x)
    } else {
        2.0 - gammq(0.5, x * x)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// CDF of Normal(0, sigma^2).
pub fn normal_cdf_scaled(x: f64, sigma: f64) -> f64 {
    normal_cdf(x / sigma)
}

/// Survival function of the chi-squared distribution with `dof` degrees.
pub fn chi2_sf(x: f64, dof: usize) -> f64 {
    gammq(dof as f64 / 2.0, x / 2.0)
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov
// ---------------------------------------------------------------------------

/// Asymptotic Kolmogorov survival function
/// Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
/// Below lambda = 1 the alternating series converges too slowly, so the
/// Jacobi-theta transformed series for the CDF is used instead.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.0 {
        let pre = (2.0 * std::f64::consts::PI).sqrt() / lambda;
        let mut cdf = 0.0;
        for k in 1..=20 {
            let m = (2 * k - 1) as f64;
            cdf += (-m * m * std::f64::consts::PI * std::f64::consts::PI
                / (8.0 * lambda * lambda))
                .exp();
        }
        return (1.0 - pre * cdf).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn sort_checked(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.iter().any(|x| x.is_nan()) {
        return Err(Error::Stats("sample contains NaN".into()));
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(v)
}

/// One-sample KS test against a CDF.
pub fn ks_test(xs: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    let v = sort_checked(xs)?;
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in v.iter().enumerate() {
        let f = cdf(*x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    // Stephens' finite-sample scaling.
    let sqrt_n = n.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_sf(lambda),
    })
}

/// Two-sample KS test.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> Result<KsResult> {
    let a = sort_checked(xs)?;
    let b = sort_checked(ys)?;
    let (n, m) = (a.len() as f64, b.len() as f64);
    let mut i = 0;
    let mut j = 0;
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = n * m / (n + m);
    let sqrt_ne = ne.sqrt();
    let lambda = (sqrt_ne + 0.12 + 0.11 / sqrt_ne) * d;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_sf(lambda),
    })
}

/// KS distance between the empirical CDFs of two integer samples, evaluated
/// on the integers (no p-value).
pub fn ks_distance_counts(a: &[i64], b: &[i64]) -> f64 {
    let lo = a.iter().chain(b).copied().min().unwrap_or(0);
    let hi = a.iter().chain(b).copied().max().unwrap_or(0);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let mut d: f64 = 0.0;
    for k in lo..=hi {
        let fa = a.iter().filter(|&&x| x <= k).count() as f64 / n;
        let fb = b.iter().filter(|&&x| x <= k).count() as f64 / m;
        d = d.max((fa - fb).abs());
    }
    d
}

// ---------------------------------------------------------------------------
// Chi-squared goodness of fit
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Chi2Result {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// One-sample chi-squared test of observed bin counts against expected ones.
pub fn chi2_gof(observed: &[f64], expected: &[f64]) -> Result<Chi2Result> {
    if observed.len() != expected.len() || observed.len() < 2 {
        return Err(Error::Stats("bin count mismatch".into()));
    }
    if expected.iter().any(|&e| e <= 0.0) {
        return Err(Error::Stats("expected bin count must be positive".into()));
    }
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = observed.len() - 1;
    Ok(Chi2Result {
        statistic: stat,
        dof,
        p_value: chi2_sf(stat, dof),
    })
}

/// Histogram of integer samples as (value -> count) over the union support.
fn count_histogram(xs: &[i64], lo: i64, hi: i64) -> Vec<f64> {
    let mut h = vec![0.0; (hi - lo + 1) as usize];
    for &x in xs {
        h[(x - lo) as usize] += 1.0;
    }
    h
}

/// Two-sample chi-squared homogeneity test on integer count distributions.
/// Tail bins are pooled until every pooled expected count reaches 5; rejects
/// the sample if fewer than two pooled bins survive.
pub fn chi2_two_sample_counts(a: &[i64], b: &[i64]) -> Result<Chi2Result> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Stats("empty sample".into()));
    }
    let lo = a.iter().chain(b).copied().min().unwrap();
    let hi = a.iter().chain(b).copied().max().unwrap();
    let ha = count_histogram(a, lo, hi);
    let hb = count_histogram(b, lo, hi);
    let na: f64 = a.len() as f64;
    let nb: f64 = b.len() as f64;
    let total = na + nb;

    // Pool adjacent bins from the outside in, so the interior keeps resolution.
    let pooled_expected_ok = |sum: f64| sum * na.min(nb) / total >= 5.0;
    let mut bins: Vec<(f64, f64)> = ha.iter().zip(&hb).map(|(&x, &y)| (x, y)).collect();
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (x, y) in bins.drain(..) {
        acc.0 += x;
        acc.1 += y;
        if pooled_expected_ok(acc.0 + acc.1) {
            pooled.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.0 + acc.1 > 0.0 {
        if let Some(last) = pooled.last_mut() {
            last.0 += acc.0;
            last.1 += acc.1;
        } else {
            pooled.push(acc);
        }
    }
    if pooled.len() < 2 {
        return Err(Error::Stats(
            "samples too small for a valid pooled chi-squared test".into(),
        ));
    }
    let mut stat = 0.0;
    for (oa, ob) in &pooled {
        let row = oa + ob;
        let ea = row * na / total;
        let eb = row * nb / total;
        stat += (oa - ea) * (oa - ea) / ea + (ob - eb) * (ob - eb) / eb;
    }
    let dof = pooled.len() - 1;
    Ok(Chi2Result {
        statistic: stat,
        dof,
        p_value: chi2_sf(stat, dof),
    })
}

// ---------------------------------------------------------------------------
// Theta density of Sch_tau
// ---------------------------------------------------------------------------

/// Intensity density of Sch_tau at x: the Normal(0, 3*tau/2) density wrapped
/// mod 2*pi.
pub fn theta_density(x: f64, tau: f64) -> f64 {
    let var = 1.5 * tau;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * var).sqrt();
    let two_pi = std::f64::consts::TAU;
    let k_max = (6.0 * var.sqrt() / two_pi).ceil() as i64 + 2;
    let mut sum = 0.0;
    for k in -k_max..=k_max {
        let y = x + two_pi * k as f64;
        sum += norm * (-y * y / (2.0 * var)).exp();
    }
    sum
}

/// Mass of the theta density on [a, b], via the wrapped normal CDF.
pub fn theta_mass(a: f64, b: f64, tau: f64) -> f64 {
    let sigma = (1.5 * tau).sqrt();
    let two_pi = std::f64::consts::TAU;
    let k_max = (6.0 * sigma / two_pi).ceil() as i64 + 2;
    let mut sum = 0.0;
    for k in -k_max..=k_max {
        let shift = two_pi * k as f64;
        sum += normal_cdf_scaled(b + shift, sigma) - normal_cdf_scaled(a + shift, sigma);
    }
    sum
}

// ---------------------------------------------------------------------------

/// 95% one-sided upper confidence bound for a binomial probability with zero
/// observed events (rule of three).
pub fn zero_event_upper_bound(n: usize) -> f64 {
    3.0 / n as f64
}

/// Least-squares slope of y against x.
pub fn regression_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn incomplete_gamma_reference_values() {
        // P(1, x) = 1 - exp(-x)
        for x in [0.1, 0.5, 1.0, 3.0, 10.0] {
            assert!((gammp(1.0, x) - (1.0 - (-x as f64).exp())).abs() < 1e-12);
        }
        // chi-squared with 2 dof: SF(x) = exp(-x/2)
        assert!((chi2_sf(4.0, 2) - (-2.0f64).exp()).abs() < 1e-12);
        // Known chi-squared critical value: P(chi2_10 > 18.307) = 0.05
        assert!((chi2_sf(18.307, 10) - 0.05).abs() < 2e-4);
    }

    #[test]
    fn erf_reference_values() {
        assert!((erf(0.5) - 0.5204998778130465).abs() < 1e-12);
        assert!((erf(1.0) - 0.8427007929497149).abs() < 1e-12);
        assert!((normal_cdf(1.96) - 0.9750021048517795).abs() < 1e-10);
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(-1.0) + normal_cdf(1.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kolmogorov_sf_reference() {
        // Q(1.2238) ~ 0.10 (classic table value)
        assert!((kolmogorov_sf(1.2238) - 0.10).abs() < 5e-4);
        assert!(kolmogorov_sf(0.3) > 0.999);
    }

    #[test]
    fn ks_uniform_accepts_uniform() {
        // Deterministic stratified sample from U[0,1].
        let n = 2000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let r = ks_test(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(r.p_value > 0.99, "p = {}", r.p_value);
    }

    #[test]
    fn ks_detects_shift() {
        let n = 2000;
        let xs: Vec<f64> = (0..n).map(|i| 0.2 + 0.8 * (i as f64 + 0.5) / n as f64).collect();
        let r = ks_test(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(r.p_value < 1e-6);
    }

    #[test]
    fn two_sample_ks_identity_is_zero() {
        let xs: Vec<f64> = (0..500).map(|i| (i as f64).sin()).collect();
        let r = ks_two_sample(&xs, &xs).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.p_value > 0.999);
    }

    #[test]
    fn chi2_two_sample_identical_counts() {
        let a: Vec<i64> = (0..3000).map(|i| (i % 5) as i64).collect();
        let r = chi2_two_sample_counts(&a, &a).unwrap();
        assert!(r.statistic < 1e-12);
        assert!(r.p_value > 0.999);
    }

    #[test]
    fn chi2_two_sample_rejects_tiny_samples() {
        let a = vec![0i64, 1];
        let b = vec![0i64, 2];
        assert!(chi2_two_sample_counts(&a, &b).is_err());
    }

    #[test]
    fn theta_density_normalizes() {
        for tau in [0.3, 1.0, 4.0] {
            // Trapezoid quadrature over one period.
            let m = 20_000;
            let h = std::f64::consts::TAU / m as f64;
            let mut integral = 0.0;
            for i in 0..m {
                let x0 = i as f64 * h;
                integral += 0.5 * h * (theta_density(x0, tau) + theta_density(x0 + h, tau));
            }
            assert!((integral - 1.0).abs() < 1e-8, "tau={tau} integral={integral}");
            assert!((theta_mass(0.0, std::f64::consts::TAU, tau) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn theta_density_flattens_at_large_tau() {
        let uniform = 1.0 / std::f64::consts::TAU;
        let mut sup: f64 = 0.0;
        for i in 0..=1000 {
            let x = std::f64::consts::TAU * i as f64 / 1000.0;
            sup = sup.max((theta_density(x, 20.0) - uniform).abs());
        }
        assert!(sup < 1e-3, "sup deviation {sup}");
    }

    #[test]
    fn slope_of_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [2.0, 5.0, 8.0, 11.0];
        assert!((regression_slope(&x, &y) - 3.0).abs() < 1e-12);
    }
}
