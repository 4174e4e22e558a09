//! The random tridiagonal operator H_n and its microscopic spectral data.
//!
//! H_n has ones on the off-diagonals and random potential v_k on the
//! diagonal, with v_k = sigma*omega_k/sqrt(n) (critical model) or
//! sigma*omega_k/sqrt(n+1-k) (decaying model, reversed index). Eigenvalues
//! near a bulk energy E are located by Sturm-sequence bisection and rescaled
//! by rho*n to the microscopic configuration.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{sample_omega, OmegaDistribution, SeedSpec};

/// Asymptotic density factor rho(E) = 1/sqrt(1 - E^2/4).
pub fn density_rho(e: f64) -> Result<f64> {
    if e.abs() >= 2.0 {
        return Err(Error::invalid(
            "E",
            format!("density diverges for |E| >= 2, got {e}"),
        ));
    }
    Ok(1.0 / (1.0 - e * e / 4.0).sqrt())
}

/// Which diagonal scaling the potential uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Critical,
    Decaying,
}

impl Model {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "critical" => Ok(Model::Critical),
            "decaying" => Ok(Model::Decaying),
            other => Err(Error::invalid(
                "model",
                format!("unknown model `{other}` (expected critical|decaying)"),
            )),
        }
    }
}

/// Noise model of the diagonal.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub model: Model,
    pub sigma: f64,
    pub omega: OmegaDistribution,
    pub n: usize,
}

impl PotentialSpec {
    pub fn new(model: Model, sigma: f64, omega: OmegaDistribution, n: usize) -> Result<Self> {
        if !(sigma >= 0.0) {
            return Err(Error::invalid("sigma", format!("must be >= 0, got {sigma}")));
        }
        if n == 0 {
            return Err(Error::invalid("n", "matrix size must be at least 1"));
        }
        Ok(PotentialSpec { model, sigma, omega, n })
    }

    /// Deterministic scale multiplying omega_k (1-based k).
    pub fn scale(&self, k: usize) -> f64 {
        debug_assert!(k >= 1 && k <= self.n);
        match self.model {
            Model::Critical => self.sigma / (self.n as f64).sqrt(),
            Model::Decaying => self.sigma / ((self.n + 1 - k) as f64).sqrt(),
        }
    }
}

/// Symmetric tridiagonal operator: random diagonal, off-diagonal exactly 1.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    diagonal: Vec<f64>,
}

/// Draw the potential and assemble H_n. Deterministic in the seed.
pub fn build_hamiltonian(spec: &PotentialSpec, seed: SeedSpec) -> Hamiltonian {
    let omega = sample_omega(spec.omega, seed, spec.n);
    let diagonal = omega
        .iter()
        .enumerate()
        .map(|(i, w)| spec.scale(i + 1) * w)
        .collect();
    Hamiltonian { diagonal }
}

impl Hamiltonian {
    pub fn from_diagonal(diagonal: Vec<f64>) -> Self {
        Hamiltonian { diagonal }
    }

    pub fn free(n: usize) -> Self {
        Hamiltonian { diagonal: vec![0.0; n] }
    }

    pub fn n(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// Gershgorin bound on the spectral radius.
    pub fn spectral_bound(&self) -> f64 {
        2.0 + self
            .diagonal
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Leading principal submatrix of size n-1.
    pub fn leading_principal(&self) -> Hamiltonian {
        Hamiltonian {
            diagonal: self.diagonal[..self.diagonal.len() - 1].to_vec(),
        }
    }
}

/// Number of eigenvalues of H strictly below `mu`, by the Sturm pivot
/// recurrence. A pivot that lands exactly on zero is treated as positive,
/// which keeps the strictly-below convention at ties.
pub fn sturm_count(h: &Hamiltonian, mu: f64) -> usize {
    let mut count = 0;
    let mut d = f64::INFINITY; // no subdiagonal term for the first row
    for &v in &h.diagonal {
        d = (v - mu) - 1.0 / d;
        if d == 0.0 {
            d = 1e-300;
        }
        if d < 0.0 {
            count += 1;
        }
        // Keep the recurrence finite when a pivot underflows.
        if d.abs() < 1e-300 {
            d = d.signum() * 1e-300;
        }
    }
    count
}

/// Energy window [E - R/(rho n), E + R/(rho n)] with the derived spectral
/// quantities: rho, the unimodular z, and tau = (sigma*rho)^2.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpectralWindow {
    pub e: f64,
    pub r: f64,
    pub sigma: f64,
    pub rho: f64,
    pub tau: f64,
}

impl SpectralWindow {
    pub fn new(e: f64, r: f64, sigma: f64) -> Result<Self> {
        let rho = density_rho(e)?;
        if !(r >= 0.0) {
            return Err(Error::invalid("R", format!("must be >= 0, got {r}")));
        }
        if !(sigma >= 0.0) {
            return Err(Error::invalid("sigma", format!("must be >= 0, got {sigma}")));
        }
        Ok(SpectralWindow {
            e,
            r,
            sigma,
            rho,
            tau: (sigma * rho) * (sigma * rho),
        })
    }

    /// z = E/2 + i sqrt(1 - (E/2)^2), the unit-circle eigenvalue of T(E).
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.e / 2.0, (1.0 - self.e * self.e / 4.0).sqrt())
    }

    pub fn arg_z(&self) -> f64 {
        (1.0 - self.e * self.e / 4.0).sqrt().atan2(self.e / 2.0)
    }

    /// Window bounds in operator (mu) units for matrix size n.
    pub fn mu_bounds(&self, n: usize) -> (f64, f64) {
        let half = self.r / (self.rho * n as f64);
        (self.e - half, self.e + half)
    }

    /// lambda <-> mu conversions for the microscopic rescaling.
    pub fn mu_of_lambda(&self, lambda: f64, n: usize) -> f64 {
        self.e + lambda / (self.rho * n as f64)
    }

    pub fn lambda_of_mu(&self, mu: f64, n: usize) -> f64 {
        self.rho * n as f64 * (mu - self.e)
    }

    /// Boundary shift theta_n = arg(z^{2n+2}), principal argument.
    ///
    /// Centering check at sigma = 0: whenever 3 | (n+1) at E = 1 (or odd n
    /// at E = 0) the free spectrum contains the energy E exactly, the
    /// rescaled configuration contains 0, and arg(z^{2n+2}) = 0 -- so the
    /// shifted configuration stays centered on the 2 pi lattice, matching
    /// the intensity peak of the limit process. Adding a further pi here
    /// would move the points half a period off that peak.
    pub fn shift_theta(&self, n: usize) -> f64 {
        principal_arg((2 * n + 2) as f64 * self.arg_z())
    }
}

/// Wrap an angle into (-pi, pi].
pub fn principal_arg(x: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let y = x.rem_euclid(two_pi);
    if y > std::f64::consts::PI {
        y - two_pi
    } else {
        y
    }
}

/// All eigenvalues of H inside the window, each bracketed to within `tol` by
/// bisection on the Sturm count.
pub fn eigenvalues_in_window(h: &Hamiltonian, w: &SpectralWindow, tol: f64) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", format!("must be > 0, got {tol}")));
    }
    let (lo, hi) = w.mu_bounds(h.n());
    eigenvalues_in_interval(h, lo, hi, tol)
}

/// Eigenvalues of H in [lo, hi], strictly-below convention at the left edge.
pub fn eigenvalues_in_interval(
    h: &Hamiltonian,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", format!("must be > 0, got {tol}")));
    }
    if lo >= hi {
        return Ok(Vec::new());
    }
    let k_lo = sturm_count(h, lo);
    let k_hi = sturm_count(h, hi);
    let mut out = Vec::with_capacity(k_hi.saturating_sub(k_lo));
    for j in k_lo..k_hi {
        // Invariant: sturm(a) <= j < sturm(b).
        let (mut a, mut b) = (lo, hi);
        while b - a > tol {
            let mid = 0.5 * (a + b);
            if sturm_count(h, mid) <= j {
                a = mid;
            } else {
                b = mid;
            }
        }
        out.push(0.5 * (a + b));
    }
    Ok(out)
}

/// Every eigenvalue of H, for brute-force cross-checks at small n.
pub fn eigenvalues_all(h: &Hamiltonian, tol: f64) -> Result<Vec<f64>> {
    let bound = h.spectral_bound() + 1.0;
    eigenvalues_in_interval(h, -bound, bound, tol)
}

// ---------------------------------------------------------------------------
// Inverse iteration
// ---------------------------------------------------------------------------

/// Solve (H - mu I) x = b with a partially pivoted tridiagonal LU.
/// Overwrites `b` with the solution.
fn solve_shifted(diag: &[f64], mu: f64, b: &mut [f64]) {
    let n = diag.len();
    if n == 1 {
        let d = diag[0] - mu;
        b[0] /= if d == 0.0 { 1e-300 } else { d };
        return;
    }
    let mut dd: Vec<f64> = diag.iter().map(|v| v - mu).collect();
    let mut du = vec![1.0_f64; n - 1];
    let mut du2 = vec![0.0_f64; n.saturating_sub(2)];
    let mut mult = vec![0.0_f64; n - 1];
    let mut swapped = vec![false; n - 1];

    for i in 0..n - 1 {
        let sub = 1.0_f64; // subdiagonal entries of H are exactly 1
        if dd[i].abs() >= sub {
            let piv = if dd[i] == 0.0 { 1e-300 } else { dd[i] };
            let fact = sub / piv;
            mult[i] = fact;
            dd[i + 1] -= fact * du[i];
        } else {
            let fact = dd[i] / sub;
            mult[i] = fact;
            swapped[i] = true;
            let old_du_i = du[i];
            dd[i] = sub;
            du[i] = dd[i + 1];
            let old_du_next = if i < n - 2 { du[i + 1] } else { 0.0 };
            dd[i + 1] = old_du_i - fact * du[i];
            if i < n - 2 {
                du2[i] = old_du_next;
                du[i + 1] = -fact * old_du_next;
            }
        }
    }

    for i in 0..n - 1 {
        if swapped[i] {
            b.swap(i, i + 1);
        }
        b[i + 1] -= mult[i] * b[i];
    }

    let safe = |d: f64| if d == 0.0 { 1e-300 } else { d };
    b[n - 1] /= safe(dd[n - 1]);
    if n >= 2 {
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / safe(dd[n - 2]);
    }
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / safe(dd[i]);
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Normalized eigenvector for the located eigenvalue `mu`, by inverse
/// iteration with one shifted solve per sweep. The sign is fixed so the
/// largest-magnitude entry is positive.
pub fn inverse_iteration(h: &Hamiltonian, mu: f64, tol: f64, budget: usize) -> Result<Vec<f64>> {
    let n = h.n();
    let scale = h.spectral_bound();
    // Deterministic pseudo-random start vector.
    let mut x: Vec<f64> = (0..n)
        .map(|i| {
            let u = splitmix64(i as u64 ^ 0x5c1ab0_u64 ^ mu.to_bits());
            (u as f64 / u64::MAX as f64) - 0.5
        })
        .collect();
    normalize(&mut x);

    let mut shift = mu;
    let mut last_residual = f64::INFINITY;
    for sweep in 0..budget {
        let mut y = x.clone();
        solve_shifted(h.diagonal(), shift, &mut y);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            // Degenerate shift: nudge by 2*tol and restart the sweep.
            shift = mu + 2.0 * tol;
            continue;
        }
        for v in &mut y {
            *v /= norm;
        }
        // ||(H - mu) y|| = ||x_prev|| / ||y_raw|| = 1/norm before the update.
        let residual = 1.0 / norm;
        x = y;
        if residual <= 1e-10 * scale.max(1.0) || (sweep > 2 && residual >= last_residual * 0.99) {
            fix_sign(&mut x);
            return Ok(x);
        }
        last_residual = residual;
    }
    Err(Error::InverseIterationFailed {
        budget,
        residual: last_residual,
    })
}

fn normalize(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in x {
        *v /= norm;
    }
}

fn fix_sign(x: &mut [f64]) {
    let mut idx = 0;
    let mut best = 0.0;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > best {
            best = v.abs();
            idx = i;
        }
    }
    if x[idx] < 0.0 {
        for v in x.iter_mut() {
            *v = -*v;
        }
    }
}

/// Outcome of the two-sided eigenvector bound check at level `t`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DelocalizationReport {
    pub t: f64,
    pub min_pair: f64,
    pub max_pair: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub holds: bool,
}

/// Check 2/((n+1)t^2) < |psi_l|^2 + |psi_{l+1}|^2 < 2t^2/(n+1) over all l,
/// with psi_0 = psi_{n+1} = 0, for the eigenvector at `mu`.
pub fn eigenvector_delocalization(
    h: &Hamiltonian,
    mu: f64,
    t: f64,
    tol: f64,
) -> Result<DelocalizationReport> {
    if !(t > 0.0) {
        return Err(Error::invalid("t", format!("must be > 0, got {t}")));
    }
    let psi = inverse_iteration(h, mu, tol, 50)?;
    Ok(delocalization_from_vector(&psi, t))
}

/// Same check for an already-computed normalized eigenvector.
pub fn delocalization_from_vector(psi: &[f64], t: f64) -> DelocalizationReport {
    let n = psi.len();
    let mut min_pair = f64::INFINITY;
    let mut max_pair: f64 = 0.0;
    for l in 0..=n {
        let a = if l == 0 { 0.0 } else { psi[l - 1] * psi[l - 1] };
        let b = if l == n { 0.0 } else { psi[l] * psi[l] };
        let pair = a + b;
        min_pair = min_pair.min(pair);
        max_pair = max_pair.max(pair);
    }
    let lower = 2.0 / ((n + 1) as f64 * t * t);
    let upper = 2.0 * t * t / (n + 1) as f64;
    DelocalizationReport {
        t,
        min_pair,
        max_pair,
        lower_bound: lower,
        upper_bound: upper,
        holds: lower < min_pair && max_pair < upper,
    }
}

/// Rescaled eigenvalue configuration with the boundary shift removed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaledConfiguration {
    /// rho*n*(mu_k - E) - theta_n, sorted increasing.
    pub points: Vec<f64>,
    /// theta_n = arg(z^{2n+2}) + pi (principal argument).
    pub shift: f64,
    pub n: usize,
    pub e: f64,
}

/// Map window eigenvalues to the shifted microscopic configuration.
pub fn rescale_and_shift(eigs: &[f64], w: &SpectralWindow, n: usize) -> ScaledConfiguration {
    let shift = w.shift_theta(n);
    let points = eigs
        .iter()
        .map(|mu| w.lambda_of_mu(*mu, n) - shift)
        .collect();
    ScaledConfiguration {
        points,
        shift,
        n,
        e: w.e,
    }
}

/// Closed-form spectrum of the free operator: 2 cos(pi k/(n+1)), ascending.
pub fn free_spectrum(n: usize) -> Vec<f64> {
    (1..=n)
        .rev()
        .map(|k| 2.0 * (std::f64::consts::PI * k as f64 / (n + 1) as f64).cos())
        .collect()
}

/// Closed-form eigenvector of the free operator for level k (1-based,
/// matching `free_spectrum`'s descending-k-ascending-eigenvalue order).
pub fn free_eigenvector(n: usize, k: usize) -> Vec<f64> {
    let norm = (2.0 / (n + 1) as f64).sqrt();
    (1..=n)
        .map(|l| norm * (std::f64::consts::PI * k as f64 * l as f64 / (n + 1) as f64).sin())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_values() {
        assert_eq!(density_rho(0.0).unwrap(), 1.0);
        assert!((density_rho(1.0).unwrap() - 2.0 / 3.0_f64.sqrt()).abs() < 1e-15);
        assert!(density_rho(2.0).is_err());
        assert!(density_rho(-2.5).is_err());
    }

    #[test]
    fn free_three_by_three() {
        let h = Hamiltonian::free(3);
        // Spectrum {-sqrt2, 0, sqrt2}.
        assert_eq!(sturm_count(&h, 0.0), 1);
        assert_eq!(sturm_count(&h, 3.0), 3);
        assert_eq!(sturm_count(&h, -3.0), 0);
        assert_eq!(sturm_count(&h, 1.0), 2);
        let eigs = eigenvalues_all(&h, 1e-12).unwrap();
        let expect = [-(2.0f64).sqrt(), 0.0, (2.0f64).sqrt()];
        for (a, b) in eigs.iter().zip(expect) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn sturm_count_is_monotone() {
        let spec = PotentialSpec::new(Model::Critical, 1.0, OmegaDistribution::Gaussian, 50).unwrap();
        let h = build_hamiltonian(&spec, SeedSpec::new(4, 0));
        let mut prev = 0;
        let mut mu = -3.0;
        while mu <= 3.0 {
            let c = sturm_count(&h, mu);
            assert!(c >= prev);
            prev = c;
            mu += 0.05;
        }
        assert_eq!(prev, 50);
    }

    #[test]
    fn window_eigenvalues_match_free_spectrum() {
        let n = 2000;
        let h = Hamiltonian::free(n);
        let w = SpectralWindow::new(1.0, 10.0, 0.0).unwrap();
        let eigs = eigenvalues_in_window(&h, &w, 1e-12).unwrap();
        assert!(!eigs.is_empty());
        let all = free_spectrum(n);
        for mu in &eigs {
            let nearest = all
                .iter()
                .map(|x| (x - mu).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-9, "deviation {nearest}");
        }
        // Completeness against the Sturm count.
        let (lo, hi) = w.mu_bounds(n);
        assert_eq!(eigs.len(), sturm_count(&h, hi) - sturm_count(&h, lo));
    }

    #[test]
    fn interlacing_of_principal_submatrix() {
        let spec = PotentialSpec::new(Model::Critical, 1.5, OmegaDistribution::Gaussian, 30).unwrap();
        for stream in 0..5 {
            let h = build_hamiltonian(&spec, SeedSpec::new(11, stream));
            let big = eigenvalues_all(&h, 1e-11).unwrap();
            let small = eigenvalues_all(&h.leading_principal(), 1e-11).unwrap();
            for i in 0..small.len() {
                assert!(
                    big[i] < small[i] + 1e-9 && small[i] < big[i + 1] + 1e-9,
                    "interlacing failed at {i}"
                );
            }
        }
    }

    #[test]
    fn critical_diagonal_variance() {
        let n = 10_000;
        let spec = PotentialSpec::new(Model::Critical, 1.0, OmegaDistribution::Gaussian, n).unwrap();
        let builds = 40;
        let mut total = 0.0;
        for s in 0..builds {
            let h = build_hamiltonian(&spec, SeedSpec::new(7, s));
            total += h.diagonal().iter().map(|v| v * v).sum::<f64>() / n as f64;
        }
        let var = total / builds as f64;
        let expected = 1.0 / n as f64;
        // Var of the pooled estimator: 2/(builds*n) relative.
        let se = expected * (2.0 / (builds as usize * n) as f64).sqrt();
        assert!((var - expected).abs() < 3.0 * se, "var = {var}");
    }

    #[test]
    fn decaying_scale_peaks_at_last_index() {
        let n = 100;
        let spec = PotentialSpec::new(Model::Decaying, 1.0, OmegaDistribution::Gaussian, n).unwrap();
        for k in 1..n {
            assert!(spec.scale(k) < spec.scale(k + 1));
        }
        assert_eq!(spec.scale(n), 1.0);
        // Empirical check that Var(v_n) ~ sigma^2.
        let m = 4000;
        let mut sumsq = 0.0;
        for s in 0..m {
            let h = build_hamiltonian(&spec, SeedSpec::new(3, s));
            let v = h.diagonal()[n - 1];
            sumsq += v * v;
        }
        let var = sumsq / m as f64;
        assert!((var - 1.0).abs() < 3.0 * (2.0 / m as f64).sqrt(), "var = {var}");
    }

    #[test]
    fn inverse_iteration_recovers_free_eigenvectors() {
        let n = 500;
        let h = Hamiltonian::free(n);
        let w = SpectralWindow::new(1.0, 6.0, 0.0).unwrap();
        let eigs = eigenvalues_in_window(&h, &w, 1e-12).unwrap();
        assert!(!eigs.is_empty());
        for mu in &eigs {
            let psi = inverse_iteration(&h, *mu, 1e-12, 50).unwrap();
            let norm: f64 = psi.iter().map(|v| v * v).sum();
            assert!((norm - 1.0).abs() < 1e-10);
            // Identify k from mu = 2cos(pi k/(n+1)).
            let k = ((mu / 2.0).acos() * (n + 1) as f64 / std::f64::consts::PI).round() as usize;
            let mut exact = free_eigenvector(n, k);
            // Align sign with the computed vector.
            let dot: f64 = exact.iter().zip(&psi).map(|(a, b)| a * b).sum();
            if dot < 0.0 {
                for v in &mut exact {
                    *v = -*v;
                }
            }
            let max_err = exact
                .iter()
                .zip(&psi)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0_f64, f64::max);
            assert!(max_err < 1e-8, "max pointwise error {max_err}");
        }
    }

    #[test]
    fn delocalization_bounds_free_case() {
        let n = 500;
        let h = Hamiltonian::free(n);
        let w = SpectralWindow::new(1.0, 6.0, 0.0).unwrap();
        let eigs = eigenvalues_in_window(&h, &w, 1e-12).unwrap();
        for mu in &eigs {
            let rep = eigenvector_delocalization(&h, *mu, 2.0, 1e-12).unwrap();
            assert!(rep.holds, "bounds failed: {rep:?}");
        }
    }

    #[test]
    fn rescale_examples() {
        let w = SpectralWindow::new(1.0, 10.0, 1.0).unwrap();
        let n = 2000;
        // mu = E maps to -shift; unit mu offset maps to 1 - shift.
        let cfg = rescale_and_shift(&[w.e, w.e + 1.0 / (w.rho * n as f64)], &w, n);
        assert!((cfg.points[0] + cfg.shift).abs() < 1e-12);
        assert!((cfg.points[1] + cfg.shift - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shift_parity_at_band_center() {
        // z = i: even n gives arg(z^{2n+2}) = pi, odd n gives 0. At sigma=0
        // the odd-n free spectrum contains E exactly, so its shift must
        // vanish; at even n the nearest levels sit at +-pi and the pi shift
        // recenters them.
        let w = SpectralWindow::new(0.0, 1.0, 1.0).unwrap();
        assert!((w.shift_theta(10) - std::f64::consts::PI).abs() < 1e-12);
        assert!(w.shift_theta(11).abs() < 1e-12);
    }

    #[test]
    fn shift_zero_arg_for_e1_subsequence() {
        // E = 1: arg z = pi/3, and n = 2 mod 3 makes arg(z^{2n+2}) = 0.
        let w = SpectralWindow::new(1.0, 1.0, 1.0).unwrap();
        for n in [500, 2000, 8000] {
            let theta = w.shift_theta(n);
            assert!(theta.abs() < 1e-9, "n={n} theta={theta}");
        }
    }

    #[test]
    fn shift_centers_free_spectrum_on_lattice() {
        // sigma = 0 across parities and energies: every shifted rescaled
        // eigenvalue within the window sits on the 2 pi lattice up to
        // O(lambda^2/n) curvature of the cosine band.
        for (e, n) in [(1.0, 500), (1.0, 501), (1.0, 502), (0.0, 400), (0.0, 401), (0.5, 300)] {
            let w = SpectralWindow::new(e, 6.0, 0.0).unwrap();
            let h = Hamiltonian::free(n);
            let eigs = eigenvalues_in_window(&h, &w, 1e-12).unwrap();
            let cfg = rescale_and_shift(&eigs, &w, n);
            for p in &cfg.points {
                let dist = (p / std::f64::consts::TAU
                    - (p / std::f64::consts::TAU).round())
                .abs()
                    * std::f64::consts::TAU;
                // Band curvature moves level k by ~ lambda_k^2 * rho'' scale.
                assert!(dist < 0.5, "E={e} n={n}: point {p} off lattice by {dist}");
            }
        }
    }

    #[test]
    fn tau_and_z_invariants() {
        let w = SpectralWindow::new(1.0, 5.0, 2.0).unwrap();
        assert!((w.z().norm() - 1.0).abs() < 1e-15);
        assert!((w.tau - (2.0 * w.rho).powi(2)).abs() < 1e-12);
        assert!(SpectralWindow::new(2.0, 1.0, 1.0).is_err());
    }
}
