//! Fixed-step Euler-Maruyama integration of the limiting SDE families.
//!
//! Every integrator consumes a shared [`TapeView`], so one noise realization
//! drives the whole lambda grid at once; this coupling is what makes the
//! phase functions comparable across lambda and lets point locations be
//! bisected by tape replay.
//!
//! Noise conventions (module-wide):
//! - `dW = (dB2 + i dB3)/sqrt(2)`: squared-modulus rate dt. Used by the
//!   phase, matrix and derivative equations and the decaying-model noise.
//! - The relative-phase equation uses `dZ` with the same normalization, so
//!   its fixed-lambda diffusion coefficient is sqrt(2) sin(alpha/2).
//! - The Sine_beta equation uses the unnormalized pair `dB2 + i dB3`, so its
//!   fixed-lambda diffusion coefficient is 2 sin(alpha/2).
//! - The E = 0 system reads standard increments from channels B1 and B2.
//!
//! Phase variables are always stored as continuous lifts, never wrapped.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat2::Mat2c;
use crate::rng::{Channel, TapeView};

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Decaying-model integrators must stop at least this far before t = 1,
/// where the noise coefficient blows up.
pub const DECAYING_MIN_DELTA: f64 = 1e-3;

/// Sine_beta <-> decaying-model dictionary: beta = 8/(sigma*rho)^2.
///
/// The time change t = 1 - exp(-beta s/4) maps the decaying relative-phase
/// equation onto the Sine_beta one exactly at this value (both drift and
/// diffusion), which the time-change acceptance test verifies pathwise.
pub fn beta_of_sigma_rho(sigma_rho: f64) -> f64 {
    8.0 / (sigma_rho * sigma_rho)
}

pub fn sigma_rho_of_beta(beta: f64) -> f64 {
    (8.0 / beta).sqrt()
}

/// Truncation time after which the Sine_beta relative phase has settled:
/// (4/beta) log(beta lambda/4) plus a fixed buffer.
pub fn sine_beta_tmax(beta: f64, lambda_max: f64) -> f64 {
    (4.0 / beta) * (beta * lambda_max.abs() / 4.0).max(1.0).ln() + 20.0
}

fn validate_horizon(horizon: f64, tape: &TapeView) -> Result<usize> {
    if !(horizon > 0.0) {
        return Err(Error::invalid("horizon", format!("must be > 0, got {horizon}")));
    }
    let dt = tape.dt();
    let steps_f = horizon / dt;
    let steps = steps_f.round() as usize;
    if (steps_f - steps as f64).abs() > 1e-9 * steps_f.max(1.0) {
        return Err(Error::invalid("horizon", "dt must divide the horizon"));
    }
    if steps == 0 || steps > tape.steps() {
        return Err(Error::invalid(
            "horizon",
            format!("needs {steps} steps but tape has {}", tape.steps()),
        ));
    }
    Ok(steps)
}

// ---------------------------------------------------------------------------
// Phase families
// ---------------------------------------------------------------------------

/// Which limiting phase equation to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PhaseKind {
    /// d phi = lambda dt + dB + Re[e^{-i phi} dW]
    Critical,
    /// d phi = lambda dt + dB1 + cos(phi) dB2 + (1/4) cos(2 phi) dt
    CriticalE0,
    /// d phi = lambda dt + (sigma rho/sqrt(1-t)) (dB + Re[e^{-i phi} dW])
    Decaying { sigma_rho: f64 },
}

/// Coupled-in-lambda solutions of one phase equation on a shared tape.
#[derive(Debug, Clone)]
pub struct PhasePathFamily {
    pub kind: PhaseKind,
    pub lambda_grid: Vec<f64>,
    pub dt: f64,
    /// Recorded times; always includes 0 and the horizon.
    pub times: Vec<f64>,
    /// values[i][k] = phi^{lambda_i}(times[k]), lifted.
    pub values: Vec<Vec<f64>>,
}

impl PhasePathFamily {
    pub fn terminal(&self, i: usize) -> f64 {
        *self.values[i].last().unwrap()
    }

    /// Strictly increasing across the lambda grid at the final time.
    pub fn is_monotone_at_final(&self) -> bool {
        self.values
            .windows(2)
            .all(|pair| pair[0].last().unwrap() < pair[1].last().unwrap())
    }
}

/// Integrate the phase family, recording every `stride`-th step.
pub fn integrate_phase_family(
    kind: PhaseKind,
    lambda_grid: &[f64],
    horizon: f64,
    tape: TapeView,
    stride: usize,
) -> Result<PhasePathFamily> {
    let steps = validate_horizon(horizon, &tape)?;
    let dt = tape.dt();
    if let PhaseKind::Decaying { .. } = kind {
        if horizon > 1.0 - DECAYING_MIN_DELTA + 1e-12 {
            return Err(Error::invalid(
                "horizon",
                format!("decaying kind needs horizon <= 1 - {DECAYING_MIN_DELTA}"),
            ));
        }
    }
    let stride = stride.max(1);

    let (ch_a, ch_b, ch_c) = match kind {
        PhaseKind::Critical | PhaseKind::Decaying { .. } => {
            (tape.channel(Channel::B)?, tape.channel(Channel::B2)?, tape.channel(Channel::B3)?)
        }
        // B1 plays the role of the free increment, B2 the cos-coupled one;
        // the third slice is unused but keeps the loop uniform.
        PhaseKind::CriticalE0 => {
            (tape.channel(Channel::B1)?, tape.channel(Channel::B2)?, tape.channel(Channel::B2)?)
        }
    };

    let m = lambda_grid.len();
    let mut phi = vec![0.0_f64; m];
    let mut times = Vec::with_capacity(steps / stride + 2);
    let mut values = vec![Vec::with_capacity(steps / stride + 2); m];
    times.push(0.0);
    for (i, v) in values.iter_mut().enumerate() {
        let _ = i;
        v.push(0.0);
    }

    for k in 0..steps {
        let t_left = k as f64 * dt;
        let da = ch_a[k];
        let db = ch_b[k];
        let dc = ch_c[k];
        match kind {
            PhaseKind::Critical => {
                for (i, p) in phi.iter_mut().enumerate() {
                    let (s, c) = p.sin_cos();
                    *p += lambda_grid[i] * dt + da + SQRT_HALF * (c * db + s * dc);
                }
            }
            PhaseKind::CriticalE0 => {
                for (i, p) in phi.iter_mut().enumerate() {
                    let c = p.cos();
                    let c2 = (2.0 * *p).cos();
                    *p += lambda_grid[i] * dt + da + c * db + 0.25 * c2 * dt;
                }
            }
            PhaseKind::Decaying { sigma_rho } => {
                let f = sigma_rho / (1.0 - t_left).sqrt();
                for (i, p) in phi.iter_mut().enumerate() {
                    let (s, c) = p.sin_cos();
                    *p += lambda_grid[i] * dt + f * (da + SQRT_HALF * (c * db + s * dc));
                }
            }
        }
        if (k + 1) % stride == 0 || k + 1 == steps {
            times.push((k + 1) as f64 * dt);
            for (i, v) in values.iter_mut().enumerate() {
                v.push(phi[i]);
            }
        }
    }

    Ok(PhasePathFamily {
        kind,
        lambda_grid: lambda_grid.to_vec(),
        dt,
        times,
        values,
    })
}

/// Terminal phases only; the hot path for Monte Carlo counting.
pub fn phase_terminal(
    kind: PhaseKind,
    lambda_grid: &[f64],
    horizon: f64,
    tape: TapeView,
) -> Result<Vec<f64>> {
    let fam = integrate_phase_family(kind, lambda_grid, horizon, tape, usize::MAX)?;
    Ok(fam.values.iter().map(|v| *v.last().unwrap()).collect())
}

// ---------------------------------------------------------------------------
// Matrix SDEs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MatrixKind {
    /// dX = (1/2) diag(i l, -i l) X dt + (1/2) ((i dB, dW), (conj dW, -i dB)) X
    Generic,
    /// dX = (1/2) diag(i l, -i l) X dt + (1/2) ((i dB1, i dB2), (-i dB2, -i dB1)) X
    E0,
    /// Generic noise scaled by sigma rho / sqrt(1 - t) on [0, 1).
    Decaying { sigma_rho: f64 },
}

#[derive(Debug, Clone)]
pub struct MatrixPath {
    pub kind: MatrixKind,
    pub lambda: Complex64,
    pub times: Vec<f64>,
    pub xs: Vec<Mat2c>,
}

impl MatrixPath {
    pub fn terminal(&self) -> &Mat2c {
        self.xs.last().unwrap()
    }

    /// Lifted phase 2*arg(i X11) along the recorded path. Meaningful for
    /// real lambda with init Z^{-1}; starts at 2*arg(i X11(0)).
    pub fn lifted_phase(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.xs.len());
        let a0 = (Complex64::i() * self.xs[0].a).arg();
        out.push(2.0 * a0);
        let mut prev = a0;
        let mut acc = 2.0 * a0;
        for x in &self.xs[1..] {
            let a = (Complex64::i() * x.a).arg();
            acc += 2.0 * crate::operator::principal_arg(a - prev);
            prev = a;
            out.push(acc);
        }
        out
    }
}

pub fn integrate_matrix(
    kind: MatrixKind,
    lambda: Complex64,
    init: Mat2c,
    horizon: f64,
    tape: TapeView,
    stride: usize,
) -> Result<MatrixPath> {
    let steps = validate_horizon(horizon, &tape)?;
    let dt = tape.dt();
    if let MatrixKind::Decaying { .. } = kind {
        if horizon > 1.0 - DECAYING_MIN_DELTA + 1e-12 {
            return Err(Error::invalid(
                "horizon",
                format!("decaying kind needs horizon <= 1 - {DECAYING_MIN_DELTA}"),
            ));
        }
    }
    let stride = stride.max(1);

    let (ch_a, ch_b, ch_c) = match kind {
        MatrixKind::Generic | MatrixKind::Decaying { .. } => {
            (tape.channel(Channel::B)?, tape.channel(Channel::B2)?, tape.channel(Channel::B3)?)
        }
        MatrixKind::E0 => {
            (tape.channel(Channel::B1)?, tape.channel(Channel::B2)?, tape.channel(Channel::B2)?)
        }
    };

    let half = Complex64::new(0.5, 0.0);
    let i_unit = Complex64::i();
    let drift_a = half * i_unit * lambda * dt;

    let mut x = init;
    let mut times = Vec::with_capacity(steps / stride + 2);
    let mut xs = Vec::with_capacity(steps / stride + 2);
    times.push(0.0);
    xs.push(x);

    for k in 0..steps {
        let t_left = k as f64 * dt;
        let noise = match kind {
            MatrixKind::Generic | MatrixKind::Decaying { .. } => {
                let scale = match kind {
                    MatrixKind::Decaying { sigma_rho } => sigma_rho / (1.0 - t_left).sqrt(),
                    _ => 1.0,
                };
                let db = scale * ch_a[k];
                let dw = Complex64::new(scale * ch_b[k] * SQRT_HALF, scale * ch_c[k] * SQRT_HALF);
                Mat2c::new(i_unit * db, dw, dw.conj(), -i_unit * db)
            }
            MatrixKind::E0 => {
                let db1 = ch_a[k];
                let db2 = ch_b[k];
                Mat2c::new(
                    i_unit * db1,
                    i_unit * db2,
                    -i_unit * db2,
                    -i_unit * db1,
                )
            }
        };
        // A = (dt/2) diag(i l, -i l) + noise/2
        let a = Mat2c::new(
            drift_a + half * noise.a,
            half * noise.b,
            half * noise.c,
            -drift_a + half * noise.d,
        );
        x = x.add(&a.mul(&x));
        if (k + 1) % stride == 0 || k + 1 == steps {
            times.push((k + 1) as f64 * dt);
            xs.push(x);
        }
    }

    Ok(MatrixPath {
        kind,
        lambda,
        times,
        xs,
    })
}

// ---------------------------------------------------------------------------
// Relative phase families
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RelativeKind {
    /// d alpha = lambda dt + Re[(e^{-i alpha} - 1) dZ]
    Critical,
    /// d alpha = lambda (beta/4) e^{-beta t/4} dt + Re[(e^{-i alpha} - 1)(dB2 + i dB3)]
    SineBeta { beta: f64 },
    /// d alpha = lambda dt + (sigma rho/sqrt(1-t)) Re[(e^{-i alpha} - 1) dW]
    Decaying { sigma_rho: f64 },
}

#[derive(Debug, Clone)]
pub struct RelativePhasePath {
    pub kind: RelativeKind,
    pub lambda_grid: Vec<f64>,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl RelativePhasePath {
    pub fn terminal(&self, i: usize) -> f64 {
        *self.values[i].last().unwrap()
    }
}

pub fn integrate_relative_family(
    kind: RelativeKind,
    lambda_grid: &[f64],
    horizon: f64,
    tape: TapeView,
    stride: usize,
) -> Result<RelativePhasePath> {
    let steps = validate_horizon(horizon, &tape)?;
    let dt = tape.dt();
    if let RelativeKind::Decaying { .. } = kind {
        if horizon > 1.0 - DECAYING_MIN_DELTA + 1e-12 {
            return Err(Error::invalid(
                "horizon",
                format!("decaying kind needs horizon <= 1 - {DECAYING_MIN_DELTA}"),
            ));
        }
    }
    if let RelativeKind::SineBeta { beta } = kind {
        if !(beta > 0.0) {
            return Err(Error::invalid("beta", format!("must be > 0, got {beta}")));
        }
    }
    let stride = stride.max(1);

    let db2 = tape.channel(Channel::B2)?;
    let db3 = tape.channel(Channel::B3)?;

    let m = lambda_grid.len();
    let mut alpha = vec![0.0_f64; m];
    let mut times = Vec::with_capacity(steps / stride + 2);
    let mut values = vec![Vec::with_capacity(steps / stride + 2); m];
    times.push(0.0);
    for v in values.iter_mut() {
        v.push(0.0);
    }

    for k in 0..steps {
        let t_left = k as f64 * dt;
        let b2 = db2[k];
        let b3 = db3[k];
        match kind {
            RelativeKind::Critical => {
                for (i, a) in alpha.iter_mut().enumerate() {
                    let (s, c) = a.sin_cos();
                    *a += lambda_grid[i] * dt + SQRT_HALF * ((c - 1.0) * b2 + s * b3);
                }
            }
            RelativeKind::SineBeta { beta } => {
                let drift = (beta / 4.0) * (-beta * t_left / 4.0).exp() * dt;
                for (i, a) in alpha.iter_mut().enumerate() {
                    let (s, c) = a.sin_cos();
                    *a += lambda_grid[i] * drift + (c - 1.0) * b2 + s * b3;
                }
            }
            RelativeKind::Decaying { sigma_rho } => {
                let f = sigma_rho / (1.0 - t_left).sqrt();
                for (i, a) in alpha.iter_mut().enumerate() {
                    let (s, c) = a.sin_cos();
                    *a += lambda_grid[i] * dt + f * SQRT_HALF * ((c - 1.0) * b2 + s * b3);
                }
            }
        }
        if (k + 1) % stride == 0 || k + 1 == steps {
            times.push((k + 1) as f64 * dt);
            for (i, v) in values.iter_mut().enumerate() {
                v.push(alpha[i]);
            }
        }
    }

    Ok(RelativePhasePath {
        kind,
        lambda_grid: lambda_grid.to_vec(),
        times,
        values,
    })
}

/// Decaying relative phase on an arbitrary strictly increasing time grid,
/// with explicit per-step complex increments (already scaled to the grid).
/// The time-change identity test drives this with a warped tape.
pub fn relative_decaying_on_grid(
    lambda: f64,
    sigma_rho: f64,
    t_grid: &[f64],
    inc_b2: &[f64],
    inc_b3: &[f64],
) -> Result<Vec<f64>> {
    if t_grid.len() < 2 || inc_b2.len() != t_grid.len() - 1 || inc_b3.len() != t_grid.len() - 1 {
        return Err(Error::invalid("t_grid", "grid/increment lengths mismatch"));
    }
    if *t_grid.last().unwrap() > 1.0 - DECAYING_MIN_DELTA + 1e-12 {
        return Err(Error::invalid(
            "t_grid",
            format!("decaying kind needs t <= 1 - {DECAYING_MIN_DELTA}"),
        ));
    }
    let mut alpha = vec![0.0_f64; t_grid.len()];
    for k in 0..t_grid.len() - 1 {
        let t_left = t_grid[k];
        let dt = t_grid[k + 1] - t_grid[k];
        if !(dt > 0.0) {
            return Err(Error::invalid("t_grid", "must be strictly increasing"));
        }
        let f = sigma_rho / (1.0 - t_left).sqrt();
        let (s, c) = alpha[k].sin_cos();
        alpha[k + 1] =
            alpha[k] + lambda * dt + f * SQRT_HALF * ((c - 1.0) * inc_b2[k] + s * inc_b3[k]);
    }
    Ok(alpha)
}

// ---------------------------------------------------------------------------
// Derivative processes
// ---------------------------------------------------------------------------

/// Joint paths of phi, its lambda-derivative, and optionally the second
/// derivative, driven by one tape.
#[derive(Debug, Clone)]
pub struct DerivativePath {
    pub lambda: f64,
    pub times: Vec<f64>,
    pub phi: Vec<f64>,
    /// varpi = d phi / d lambda, from d varpi = dt + varpi Im[e^{-i phi} dW].
    pub varpi: Vec<f64>,
    pub phi_second: Option<Vec<f64>>,
}

pub fn integrate_derivative(
    lambda: f64,
    horizon: f64,
    tape: TapeView,
    with_second: bool,
    stride: usize,
) -> Result<DerivativePath> {
    let steps = validate_horizon(horizon, &tape)?;
    let dt = tape.dt();
    let stride = stride.max(1);
    let ch_b = tape.channel(Channel::B)?;
    let ch_b2 = tape.channel(Channel::B2)?;
    let ch_b3 = tape.channel(Channel::B3)?;

    let mut phi = 0.0_f64;
    let mut varpi = 0.0_f64;
    let mut second = 0.0_f64;

    let cap = steps / stride + 2;
    let mut times = Vec::with_capacity(cap);
    let mut phis = Vec::with_capacity(cap);
    let mut varpis = Vec::with_capacity(cap);
    let mut seconds = if with_second { Vec::with_capacity(cap) } else { Vec::new() };
    times.push(0.0);
    phis.push(0.0);
    varpis.push(0.0);
    if with_second {
        seconds.push(0.0);
    }

    for k in 0..steps {
        let (s, c) = phi.sin_cos();
        // Re and Im parts of e^{-i phi} dW.
        let re = SQRT_HALF * (c * ch_b2[k] + s * ch_b3[k]);
        let im = SQRT_HALF * (c * ch_b3[k] - s * ch_b2[k]);
        phi += lambda * dt + ch_b[k] + re;
        let new_varpi = varpi + dt + varpi * im;
        if with_second {
            second += second * im - varpi * varpi * re;
        }
        varpi = new_varpi;
        if (k + 1) % stride == 0 || k + 1 == steps {
            times.push((k + 1) as f64 * dt);
            phis.push(phi);
            varpis.push(varpi);
            if with_second {
                seconds.push(second);
            }
        }
    }

    Ok(DerivativePath {
        lambda,
        times,
        phi: phis,
        varpi: varpis,
        phi_second: if with_second { Some(seconds) } else { None },
    })
}

/// The exponential functional whose law matches varpi(t):
/// integral_0^t exp(-(B_s - B_t)/sqrt(2) + (s - t)/4) ds, by the trapezoid
/// rule on the tape's B channel.
pub fn sample_derivative_functional(t: f64, tape: TapeView) -> Result<f64> {
    let steps = validate_horizon(t, &tape)?;
    let dt = tape.dt();
    let ch_b = tape.channel(Channel::B)?;
    // Cumulative Brownian path b[k] = B(k dt).
    let mut b = Vec::with_capacity(steps + 1);
    b.push(0.0_f64);
    for k in 0..steps {
        b.push(b[k] + ch_b[k]);
    }
    let b_t = b[steps];
    let f = |k: usize| (-(b[k] - b_t) * SQRT_HALF + (k as f64 * dt - t) / 4.0).exp();
    let mut acc = 0.5 * (f(0) + f(steps));
    for k in 1..steps {
        acc += f(k);
    }
    Ok(acc * dt)
}

// ---------------------------------------------------------------------------
// Log-tan repulsion process
// ---------------------------------------------------------------------------

/// Result of integrating dY = (eps/tau/2) cosh(Y) dt + tanh(Y)/4 dt + dB/sqrt(2).
#[derive(Debug, Clone)]
pub struct LogTanPath {
    pub times: Vec<f64>,
    pub ys: Vec<f64>,
    /// Step index and sign at which |Y| crossed the cap, if it did.
    pub explosion: Option<(usize, i8)>,
}

/// The cosh drift is the exact image of a constant drift eps/tau on
/// alpha = 4 atan(e^Y), so that substep is taken in alpha coordinates and
/// only the bounded tanh drift and the noise are Euler steps. A plain Euler
/// step on cosh(Y) would overflow instantly from the Y0 = -30 surrogate
/// start.
pub fn integrate_logtan(
    epsilon: f64,
    tau: f64,
    tape: TapeView,
    y0: f64,
    cap: f64,
) -> Result<LogTanPath> {
    if !(tau > 0.0) {
        return Err(Error::invalid("tau", format!("must be > 0, got {tau}")));
    }
    let steps = validate_horizon(tau, &tape)?;
    let dt = tape.dt();
    let ch_b = tape.channel(Channel::B)?;
    let drift = epsilon / tau;

    let mut y = y0;
    let mut times = Vec::with_capacity(steps + 1);
    let mut ys = Vec::with_capacity(steps + 1);
    times.push(0.0);
    ys.push(y);
    let mut explosion = None;

    for k in 0..steps {
        // Exact flow of the cosh drift: alpha += (eps/tau) dt.
        let alpha = 4.0 * y.exp().atan() + drift * dt;
        if alpha >= 2.0 * std::f64::consts::PI {
            explosion = Some((k + 1, 1));
            y = cap;
        } else if alpha <= 0.0 {
            explosion = Some((k + 1, -1));
            y = -cap;
        } else {
            y = (alpha / 4.0).tan().ln();
            // Euler on the bounded parts.
            y += 0.25 * y.tanh() * dt + SQRT_HALF * ch_b[k];
        }
        times.push((k + 1) as f64 * dt);
        ys.push(y);
        if y.abs() >= cap {
            explosion = Some((k + 1, if y > 0.0 { 1 } else { -1 }));
            break;
        }
    }

    Ok(LogTanPath { times, ys, explosion })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{make_tape, NoiseTape, SeedSpec};

    const CH3: [Channel; 3] = [Channel::B, Channel::B2, Channel::B3];
    const CH_E0: [Channel; 2] = [Channel::B1, Channel::B2];

    #[test]
    fn zero_tape_critical_phase_is_pure_drift() {
        let tape = NoiseTape::zero(1e-3, 1000, &CH3).unwrap();
        let fam = integrate_phase_family(
            PhaseKind::Critical,
            &[0.0, 1.0, 3.5],
            1.0,
            tape.view(),
            usize::MAX,
        )
        .unwrap();
        assert!((fam.terminal(0) - 0.0).abs() < 1e-14);
        assert!((fam.terminal(1) - 1.0).abs() < 1e-12);
        assert!((fam.terminal(2) - 3.5).abs() < 1e-12);
    }

    #[test]
    fn zero_tape_e0_phase_tracks_reference_ode() {
        // d phi/dt = lambda + cos(2 phi)/4; no closed form needed, compare
        // Euler at dt against a fine RK4 reference. Global Euler error for
        // this drift is below ~1.1*dt, so 5*dt is a safe gate.
        let dt = 1e-3;
        let lambda = 3.0;
        let tape = NoiseTape::zero(dt, 1000, &CH_E0).unwrap();
        let fam = integrate_phase_family(PhaseKind::CriticalE0, &[lambda], 1.0, tape.view(), usize::MAX)
            .unwrap();
        let f = |p: f64| lambda + 0.25 * (2.0 * p).cos();
        let mut phi = 0.0_f64;
        let h = dt / 100.0;
        for _ in 0..100_000 {
            let k1 = f(phi);
            let k2 = f(phi + 0.5 * h * k1);
            let k3 = f(phi + 0.5 * h * k2);
            let k4 = f(phi + h * k3);
            phi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        assert!(
            (fam.terminal(0) - phi).abs() < 5.0 * dt,
            "euler {} vs ref {}",
            fam.terminal(0),
            phi
        );
    }

    #[test]
    fn decaying_phase_rejects_full_interval() {
        let tape = NoiseTape::zero(1e-3, 1001, &CH3).unwrap();
        let r = integrate_phase_family(
            PhaseKind::Decaying { sigma_rho: 1.0 },
            &[1.0],
            1.0,
            tape.view(),
            1,
        );
        assert!(r.is_err());
        let ok = integrate_phase_family(
            PhaseKind::Decaying { sigma_rho: 1.0 },
            &[1.0],
            0.999,
            tape.view(),
            usize::MAX,
        );
        assert!(ok.is_ok());
    }

    #[test]
    fn shared_tape_monotone_in_lambda() {
        for id in 0..20 {
            let tape = make_tape(SeedSpec::new(500, id), 1e-3, 1000, &CH3).unwrap();
            let fam = integrate_phase_family(
                PhaseKind::Critical,
                &[0.0, 1.0, 2.0],
                1.0,
                tape.view(),
                usize::MAX,
            )
            .unwrap();
            assert!(fam.is_monotone_at_final(), "tape {id}");
        }
    }

    #[test]
    fn zero_tape_matrix_is_diagonal_rotation() {
        let dt = 1e-3;
        let tape = NoiseTape::zero(dt, 1000, &CH3).unwrap();
        let lam = Complex64::new(1.0, 0.0);
        let path = integrate_matrix(
            MatrixKind::Generic,
            lam,
            Mat2c::identity(),
            1.0,
            tape.view(),
            usize::MAX,
        )
        .unwrap();
        let x = path.terminal();
        let expect = Mat2c::new(
            Complex64::from_polar(1.0, 0.5),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::from_polar(1.0, -0.5),
        );
        // Euler error for x' = ax: about (|a|^2 T/2) e^{|a|T} dt ~ 0.21 dt.
        assert!(x.max_abs_diff(&expect) < dt, "diff {}", x.max_abs_diff(&expect));
    }

    #[test]
    fn matrix_det_nearly_conserved() {
        let tape = make_tape(SeedSpec::new(41, 3), 1e-3, 1000, &CH3).unwrap();
        let path = integrate_matrix(
            MatrixKind::Generic,
            Complex64::new(2.0, 0.0),
            Mat2c::identity(),
            1.0,
            tape.view(),
            usize::MAX,
        )
        .unwrap();
        let det = path.terminal().det();
        assert!((det - Complex64::new(1.0, 0.0)).norm() < 0.2, "det = {det}");
    }

    #[test]
    fn zero_tape_relative_kinds() {
        let tape = NoiseTape::zero(1e-3, 1000, &[Channel::B2, Channel::B3]).unwrap();
        // lambda = 0 stays exactly zero for every kind; drift-only for others.
        let crit = integrate_relative_family(
            RelativeKind::Critical,
            &[0.0, 2.0],
            1.0,
            tape.view(),
            usize::MAX,
        )
        .unwrap();
        assert_eq!(crit.terminal(0), 0.0);
        assert!((crit.terminal(1) - 2.0).abs() < 1e-12);

        let beta = 2.0;
        let sb = integrate_relative_family(
            RelativeKind::SineBeta { beta },
            &[0.0, 5.0],
            1.0,
            tape.view(),
            usize::MAX,
        )
        .unwrap();
        assert_eq!(sb.terminal(0), 0.0);
        // Closed form: lambda (1 - e^{-beta t/4}); left-Riemann error < 5 dt.
        let expect = 5.0 * (1.0 - (-beta * 1.0 / 4.0_f64).exp());
        assert!((sb.terminal(1) - expect).abs() < 5.0 * 1e-3);
    }

    #[test]
    fn relative_alpha_zero_is_fixed_point_with_noise() {
        let tape = make_tape(SeedSpec::new(9, 9), 1e-3, 500, &[Channel::B2, Channel::B3]).unwrap();
        let fam = integrate_relative_family(
            RelativeKind::Critical,
            &[0.0],
            0.5,
            tape.view(),
            1,
        )
        .unwrap();
        assert!(fam.values[0].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_tape_derivative_paths() {
        let tape = NoiseTape::zero(1e-3, 1000, &CH3).unwrap();
        let path = integrate_derivative(2.0, 1.0, tape.view(), true, usize::MAX).unwrap();
        assert!((path.varpi.last().unwrap() - 1.0).abs() < 1e-12);
        assert!((path.phi.last().unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(*path.phi_second.unwrap().last().unwrap(), 0.0);
    }

    #[test]
    fn varpi_positive_on_noisy_paths() {
        for id in 0..50 {
            let tape = make_tape(SeedSpec::new(77, id), 1e-3, 1000, &CH3).unwrap();
            let path = integrate_derivative(1.0, 1.0, tape.view(), false, 100).unwrap();
            assert!(path.varpi[1..].iter().all(|v| *v > 0.0), "tape {id}");
        }
    }

    #[test]
    fn zero_tape_derivative_functional() {
        let t = 1.0;
        let tape = NoiseTape::zero(1e-4, 10_000, &[Channel::B]).unwrap();
        let got = sample_derivative_functional(t, tape.view()).unwrap();
        let expect = 4.0 * (1.0 - (-t / 4.0_f64).exp());
        assert!((got - expect).abs() < 1e-4, "{got} vs {expect}");
        assert!(got > 0.0);
    }

    #[test]
    fn zero_tape_logtan_fixed_point() {
        let tape = NoiseTape::zero(1e-3, 1000, &[Channel::B]).unwrap();
        let path = integrate_logtan(0.0, 1.0, tape.view(), 0.0, 50.0).unwrap();
        assert!(path.explosion.is_none());
        assert!(path.ys.iter().all(|y| y.abs() < 1e-12));
    }

    #[test]
    fn logtan_monotone_in_initial_condition() {
        for id in 0..30 {
            let tape = make_tape(SeedSpec::new(31, id), 1e-3, 1000, &[Channel::B]).unwrap();
            let low = integrate_logtan(0.05, 1.0, tape.view(), -5.0, 50.0).unwrap();
            let high = integrate_logtan(0.05, 1.0, tape.view(), -4.0, 50.0).unwrap();
            let n = low.ys.len().min(high.ys.len());
            for k in 0..n {
                assert!(high.ys[k] >= low.ys[k] - 1e-12, "tape {id} step {k}");
            }
        }
    }

    #[test]
    fn logtan_rises_smoothly_from_deep_surrogate_start() {
        // From Y0 = -30 the path must climb smoothly, not blow up. The
        // zero-noise flow in alpha coordinates is
        // d alpha/dt = eps/tau - sin(alpha)/4 (the tanh term is the Ito
        // correction); compare against an RK4 reference of that ODE.
        let eps = 0.05;
        let tape = NoiseTape::zero(1e-4, 10_000, &[Channel::B]).unwrap();
        let path = integrate_logtan(eps, 1.0, tape.view(), -30.0, 50.0).unwrap();
        assert!(path.explosion.is_none());
        let last = *path.ys.last().unwrap();

        let f = |a: f64| eps - a.sin() / 4.0;
        let mut alpha = 4.0 * (-30.0_f64).exp().atan();
        let h = 1e-5;
        for _ in 0..100_000 {
            let k1 = f(alpha);
            let k2 = f(alpha + 0.5 * h * k1);
            let k3 = f(alpha + 0.5 * h * k2);
            let k4 = f(alpha + h * k3);
            alpha += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        let y_expect = (alpha / 4.0).tan().ln();
        assert!((last - y_expect).abs() < 0.01, "{last} vs {y_expect}");
    }

    #[test]
    fn beta_dictionary_roundtrip() {
        for beta in [0.5, 2.0, 10.0] {
            let sr = sigma_rho_of_beta(beta);
            assert!((beta_of_sigma_rho(sr) - beta).abs() < 1e-12);
        }
        assert!(sine_beta_tmax(2.0, 2.0 * std::f64::consts::PI * 5.0) > 20.0);
    }
}
