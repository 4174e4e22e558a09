//! Hyperbolic Brownian motion in the Poincaré disk and the rotating
//! boundary-point ODE.
//!
//! The center V follows dV = ((1-|V|^2)/2) dY with Y a standard complex
//! Brownian motion (normalized so |dY|^2 has rate dt), and a boundary point
//! rotated around V at speed lambda has Euclidean angle gamma solving
//! d gamma/dt = lambda |e^{i gamma} - V|^2 / (1 - |V|^2). The hyperbolic
//! radius q = log((1+|V|)/(1-|V|)) obeys dq = dB/sqrt(2) + coth(q)/4 dt.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::{Channel, TapeView};

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Recorded carousel trajectory.
#[derive(Debug, Clone)]
pub struct CarouselPath {
    pub lambda_grid: Vec<f64>,
    pub times: Vec<f64>,
    pub v: Vec<Complex64>,
    /// gammas[i][k] = gamma^{lambda_i}(times[k]), lifted (gamma(0) = 0).
    pub gammas: Vec<Vec<f64>>,
    /// Hyperbolic radius q(V) at the recorded times.
    pub q: Vec<f64>,
    /// Radial Brownian increments sqrt(2) Re[e^{-i arg V} dY], one per step,
    /// for cross-checking the q equation.
    pub radial_increments: Vec<f64>,
}

pub fn hyperbolic_radius(v: Complex64) -> f64 {
    let r = v.norm();
    ((1.0 + r) / (1.0 - r)).ln()
}

/// Integrate V and the gamma family over `horizon` on the tape's B2/B3
/// channels. Errors out if |V| reaches 1 - 1e-8.
pub fn integrate_carousel(
    lambda_grid: &[f64],
    horizon: f64,
    tape: TapeView,
    stride: usize,
) -> Result<CarouselPath> {
    let dt = tape.dt();
    let steps_f = horizon / dt;
    let steps = steps_f.round() as usize;
    if steps == 0 || (steps_f - steps as f64).abs() > 1e-9 * steps_f.max(1.0) {
        return Err(Error::invalid("horizon", "dt must divide the horizon"));
    }
    if steps > tape.steps() {
        return Err(Error::invalid(
            "horizon",
            format!("needs {steps} steps but tape has {}", tape.steps()),
        ));
    }
    let stride = stride.max(1);
    let db2 = tape.channel(Channel::B2)?;
    let db3 = tape.channel(Channel::B3)?;

    let m = lambda_grid.len();
    let mut v = Complex64::new(0.0, 0.0);
    let mut gamma = vec![0.0_f64; m];

    let cap = steps / stride + 2;
    let mut times = Vec::with_capacity(cap);
    let mut vs = Vec::with_capacity(cap);
    let mut gammas = vec![Vec::with_capacity(cap); m];
    let mut qs = Vec::with_capacity(cap);
    let mut radial = Vec::with_capacity(steps);
    times.push(0.0);
    vs.push(v);
    qs.push(0.0);
    for g in gammas.iter_mut() {
        g.push(0.0);
    }

    for k in 0..steps {
        let r2 = v.norm_sqr();
        let denom = 1.0 - r2;
        // gamma update with left-endpoint V.
        for (i, g) in gamma.iter_mut().enumerate() {
            let e = Complex64::from_polar(1.0, *g);
            *g += lambda_grid[i] * (e - v).norm_sqr() / denom * dt;
        }
        let dy = Complex64::new(db2[k] * SQRT_HALF, db3[k] * SQRT_HALF);
        let dir = if v.norm() > 0.0 {
            v / v.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        radial.push(std::f64::consts::SQRT_2 * (dir.conj() * dy).re);
        v += dy * (denom / 2.0);
        if v.norm() >= 1.0 - 1e-8 {
            return Err(Error::CarouselEscape {
                step: k + 1,
                abs_v: v.norm(),
            });
        }
        if (k + 1) % stride == 0 || k + 1 == steps {
            times.push((k + 1) as f64 * dt);
            vs.push(v);
            qs.push(hyperbolic_radius(v));
            for (i, g) in gammas.iter_mut().enumerate() {
                g.push(gamma[i]);
            }
        }
    }

    Ok(CarouselPath {
        lambda_grid: lambda_grid.to_vec(),
        times,
        v: vs,
        gammas,
        q: qs,
        radial_increments: radial,
    })
}

/// Continue a V path until it is within `stop_dist` of the unit circle and
/// return the boundary angle it is heading to. Coarse tapes are fine here;
/// the angle freezes exponentially fast as q grows.
pub fn boundary_limit_angle(
    v_start: Complex64,
    tail: TapeView,
    stop_dist: f64,
) -> Result<f64> {
    let db2 = tail.channel(Channel::B2)?;
    let db3 = tail.channel(Channel::B3)?;
    let mut v = v_start;
    for k in 0..tail.steps() {
        let denom = 1.0 - v.norm_sqr();
        if 1.0 - v.norm() < stop_dist {
            break;
        }
        let dy = Complex64::new(db2[k] * SQRT_HALF, db3[k] * SQRT_HALF);
        v += dy * (denom / 2.0);
        if v.norm() >= 1.0 {
            // The Euler map cannot actually cross the circle for sane
            // increments; treat it as converged if it does.
            break;
        }
    }
    Ok(v.arg().rem_euclid(std::f64::consts::TAU))
}

/// Euler-Maruyama on the radius equation dq = dB/sqrt(2) + coth(q)/4 dt,
/// fed with the radial increments extracted from a V path.
pub fn radial_q_path(q0: f64, increments: &[f64], dt: f64) -> Vec<f64> {
    let mut q = q0;
    let mut out = Vec::with_capacity(increments.len() + 1);
    out.push(q);
    for db in increments {
        let coth = if q.abs() < 1e-8 {
            1.0 / 1e-8
        } else {
            1.0 / q.tanh()
        };
        q += SQRT_HALF * db + 0.25 * coth * dt;
        out.push(q);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{make_tape, NoiseTape, SeedSpec};

    const CH: [Channel; 2] = [Channel::B2, Channel::B3];

    #[test]
    fn zero_tape_carousel_rotates_linearly() {
        let tape = NoiseTape::zero(1e-3, 1000, &CH).unwrap();
        let path = integrate_carousel(&[0.0, 2.0, 5.0], 1.0, tape.view(), usize::MAX).unwrap();
        assert!(path.v.last().unwrap().norm() < 1e-15);
        assert_eq!(*path.gammas[0].last().unwrap(), 0.0);
        assert!((path.gammas[1].last().unwrap() - 2.0).abs() < 1e-12);
        assert!((path.gammas[2].last().unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_monotone_in_lambda_and_time() {
        for id in 0..10 {
            let tape = make_tape(SeedSpec::new(61, id), 1e-3, 1000, &CH).unwrap();
            let path = integrate_carousel(&[0.5, 1.0, 3.0], 1.0, tape.view(), 50).unwrap();
            for k in 1..path.times.len() {
                for i in 0..3 {
                    assert!(path.gammas[i][k] > path.gammas[i][k - 1], "time monotone");
                }
                assert!(path.gammas[0][k] < path.gammas[1][k]);
                assert!(path.gammas[1][k] < path.gammas[2][k]);
            }
        }
    }

    #[test]
    fn q_consistent_with_v() {
        let tape = make_tape(SeedSpec::new(62, 0), 1e-3, 1000, &CH).unwrap();
        let path = integrate_carousel(&[1.0], 1.0, tape.view(), 100).unwrap();
        for (v, q) in path.v.iter().zip(&path.q) {
            assert!((hyperbolic_radius(*v) - q).abs() < 1e-8);
        }
    }

    #[test]
    fn boundary_angle_settles() {
        let seed = SeedSpec::new(63, 4);
        let tape = make_tape(seed, 1e-3, 1000, &CH).unwrap();
        let path = integrate_carousel(&[1.0], 1.0, tape.view(), usize::MAX).unwrap();
        let v_end = *path.v.last().unwrap();
        let tail_a = make_tape(seed.with_stream(u64::MAX - 1), 1e-2, 20_000, &CH).unwrap();
        let angle_a = boundary_limit_angle(v_end, tail_a.view(), 1e-6).unwrap();
        // A longer tail with the same noise gives the same angle.
        let angle_b = boundary_limit_angle(v_end, tail_a.view(), 1e-8).unwrap();
        assert!(
            crate::operator::principal_arg(angle_a - angle_b).abs() < 1e-3,
            "{angle_a} vs {angle_b}"
        );
    }
}
