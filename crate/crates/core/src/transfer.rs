//! Discrete-time transfer-matrix evolution in the rotating frame.
//!
//! The raw product M_l = T(E+eps_l)...T(E+eps_1) winds at the free rotation
//! rate and has no continuum limit; conjugating out powers of T(E) gives the
//! regularized chains Q_l = T^{-l}(E) M_l and X_l = Z^{-1} Q_l Z, which
//! evolve by the rank-one update X_l = (I + U_l) X_{l-1} with
//! U_l = i*rho*eps_l*O_l/2. The lifted phase of the chain counts eigenvalues
//! through its 2*pi lattice crossings (discrete oscillation theory), and the
//! secular function (M_n)_11 vanishes exactly at the rescaled eigenvalues.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mat2::{Mat2c, Mat2r};
use crate::operator::{principal_arg, SpectralWindow};

/// T(x) = ((x, -1), (1, 0)), the one-step transfer matrix.
pub fn transfer_matrix(x: f64) -> Mat2r {
    Mat2r::new(x, -1.0, 1.0, 0.0)
}

fn transfer_matrix_c(x: Complex64) -> Mat2c {
    Mat2c::new(
        x,
        Complex64::new(-1.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
    )
}

/// Diagonalization T(E) = Z D Z^{-1} with D = diag(conj z, z).
#[derive(Debug, Clone, Copy)]
pub struct DiagonalizationData {
    pub e: f64,
    pub rho: f64,
    pub z: Complex64,
    pub zmat: Mat2c,
    pub dmat: Mat2c,
    pub zinv: Mat2c,
}

impl DiagonalizationData {
    pub fn new(w: &SpectralWindow) -> Self {
        let z = w.z();
        let zc = z.conj();
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let zmat = Mat2c::new(zc, z, one, one);
        let dmat = Mat2c::new(zc, zero, zero, z);
        // 1/(conj z - z) = i*rho/2.
        let f = Complex64::new(0.0, w.rho / 2.0);
        let zinv = Mat2c::new(f, -f * z, -f, f * zc);
        DiagonalizationData {
            e: w.e,
            rho: w.rho,
            z,
            zmat,
            dmat,
            zinv,
        }
    }

    /// Reconstruct T(E) from the factors; used as a self-check.
    pub fn reconstruct(&self) -> Mat2c {
        self.zmat.mul(&self.dmat).mul(&self.zinv)
    }
}

/// State of the coupled transfer chains after `ell` steps.
#[derive(Debug, Clone)]
pub struct TransferChainState {
    pub ell: usize,
    /// Raw product M_l (complex to admit complex spectral parameters).
    pub m: Mat2c,
    /// Rotating-frame chain X_l = Z^{-1} Q_l Z.
    pub x: Mat2c,
}

/// Full chain history plus the lifted phase trace.
#[derive(Debug, Clone)]
pub struct ChainPath {
    pub lambda: Complex64,
    pub diag: DiagonalizationData,
    pub states: Vec<TransferChainState>,
    /// Lifted phase phi_l of X_l Z^{-1} (the boundary-phase convention),
    /// starting at phi_0 = pi.
    pub phases: Vec<f64>,
}

impl ChainPath {
    /// Q_l = Z X_l Z^{-1}; real for real lambda up to roundoff.
    pub fn q(&self, ell: usize) -> Mat2c {
        self.diag
            .zmat
            .mul(&self.states[ell].x)
            .mul(&self.diag.zinv)
    }

    /// Unit phase e^{i phi_l} read off the chain.
    pub fn phase_unit(&self, ell: usize) -> Complex64 {
        let xz = self.states[ell].x.mul(&self.diag.zinv);
        let ratio = xz.a / xz.c;
        ratio / ratio.norm()
    }
}

/// Evolve M_l and X_l over the whole potential at spectral parameter
/// lambda (mu = E + lambda/(rho n)).
pub fn evolve_chain(w: &SpectralWindow, potential: &[f64], lambda: Complex64) -> ChainPath {
    let n = potential.len();
    let diag = DiagonalizationData::new(w);
    let rho_n = w.rho * n as f64;
    let z2 = diag.z * diag.z;
    let half_i_rho = Complex64::new(0.0, w.rho / 2.0);

    let mut states = Vec::with_capacity(n + 1);
    states.push(TransferChainState {
        ell: 0,
        m: Mat2c::identity(),
        x: Mat2c::identity(),
    });
    let mut phases = Vec::with_capacity(n + 1);
    phases.push(std::f64::consts::PI);
    let mut prev_unit = {
        let xz = Mat2c::identity().mul(&diag.zinv);
        let r = xz.a / xz.c;
        r / r.norm()
    };

    let mut zp = Complex64::new(1.0, 0.0); // z^{2l}
    for ell in 1..=n {
        zp *= z2;
        zp /= zp.norm();
        let eps = lambda / rho_n - potential[ell - 1];
        let prev = states.last().unwrap();
        let m = transfer_matrix_c(Complex64::new(w.e, 0.0) + eps).mul(&prev.m);
        // U_l = (i rho eps / 2) * ((1, z^{2l}), (-conj(z)^{2l}, -1))
        let u = Mat2c::new(
            half_i_rho * eps,
            half_i_rho * eps * zp,
            -half_i_rho * eps * zp.conj(),
            -half_i_rho * eps,
        );
        let x = prev.x.add(&u.mul(&prev.x));
        states.push(TransferChainState { ell, m, x });

        let xz = x.mul(&diag.zinv);
        let unit = {
            let r = xz.a / xz.c;
            r / r.norm()
        };
        let inc = principal_arg((unit / prev_unit).arg());
        phases.push(phases[ell - 1] + inc);
        prev_unit = unit;
    }

    ChainPath {
        lambda,
        diag,
        states,
        phases,
    }
}

/// max over l <= n and lambda in the grid of Tr(M_l M_l^*).
pub fn sup_trace_statistic(
    w: &SpectralWindow,
    potential: &[f64],
    lambda_grid: &[Complex64],
) -> f64 {
    let n = potential.len();
    let rho_n = w.rho * n as f64;
    let e = Complex64::new(w.e, 0.0);
    let mut sup = 2.0; // Tr(I I^*) at l = 0
    for &lambda in lambda_grid {
        let mut m = Mat2c::identity();
        for (idx, &v) in potential.iter().enumerate() {
            let _ = idx;
            let eps = lambda / rho_n - v;
            m = transfer_matrix_c(e + eps).mul(&m);
            let t = m.trace_aat();
            if t > sup {
                sup = t;
            }
        }
    }
    sup
}

// ---------------------------------------------------------------------------
// Discrete phase recursion
// ---------------------------------------------------------------------------

/// Unit-modulus phase state with its continuous lift.
#[derive(Debug, Clone, Copy)]
pub struct DiscretePhaseState {
    pub ell: usize,
    pub unit: Complex64,
    pub lifted: f64,
}

impl DiscretePhaseState {
    /// Start of the forward recursion: e^{i phi_0} = -1 (the X_0 = Z^{-1}
    /// boundary condition).
    pub fn initial() -> Self {
        DiscretePhaseState {
            ell: 0,
            unit: Complex64::new(-1.0, 0.0),
            lifted: std::f64::consts::PI,
        }
    }
}

/// The Moebius factor X(xi) of the phase recursion.
fn mobius(xi: Complex64, rho_eps: f64) -> Result<Complex64> {
    let half = Complex64::new(0.0, rho_eps / 2.0);
    let denom = Complex64::new(1.0, 0.0) - half - half * xi;
    if denom.norm() < 1e-12 {
        return Err(Error::DegeneratePhaseStep {
            step: 0,
            magnitude: denom.norm(),
            rho_eps,
        });
    }
    Ok((xi * (Complex64::new(1.0, 0.0) + half) + half) / denom)
}

/// One step of the phase recursion: unit -> z^{2l} X(z^{-2l} unit), with the
/// lift chosen in (-pi, pi] and guarded at pi/2.
pub fn discrete_phase_step(
    state: &DiscretePhaseState,
    w: &SpectralWindow,
    eps_ell: f64,
) -> Result<DiscretePhaseState> {
    let ell = state.ell + 1;
    let theta = 2.0 * ell as f64 * w.arg_z();
    let rot = Complex64::from_polar(1.0, theta);
    let xi = state.unit / rot;
    let mapped = mobius(xi, w.rho * eps_ell).map_err(|e| match e {
        Error::DegeneratePhaseStep { magnitude, rho_eps, .. } => Error::DegeneratePhaseStep {
            step: ell,
            magnitude,
            rho_eps,
        },
        other => other,
    })?;
    let mut unit = rot * mapped;
    unit /= unit.norm();
    let inc = principal_arg((unit / state.unit).arg());
    if inc.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::LiftGuard {
            step: ell,
            increment: inc,
        });
    }
    Ok(DiscretePhaseState {
        ell,
        unit,
        lifted: state.lifted + inc,
    })
}

/// Lifted phase after running the full forward recursion at `lambda`.
pub fn forward_phase(w: &SpectralWindow, potential: &[f64], lambda: f64) -> Result<f64> {
    let n = potential.len();
    let rho_n = w.rho * n as f64;
    let mut state = DiscretePhaseState::initial();
    for &v in potential {
        let eps = lambda / rho_n - v;
        state = discrete_phase_step(&state, w, eps)?;
    }
    Ok(state.lifted)
}

/// Number of rescaled eigenvalues in [lambda1, lambda2), by lattice counting
/// between the forward phase lifts against the right-boundary phase
/// e^{i phi~} = -z^{2n+2}.
pub fn oscillation_count(
    w: &SpectralWindow,
    potential: &[f64],
    lambda1: f64,
    lambda2: f64,
) -> Result<usize> {
    if lambda2 <= lambda1 {
        return Ok(0);
    }
    let n = potential.len();
    let phi1 = forward_phase(w, potential, lambda1)?;
    let phi2 = forward_phase(w, potential, lambda2)?;
    // Boundary phase, defined mod 2*pi; the lattice count is invariant under
    // the choice of lift.
    let boundary = principal_arg((2 * n + 2) as f64 * w.arg_z() + std::f64::consts::PI);
    Ok(lattice_count_half_open(phi1 - boundary, phi2 - boundary))
}

/// #{k in Z : a <= 2 pi k < b}.
pub fn lattice_count_half_open(a: f64, b: f64) -> usize {
    if b <= a {
        return 0;
    }
    let two_pi = std::f64::consts::TAU;
    let lo = (a / two_pi).ceil() as i64;
    let hi = (b / two_pi).ceil() as i64;
    (hi - lo).max(0) as usize
}

// ---------------------------------------------------------------------------
// Secular function
// ---------------------------------------------------------------------------

/// (M_n^lambda)_11, whose zeros in lambda are the rescaled eigenvalues.
/// Evolves only the first column of M and rescales to dodge overflow; the
/// sign is exact.
pub fn secular_value(w: &SpectralWindow, potential: &[f64], lambda: f64) -> f64 {
    let n = potential.len();
    let rho_n = w.rho * n as f64;
    let mut top = 1.0_f64;
    let mut bot = 0.0_f64;
    let mut log_scale = 0.0_f64;
    for &v in potential {
        let x = w.e + lambda / rho_n - v;
        let new_top = x * top - bot;
        bot = top;
        top = new_top;
        let mag = top.abs().max(bot.abs());
        if mag > 1e100 {
            top /= mag;
            bot /= mag;
            log_scale += mag.ln();
        }
    }
    // The scale is positive, so the sign and zero set are unaffected.
    let _ = log_scale;
    top
}

/// Zeros of the secular function in `bracket`, each bisected to within
/// `tol`. The scan grid is refined (budget 12 halvings) whenever two roots
/// land within one grid cell of each other.
pub fn secular_roots(
    w: &SpectralWindow,
    potential: &[f64],
    bracket: (f64, f64),
    tol: f64,
) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", format!("must be > 0, got {tol}")));
    }
    let (lo, hi) = bracket;
    if hi <= lo {
        return Ok(Vec::new());
    }
    let expected = ((hi - lo) / std::f64::consts::TAU).max(1.0);
    let mut h = (std::f64::consts::TAU / (4.0 * expected)).min((hi - lo) / 8.0);
    for _refinement in 0..12 {
        let roots = scan_and_bisect(w, potential, lo, hi, h, tol);
        let mut min_sep = f64::INFINITY;
        for pair in roots.windows(2) {
            min_sep = min_sep.min(pair[1] - pair[0]);
        }
        if roots.len() < 2 || min_sep > h {
            return Ok(roots);
        }
        h /= 2.0;
    }
    Err(Error::GridUnresolved { refinements: 12 })
}

fn scan_and_bisect(
    w: &SpectralWindow,
    potential: &[f64],
    lo: f64,
    hi: f64,
    h: f64,
    tol: f64,
) -> Vec<f64> {
    let steps = ((hi - lo) / h).ceil() as usize;
    let mut roots = Vec::new();
    let mut prev_x = lo;
    let mut prev_s = secular_value(w, potential, lo);
    for i in 1..=steps {
        let x = if i == steps { hi } else { lo + i as f64 * h };
        let s = secular_value(w, potential, x);
        if prev_s == 0.0 {
            roots.push(prev_x);
        } else if prev_s * s < 0.0 {
            let (mut a, mut b) = (prev_x, x);
            let mut sa = prev_s;
            while b - a > tol {
                let mid = 0.5 * (a + b);
                let sm = secular_value(w, potential, mid);
                if sm == 0.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if sa * sm < 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    sa = sm;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev_x = x;
        prev_s = s;
    }
    if prev_s == 0.0 {
        roots.push(prev_x);
    }
    roots
}
