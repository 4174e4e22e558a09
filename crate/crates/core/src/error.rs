use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed validation; `name` is the offending key.
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: String, message: String },

    /// A tape was asked for a channel it does not carry.
    #[error("noise tape is missing channel {0:?}")]
    MissingChannel(crate::rng::Channel),

    /// Slice bounds were misaligned or out of range.
    #[error("bad tape slice [{t0}, {t1}): {message}")]
    BadSlice { t0: f64, t1: f64, message: String },

    /// A Möbius phase step hit a near-zero denominator.
    #[error("phase step denominator {magnitude:.3e} below 1e-12 at step {step} (rho*eps = {rho_eps:.3e})")]
    DegeneratePhaseStep {
        step: usize,
        magnitude: f64,
        rho_eps: f64,
    },

    /// Inverse iteration failed to converge within the budget.
    #[error("inverse iteration did not converge in {budget} sweeps (last residual {residual:.3e})")]
    InverseIterationFailed { budget: usize, residual: f64 },

    /// A per-step phase increment exceeded the lift guard.
    #[error("phase increment {increment:.3} exceeds lift guard at step {step}")]
    LiftGuard { step: usize, increment: f64 },

    /// Root scanning could not separate adjacent sign changes.
    #[error("secular root grid still unresolved after {refinements} refinements")]
    GridUnresolved { refinements: usize },

    /// The coupled phase family lost monotonicity in lambda even after refinement.
    #[error("phase family not monotone in lambda at final time (dt = {dt:.3e})")]
    MonotonicityViolation { dt: f64 },

    /// Hyperbolic Brownian path reached the unit circle.
    #[error("carousel |V| = {abs_v} at step {step}; decrease dt")]
    CarouselEscape { step: usize, abs_v: f64 },

    /// A Sine_beta relative phase failed to settle near a lattice point.
    #[error("sine-beta terminal residual {residual:.3} exceeds 0.2 at lambda {lambda}; increase Tmax")]
    InsufficientTmax { lambda: f64, residual: f64 },

    /// A statistical routine was fed a sample it cannot handle.
    #[error("statistics error: {0}")]
    Stats(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(name: &str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            message: message.into(),
        }
    }
}
