//! Simulation laboratory for one-dimensional random Schrödinger operators
//! with critically scaled noise.
//!
//! The crate covers the full pipeline from the discrete operator to its
//! microscopic limits:
//!
//! - [`rng`]: seedable random streams and replayable Brownian noise tapes.
//! - [`operator`]: the random tridiagonal operator, Sturm-sequence
//!   eigensolves, inverse iteration and the microscopic rescaling.
//! - [`transfer`]: transfer-matrix chains, the regularized evolution in the
//!   rotating frame, discrete phase recursion, oscillation counting and the
//!   secular function.
//! - [`sde`]: Euler-Maruyama integrators for the limiting phase, matrix,
//!   relative-phase and derivative SDE families, all coupled through shared
//!   noise tapes.
//! - [`carousel`]: hyperbolic Brownian motion in the Poincaré disk and the
//!   rotating boundary-point ODE.
//! - [`points`]: samplers for the Sch_tau and Sine_beta point processes and
//!   the Monte Carlo statistics computed from them.
//! - [`stats`]: goodness-of-fit tests and the special functions they need.
//!
//! Batch Monte Carlo runs through [`parallel::batch_map`], which is
//! deterministic in the master seed no matter how many workers execute it.

pub mod carousel;
pub mod error;
pub mod mat2;
pub mod operator;
pub mod parallel;
pub mod points;
pub mod rng;
pub mod sde;
pub mod stats;
pub mod transfer;

pub use error::{Error, Result};
