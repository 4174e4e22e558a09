//! Deterministic, seedable randomness.
//!
//! Every random quantity in the crate is addressed by a [`SeedSpec`]: a
//! 64-bit master seed plus a stream id. Each (seed, stream, domain) triple
//! keys its own ChaCha8 keystream, so batches can be scheduled across any
//! number of workers and still reproduce bit-identically. Brownian
//! increments are recorded on immutable [`NoiseTape`]s that can be replayed
//! as often as needed; this is what lets the coupled-in-lambda SDE solvers
//! re-consume one noise realization at many drift values.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Addresses one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        SeedSpec {
            master_seed,
            stream_id,
        }
    }

    pub fn with_stream(&self, stream_id: u64) -> Self {
        SeedSpec {
            master_seed: self.master_seed,
            stream_id,
        }
    }

    /// ChaCha8 keyed by (master_seed, stream_id, domain). Distinct domains
    /// never share output, so e.g. potential draws cannot collide with tape
    /// increments on the same stream.
    pub(crate) fn rng(&self, domain: u8) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.stream_id.to_le_bytes());
        key[16] = domain;
        key[17..24].copy_from_slice(b"schlab\0");
        ChaCha8Rng::from_seed(key)
    }
}

/// Distribution of the potential variables omega: mean 0, variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OmegaDistribution {
    Gaussian,
    /// +-1 with probability 1/2 each.
    Rademacher,
}

impl OmegaDistribution {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(OmegaDistribution::Gaussian),
            "rademacher" => Ok(OmegaDistribution::Rademacher),
            other => Err(Error::invalid(
                "omega",
                format!("unknown distribution `{other}` (expected gaussian|rademacher)"),
            )),
        }
    }
}

const DOMAIN_OMEGA: u8 = 0x01;
const DOMAIN_TAPE_BASE: u8 = 0x10;
const DOMAIN_UNIFORM: u8 = 0x02;

/// i.i.d. draws from `dist`, deterministic in the seed.
pub fn sample_omega(dist: OmegaDistribution, seed: SeedSpec, count: usize) -> Vec<f64> {
    let mut rng = seed.rng(DOMAIN_OMEGA);
    let mut out = Vec::with_capacity(count);
    match dist {
        OmegaDistribution::Gaussian => {
            for _ in 0..count {
                out.push(rng.sample::<f64, _>(StandardNormal));
            }
        }
        OmegaDistribution::Rademacher => {
            for _ in 0..count {
                out.push(if rng.random::<bool>() { 1.0 } else { -1.0 });
            }
        }
    }
    out
}

/// One uniform draw on [0, 2*pi), independent of the same stream's tape and
/// omega draws. Used for the random translation in Sch_tau^*.
pub fn sample_uniform_shift(seed: SeedSpec) -> f64 {
    let mut rng = seed.rng(DOMAIN_UNIFORM);
    rng.random_range(0.0..std::f64::consts::TAU)
}

/// Named Brownian increment channels.
///
/// The complex channel convention throughout the crate is
/// `dW = (dB2 + i*dB3)/sqrt(2)`, so a W increment has squared-modulus
/// expectation dt. `B1` exists for the E = 0 system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    B,
    B1,
    B2,
    B3,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::B, Channel::B1, Channel::B2, Channel::B3];

    fn index(self) -> usize {
        match self {
            Channel::B => 0,
            Channel::B1 => 1,
            Channel::B2 => 2,
            Channel::B3 => 3,
        }
    }
}

/// Immutable record of Gaussian increments, one Vec per requested channel.
/// Each increment is Normal(0, dt). Replaying the tape yields bit-identical
/// values; tapes are regenerated from seeds rather than persisted.
#[derive(Debug, Clone)]
pub struct NoiseTape {
    dt: f64,
    steps: usize,
    channels: [Option<Vec<f64>>; 4],
}

/// Construct a tape with the given channels filled.
pub fn make_tape(seed: SeedSpec, dt: f64, steps: usize, channel_set: &[Channel]) -> Result<NoiseTape> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
    }
    if steps == 0 {
        return Err(Error::invalid("steps", "must be at least 1"));
    }
    let sqrt_dt = dt.sqrt();
    let mut channels: [Option<Vec<f64>>; 4] = [None, None, None, None];
    for &ch in channel_set {
        if channels[ch.index()].is_some() {
            continue;
        }
        let mut rng = seed.rng(DOMAIN_TAPE_BASE + ch.index() as u8);
        let mut v = Vec::with_capacity(steps);
        for _ in 0..steps {
            let z: f64 = rng.sample(StandardNormal);
            v.push(z * sqrt_dt);
        }
        channels[ch.index()] = Some(v);
    }
    Ok(NoiseTape { dt, steps, channels })
}

impl NoiseTape {
    /// Tape with every channel identically zero; deterministic flows only.
    pub fn zero(dt: f64, steps: usize, channel_set: &[Channel]) -> Result<NoiseTape> {
        if !(dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
        }
        if steps == 0 {
            return Err(Error::invalid("steps", "must be at least 1"));
        }
        let mut channels: [Option<Vec<f64>>; 4] = [None, None, None, None];
        for &ch in channel_set {
            channels[ch.index()] = Some(vec![0.0; steps]);
        }
        Ok(NoiseTape { dt, steps, channels })
    }

    /// Build a tape directly from increment vectors (all the same length).
    pub fn from_increments(dt: f64, parts: Vec<(Channel, Vec<f64>)>) -> Result<NoiseTape> {
        if !(dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
        }
        let steps = parts.first().map(|(_, v)| v.len()).unwrap_or(0);
        if steps == 0 {
            return Err(Error::invalid("steps", "must be at least 1"));
        }
        let mut channels: [Option<Vec<f64>>; 4] = [None, None, None, None];
        for (ch, v) in parts {
            if v.len() != steps {
                return Err(Error::invalid("channels", "channel lengths differ"));
            }
            channels[ch.index()] = Some(v);
        }
        Ok(NoiseTape { dt, steps, channels })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn channel(&self, ch: Channel) -> Result<&[f64]> {
        self.channels[ch.index()]
            .as_deref()
            .ok_or(Error::MissingChannel(ch))
    }

    pub fn has_channel(&self, ch: Channel) -> bool {
        self.channels[ch.index()].is_some()
    }

    pub fn view(&self) -> TapeView<'_> {
        TapeView {
            dt: self.dt,
            steps: self.steps,
            channels: [
                self.channels[0].as_deref(),
                self.channels[1].as_deref(),
                self.channels[2].as_deref(),
                self.channels[3].as_deref(),
            ],
        }
    }

    /// Read-only view of the increments in [t0, t1). Bounds must sit on step
    /// boundaries.
    pub fn slice(&self, t0: f64, t1: f64) -> Result<TapeView<'_>> {
        self.view().slice(t0, t1)
    }

    /// Coarsen by summing pairs of adjacent increments: a tape at 2*dt
    /// carrying the same Brownian path. Requires an even step count.
    pub fn coarsen(&self) -> Result<NoiseTape> {
        if self.steps % 2 != 0 {
            return Err(Error::invalid("steps", "coarsening needs an even step count"));
        }
        let mut channels: [Option<Vec<f64>>; 4] = [None, None, None, None];
        for idx in 0..4 {
            if let Some(v) = &self.channels[idx] {
                channels[idx] = Some(v.chunks_exact(2).map(|p| p[0] + p[1]).collect());
            }
        }
        Ok(NoiseTape {
            dt: self.dt * 2.0,
            steps: self.steps / 2,
            channels,
        })
    }
}

/// Borrowed window into a tape. Cheap to copy and safe to share across
/// workers; integrators consume these.
#[derive(Debug, Clone, Copy)]
pub struct TapeView<'a> {
    dt: f64,
    steps: usize,
    channels: [Option<&'a [f64]>; 4],
}

impl<'a> TapeView<'a> {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn channel(&self, ch: Channel) -> Result<&'a [f64]> {
        self.channels[ch.index()].ok_or(Error::MissingChannel(ch))
    }

    pub fn slice(&self, t0: f64, t1: f64) -> Result<TapeView<'a>> {
        let i0 = step_index(t0, self.dt).ok_or_else(|| Error::BadSlice {
            t0,
            t1,
            message: "t0 is not on a step boundary".into(),
        })?;
        let i1 = step_index(t1, self.dt).ok_or_else(|| Error::BadSlice {
            t0,
            t1,
            message: "t1 is not on a step boundary".into(),
        })?;
        if i0 >= i1 || i1 > self.steps {
            return Err(Error::BadSlice {
                t0,
                t1,
                message: format!("need 0 <= t0 < t1 <= {}", self.duration()),
            });
        }
        let mut channels: [Option<&'a [f64]>; 4] = [None; 4];
        for idx in 0..4 {
            channels[idx] = self.channels[idx].map(|v| &v[i0..i1]);
        }
        Ok(TapeView {
            dt: self.dt,
            steps: i1 - i0,
            channels,
        })
    }
}

fn step_index(t: f64, dt: f64) -> Option<usize> {
    if t < 0.0 {
        return None;
    }
    let raw = t / dt;
    let rounded = raw.round();
    if (raw - rounded).abs() > 1e-9 * rounded.max(1.0) {
        return None;
    }
    Some(rounded as usize)
}
