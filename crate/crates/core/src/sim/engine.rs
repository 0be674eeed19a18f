//! Euler–Skorokhod recursion for the reflected process and its replication
//! driver.
//!
//! Each replication draws from its own ChaCha8 stream (`seed`, stream =
//! replication index), so any replication can be regenerated alone and the
//! result does not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::reflect::{reflect_step, NoComplementarySolution};
use crate::model::{Model, Vec2};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Reflection(#[from] NoComplementarySolution),
    #[error("path of {0} steps is too long to record; use an observer")]
    PathTooLong(u64),
    #[error("sticky time {t} outside [0, {max}]")]
    GridOutOfRange { t: f64, max: f64 },
    #[error("insufficient tail data: {0}")]
    InsufficientTailData(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub dt: f64,
    /// Simulated time after burn-in, on the unsticky clock.
    pub horizon: f64,
    pub burn_in: f64,
    pub replications: u32,
    pub seed: u64,
    /// Sticky-time spacing for observers that record stationary samples.
    pub sample_spacing: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { dt: 1e-3, horizon: 1e4, burn_in: 1e2, replications: 8, seed: 0x5EED, sample_spacing: 0.1 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.burn_in >= 0.0 && self.burn_in.is_finite()) {
            return bad(format!("burn_in must be nonnegative, got {}", self.burn_in));
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if !(self.sample_spacing > 0.0 && self.sample_spacing.is_finite()) {
            return bad(format!("sample_spacing must be positive, got {}", self.sample_spacing));
        }
        if self.horizon / self.dt > 1e12 {
            return bad("horizon / dt exceeds 1e12 steps".into());
        }
        Ok(())
    }

    pub fn burn_in_steps(&self) -> u64 {
        (self.burn_in / self.dt).round() as u64
    }

    pub fn steps(&self) -> u64 {
        ((self.horizon / self.dt).round() as u64).max(1)
    }
}

/// One step of the recorded window: the process moved from `z_prev` at time
/// `t` to `z` at `t + dt`, with local-time increment `dl` charged at `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub index: u64,
    pub t: f64,
    pub dt: f64,
    pub z_prev: Vec2,
    pub z: Vec2,
    pub dl: Vec2,
}

pub trait PathObserver {
    fn observe(&mut self, step: &StepRecord);
}

impl<A: PathObserver, B: PathObserver> PathObserver for (A, B) {
    fn observe(&mut self, step: &StepRecord) {
        self.0.observe(step);
        self.1.observe(step);
    }
}

impl<O: PathObserver + ?Sized> PathObserver for &mut O {
    fn observe(&mut self, step: &StepRecord) {
        (**self).observe(step);
    }
}

pub fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

/// Runs one replication from the origin: `burn_in` unobserved, then
/// `horizon` observed.
pub fn run_replication<O: PathObserver>(
    model: &Model,
    cfg: &SimConfig,
    replication: u64,
    obs: &mut O,
) -> Result<(), SimError> {
    cfg.validate()?;
    let mut rng = replication_rng(cfg.seed, replication);
    let dt = cfg.dt;
    let sq = dt.sqrt();
    let l = model.sigma_sqrt();
    let (a11, a21, a22) = (l[0][0] * sq, l[1][0] * sq, l[1][1] * sq);
    let drift = [model.mu[0] * dt, model.mu[1] * dt];
    let r = model.refl;

    let mut z = [0.0, 0.0];
    let step = |z: Vec2, rng: &mut ChaCha8Rng| -> Result<(Vec2, Vec2), SimError> {
        let x1: f64 = StandardNormal.sample(rng);
        let x2: f64 = StandardNormal.sample(rng);
        let w = [z[0] + drift[0] + a11 * x1, z[1] + drift[1] + a21 * x1 + a22 * x2];
        Ok(reflect_step(w, &r)?)
    };
    for _ in 0..cfg.burn_in_steps() {
        z = step(z, &mut rng)?.0;
    }
    for k in 0..cfg.steps() {
        let (zn, dl) = step(z, &mut rng)?;
        obs.observe(&StepRecord { index: k, t: k as f64 * dt, dt, z_prev: z, z: zn, dl });
        z = zn;
    }
    Ok(())
}

/// Runs all replications in parallel; observers are returned in replication
/// order.
pub fn run_replications<O, F>(model: &Model, cfg: &SimConfig, make: F) -> Result<Vec<O>, SimError>
where
    O: PathObserver + Send,
    F: Fn(u64) -> O + Sync,
{
    cfg.validate()?;
    (0..cfg.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let mut obs = make(rep);
            run_replication(model, cfg, rep, &mut obs)?;
            Ok(obs)
        })
        .collect()
}
