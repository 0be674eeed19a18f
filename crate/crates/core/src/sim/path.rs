//! Fully recorded paths and the inversion of the sticky clock.
//!
//! Within a step the sticky clock runs in two phases: a moving phase of
//! length `dt` during which the reflected process is interpolated linearly
//! from `z_prev` to `z`, then a sticking phase of length `u·dL` during which
//! the sticky process rests at `z`.

use serde::{Deserialize, Serialize};

use super::engine::{run_replication, PathObserver, SimConfig, SimError, StepRecord};
use crate::model::{Model, Vec2};

/// Upper bound on recorded steps (about 0.5 GB of path data).
pub const MAX_RECORDED_STEPS: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrbmPath {
    pub dt: f64,
    pub stick: Vec2,
    /// Time since the end of burn-in.
    pub times: Vec<f64>,
    pub positions: Vec<Vec2>,
    /// Local times accumulated since the end of burn-in.
    pub local_times: Vec<Vec2>,
    /// `S(t) = t + u1 L1(t) + u2 L2(t)`.
    pub sticky_clock: Vec<f64>,
}

impl SrbmPath {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn sticky_end(&self) -> f64 {
        *self.sticky_clock.last().unwrap_or(&0.0)
    }
}

struct Recorder {
    path: SrbmPath,
}

impl PathObserver for Recorder {
    fn observe(&mut self, s: &StepRecord) {
        let p = &mut self.path;
        if p.times.is_empty() {
            p.times.push(0.0);
            p.positions.push(s.z_prev);
            p.local_times.push([0.0, 0.0]);
            p.sticky_clock.push(0.0);
        }
        let l = *p.local_times.last().unwrap();
        let l = [l[0] + s.dl[0], l[1] + s.dl[1]];
        let clock = p.sticky_clock.last().unwrap()
            + s.dt
            + p.stick[0] * s.dl[0]
            + p.stick[1] * s.dl[1];
        p.times.push(s.t + s.dt);
        p.positions.push(s.z);
        p.local_times.push(l);
        p.sticky_clock.push(clock);
    }
}

/// Simulates and records replication `replication` of `cfg`.
pub fn simulate_srbm(model: &Model, cfg: &SimConfig, replication: u64) -> Result<SrbmPath, SimError> {
    cfg.validate()?;
    let n = cfg.steps();
    if n > MAX_RECORDED_STEPS {
        return Err(SimError::PathTooLong(n));
    }
    let cap = n as usize + 1;
    let mut rec = Recorder {
        path: SrbmPath {
            dt: cfg.dt,
            stick: model.stick,
            times: Vec::with_capacity(cap),
            positions: Vec::with_capacity(cap),
            local_times: Vec::with_capacity(cap),
            sticky_clock: Vec::with_capacity(cap),
        },
    };
    run_replication(model, cfg, replication, &mut rec)?;
    Ok(rec.path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StickyPoints {
    pub t: Vec<f64>,
    /// `T(t)`, the reflected-process time reached at sticky time `t`.
    pub srbm_time: Vec<f64>,
    pub z: Vec<Vec2>,
}

/// `Z(t) = Z̃(T(t))` on a sticky-time grid, `T` being the inverse of `S`.
pub fn sticky_clock_invert(path: &SrbmPath, t_grid: &[f64]) -> Result<StickyPoints, SimError> {
    let max = path.sticky_end();
    let mut out = StickyPoints {
        t: Vec::with_capacity(t_grid.len()),
        srbm_time: Vec::with_capacity(t_grid.len()),
        z: Vec::with_capacity(t_grid.len()),
    };
    for &t in t_grid {
        if !(t >= 0.0 && t <= max) || path.len() < 2 {
            return Err(SimError::GridOutOfRange { t, max });
        }
        // Step n covers sticky times [S_n, S_{n+1}].
        let n = path.sticky_clock.partition_point(|&s| s <= t).clamp(1, path.len() - 1) - 1;
        let s0 = path.sticky_clock[n];
        let moving_end = s0 + path.dt;
        let (tt, z) = if t < moving_end {
            let f = (t - s0) / path.dt;
            let (a, b) = (path.positions[n], path.positions[n + 1]);
            let tt = path.times[n] + (t - s0);
            debug_assert!(((s0 + (tt - path.times[n])) - t).abs() <= 1e-9 * (1.0 + t));
            (tt, [a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])])
        } else {
            (path.times[n + 1], path.positions[n + 1])
        };
        out.t.push(t);
        out.srbm_time.push(tt);
        out.z.push(z);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{m0, IDENTITY};
    use crate::model::ModelParams;

    fn small_cfg() -> SimConfig {
        SimConfig { dt: 1e-3, horizon: 200.0, burn_in: 10.0, replications: 1, seed: 11, ..Default::default() }
    }

    #[test]
    fn path_invariants() {
        let p = simulate_srbm(&m0(), &small_cfg(), 0).unwrap();
        assert_eq!(p.len(), 200_001);
        for k in 1..p.len() {
            let (z, l0, l1) = (p.positions[k], p.local_times[k - 1], p.local_times[k]);
            assert!(z[0] >= 0.0 && z[1] >= 0.0);
            for i in 0..2 {
                assert!(l1[i] >= l0[i]);
                if l1[i] > l0[i] {
                    assert_eq!(z[i], 0.0);
                }
            }
            let ds = p.sticky_clock[k] - p.sticky_clock[k - 1];
            assert!(ds >= p.dt - 1e-12 * (1.0 + p.sticky_clock[k]));
        }
    }

    #[test]
    fn deterministic_and_stream_distinct() {
        let a = simulate_srbm(&m0(), &small_cfg(), 0).unwrap();
        let b = simulate_srbm(&m0(), &small_cfg(), 0).unwrap();
        let c = simulate_srbm(&m0(), &small_cfg(), 1).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.positions[1000], c.positions[1000]);
    }

    #[test]
    fn local_time_flat_away_from_axes() {
        let p = simulate_srbm(&m0(), &small_cfg(), 4).unwrap();
        let mut interior = 0;
        for k in 1..p.len() {
            let z = p.positions[k];
            if z[0] > 0.0 && z[1] > 0.0 {
                interior += 1;
                assert_eq!(p.local_times[k], p.local_times[k - 1]);
            }
            let l = p.local_times[k];
            let s = p.times[k] + l[0] + l[1];
            assert!((p.sticky_clock[k] - s).abs() < 1e-9 * (1.0 + s));
        }
        assert!(interior > p.len() / 2);
    }

    #[test]
    fn inversion_round_trip() {
        let p = simulate_srbm(&m0(), &small_cfg(), 2).unwrap();
        let end = p.sticky_end();
        let grid: Vec<f64> = (0..5000).map(|k| k as f64 * end / 5000.0).collect();
        let inv = sticky_clock_invert(&p, &grid).unwrap();
        let mut moving = 0;
        for (k, &t) in grid.iter().enumerate() {
            let n = p.sticky_clock.partition_point(|&s| s <= t) - 1;
            let s0 = p.sticky_clock[n];
            if t < s0 + p.dt {
                moving += 1;
                let s_of_t = s0 + (inv.srbm_time[k] - p.times[n]);
                assert!((s_of_t - t).abs() <= 1e-9, "{s_of_t} vs {t}");
            } else {
                assert_eq!(inv.srbm_time[k], p.times[n + 1]);
                assert_eq!(inv.z[k], p.positions[n + 1]);
            }
        }
        assert!(moving > 1000);
        assert!(inv.srbm_time.windows(2).all(|w| w[1] >= w[0]));
        assert!(matches!(
            sticky_clock_invert(&p, &[end + 1.0]),
            Err(SimError::GridOutOfRange { .. })
        ));
        let one = sticky_clock_invert(&p, &[1.0]).unwrap();
        assert!(one.srbm_time[0] <= 1.0);
    }

    #[test]
    fn tiny_stickiness_leaves_clock_unchanged() {
        let m = ModelParams::new([-1.0, -1.0], IDENTITY, IDENTITY, [1e-9, 1e-9]).validate().unwrap();
        let p = simulate_srbm(&m, &small_cfg(), 0).unwrap();
        let inv = sticky_clock_invert(&p, &[1.0, 50.0, 150.0]).unwrap();
        for (t, tt) in inv.t.iter().zip(&inv.srbm_time) {
            assert!((t - tt).abs() < 1e-6);
        }
    }

    #[test]
    fn face_time_fraction_on_m0() {
        // Sticky time spent on face 1 should be u1 E[L1(T(1))] = 1/3.
        let cfg = SimConfig { horizon: 5000.0, ..small_cfg() };
        let p = simulate_srbm(&m0(), &cfg, 0).unwrap();
        let end = p.sticky_end();
        let n = 200_000;
        let grid: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) * end / n as f64).collect();
        let inv = sticky_clock_invert(&p, &grid).unwrap();
        let frac = inv.z.iter().filter(|z| z[0] == 0.0).count() as f64 / n as f64;
        assert!((frac - 1.0 / 3.0).abs() < 0.03, "{frac}");
    }
}
