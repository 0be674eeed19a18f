//! Streaming estimators over one replication: clock and local-time totals,
//! occupation histograms, boundary and interior MGF sums for the adjoint
//! relation, survival histograms of linear functionals, and stationary samples
//! on an equally spaced sticky-time grid.
//!
//! Weights follow the decomposition of the stationary law into the time-change
//! part and the two boundary parts: every step contributes `dt` at the
//! midpoint of the move, and `u_i dL_i` at the post-step point (which lies on
//! face `i`). Normalizing by the total sticky time `t + u·L` gives the
//! stationary law.

use serde::{Deserialize, Serialize};

use super::engine::{PathObserver, StepRecord};
use crate::model::{LocalTimeRates, Model, Vec2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Functional {
    pub name: String,
    /// `f(z) = <weights, z>`.
    pub weights: Vec2,
    /// Histogram range `[0, extent)`; larger values land in an overflow bin.
    pub extent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccumSpec {
    pub stick: Vec2,
    pub theta: Vec<Vec2>,
    pub functionals: Vec<Functional>,
    pub survival_bins: usize,
    pub occupation_cells: usize,
    pub occupation_extent: Vec2,
    /// Sticky-time spacing of recorded stationary samples; `None` disables.
    pub sample_spacing: Option<f64>,
}

impl AccumSpec {
    /// Spec with only totals and the occupation grid.
    pub fn minimal(model: &Model, occupation_extent: Vec2) -> Self {
        Self {
            stick: model.stick,
            theta: Vec::new(),
            functionals: Vec::new(),
            survival_bins: 0,
            occupation_cells: 400,
            occupation_extent,
            sample_spacing: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Occupation {
    pub cells: usize,
    pub extent: Vec2,
    /// Step counts, row-major `[i1 * cells + i2]`; each step weighs `dt`.
    pub interior: Vec<u64>,
    pub interior_overflow: u64,
    /// Face 1 (`z1 = 0`) binned along `z2`: sums of `dL1`.
    pub face1: Vec<f64>,
    /// Face 2 (`z2 = 0`) binned along `z1`: sums of `dL2`.
    pub face2: Vec<f64>,
    pub face_overflow: Vec2,
}

impl Occupation {
    fn new(cells: usize, extent: Vec2) -> Self {
        Self {
            cells,
            extent,
            interior: vec![0; cells * cells],
            interior_overflow: 0,
            face1: vec![0.0; cells],
            face2: vec![0.0; cells],
            face_overflow: [0.0, 0.0],
        }
    }

    #[inline]
    fn bin(&self, v: f64, axis: usize) -> Option<usize> {
        let k = (v / self.extent[axis] * self.cells as f64) as usize;
        (k < self.cells).then_some(k)
    }

    pub fn cell_width(&self) -> Vec2 {
        [self.extent[0] / self.cells as f64, self.extent[1] / self.cells as f64]
    }

    pub fn interior_count(&self) -> u64 {
        self.interior.iter().sum::<u64>() + self.interior_overflow
    }

    /// Local times per face, `(L1, L2)`.
    pub fn face_totals(&self) -> Vec2 {
        [
            self.face1.iter().sum::<f64>() + self.face_overflow[0],
            self.face2.iter().sum::<f64>() + self.face_overflow[1],
        ]
    }

    fn merge(&mut self, o: &Occupation) {
        for (a, b) in self.interior.iter_mut().zip(&o.interior) {
            *a += b;
        }
        for (a, b) in self.face1.iter_mut().zip(&o.face1) {
            *a += b;
        }
        for (a, b) in self.face2.iter_mut().zip(&o.face2) {
            *a += b;
        }
        self.interior_overflow += o.interior_overflow;
        self.face_overflow[0] += o.face_overflow[0];
        self.face_overflow[1] += o.face_overflow[1];
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalHistogram {
    pub weights: Vec2,
    pub width: f64,
    /// `mass[k]` holds values in `[k w, (k+1) w)`; the last entry is overflow.
    pub mass: Vec<f64>,
}

impl SurvivalHistogram {
    fn new(f: &Functional, bins: usize) -> Self {
        Self { weights: f.weights, width: f.extent / bins as f64, mass: vec![0.0; bins + 1] }
    }

    #[inline]
    fn add(&mut self, z: Vec2, w: f64) {
        let v = self.weights[0] * z[0] + self.weights[1] * z[1];
        let last = self.mass.len() - 1;
        let k = ((v / self.width) as usize).min(last);
        self.mass[k] += w;
    }

    /// `(t_k, P(f >= t_k))` at bin edges `t_k = k w`, `k = 0..bins`, using
    /// `total` as the normalizer.
    pub fn survival(&self, total: f64) -> Vec<(f64, f64)> {
        let mut tail = 0.0;
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(self.mass.len());
        for k in (0..self.mass.len()).rev() {
            tail += self.mass[k];
            out.push((k as f64 * self.width, tail / total));
        }
        out.reverse();
        out.truncate(self.mass.len() - 1);
        out
    }
}

/// Records the sticky process at sticky times `0, h, 2h, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct StickySampler {
    pub stick: Vec2,
    pub spacing: f64,
    pub samples: Vec<Vec2>,
    clock: f64,
    next: f64,
}

impl StickySampler {
    pub fn new(stick: Vec2, spacing: f64) -> Self {
        assert!(spacing > 0.0, "sample spacing must be positive");
        Self { stick, spacing, samples: Vec::new(), clock: 0.0, next: 0.0 }
    }

    pub fn with_capacity(stick: Vec2, spacing: f64, n: usize) -> Self {
        let mut s = Self::new(stick, spacing);
        s.samples.reserve(n);
        s
    }

    /// Sticky time covered so far.
    pub fn clock(&self) -> f64 {
        self.clock
    }
}

impl PathObserver for StickySampler {
    #[inline]
    fn observe(&mut self, s: &StepRecord) {
        let s0 = self.clock;
        let moving_end = s0 + s.dt;
        let u = self.stick;
        let end = moving_end + u[0] * s.dl[0] + u[1] * s.dl[1];
        while self.next < end {
            let t = self.next;
            let z = if t < moving_end {
                let f = (t - s0) / s.dt;
                [
                    s.z_prev[0] + f * (s.z[0] - s.z_prev[0]),
                    s.z_prev[1] + f * (s.z[1] - s.z_prev[1]),
                ]
            } else {
                s.z
            };
            self.samples.push(z);
            // Recomputed from the count so the grid does not drift.
            self.next = self.samples.len() as f64 * self.spacing;
        }
        self.clock = end;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Accumulator {
    pub spec: AccumSpec,
    pub steps: u64,
    pub dt: f64,
    pub phi0: Vec<f64>,
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
    pub occupation: Occupation,
    pub survival: Vec<SurvivalHistogram>,
    pub sampler: Option<StickySampler>,
    theta_axes: ThetaAxes,
}

/// Distinct per-axis θ values, so each step needs one `exp` per distinct
/// value rather than one per grid point.
#[derive(Debug, Clone, Default, PartialEq)]
struct ThetaAxes {
    v1: Vec<f64>,
    v2: Vec<f64>,
    idx: Vec<(usize, usize)>,
    e1: Vec<f64>,
    e2: Vec<f64>,
}

impl ThetaAxes {
    fn new(theta: &[Vec2]) -> Self {
        let mut v1: Vec<f64> = Vec::new();
        let mut v2: Vec<f64> = Vec::new();
        let mut idx = Vec::with_capacity(theta.len());
        for t in theta {
            let i1 = v1.iter().position(|&v| v == t[0]).unwrap_or_else(|| {
                v1.push(t[0]);
                v1.len() - 1
            });
            let i2 = v2.iter().position(|&v| v == t[1]).unwrap_or_else(|| {
                v2.push(t[1]);
                v2.len() - 1
            });
            idx.push((i1, i2));
        }
        let (n1, n2) = (v1.len(), v2.len());
        Self { v1, v2, idx, e1: vec![0.0; n1], e2: vec![0.0; n2] }
    }
}

impl Accumulator {
    pub fn new(spec: AccumSpec) -> Self {
        let n = spec.theta.len();
        let occupation = Occupation::new(spec.occupation_cells, spec.occupation_extent);
        let survival = spec
            .functionals
            .iter()
            .map(|f| SurvivalHistogram::new(f, spec.survival_bins.max(1)))
            .collect();
        let theta_axes = ThetaAxes::new(&spec.theta);
        let sampler = spec.sample_spacing.map(|h| StickySampler::new(spec.stick, h));
        Self {
            spec,
            steps: 0,
            dt: 0.0,
            phi0: vec![0.0; n],
            phi1: vec![0.0; n],
            phi2: vec![0.0; n],
            occupation,
            survival,
            sampler,
            theta_axes,
        }
    }

    /// Observed time on the reflected-process clock.
    pub fn srbm_time(&self) -> f64 {
        self.occupation.interior_count() as f64 * self.dt
    }

    /// `(L1, L2)` accumulated over the observed window.
    pub fn local_time(&self) -> Vec2 {
        self.occupation.face_totals()
    }

    /// Total sticky time `t + u·L`.
    pub fn sticky_time(&self) -> f64 {
        let (u, l) = (self.spec.stick, self.local_time());
        self.srbm_time() + u[0] * l[0] + u[1] * l[1]
    }

    pub fn rates(&self) -> LocalTimeRates {
        let s = self.sticky_time();
        let l = self.local_time();
        LocalTimeRates { e_t1: self.srbm_time() / s, e_l1: l[0] / s, e_l2: l[1] / s }
    }

    /// Adds `other` (a later replication) into `self`.
    pub fn merge(&mut self, other: &Accumulator) {
        assert!(
            self.steps == 0 || other.steps == 0 || self.dt == other.dt,
            "merging accumulators with different dt"
        );
        if self.steps == 0 {
            self.dt = other.dt;
        }
        self.steps += other.steps;
        for (a, b) in self.phi0.iter_mut().zip(&other.phi0) {
            *a += b;
        }
        for (a, b) in self.phi1.iter_mut().zip(&other.phi1) {
            *a += b;
        }
        for (a, b) in self.phi2.iter_mut().zip(&other.phi2) {
            *a += b;
        }
        self.occupation.merge(&other.occupation);
        for (h, o) in self.survival.iter_mut().zip(&other.survival) {
            for (a, b) in h.mass.iter_mut().zip(&o.mass) {
                *a += b;
            }
        }
        if let (Some(a), Some(b)) = (&mut self.sampler, &other.sampler) {
            a.samples.extend_from_slice(&b.samples);
        }
    }

    /// Merges replications in order into a fresh accumulator.
    pub fn merge_all(reps: &[Accumulator]) -> Option<Accumulator> {
        let mut it = reps.iter();
        let mut acc = it.next()?.clone();
        for r in it {
            acc.merge(r);
        }
        Some(acc)
    }

    #[inline]
    fn add_interior(&mut self, zm: Vec2, dt: f64) {
        let occ = &mut self.occupation;
        match (occ.bin(zm[0], 0), occ.bin(zm[1], 1)) {
            (Some(i), Some(j)) => occ.interior[i * occ.cells + j] += 1,
            _ => occ.interior_overflow += 1,
        }
        for h in &mut self.survival {
            h.add(zm, dt);
        }
        if !self.phi0.is_empty() {
            let ax = &mut self.theta_axes;
            for (e, v) in ax.e1.iter_mut().zip(&ax.v1) {
                *e = (v * zm[0]).exp();
            }
            for (e, v) in ax.e2.iter_mut().zip(&ax.v2) {
                *e = (v * zm[1]).exp();
            }
            for (p, &(i, j)) in self.phi0.iter_mut().zip(&ax.idx) {
                *p += ax.e1[i] * ax.e2[j] * dt;
            }
        }
    }

    #[inline]
    fn add_face(&mut self, face: usize, z: Vec2, dl: f64) {
        let w = self.spec.stick[face] * dl;
        let occ = &mut self.occupation;
        // Face 1 is parametrized by z2, face 2 by z1.
        let other = 1 - face;
        match occ.bin(z[other], other) {
            Some(k) if face == 0 => occ.face1[k] += dl,
            Some(k) => occ.face2[k] += dl,
            None => occ.face_overflow[face] += dl,
        }
        for h in &mut self.survival {
            h.add(z, w);
        }
        let phi = if face == 0 { &mut self.phi1 } else { &mut self.phi2 };
        for (p, t) in phi.iter_mut().zip(&self.spec.theta) {
            *p += (t[0] * z[0] + t[1] * z[1]).exp() * dl;
        }
    }
}

impl PathObserver for Accumulator {
    #[inline]
    fn observe(&mut self, s: &StepRecord) {
        self.steps += 1;
        self.dt = s.dt;
        let zm = [0.5 * (s.z_prev[0] + s.z[0]), 0.5 * (s.z_prev[1] + s.z[1])];
        self.add_interior(zm, s.dt);
        if s.dl[0] > 0.0 {
            self.add_face(0, s.z, s.dl[0]);
        }
        if s.dl[1] > 0.0 {
            self.add_face(1, s.z, s.dl[1]);
        }
        if let Some(sm) = &mut self.sampler {
            sm.observe(s);
        }
    }
}

/// Per-θ values of the adjoint relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarResidual {
    pub theta: Vec2,
    pub psi: f64,
    pub phi: f64,
    pub phi0: f64,
    pub phi1: f64,
    pub phi2: f64,
    /// Relation including the stickiness terms, for `Φ = Φ0 + u1 Φ1 + u2 Φ2`.
    pub sticky: f64,
    /// Relation between the time-change and boundary transforms.
    pub time_change: f64,
}

/// Guard in the residual denominator.
pub const BAR_EPS: f64 = 1e-12;

fn rel(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / (lhs.abs() + rhs.abs() + BAR_EPS)
}

/// Relative residuals of
/// `-Ψ(θ)Φ(θ) = Φ1(θ)(<θ,R1> - u1Ψ(θ)) + Φ2(θ)(<θ,R2> - u2Ψ(θ))` and
/// `-Ψ(θ)Φ0(θ) = Φ1(θ)<θ,R1> + Φ2(θ)<θ,R2>`, with transforms estimated
/// from `acc` and normalized by total sticky time.
pub fn bar_residuals(acc: &Accumulator, model: &Model) -> Vec<BarResidual> {
    let s = acc.sticky_time();
    let u = model.stick;
    acc.spec
        .theta
        .iter()
        .enumerate()
        .map(|(k, &theta)| {
            let psi = model.levy_exponent(theta);
            let (phi0, phi1, phi2) = (acc.phi0[k] / s, acc.phi1[k] / s, acc.phi2[k] / s);
            let phi = phi0 + u[0] * phi1 + u[1] * phi2;
            let r1 = model.refl_col(0);
            let r2 = model.refl_col(1);
            let t_r1 = theta[0] * r1[0] + theta[1] * r1[1];
            let t_r2 = theta[0] * r2[0] + theta[1] * r2[1];
            let sticky = rel(-psi * phi, phi1 * (t_r1 - u[0] * psi) + phi2 * (t_r2 - u[1] * psi));
            let time_change = rel(-psi * phi0, phi1 * t_r1 + phi2 * t_r2);
            BarResidual { theta, psi, phi, phi0, phi1, phi2, sticky, time_change }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub estimate: f64,
    #[serde(with = "crate::serde_ext::extended")]
    pub lower: f64,
    #[serde(with = "crate::serde_ext::extended")]
    pub upper: f64,
    #[serde(with = "crate::serde_ext::extended")]
    pub std_error: f64,
}

/// Mean ± 1.96 standard errors across replications; the point estimate is
/// supplied separately (pooled).
pub fn replication_interval(estimate: f64, per_rep: &[f64]) -> Interval {
    let m = per_rep.len() as f64;
    let se = if per_rep.len() >= 2 {
        let mean = per_rep.iter().sum::<f64>() / m;
        (per_rep.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0) / m).sqrt()
    } else {
        f64::NAN
    };
    let half = crate::extreme::Z95 * se;
    Interval { estimate, lower: estimate - half, upper: estimate + half, std_error: se }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatesEstimate {
    pub e_t1: Interval,
    pub e_l1: Interval,
    pub e_l2: Interval,
    /// `Ê[T] + u·Ê[L] - 1`, zero up to round-off by construction.
    pub clock_identity_residual: f64,
}

/// Long-run rate estimates pooled over replications, with replication-based
/// intervals.
pub fn estimate_local_time_rates(reps: &[Accumulator]) -> Option<RatesEstimate> {
    let merged = Accumulator::merge_all(reps)?;
    let pooled = merged.rates();
    let per: Vec<LocalTimeRates> = reps.iter().map(Accumulator::rates).collect();
    let pick = |f: fn(&LocalTimeRates) -> f64| per.iter().map(f).collect::<Vec<_>>();
    Some(RatesEstimate {
        e_t1: replication_interval(pooled.e_t1, &pick(|r| r.e_t1)),
        e_l1: replication_interval(pooled.e_l1, &pick(|r| r.e_l1)),
        e_l2: replication_interval(pooled.e_l2, &pick(|r| r.e_l2)),
        clock_identity_residual: pooled.clock_identity_residual(merged.spec.stick),
    })
}

/// Masses of the stationary-law estimate, each divided by total sticky time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccupationSummary {
    pub interior_mass: f64,
    pub face_masses: Vec2,
    pub total: f64,
}

pub fn occupation_summary(acc: &Accumulator) -> OccupationSummary {
    let total = acc.sticky_time();
    let (u, l) = (acc.spec.stick, acc.local_time());
    OccupationSummary {
        interior_mass: acc.srbm_time() / total,
        face_masses: [u[0] * l[0] / total, u[1] * l[1] / total],
        total,
    }
}
