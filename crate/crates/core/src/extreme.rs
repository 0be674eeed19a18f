//! Gumbel norming for maxima of stationary samples, the product-form joint
//! tail, and an exceedance-ratio diagnostic for asymptotic independence.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::TailAsymptotic;

/// Fewer exceedances than this on the conditioning component end the
/// independence curve.
pub const MIN_EXCEEDANCES: usize = 50;

/// Minimum sample count accepted by [`independence_diagnostic`].
pub const MIN_DIAGNOSTIC_SAMPLES: usize = 100_000;

/// Normal quantile for two-sided 95% intervals.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtremeError {
    #[error("block size {0} is below 3")]
    BlockTooSmall(f64),
    #[error("tail coefficient must be positive, got {0}")]
    NonpositiveCoefficient(f64),
    #[error("decay rate must be positive, got {0}")]
    NonpositiveRate(f64),
    #[error("joint tail coefficient has not been estimated")]
    MissingCoefficient,
    #[error("need x, y > 0, got ({0}, {1})")]
    NonpositiveArgument(f64, f64),
    #[error("fewer than {MIN_EXCEEDANCES} exceedances at t = {0}")]
    InsufficientExceedances(f64),
    #[error("{got} samples given, {need} required")]
    InsufficientSamples { got: usize, need: usize },
    #[error("t grid must be positive and strictly increasing")]
    BadGrid,
    #[error("fit window [{lo}, {hi}] holds too few usable points")]
    EmptyWindow { lo: f64, hi: f64 },
}

pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvNorming {
    pub a_n: f64,
    pub b_n: f64,
    pub n: f64,
}

impl EvNorming {
    pub fn normalize(&self, max: f64) -> f64 {
        (max - self.b_n) / self.a_n
    }
}

/// Norming constants for the maximum of `n` samples whose survival is
/// `k t^p e^{-α t}`: `a_n = 1/α` and `b_n` solving `n k b^p e^{-α b} ≈ 1` to
/// leading order,
/// `b_n = (log n + p log log n + log k - p log α) / α`.
pub fn ev_norming_raw(n: f64, alpha: f64, p: f64, k: f64) -> Result<EvNorming, ExtremeError> {
    if !(n >= 3.0) {
        return Err(ExtremeError::BlockTooSmall(n));
    }
    if !(k > 0.0) {
        return Err(ExtremeError::NonpositiveCoefficient(k));
    }
    if !(alpha > 0.0) {
        return Err(ExtremeError::NonpositiveRate(alpha));
    }
    let ln = n.ln();
    let b_n = (ln + p * ln.ln() + k.ln() - p * alpha.ln()) / alpha;
    Ok(EvNorming { a_n: 1.0 / alpha, b_n, n })
}

pub fn ev_norming(n: f64, tail: &TailAsymptotic, k: f64) -> Result<EvNorming, ExtremeError> {
    ev_norming_raw(n, tail.alpha, tail.p, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    #[serde(with = "crate::serde_ext::extended")]
    pub lower: f64,
    #[serde(with = "crate::serde_ext::extended")]
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointTailModel {
    pub alpha1: f64,
    pub alpha2: f64,
    pub p1: f64,
    pub p2: f64,
    pub k_hat: Option<Estimate>,
}

/// `k̂ x^{p1} y^{p2} e^{-α1 x - α2 y}`.
pub fn joint_tail_eval(x: f64, y: f64, m: &JointTailModel) -> Result<f64, ExtremeError> {
    let k = m.k_hat.ok_or(ExtremeError::MissingCoefficient)?.value;
    if !(x > 0.0 && y > 0.0) {
        return Err(ExtremeError::NonpositiveArgument(x, y));
    }
    Ok(k * x.powf(m.p1) * y.powf(m.p2) * (-m.alpha1 * x - m.alpha2 * y).exp())
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let ph = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (ph + z2 / (2.0 * n)) / denom;
    let half = z * (ph * (1.0 - ph) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub t: f64,
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
    pub conditioning: usize,
    pub joint: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceCurve {
    pub points: Vec<RatioPoint>,
    /// Each ratio is at most the upper confidence limit of its predecessor.
    pub decreasing: bool,
    /// First grid value dropped for lack of exceedances, if any.
    pub truncated_at: Option<f64>,
}

/// `r(t) = #{both > t} / #{first > t}` on an increasing grid, with Wilson
/// intervals. The curve stops at the first `t` with fewer than
/// [`MIN_EXCEEDANCES`] conditioning exceedances.
pub fn independence_diagnostic(
    samples: &[[f64; 2]],
    t_grid: &[f64],
) -> Result<IndependenceCurve, ExtremeError> {
    if samples.len() < MIN_DIAGNOSTIC_SAMPLES {
        return Err(ExtremeError::InsufficientSamples {
            got: samples.len(),
            need: MIN_DIAGNOSTIC_SAMPLES,
        });
    }
    if t_grid.is_empty() || t_grid[0] <= 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ExtremeError::BadGrid);
    }
    let mut points = Vec::with_capacity(t_grid.len());
    let mut truncated_at = None;
    for &t in t_grid {
        let (mut cond, mut joint) = (0usize, 0usize);
        for s in samples {
            if s[0] > t {
                cond += 1;
                if s[1] > t {
                    joint += 1;
                }
            }
        }
        if cond < MIN_EXCEEDANCES {
            truncated_at = Some(t);
            break;
        }
        let (lower, upper) = wilson_interval(joint, cond, Z95);
        points.push(RatioPoint {
            t,
            ratio: joint as f64 / cond as f64,
            lower,
            upper,
            conditioning: cond,
            joint,
        });
    }
    if points.is_empty() {
        return Err(ExtremeError::InsufficientExceedances(t_grid[0]));
    }
    let decreasing = points.windows(2).all(|w| w[1].ratio <= w[0].upper);
    Ok(IndependenceCurve { points, decreasing, truncated_at })
}

/// Empirical quantile by the nearest-rank rule on sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFit {
    pub k: Estimate,
    pub window: [f64; 2],
    pub points: usize,
}

/// Estimates `k` in `S(t) ≈ k t^p e^{-α t}` with `α, p` fixed, by averaging
/// `log Ŝ(t) + α t - p log t` over sample order statistics inside the window
/// given by the quantiles `q_lo, q_hi`. The interval comes from the spread of
/// the same estimate over `batches` contiguous sub-samples.
pub fn estimate_coefficient(
    samples: &[f64],
    alpha: f64,
    p: f64,
    q_lo: f64,
    q_hi: f64,
    batches: usize,
) -> Result<CoefficientFit, ExtremeError> {
    let point = |xs: &[f64]| -> Result<(f64, [f64; 2], usize), ExtremeError> {
        let mut sorted: Vec<f64> = xs.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let lo = quantile_sorted(&sorted, q_lo);
        let hi = quantile_sorted(&sorted, q_hi);
        let start = sorted.partition_point(|&v| v < lo);
        let end = sorted.partition_point(|&v| v <= hi);
        let mut acc = 0.0;
        let mut count = 0usize;
        // Survival just below each order statistic: strictly greater count
        // plus the point itself, taken at distinct values only.
        let mut i = start;
        while i < end {
            let t = sorted[i];
            let j = sorted[i..].partition_point(|&v| v <= t) + i;
            let surv = (sorted.len() - j) as f64 / n;
            if t > 0.0 && surv > 0.0 {
                acc += surv.ln() + alpha * t - p * t.ln();
                count += 1;
            }
            i = j;
        }
        if count < 2 {
            return Err(ExtremeError::EmptyWindow { lo, hi });
        }
        Ok(((acc / count as f64).exp(), [lo, hi], count))
    };

    let (value, window, points) = point(samples)?;
    let batches = batches.max(2);
    let size = samples.len() / batches;
    let mut logs = Vec::with_capacity(batches);
    for b in 0..batches {
        if let Ok((kb, _, _)) = point(&samples[b * size..(b + 1) * size]) {
            logs.push(kb.ln());
        }
    }
    let (lower, upper) = if logs.len() >= 2 {
        let m = logs.len() as f64;
        let mean = logs.iter().sum::<f64>() / m;
        let var = logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (m - 1.0);
        let half = Z95 * (var / m).sqrt();
        (value * (-half).exp(), value * half.exp())
    } else {
        (0.0, f64::INFINITY)
    };
    Ok(CoefficientFit { k: Estimate { value, lower, upper }, window, points })
}

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and a
/// continuous CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockMaximaCheck {
    pub norming: EvNorming,
    pub blocks: usize,
    /// Normalized maxima, sorted ascending.
    pub normalized: Vec<f64>,
    pub ks: f64,
}

/// Splits `samples` into consecutive blocks of `block_size`, normalizes each
/// block maximum and measures its KS distance to the Gumbel law.
pub fn block_maxima_check(
    samples: &[f64],
    block_size: usize,
    norming: EvNorming,
) -> Result<BlockMaximaCheck, ExtremeError> {
    let blocks = samples.len() / block_size.max(1);
    if blocks == 0 {
        return Err(ExtremeError::InsufficientSamples { got: samples.len(), need: block_size });
    }
    let mut normalized: Vec<f64> = samples
        .chunks_exact(block_size)
        .map(|c| norming.normalize(c.iter().copied().fold(f64::NEG_INFINITY, f64::max)))
        .collect();
    normalized.sort_by(f64::total_cmp);
    let ks = ks_distance(&normalized, gumbel_cdf);
    Ok(BlockMaximaCheck { norming, blocks, normalized, ks })
}
