//! Exponential tail fits to simulated survival curves.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::accum::Accumulator;
use super::engine::SimError;

/// Fewer observed steps than this are not enough for a tail fit.
pub const MIN_EFFECTIVE_SAMPLES: u64 = 1_000_000;

/// Minimum number of survival points with positive mass inside the window.
pub const MIN_WINDOW_POINTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeFit {
    pub alpha: f64,
    pub p: f64,
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub functional: String,
    pub window: [f64; 2],
    /// Power exponent held fixed in the fit.
    pub p: f64,
    pub alpha_hat: f64,
    /// Standard error across replications.
    #[serde(with = "crate::serde_ext::extended")]
    pub alpha_se: f64,
    pub k_hat: f64,
    #[serde(with = "crate::serde_ext::extended")]
    pub k_lower: f64,
    #[serde(with = "crate::serde_ext::extended")]
    pub k_upper: f64,
    /// Coefficient `c` of the `(1 + c/t)` correction, fitted when `p != 0`.
    pub correction: Option<f64>,
    pub free: Option<FreeFit>,
    pub points: usize,
    pub effective_samples: u64,
}

/// Inverse variance of `log Ŝ(t)` up to a constant: `S / (1 - S)`.
fn log_weight(s: f64) -> f64 {
    s / (1.0 - s).max(1e-12)
}

/// Weighted least squares of `log S(t) - p log t = log k - α t`.
fn fixed_power_fit(points: &[(f64, f64)], p: f64) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let (mut sw, mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(t, s) in points {
        let w = log_weight(s);
        let y = s.ln() - p * t.ln();
        sw += w;
        st += w * t;
        sy += w * y;
        stt += w * t * t;
        sty += w * t * y;
    }
    let den = sw * stt - st * st;
    if !(den > 0.0) {
        return None;
    }
    let slope = (sw * sty - st * sy) / den;
    let icpt = (sy - slope * st) / sw;
    Some((-slope, icpt.exp()))
}

/// Weighted fit of `log S - p log t - log(1 + c/t) = log k - α t` for a
/// fixed `c`. Returns `(objective, α, k)`.
fn shifted_fit(points: &[(f64, f64)], p: f64, c: f64) -> Option<(f64, f64, f64)> {
    let (mut sw, mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(t, s) in points {
        let w = log_weight(s);
        let y = s.ln() - p * t.ln() - (c / t).ln_1p();
        sw += w;
        st += w * t;
        sy += w * y;
        stt += w * t * t;
        sty += w * t * y;
    }
    let den = sw * stt - st * st;
    if !(den > 0.0) {
        return None;
    }
    let slope = (sw * sty - st * sy) / den;
    let icpt = (sy - slope * st) / sw;
    let obj = points
        .iter()
        .map(|&(t, s)| {
            let r = s.ln() - p * t.ln() - (c / t).ln_1p() - icpt - slope * t;
            log_weight(s) * r * r
        })
        .sum::<f64>();
    obj.is_finite().then_some((obj, -slope, icpt.exp()))
}

/// Fit of `S(t) = k t^p (1 + c/t) e^{-α t}`, the first correction to a
/// power-exponential tail, profiling the objective over `c`.
/// Returns `(α, k, c)`.
fn corrected_fit(points: &[(f64, f64)], p: f64) -> Option<(f64, f64, f64)> {
    if points.len() < 3 {
        return None;
    }
    let t_lo = points.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);
    let t_hi = points.iter().map(|x| x.0).fold(0.0, f64::max);
    let f = |c: f64| shifted_fit(points, p, c).map_or(f64::INFINITY, |r| r.0);
    // c > -t_lo keeps 1 + c/t positive; scan uniformly in asinh(c).
    let (u0, u1) = ((-0.95 * t_lo).asinh(), (50.0 * t_hi).asinh());
    let n = 400;
    let grid = |i: usize| u0 + (u1 - u0) * i as f64 / n as f64;
    let best = (0..=n).min_by(|&i, &j| f(grid(i).sinh()).total_cmp(&f(grid(j).sinh())))?;
    let (mut a, mut b) = (grid(best.saturating_sub(1)), grid((best + 1).min(n)));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x = b - g * (b - a);
    let mut y = a + g * (b - a);
    let (mut fx, mut fy) = (f(x.sinh()), f(y.sinh()));
    for _ in 0..60 {
        if fx < fy {
            b = y;
            y = x;
            fy = fx;
            x = b - g * (b - a);
            fx = f(x.sinh());
        } else {
            a = x;
            x = y;
            fx = fy;
            y = a + g * (b - a);
            fy = f(y.sinh());
        }
    }
    let c = (0.5 * (a + b)).sinh();
    let (_, alpha, k) = shifted_fit(points, p, c)?;
    Some((alpha, k, c))
}

/// The fit used for `α̂`: plain for `p = 0`, where corrections are
/// exponentially small, and with the `1/t` correction otherwise.
fn tail_fit(points: &[(f64, f64)], p: f64) -> Option<(f64, f64, Option<f64>)> {
    if p == 0.0 {
        fixed_power_fit(points, p).map(|(a, k)| (a, k, None))
    } else {
        corrected_fit(points, p).map(|(a, k, c)| (a, k, Some(c)))
    }
}

fn free_fit(points: &[(f64, f64)]) -> Option<FreeFit> {
    if points.len() < 3 {
        return None;
    }
    let a = DMatrix::from_fn(points.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => points[i].0.ln(),
        _ => -points[i].0,
    });
    let b = DVector::from_iterator(points.len(), points.iter().map(|&(_, s)| s.ln()));
    let x = a.svd(true, true).solve(&b, 1e-12).ok()?;
    Some(FreeFit { alpha: x[2], p: x[1], k: x[0].exp() })
}

fn window_points(acc: &Accumulator, idx: usize, window: [f64; 2]) -> Vec<(f64, f64)> {
    acc.survival[idx]
        .survival(acc.sticky_time())
        .into_iter()
        .filter(|&(t, s)| t >= window[0] && t <= window[1] && t > 0.0 && s > 0.0)
        .collect()
}

/// Fits the survival of functional `idx` over `window` with the power
/// exponent fixed at `p`. The point estimate uses all replications pooled;
/// the standard error comes from the per-replication fits.
pub fn survival_and_fit(
    reps: &[Accumulator],
    idx: usize,
    p: f64,
    window: [f64; 2],
) -> Result<TailFit, SimError> {
    let merged = Accumulator::merge_all(reps)
        .ok_or_else(|| SimError::InsufficientTailData("no replications".into()))?;
    let name = merged
        .spec
        .functionals
        .get(idx)
        .map(|f| f.name.clone())
        .ok_or_else(|| SimError::InsufficientTailData(format!("no functional {idx}")))?;
    if merged.steps < MIN_EFFECTIVE_SAMPLES {
        return Err(SimError::InsufficientTailData(format!(
            "{name}: {} samples, {MIN_EFFECTIVE_SAMPLES} required",
            merged.steps
        )));
    }
    let extent = merged.spec.functionals[idx].extent;
    if window[1] > extent || !(window[0] < window[1]) {
        return Err(SimError::InsufficientTailData(format!(
            "{name}: window {window:?} not inside histogram range [0, {extent}]"
        )));
    }
    let pts = window_points(&merged, idx, window);
    let expected = ((window[1] - window[0]) / merged.survival[idx].width) as usize;
    if pts.len() < MIN_WINDOW_POINTS || pts.len() + 1 < expected {
        return Err(SimError::InsufficientTailData(format!(
            "{name}: survival vanishes inside window {window:?} ({} of {expected} points)",
            pts.len()
        )));
    }
    let (alpha_hat, k_hat, correction) = tail_fit(&pts, p)
        .ok_or_else(|| SimError::InsufficientTailData(format!("{name}: degenerate fit")))?;

    let per: Vec<(f64, f64)> = reps
        .iter()
        .filter_map(|r| tail_fit(&window_points(r, idx, window), p).map(|(a, k, _)| (a, k)))
        .collect();
    let m = per.len() as f64;
    let (alpha_se, log_k_se) = if per.len() >= 2 {
        let ma = per.iter().map(|x| x.0).sum::<f64>() / m;
        let mk = per.iter().map(|x| x.1.ln()).sum::<f64>() / m;
        let va = per.iter().map(|x| (x.0 - ma).powi(2)).sum::<f64>() / (m - 1.0);
        let vk = per.iter().map(|x| (x.1.ln() - mk).powi(2)).sum::<f64>() / (m - 1.0);
        ((va / m).sqrt(), (vk / m).sqrt())
    } else {
        (f64::NAN, f64::NAN)
    };
    let half = crate::extreme::Z95 * log_k_se;
    Ok(TailFit {
        functional: name,
        window,
        p,
        alpha_hat,
        alpha_se,
        k_hat,
        k_lower: k_hat * (-half).exp(),
        k_upper: k_hat * half.exp(),
        correction,
        free: free_fit(&pts),
        points: pts.len(),
        effective_samples: merged.steps,
    })
}

/// Default fit window for a predicted tail `(α, p)`: `[3/α, 8/α]`, starting
/// at `1.5/α` instead when `p != 0` so the `1/t` correction is identifiable.
pub fn default_window(alpha: f64, p: f64) -> [f64; 2] {
    let lo = if p == 0.0 { 3.0 } else { 1.5 };
    [lo / alpha, 8.0 / alpha]
}
