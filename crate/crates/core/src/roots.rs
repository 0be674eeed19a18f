//! Bracketed scalar root finding: bisection to a coarse bracket, then
//! safeguarded secant polish.

use thiserror::Error;

pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RootError {
    #[error("no sign change on [{lo}, {hi}] (f = {f_lo}, {f_hi})")]
    NotBracketed { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("root finder did not converge in {0} iterations")]
    NoConvergence(usize),
}

/// Finds a root of `f` in `[lo, hi]` given `f(lo)` and `f(hi)` of opposite
/// sign (or one of them zero).
pub fn find_root<F: Fn(f64) -> f64>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    max_iter: usize,
) -> Result<f64, RootError> {
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(RootError::NotBracketed { lo, hi, f_lo, f_hi });
    }

    let scale = |a: f64, b: f64| a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    // Bisection until the bracket is tight enough for the secant to behave.
    let mut iter = 0;
    while (hi - lo) > 1e-6 * scale(lo, hi) {
        iter += 1;
        if iter > max_iter {
            return Err(RootError::NoConvergence(max_iter));
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }

    while iter < max_iter {
        iter += 1;
        let mut x = hi - f_hi * (hi - lo) / (f_hi - f_lo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == f_lo.signum() {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
            f_hi = fx;
        }
        let best = if f_lo.abs() < f_hi.abs() { lo } else { hi };
        if (hi - lo) <= rel_tol * scale(lo, hi) * 1e-2 {
            return Ok(best);
        }
        // Secant steps can stall on one side; converged when the function
        // value is negligible relative to the local slope times tolerance.
        let slope = ((f_hi - f_lo) / (hi - lo)).abs();
        if f_lo.abs().min(f_hi.abs()) <= slope * rel_tol * 1e-2 * scale(lo, hi) {
            return Ok(best);
        }
    }
    Err(RootError::NoConvergence(max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = find_root(|x| x * x - 2.0, 0.0, 2.0, 1e-12, 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn handles_square_root_singularity_at_endpoint() {
        // f behaves like sqrt near the right end, as branch functions do.
        let f = |x: f64| 0.5 - (1.0 - x).max(0.0).sqrt();
        let r = find_root(f, 0.0, 1.0, 1e-12, 200).unwrap();
        assert!((r - 0.75).abs() < 1e-10);
    }

    #[test]
    fn rejects_missing_bracket() {
        assert!(matches!(
            find_root(|x| x * x + 1.0, -1.0, 1.0, 1e-10, 100),
            Err(RootError::NotBracketed { .. })
        ));
    }

    #[test]
    fn endpoint_roots_are_returned_directly() {
        assert_eq!(find_root(|x| x, 0.0, 1.0, 1e-10, 10).unwrap(), 0.0);
        assert_eq!(find_root(|x| x - 1.0, 0.0, 1.0, 1e-10, 10).unwrap(), 1.0);
    }
}
