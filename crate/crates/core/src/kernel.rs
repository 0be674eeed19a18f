//! The kernel `γ(x,y) = <(x,y),μ> + ½<(x,y),Σ(x,y)>` and the real geometry of
//! its zero set: discriminants, branch points, the two algebraic branches in
//! each coordinate, and the pole/singularity candidates of the boundary
//! transforms.
//!
//! Everything here is real-valued. The zero set `γ = 0` is an ellipse through
//! the origin; `Y0 <= Y1` are its lower and upper halves over `[x1, x2]`, and
//! `X0 <= X1` its left and right halves over `[y1, y2]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Model;
use crate::roots::{self, RootError};
use crate::serde_ext::extended;

/// Acceptance tolerance for the branch-membership test of `x_tilde`.
pub const DEFAULT_TILDE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("discriminant is degenerate (leading coefficient {0})")]
    DegenerateDiscriminant(f64),
    #[error("{coord} = {at} lies outside the real branch interval [{lo}, {hi}]")]
    OutsideBranchCut { coord: char, at: f64, lo: f64, hi: f64 },
    #[error("sign condition promises a root of {what} but none was bracketed: {source}")]
    BracketFailure {
        what: &'static str,
        #[source]
        source: RootError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// The smaller root (`Y0` / `X0`).
    Lower,
    /// The larger root (`Y1` / `X1`).
    Upper,
}

/// `γ` written as a quadratic in `y` with coefficients polynomial in `x`,
/// and mirrored as a quadratic in `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelForm {
    /// `a = Σ22/2`.
    pub a: f64,
    /// `b(x) = b_lin[0] + b_lin[1] x = μ2 + Σ12 x`.
    pub b_lin: [f64; 2],
    /// `c(x) = c_quad[0] x + c_quad[1] x² = μ1 x + Σ11 x²/2`.
    pub c_quad: [f64; 2],
    /// `ã = Σ11/2`.
    pub a_t: f64,
    /// `b̃(y) = μ1 + Σ12 y`.
    pub b_lin_t: [f64; 2],
    /// `c̃(y) = μ2 y + Σ22 y²/2`.
    pub c_quad_t: [f64; 2],
}

impl KernelForm {
    pub fn new(model: &Model) -> Self {
        let s = &model.sigma;
        let [m1, m2] = model.mu;
        Self {
            a: 0.5 * s[1][1],
            b_lin: [m2, s[0][1]],
            c_quad: [m1, 0.5 * s[0][0]],
            a_t: 0.5 * s[0][0],
            b_lin_t: [m1, s[0][1]],
            c_quad_t: [m2, 0.5 * s[1][1]],
        }
    }

    pub fn b(&self, x: f64) -> f64 {
        self.b_lin[0] + self.b_lin[1] * x
    }

    pub fn c(&self, x: f64) -> f64 {
        x * (self.c_quad[0] + self.c_quad[1] * x)
    }

    pub fn b_t(&self, y: f64) -> f64 {
        self.b_lin_t[0] + self.b_lin_t[1] * y
    }

    pub fn c_t(&self, y: f64) -> f64 {
        y * (self.c_quad_t[0] + self.c_quad_t[1] * y)
    }

    /// `γ(x,y)` through the quadratic-in-`y` form.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.a * y + self.b(x)) * y + self.c(x)
    }

    /// `D1(x) = b(x)² − 4 a c(x)`.
    pub fn disc_x(&self, x: f64) -> f64 {
        let b = self.b(x);
        b * b - 4.0 * self.a * self.c(x)
    }

    /// `D2(y) = b̃(y)² − 4 ã c̃(y)`.
    pub fn disc_y(&self, y: f64) -> f64 {
        let b = self.b_t(y);
        b * b - 4.0 * self.a_t * self.c_t(y)
    }

    /// Coefficients `[c0, c1, c2]` of `D1(x) = c0 + c1 x + c2 x²`.
    pub fn disc_x_coeffs(&self) -> [f64; 3] {
        let [b0, b1] = self.b_lin;
        let [k1, k2] = self.c_quad;
        [b0 * b0, 2.0 * b0 * b1 - 4.0 * self.a * k1, b1 * b1 - 4.0 * self.a * k2]
    }

    pub fn disc_y_coeffs(&self) -> [f64; 3] {
        let [b0, b1] = self.b_lin_t;
        let [k1, k2] = self.c_quad_t;
        [b0 * b0, 2.0 * b0 * b1 - 4.0 * self.a_t * k1, b1 * b1 - 4.0 * self.a_t * k2]
    }
}

/// `γ(x,y)` evaluated directly from the model.
pub fn kernel_eval(model: &Model, x: f64, y: f64) -> f64 {
    model.levy_exponent([x, y])
}

/// `(γ1, γ2) = (x r11 + y r21, x r12 + y r22)`.
pub fn face_polys(model: &Model, x: f64, y: f64) -> (f64, f64) {
    let r = &model.refl;
    (x * r[0][0] + y * r[1][0], x * r[0][1] + y * r[1][1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoints {
    pub x1: f64,
    pub x2: f64,
    pub y1: f64,
    pub y2: f64,
}

/// Real roots `r_lo <= r_hi` of `c0 + c1 t + c2 t²` with `c2 < 0`, `c0 >= 0`.
fn concave_quadratic_roots(c: [f64; 3]) -> Result<(f64, f64), KernelError> {
    let [c0, c1, c2] = c;
    let scale = c0.abs() + c1.abs() + c2.abs();
    if c2 >= -1e-14 * scale.max(f64::MIN_POSITIVE) {
        return Err(KernelError::DegenerateDiscriminant(c2));
    }
    let disc = (c1 * c1 - 4.0 * c2 * c0).max(0.0);
    // Cancellation-free form of the quadratic formula.
    let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
    let (r_a, r_b) = if q == 0.0 { (0.0, 0.0) } else { (q / c2, c0 / q) };
    Ok((r_a.min(r_b), r_a.max(r_b)))
}

pub fn branch_points(model: &Model) -> Result<BranchPoints, KernelError> {
    let k = KernelForm::new(model);
    let (x1, x2) = concave_quadratic_roots(k.disc_x_coeffs())?;
    let (y1, y2) = concave_quadratic_roots(k.disc_y_coeffs())?;
    Ok(BranchPoints { x1, x2, y1, y2 })
}

/// The printed closed form for `x2`, evaluated verbatim. Kept as a cross-check
/// against [`branch_points`]; the two do not agree in general.
pub fn x2_closed_form_as_printed(model: &Model) -> f64 {
    let s = &model.sigma;
    let [m1, m2] = model.mu;
    let delta = (m2 * s[0][1] - s[1][1] * m1).powi(2)
        - (s[0][1] * s[0][1] - s[0][0] * s[0][1]) * m2 * m2;
    (2.0 * (s[0][1] * m2 - s[1][1] * m1) + delta.sqrt())
        / (2.0 * (s[0][0] * s[1][1] - s[0][1] * s[0][1]))
}

/// Roots of `a t² + b t + c = 0` ordered `(lower, upper)`, computed so that a
/// root near zero keeps full relative accuracy.
fn quadratic_branches(a: f64, b: f64, c: f64, disc: f64) -> (f64, f64) {
    let sq = disc.max(0.0).sqrt();
    // At a branch point the two formulas can land round-off apart in either
    // order.
    let sorted = |(p, q): (f64, f64)| (p.min(q), p.max(q));
    sorted(if b > 0.0 {
        let lower = (-b - sq) / (2.0 * a);
        let upper = if lower != 0.0 { c / (a * lower) } else { 0.0 };
        (lower, upper)
    } else if b < 0.0 {
        let upper = (-b + sq) / (2.0 * a);
        let lower = if upper != 0.0 { c / (a * upper) } else { 0.0 };
        (lower, upper)
    } else {
        (-sq / (2.0 * a), sq / (2.0 * a))
    })
}

/// Slack allowed on the discriminant sign so that evaluation exactly at a
/// computed branch point does not fail on round-off.
fn disc_slack(b: f64, a: f64, c: f64) -> f64 {
    1e-12 * (b * b + (4.0 * a * c).abs()).max(1e-300)
}

/// Membership in `[lo, hi]` up to round-off in the computed endpoints.
fn within(t: f64, lo: f64, hi: f64) -> bool {
    let slack = 1e-12 * (hi - lo).abs().max(f64::MIN_POSITIVE);
    t.is_finite() && t >= lo - slack && t <= hi + slack
}

/// `Y0(x)` or `Y1(x)`: the roots in `y` of `γ(x, y) = 0`.
pub fn y_branch(model: &Model, x: f64, which: Branch) -> Result<f64, KernelError> {
    let k = KernelForm::new(model);
    let (b, c) = (k.b(x), k.c(x));
    let mut d = k.disc_x(x);
    if d < -disc_slack(b, k.a, c) || !d.is_finite() {
        let bp = branch_points(model)?;
        if !within(x, bp.x1, bp.x2) {
            return Err(KernelError::OutsideBranchCut { coord: 'x', at: x, lo: bp.x1, hi: bp.x2 });
        }
        d = 0.0;
    }
    let (lo, hi) = quadratic_branches(k.a, b, c, d);
    Ok(match which {
        Branch::Lower => lo,
        Branch::Upper => hi,
    })
}

/// `X0(y)` or `X1(y)`: the roots in `x` of `γ(x, y) = 0`.
pub fn x_branch(model: &Model, y: f64, which: Branch) -> Result<f64, KernelError> {
    let k = KernelForm::new(model);
    let (b, c) = (k.b_t(y), k.c_t(y));
    let mut d = k.disc_y(y);
    if d < -disc_slack(b, k.a_t, c) || !d.is_finite() {
        let bp = branch_points(model)?;
        if !within(y, bp.y1, bp.y2) {
            return Err(KernelError::OutsideBranchCut { coord: 'y', at: y, lo: bp.y1, hi: bp.y2 });
        }
        d = 0.0;
    }
    let (lo, hi) = quadratic_branches(k.a_t, b, c, d);
    Ok(match which {
        Branch::Lower => lo,
        Branch::Upper => hi,
    })
}

/// Closed-form candidate expressions, evaluated verbatim for comparison with
/// the root-finding results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormCrossCheck {
    #[serde(with = "extended")]
    pub x2_printed: f64,
    #[serde(with = "extended")]
    pub x_star_printed: f64,
    #[serde(with = "extended")]
    pub y_star_printed: f64,
    #[serde(with = "extended")]
    pub x_tilde_printed: f64,
}

/// Singularity candidates of the face-2 transform `Φ2(x)` (and the `y*` of
/// `Φ1`). Absent candidates are `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularityCandidates {
    #[serde(with = "extended")]
    pub x_star: f64,
    #[serde(with = "extended")]
    pub y_star: f64,
    #[serde(with = "extended")]
    pub x_tilde: f64,
    pub x2: f64,
}

/// Root of `g(z) = γ2(z, Y0(z))` on `(0, x2]`, or `+inf` when
/// `γ2(x2, Y0(x2)) < 0`.
pub fn find_x_star(model: &Model) -> Result<f64, KernelError> {
    let bp = branch_points(model)?;
    let x2 = bp.x2;
    let g = |z: f64| -> f64 {
        let z = z.min(x2);
        let y0 = y_branch(model, z, Branch::Lower).expect("z inside [x1, x2]");
        face_polys(model, z, y0).1
    };
    let g_x2 = g(x2);
    if g_x2 < 0.0 {
        return Ok(f64::INFINITY);
    }
    if g_x2 == 0.0 {
        return Ok(x2);
    }
    let failure = |source| KernelError::BracketFailure { what: "gamma2(z, Y0(z))", source };

    // g is negative just right of the origin and has a single nonzero root;
    // scan for the first nonnegative value, then bisect.
    const SCAN: usize = 64;
    let mut prev = 0.0;
    for k in 1..=SCAN {
        let z = x2 * k as f64 / SCAN as f64;
        let gz = g(z);
        if gz >= 0.0 {
            let mut lo = prev;
            if lo == 0.0 {
                lo = z;
                let mut found = false;
                for _ in 0..80 {
                    lo *= 0.5;
                    if g(lo) < 0.0 {
                        found = true;
                        break;
                    }
                }
                if !found {
                    return Err(failure(RootError::NotBracketed {
                        lo,
                        hi: z,
                        f_lo: g(lo),
                        f_hi: gz,
                    }));
                }
            }
            // Y0 has a square-root singularity at x2, so solve in s = sqrt(x2 - z)
            // where g is smooth and a tolerance on s keeps g small.
            let gs = |s: f64| g(x2 - s * s);
            let (s_lo, s_hi) = ((x2 - z).max(0.0).sqrt(), (x2 - lo).sqrt());
            return roots::find_root(gs, s_lo, s_hi, roots::DEFAULT_REL_TOL, roots::DEFAULT_MAX_ITER)
                .map(|s| x2 - s * s)
                .map_err(failure);
        }
        prev = z;
    }
    Err(failure(RootError::NotBracketed { lo: 0.0, hi: x2, f_lo: g(0.0), f_hi: g_x2 }))
}

fn closed_form_x_star(model: &Model, x_star: f64) -> f64 {
    let r = &model.refl;
    let s = &model.sigma;
    let [m1, m2] = model.mu;
    if x_star.is_infinite() {
        return f64::INFINITY;
    }
    (2.0 * r[0][0] * r[1][1] * m2 - 2.0 * r[1][1] * r[1][1] * m1)
        / (s[1][1] * r[0][1] * r[0][1] - 2.0 * r[0][0] * r[1][1] * s[0][1]
            + r[1][1] * r[1][1] * s[0][0])
}

fn closed_form_y_star(model: &Model) -> f64 {
    let r = &model.refl;
    let s = &model.sigma;
    let [m1, m2] = model.mu;
    (2.0 * r[0][0] * r[1][0] * m2 - 2.0 * r[0][0] * r[0][0] * m1)
        / (r[1][0] * r[1][0] * s[0][0] - 2.0 * r[0][0] * r[1][0] * s[0][1]
            + s[1][1] * r[0][0] * r[0][0])
}

/// `y*` (root of `γ1(X0(y), y)` on `(0, y2]`) and `x_tilde`, the point where
/// the lower branch reaches `y*`. `x_tilde` is `X1(y*)` when that point lies on
/// `Y0`, and `+inf` otherwise.
pub fn find_y_star_x_tilde(model: &Model) -> Result<(f64, f64), KernelError> {
    find_y_star_x_tilde_tol(model, DEFAULT_TILDE_TOL)
}

pub fn find_y_star_x_tilde_tol(model: &Model, tol_accept: f64) -> Result<(f64, f64), KernelError> {
    let swapped = model.swapped();
    let y_star = find_x_star(&swapped)?;
    if y_star.is_infinite() {
        return Ok((y_star, f64::INFINITY));
    }
    let bp = branch_points(model)?;
    let cand = x_branch(model, y_star, Branch::Upper)?;
    let slack = 1e-12 * (1.0 + bp.x2.abs());
    if !(cand > 0.0 && cand <= bp.x2 + slack) {
        return Ok((y_star, f64::INFINITY));
    }
    let y0 = y_branch(model, cand.min(bp.x2), Branch::Lower)?;
    let x_tilde = if (y0 - y_star).abs() <= tol_accept * (1.0 + y_star.abs()) {
        cand.min(bp.x2)
    } else {
        f64::INFINITY
    };
    Ok((y_star, x_tilde))
}

pub fn singularity_candidates(model: &Model) -> Result<SingularityCandidates, KernelError> {
    let bp = branch_points(model)?;
    let x_star = find_x_star(model)?;
    let (y_star, x_tilde) = find_y_star_x_tilde(model)?;
    Ok(SingularityCandidates { x_star, y_star, x_tilde, x2: bp.x2 })
}

/// Evaluates the printed closed forms next to the computed candidates and
/// logs any disagreement.
pub fn closed_form_cross_check(
    model: &Model,
    cands: &SingularityCandidates,
) -> ClosedFormCrossCheck {
    let x_star_printed = closed_form_x_star(model, cands.x_star);
    let y_star_printed = closed_form_y_star(model);
    let x_tilde_printed = if cands.x_tilde.is_finite() {
        let r = &model.refl;
        let s = &model.sigma;
        r[1][0] / r[0][0] * y_star_printed - 2.0 * (s[0][1] * y_star_printed + model.mu[0]) / s[0][0]
    } else {
        f64::INFINITY
    };
    let out = ClosedFormCrossCheck {
        x2_printed: x2_closed_form_as_printed(model),
        x_star_printed,
        y_star_printed,
        x_tilde_printed,
    };
    for (name, printed, computed) in [
        ("x2", out.x2_printed, cands.x2),
        ("x*", out.x_star_printed, cands.x_star),
        ("y*", out.y_star_printed, cands.y_star),
        ("x~", out.x_tilde_printed, cands.x_tilde),
    ] {
        let agree = (printed.is_infinite() && computed.is_infinite())
            || (printed - computed).abs() <= 1e-9 * (1.0 + computed.abs());
        if !agree {
            log::debug!("closed form for {name} = {printed} disagrees with computed {computed}");
        }
    }
    out
}
