//! Decay rate and power prefactor of the stationary tails: boundary measures,
//! marginals, and one-dimensional projections along a direction.
//!
//! Survival functions are described as `K t^p e^{-α t}` with
//! `p ∈ {-3/2, -1/2, 0, 1}`. Face 1 and axis 2 are obtained from face 2 and
//! axis 1 on the coordinate-swapped model.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::{self, Branch, KernelError, SingularityCandidates};
use crate::model::{Model, Vec2};

/// Relative tolerance under which two candidate singularities count as equal.
pub const EPS_EQ: f64 = 1e-8;

pub const ALLOWED_EXPONENTS: [f64; 4] = [-1.5, -0.5, 0.0, 1.0];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("no finite singularity candidate")]
    NoFiniteCandidate,
    #[error("sub-case test at x* = {x_star} is ambiguous (lower {lower}, upper {upper})")]
    InconsistentSubcase { x_star: f64, lower: f64, upper: f64 },
    #[error("unreachable singularity configuration: {0}")]
    UnreachableRegime(&'static str),
    #[error("direction must have nonnegative components, not both zero: {0:?}")]
    InvalidDirection(Vec2),
    #[error("reflection matrix is not of the form I - P^T with P substochastic: {0}")]
    ReflectionNotSubstochastic(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dominant {
    XStar,
    XTilde,
    X2,
    XGamma3,
    XGamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Boundary,
    Marginal,
    Direction,
}

/// Which case of which table produced a classification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regime {
    pub family: Family,
    pub case: String,
    /// Set when the result came from the coordinate-swapped model.
    pub mirrored: bool,
    /// Set for the equal-rate directional rule, whose exponent choice is
    /// provisional.
    pub experimental: bool,
}

impl Regime {
    fn new(family: Family, case: &str) -> Self {
        Self { family, case: case.to_owned(), mirrored: false, experimental: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailAsymptotic {
    pub alpha: f64,
    pub p: f64,
    pub regime: Regime,
    pub dominant: Dominant,
}

impl TailAsymptotic {
    fn mirrored(mut self) -> Self {
        self.regime.mirrored = !self.regime.mirrored;
        self
    }
}

/// A direction in the closed positive quadrant, scaled so its largest
/// component is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionalQuery {
    u_bar: Vec2,
}

impl DirectionalQuery {
    pub fn new(u: Vec2) -> Result<Self, ClassifyError> {
        let m = u[0].max(u[1]);
        if !(u[0] >= 0.0 && u[1] >= 0.0 && m > 0.0 && m.is_finite()) {
            return Err(ClassifyError::InvalidDirection(u));
        }
        Ok(Self { u_bar: [u[0] / m, u[1] / m] })
    }

    pub fn u_bar(&self) -> Vec2 {
        self.u_bar
    }

    fn swapped(self) -> Self {
        Self { u_bar: [self.u_bar[1], self.u_bar[0]] }
    }
}

/// Tie test: both finite and within `EPS_EQ` relative to the larger.
fn tie(a: f64, b: f64) -> bool {
    a.is_finite() && b.is_finite() && (a - b).abs() <= EPS_EQ * a.abs().max(b.abs())
}

/// Strictly smaller, ties excluded.
fn lt(a: f64, b: f64) -> bool {
    a < b && !tie(a, b)
}

fn face2_candidates(model: &Model) -> Result<SingularityCandidates, ClassifyError> {
    Ok(kernel::singularity_candidates(model)?)
}

fn boundary_from(c: &SingularityCandidates) -> Result<TailAsymptotic, ClassifyError> {
    let (xs, xt, x2) = (c.x_star, c.x_tilde, c.x2);
    if !x2.is_finite() {
        return Err(ClassifyError::NoFiniteCandidate);
    }
    let out = |alpha, p, case: &str, dominant| TailAsymptotic {
        alpha,
        p,
        regime: Regime::new(Family::Boundary, case),
        dominant,
    };
    if tie(xs, x2) && tie(xt, x2) {
        return Ok(out(x2, 0.0, "case 1 (triple coincidence)", Dominant::X2));
    }
    if lt(xs, x2) && lt(xs, xt) {
        return Ok(out(xs, 0.0, "case 1", Dominant::XStar));
    }
    if lt(xt, x2) && lt(xt, xs) {
        return Ok(out(xt, 0.0, "case 1", Dominant::XTilde));
    }
    if tie(xs, xt) && lt(xs, x2) {
        return Ok(out(xs, 1.0, "case 4", Dominant::XStar));
    }
    if tie(xs, x2) && lt(x2, xt) {
        return Ok(out(x2, -0.5, "case 2", Dominant::X2));
    }
    if tie(xt, x2) && lt(x2, xs) {
        return Ok(out(x2, -0.5, "case 2", Dominant::X2));
    }
    Ok(out(x2, -1.5, "case 3", Dominant::X2))
}

/// Tail of the boundary measure on face `face` (1 or 2).
pub fn classify_boundary(face: u8, model: &Model) -> Result<TailAsymptotic, ClassifyError> {
    match face {
        2 => boundary_from(&face2_candidates(model)?),
        1 => Ok(boundary_from(&face2_candidates(&model.swapped())?)?.mirrored()),
        _ => panic!("face must be 1 or 2, got {face}"),
    }
}

/// Outcome of the sub-case test at `x*`: which branch passes through the
/// target height.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OnBranch {
    Lower,
    Upper,
}

fn branch_at(model: &Model, x_star: f64, height: f64) -> Result<OnBranch, ClassifyError> {
    let lower = kernel::y_branch(model, x_star, Branch::Lower)?;
    let upper = kernel::y_branch(model, x_star, Branch::Upper)?;
    let tol = EPS_EQ * (1.0 + x_star.abs());
    match ((lower - height).abs() <= tol, (upper - height).abs() <= tol) {
        (true, false) => Ok(OnBranch::Lower),
        (false, true) => Ok(OnBranch::Upper),
        _ => Err(ClassifyError::InconsistentSubcase { x_star, lower, upper }),
    }
}

/// Shared table for the marginal along axis 1 (`ū = (1, 0)`, `height` = 0)
/// and the one-sided directional table (`height = x_γ ū2`). All candidates are
/// given on the same scale: `z0 = min(x*, x̃)`, `xg` the zero of `γ` along the
/// ray, `big_x2` the branch point.
struct OneSided {
    x_star: f64,
    x_tilde: f64,
    z0: f64,
    xg: f64,
    big_x2: f64,
    /// Scale from ray parameter back to the x coordinate of the kernel.
    u1: f64,
    /// Height on the kernel zero set at `x*` that identifies the sub-case.
    height: f64,
    gamma_label: Dominant,
}

fn one_sided(
    model: &Model,
    s: &OneSided,
    family: Family,
) -> Result<TailAsymptotic, ClassifyError> {
    let (z0, xg, x2) = (s.z0, s.xg, s.big_x2);
    let m = z0.min(xg);
    let xt_eq_xs = tie(s.x_tilde, s.x_star);
    let z0_dom = if tie(z0, s.x_star / s.u1) { Dominant::XStar } else { Dominant::XTilde };
    let out = |alpha, p, case: &str, dominant| TailAsymptotic {
        alpha,
        p,
        regime: Regime::new(family, case),
        dominant,
    };

    if lt(x2, m) {
        return Ok(out(x2, -1.5, "case 4", Dominant::X2));
    }
    if tie(x2, m) {
        if tie(z0, xg) && tie(xg, x2) {
            if family == Family::Direction {
                return Err(ClassifyError::UnreachableRegime(
                    "ray zero, pole and branch point coincide",
                ));
            }
            return Ok(out(xg, 0.0, "case 1", s.gamma_label));
        }
        if lt(xg, z0) {
            return Ok(out(xg, 0.0, "case 1", s.gamma_label));
        }
        // x_γ > z0 = x2
        if xt_eq_xs {
            return Ok(out(x2, 0.0, "case 1", Dominant::X2));
        }
        return Ok(out(x2, -0.5, "case 3", Dominant::X2));
    }
    // min(z0, x_γ) strictly below the branch point.
    if !tie(xg, z0) {
        if xt_eq_xs {
            if lt(z0, xg) {
                return Ok(out(z0, 1.0, "case 2 (double pole)", z0_dom));
            }
            return Ok(out(xg, 0.0, "case 1", s.gamma_label));
        }
        return Ok(if z0 < xg {
            out(z0, 0.0, "case 1", z0_dom)
        } else {
            out(xg, 0.0, "case 1", s.gamma_label)
        });
    }
    // x_γ = z0 < x2.
    if !tie(s.x_star / s.u1, z0) {
        return Err(ClassifyError::UnreachableRegime("ray zero coincides with x-tilde only"));
    }
    match branch_at(model, s.x_star, s.height)? {
        OnBranch::Lower => Ok(out(xg, 0.0, "case 1 (lower branch)", s.gamma_label)),
        OnBranch::Upper => Ok(out(xg, 1.0, "case 2 (upper branch)", s.gamma_label)),
    }
}

fn marginal_axis1(model: &Model) -> Result<TailAsymptotic, ClassifyError> {
    let mu1 = model.mu[0];
    if mu1 >= 0.0 {
        let mut t = classify_boundary(2, model)?;
        t.regime.family = Family::Marginal;
        t.regime.case = format!("boundary {}", t.regime.case);
        return Ok(t);
    }
    let c = face2_candidates(model)?;
    let s = OneSided {
        x_star: c.x_star,
        x_tilde: c.x_tilde,
        z0: c.x_star.min(c.x_tilde),
        xg: -2.0 * mu1 / model.sigma[0][0],
        big_x2: c.x2,
        u1: 1.0,
        height: 0.0,
        gamma_label: Dominant::XGamma3,
    };
    one_sided(model, &s, Family::Marginal)
}

/// Tail of the stationary marginal along axis `axis` (1 or 2).
pub fn classify_marginal(axis: u8, model: &Model) -> Result<TailAsymptotic, ClassifyError> {
    match axis {
        1 => marginal_axis1(model),
        2 => Ok(marginal_axis1(&model.swapped())?.mirrored()),
        _ => panic!("axis must be 1 or 2, got {axis}"),
    }
}

/// One-sided table for `β1 > β2` in the orientation of `model`.
fn direction_one_sided(
    model: &Model,
    q: DirectionalQuery,
    xg: f64,
) -> Result<TailAsymptotic, ClassifyError> {
    let [u1, u2] = q.u_bar;
    let c = face2_candidates(model)?;
    let s = OneSided {
        x_star: c.x_star,
        x_tilde: c.x_tilde,
        z0: c.x_star.min(c.x_tilde) / u1,
        xg,
        big_x2: c.x2 / u1,
        u1,
        height: xg * u2,
        gamma_label: Dominant::XGamma,
    };
    one_sided(model, &s, Family::Direction)
}

/// Tail of `<ū, Z>` for a direction `ū` in the closed positive quadrant.
pub fn classify_direction(
    q: DirectionalQuery,
    model: &Model,
) -> Result<TailAsymptotic, ClassifyError> {
    let [u1, u2] = q.u_bar;
    if u2 == 0.0 {
        return classify_marginal(1, model);
    }
    if u1 == 0.0 {
        return classify_marginal(2, model);
    }
    let s = &model.sigma;
    let drift = u1 * model.mu[0] + u2 * model.mu[1];
    let quad = u1 * u1 * s[0][0] + 2.0 * u1 * u2 * s[0][1] + u2 * u2 * s[1][1];
    let xg = -2.0 * drift / quad;

    let tau2 = classify_boundary(2, model)?;
    let tau1 = classify_boundary(1, model)?;
    let beta2 = tau2.alpha / u1;
    let beta1 = tau1.alpha / u2;

    if xg <= 0.0 {
        // γ has no positive zero along the ray: the boundary singularities
        // alone decide.
        let (alpha, p, dominant, mirrored) = if tie(beta1, beta2) {
            (beta2, tau1.p.max(tau2.p), tau2.dominant, false)
        } else if beta2 < beta1 {
            (beta2, tau2.p, tau2.dominant, false)
        } else {
            (beta1, tau1.p, tau1.dominant, true)
        };
        let mut regime = Regime::new(Family::Direction, "no ray zero");
        regime.mirrored = mirrored;
        return Ok(TailAsymptotic { alpha, p, regime, dominant });
    }

    if lt(beta2, beta1) {
        return direction_one_sided(model, q, xg);
    }
    if lt(beta1, beta2) {
        return Ok(direction_one_sided(&model.swapped(), q.swapped(), xg)?.mirrored());
    }

    // Equal boundary rates from both faces: take the larger exponent of the
    // two one-sided tables at the common singularity.
    let a = direction_one_sided(model, q, xg);
    let b = direction_one_sided(&model.swapped(), q.swapped(), xg).map(TailAsymptotic::mirrored);
    let mut best = match (a, b) {
        (Ok(a), Ok(b)) => {
            let alpha = a.alpha.min(b.alpha);
            let mut pick = if b.p > a.p { b } else { a };
            pick.alpha = alpha;
            pick
        }
        (Ok(a), Err(ClassifyError::UnreachableRegime(_))) => a,
        (Err(ClassifyError::UnreachableRegime(_)), Ok(b)) => b,
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    best.regime.case = format!("equal rates, {}", best.regime.case);
    best.regime.experimental = true;
    Ok(best)
}

/// Checks that `R = I - P^T` with `P` entrywise nonnegative, row sums at most
/// one and spectral radius below one.
pub fn check_substochastic(model: &Model) -> Result<(), ClassifyError> {
    let r = &model.refl;
    // P = (I - R)^T
    let p = [[1.0 - r[0][0], -r[1][0]], [-r[0][1], 1.0 - r[1][1]]];
    let tol = 1e-12;
    let mut problems = Vec::new();
    for (i, row) in p.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if *v < -tol {
                problems.push(format!("P[{}][{}] = {v} < 0", i + 1, j + 1));
            }
        }
        let s = row[0] + row[1];
        if s > 1.0 + tol {
            problems.push(format!("row {} of P sums to {s} > 1", i + 1));
        }
    }
    let tr = p[0][0] + p[1][1];
    let det = p[0][0] * p[1][1] - p[0][1] * p[1][0];
    let disc = tr * tr - 4.0 * det;
    let radius = if disc >= 0.0 {
        (0.5 * (tr.abs() + disc.sqrt())).abs()
    } else {
        det.abs().sqrt()
    };
    if radius >= 1.0 {
        problems.push(format!("spectral radius of P is {radius} >= 1"));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(ClassifyError::ReflectionNotSubstochastic(problems.join("; ")))
    }
}

/// Marginal tails of both axes, the ingredients of the joint product-form
/// tail. Refused unless the reflection matrix is substochastic.
pub fn joint_tail_params(
    model: &Model,
) -> Result<(TailAsymptotic, TailAsymptotic), ClassifyError> {
    check_substochastic(model)?;
    Ok((classify_marginal(1, model)?, classify_marginal(2, model)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::SingularityCandidates;
    use crate::model::fixtures::{m0, m1, IDENTITY};
    use crate::model::ModelParams;
    use proptest::prelude::*;

    const INF: f64 = f64::INFINITY;

    fn cands(x_star: f64, x_tilde: f64, x2: f64) -> SingularityCandidates {
        SingularityCandidates { x_star, y_star: INF, x_tilde, x2 }
    }

    #[test]
    fn boundary_m0() {
        let t = classify_boundary(2, &m0()).unwrap();
        assert!((t.alpha - 2.0).abs() < 1e-10);
        assert_eq!(t.p, 0.0);
        assert_eq!(t.regime.case, "case 1");
        assert_eq!(t.dominant, Dominant::XStar);
    }

    #[test]
    fn boundary_case_table() {
        let t = boundary_from(&cands(2.0, 2.0, 3.0)).unwrap();
        assert_eq!((t.alpha, t.p), (2.0, 1.0));
        let t = boundary_from(&cands(4.0, INF, 3.0)).unwrap();
        assert_eq!((t.alpha, t.p), (3.0, -1.5));
        let t = boundary_from(&cands(3.0, INF, 3.0)).unwrap();
        assert_eq!((t.alpha, t.p), (3.0, -0.5));
        let t = boundary_from(&cands(5.0, 3.0, 3.0)).unwrap();
        assert_eq!((t.alpha, t.p), (3.0, -0.5));
        let t = boundary_from(&cands(3.0, 3.0, 3.0)).unwrap();
        assert_eq!((t.alpha, t.p), (3.0, 0.0));
        let t = boundary_from(&cands(INF, 1.0, 3.0)).unwrap();
        assert_eq!((t.alpha, t.p, t.dominant), (1.0, 0.0, Dominant::XTilde));
        // Near-ties inside the tolerance count as ties.
        let t = boundary_from(&cands(2.0, 2.0 * (1.0 + 1e-10), 3.0)).unwrap();
        assert_eq!(t.p, 1.0);
        let t = boundary_from(&cands(2.0, 2.0 * (1.0 + 1e-6), 3.0)).unwrap();
        assert_eq!(t.p, 0.0);
    }

    #[test]
    fn marginal_m0_both_axes() {
        for axis in [1, 2] {
            let t = classify_marginal(axis, &m0()).unwrap();
            assert_eq!(t.alpha, 2.0);
            assert_eq!(t.p, 0.0);
            assert_eq!(t.dominant, Dominant::XGamma3);
            assert_eq!(t.regime.case, "case 1 (lower branch)");
        }
    }

    #[test]
    fn marginal_m1_axis2() {
        let t = classify_marginal(2, &m1()).unwrap();
        assert_eq!((t.alpha, t.p), (4.0, 0.0));
        assert!(t.regime.mirrored);
        let t = classify_marginal(1, &m1()).unwrap();
        assert_eq!((t.alpha, t.p), (2.0, 0.0));
    }

    #[test]
    fn direction_m1_diagonal() {
        let q = DirectionalQuery::new([1.0, 1.0]).unwrap();
        let t = classify_direction(q, &m1()).unwrap();
        assert!((t.alpha - 2.0).abs() < 1e-10);
        assert_eq!(t.p, 0.0);
        assert_eq!(t.dominant, Dominant::XStar);
        assert!(!t.regime.experimental);
    }

    #[test]
    fn direction_normalization_and_axis_delegation() {
        let q = DirectionalQuery::new([2.0, 4.0]).unwrap();
        assert_eq!(q.u_bar(), [0.5, 1.0]);
        assert!(DirectionalQuery::new([0.0, 0.0]).is_err());
        assert!(DirectionalQuery::new([-1.0, 1.0]).is_err());
        let q = DirectionalQuery::new([0.0, 3.0]).unwrap();
        let t = classify_direction(q, &m1()).unwrap();
        assert_eq!(t, classify_marginal(2, &m1()).unwrap());
    }

    #[test]
    fn direction_m0_equal_rates_is_flagged() {
        let q = DirectionalQuery::new([1.0, 1.0]).unwrap();
        let t = classify_direction(q, &m0()).unwrap();
        assert!(t.regime.experimental);
        assert!((t.alpha - 2.0).abs() < 1e-10);
        // Sum of two independent exp(2) tails: t e^{-2t}.
        assert_eq!(t.p, 1.0);
    }

    #[test]
    fn substochastic_examples() {
        let ok = ModelParams::new([-1.0, -1.0], IDENTITY, [[1.0, -0.5], [-0.5, 1.0]], [1.0, 1.0])
            .validate()
            .unwrap();
        assert!(check_substochastic(&ok).is_ok());
        let bad = ModelParams::new([-1.0, -1.0], IDENTITY, [[1.0, -1.5], [-0.5, 1.0]], [1.0, 1.0])
            .validate()
            .unwrap();
        match joint_tail_params(&bad) {
            Err(ClassifyError::ReflectionNotSubstochastic(msg)) => assert!(msg.contains("row")),
            other => panic!("expected refusal, got {other:?}"),
        }
        let (a, b) = joint_tail_params(&m0()).unwrap();
        assert_eq!((a.alpha, a.p, b.alpha, b.p), (2.0, 0.0, 2.0, 0.0));
        // Marginals remain available when the joint claim is refused.
        assert!(classify_marginal(1, &bad).is_ok());
    }

    fn general_model() -> impl Strategy<Value = Model> {
        (
            (-3.0..-0.05f64, -3.0..-0.05f64),
            (0.2..3.0f64, 0.2..3.0f64, -0.9..0.9f64),
            (0.5..2.0f64, -0.6..0.6f64, -0.6..0.6f64, 0.5..2.0f64),
        )
            .prop_filter_map("unstable", |((m1, m2), (s1, s2, rho), (r11, r12, r21, r22))| {
                let s12 = rho * (s1 * s2).sqrt();
                ModelParams::new([m1, m2], [[s1, s12], [s12, s2]], [[r11, r12], [r21, r22]], [1.0, 1.0])
                    .validate()
                    .ok()
            })
    }

    proptest! {
        #[test]
        fn product_form_models_are_pure_exponential(
            m1 in -3.0..-0.05f64, m2 in -3.0..-0.05f64, s1 in 0.1..4.0f64, s2 in 0.1..4.0f64,
        ) {
            let m = ModelParams::new([m1, m2], [[s1, 0.0], [0.0, s2]], IDENTITY, [1.0, 1.0])
                .validate()
                .unwrap();
            let a = classify_marginal(1, &m).unwrap();
            let b = classify_marginal(2, &m).unwrap();
            prop_assert_eq!(a.alpha, -2.0 * m1 / s1);
            prop_assert_eq!(b.alpha, -2.0 * m2 / s2);
            prop_assert_eq!((a.p, b.p), (0.0, 0.0));
        }

        #[test]
        fn outputs_are_well_formed(m in general_model(), ux in 0.05..1.0f64) {
            for face in [1, 2] {
                let t = classify_boundary(face, &m).unwrap();
                prop_assert!(t.alpha > 0.0 && ALLOWED_EXPONENTS.contains(&t.p));
            }
            let bp = kernel::branch_points(&m).unwrap();
            for axis in [1, 2] {
                let t = classify_marginal(axis, &m).unwrap();
                prop_assert!(t.alpha > 0.0 && ALLOWED_EXPONENTS.contains(&t.p));
                let edge = if axis == 1 { bp.x2 } else { bp.y2 };
                prop_assert!(t.alpha <= edge * (1.0 + 1e-12));
            }
            let q = DirectionalQuery::new([1.0, ux]).unwrap();
            match classify_direction(q, &m) {
                Ok(t) => {
                    prop_assert!(t.alpha > 0.0 && ALLOWED_EXPONENTS.contains(&t.p));
                    prop_assert!(t.alpha <= bp.x2 / q.u_bar()[0] * (1.0 + 1e-12));
                }
                Err(ClassifyError::UnreachableRegime(_)) => {}
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }

        #[test]
        fn swap_equivariance(m in general_model()) {
            let s = m.swapped();
            let (a1, a2) = (classify_marginal(1, &m).unwrap(), classify_marginal(2, &m).unwrap());
            let (b1, b2) = (classify_marginal(1, &s).unwrap(), classify_marginal(2, &s).unwrap());
            prop_assert_eq!((a1.alpha, a1.p), (b2.alpha, b2.p));
            prop_assert_eq!((a2.alpha, a2.p), (b1.alpha, b1.p));
            let q = DirectionalQuery::new([1.0, 1.0]).unwrap();
            if let (Ok(d), Ok(e)) = (classify_direction(q, &m), classify_direction(q, &s)) {
                prop_assert!((d.alpha - e.alpha).abs() <= 1e-9 * d.alpha);
                prop_assert_eq!(d.p, e.p);
            }
        }
    }
}
