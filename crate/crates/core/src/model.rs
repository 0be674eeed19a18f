//! Model data for the two-dimensional sticky reflected Brownian motion.
//!
//! A model is the tuple `(mu, sigma, R, u)`: drift, covariance, reflection
//! matrix and stickiness weights. [`ModelParams`] is the raw, unchecked form
//! (what a config file deserializes into); [`Model`] is only obtainable through
//! [`ModelParams::validate`] and is what every other module consumes.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Margin applied to the strict stability inequalities.
pub const DEFAULT_STABILITY_MARGIN: f64 = 1e-12;

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mu: Vec2,
    pub sigma: Mat2,
    /// Reflection matrix; column `i` is the push direction on face `{z_i = 0}`.
    #[serde(rename = "R")]
    pub refl: Mat2,
    #[serde(rename = "u")]
    pub stick: Vec2,
}

/// One violated standing assumption.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("sigma is not symmetric positive definite: {0}")]
    NonPositiveDefiniteSigma(String),
    #[error("correlation {rho} is not below 1")]
    DegenerateCorrelation { rho: f64 },
    #[error("reflection/drift violate the stability conditions: {0}")]
    UnstableReflection(String),
    #[error("stickiness u{index} = {value} is not positive")]
    NonPositiveStickiness { index: usize, value: f64 },
}

/// Every violated constraint, in a fixed order.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ValidationErrors(pub Vec<Violation>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msgs: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

impl ValidationErrors {
    pub fn violations(&self) -> &[Violation] {
        &self.0
    }

    pub fn contains(&self, pred: impl Fn(&Violation) -> bool) -> bool {
        self.0.iter().any(pred)
    }
}

/// Parameters that passed [`ModelParams::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Model(ModelParams);

impl Deref for Model {
    type Target = ModelParams;
    fn deref(&self) -> &ModelParams {
        &self.0
    }
}

impl ModelParams {
    pub fn new(mu: Vec2, sigma: Mat2, refl: Mat2, stick: Vec2) -> Self {
        Self { mu, sigma, refl, stick }
    }

    pub fn validate(self) -> Result<Model, ValidationErrors> {
        self.validate_with_margin(DEFAULT_STABILITY_MARGIN)
    }

    /// Checks every standing assumption and reports all failures at once.
    ///
    /// `margin` tightens each strict inequality: `x > 0` becomes `x > margin`
    /// and `x < 0` becomes `x < -margin`.
    pub fn validate_with_margin(self, margin: f64) -> Result<Model, ValidationErrors> {
        let mut out = Vec::new();
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        let fields: [(&'static str, Vec<f64>); 4] = [
            ("mu", self.mu.to_vec()),
            ("sigma", self.sigma.concat()),
            ("R", self.refl.concat()),
            ("u", self.stick.to_vec()),
        ];
        for (name, vals) in &fields {
            if !finite(vals) {
                out.push(Violation::NonFinite(name));
            }
        }
        if !out.is_empty() {
            return Err(ValidationErrors(out));
        }

        let s = &self.sigma;
        let sym_scale = s[0][1].abs().max(s[1][0].abs()).max(1.0);
        if (s[0][1] - s[1][0]).abs() > 1e-12 * sym_scale {
            out.push(Violation::NonPositiveDefiniteSigma(format!(
                "off-diagonal entries differ ({} vs {})",
                s[0][1], s[1][0]
            )));
        }
        let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
        if s[0][0] <= 0.0 || s[1][1] <= 0.0 || det <= 0.0 {
            out.push(Violation::NonPositiveDefiniteSigma(format!(
                "diagonal ({}, {}), determinant {det}",
                s[0][0], s[1][1]
            )));
        }
        if s[0][0] > 0.0 && s[1][1] > 0.0 {
            let rho = s[0][1] / (s[0][0] * s[1][1]).sqrt();
            if rho >= 1.0 {
                out.push(Violation::DegenerateCorrelation { rho });
            }
        }

        let r = &self.refl;
        let [m1, m2] = self.mu;
        let r_det = r[0][0] * r[1][1] - r[0][1] * r[1][0];
        let mut unstable = Vec::new();
        if r[0][0] <= margin {
            unstable.push(format!("r11 = {} must be > 0", r[0][0]));
        }
        if r[1][1] <= margin {
            unstable.push(format!("r22 = {} must be > 0", r[1][1]));
        }
        if r_det <= margin {
            unstable.push(format!("det R = {r_det} must be > 0"));
        }
        let c1 = r[1][1] * m1 - r[0][1] * m2;
        let c2 = r[0][0] * m2 - r[1][0] * m1;
        if c1 >= -margin {
            unstable.push(format!("r22*mu1 - r12*mu2 = {c1} must be < 0"));
        }
        if c2 >= -margin {
            unstable.push(format!("r11*mu2 - r21*mu1 = {c2} must be < 0"));
        }
        if unstable.is_empty() {
            // The general non-singular R with R^-1 mu < 0 form must agree.
            let inv_mu = [c1 / r_det, c2 / r_det];
            debug_assert!(inv_mu[0] < 0.0 && inv_mu[1] < 0.0);
        } else {
            out.push(Violation::UnstableReflection(unstable.join(", ")));
        }

        for (index, &value) in self.stick.iter().enumerate() {
            if value <= 0.0 {
                out.push(Violation::NonPositiveStickiness { index: index + 1, value });
            }
        }

        if out.is_empty() {
            Ok(Model(self))
        } else {
            Err(ValidationErrors(out))
        }
    }

    /// Relabels coordinates 1 and 2.
    pub fn swapped(&self) -> Self {
        let s = &self.sigma;
        let r = &self.refl;
        Self {
            mu: [self.mu[1], self.mu[0]],
            sigma: [[s[1][1], s[1][0]], [s[0][1], s[0][0]]],
            refl: [[r[1][1], r[1][0]], [r[0][1], r[0][0]]],
            stick: [self.stick[1], self.stick[0]],
        }
    }
}

impl Model {
    pub fn params(&self) -> &ModelParams {
        &self.0
    }

    pub fn into_params(self) -> ModelParams {
        self.0
    }

    /// The coordinate-swapped model. Validity is preserved by the swap.
    pub fn swapped(&self) -> Model {
        Model(self.0.swapped())
    }

    pub fn correlation(&self) -> f64 {
        self.sigma[0][1] / (self.sigma[0][0] * self.sigma[1][1]).sqrt()
    }

    /// Lévy exponent of the driving Brownian motion, `<θ,μ> + ½<θ,Σθ>`.
    pub fn levy_exponent(&self, theta: Vec2) -> f64 {
        let [x, y] = theta;
        let s = &self.sigma;
        x * self.mu[0]
            + y * self.mu[1]
            + 0.5 * s[0][0] * x * x
            + s[0][1] * x * y
            + 0.5 * s[1][1] * y * y
    }

    /// Lower Cholesky factor of sigma.
    pub fn sigma_sqrt(&self) -> Mat2 {
        let s = &self.sigma;
        let l11 = s[0][0].sqrt();
        let l21 = s[1][0] / l11;
        let l22 = (s[1][1] - l21 * l21).sqrt();
        [[l11, 0.0], [l21, l22]]
    }

    /// `R` column `i` (0-based).
    pub fn refl_col(&self, i: usize) -> Vec2 {
        [self.refl[0][i], self.refl[1][i]]
    }
}

/// Long-run rates of the sticky clock and local times per unit sticky time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeRates {
    /// `E[T(1)]`.
    pub e_t1: f64,
    /// `E[L1(T(1))]`.
    pub e_l1: f64,
    /// `E[L2(T(1))]`.
    pub e_l2: f64,
}

impl LocalTimeRates {
    pub fn clock_identity_residual(&self, stick: Vec2) -> f64 {
        self.e_t1 + stick[0] * self.e_l1 + stick[1] * self.e_l2 - 1.0
    }
}

/// The closed-form local-time expressions evaluated alongside the linear solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeCrossCheck {
    pub closed_form_l1: f64,
    /// Second closed form exactly as printed (its denominator repeats `mu2*u1`).
    pub closed_form_l2_as_printed: f64,
    pub rel_discrepancy_l1: f64,
    pub rel_discrepancy_l2: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RatesError {
    #[error("local-time linear system is singular (determinant {0})")]
    SingularSystem(f64),
}

fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Solves the stationary balance equations for `(E[T(1)], E[L1], E[L2])`:
///
/// ```text
/// -mu1 E[T] = r11 E[L1] + r12 E[L2]
/// -mu2 E[T] = r21 E[L1] + r22 E[L2]
///      E[T] = 1 - u1 E[L1] - u2 E[L2]
/// ```
pub fn local_time_rates(model: &Model) -> Result<LocalTimeRates, RatesError> {
    let (rates, _) = local_time_rates_checked(model)?;
    Ok(rates)
}

pub fn local_time_rates_checked(
    model: &Model,
) -> Result<(LocalTimeRates, LocalTimeCrossCheck), RatesError> {
    let r = &model.refl;
    let [m1, m2] = model.mu;
    let [u1, u2] = model.stick;
    // Eliminating E[T] leaves a 2x2 system in the local times.
    let a11 = r[0][0] - m1 * u1;
    let a12 = r[0][1] - m1 * u2;
    let a21 = r[1][0] - m2 * u1;
    let a22 = r[1][1] - m2 * u2;
    let det = a11 * a22 - a12 * a21;
    let scale = (a11.abs() + a12.abs()) * (a21.abs() + a22.abs());
    if det.abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        return Err(RatesError::SingularSystem(det));
    }
    let e_l1 = (-m1 * a22 + m2 * a12) / det;
    let e_l2 = (-m2 * a11 + m1 * a21) / det;
    let e_t1 = 1.0 - u1 * e_l1 - u2 * e_l2;
    let rates = LocalTimeRates { e_t1, e_l1, e_l2 };

    let cf_l1 = (m1 * (r[1][1] - m2 * u2) - m2 * (r[0][1] - m1 * u2))
        / ((r[1][0] - m2 * u1) * (r[0][1] - u2 * m1) - (r[0][0] - m1 * u1) * (r[1][1] - m2 * u2));
    let cf_l2 = (m1 * (r[1][0] - m2 * u1) - m2 * (r[0][0] - m1 * u1))
        / ((r[1][1] - m2 * u2) * (r[0][0] - m1 * u1) - (r[0][1] - m2 * u1) * (r[1][0] - m2 * u1));
    let check = LocalTimeCrossCheck {
        closed_form_l1: cf_l1,
        closed_form_l2_as_printed: cf_l2,
        rel_discrepancy_l1: rel_diff(cf_l1, e_l1),
        rel_discrepancy_l2: rel_diff(cf_l2, e_l2),
    };
    if check.rel_discrepancy_l2 > 1e-9 {
        log::debug!(
            "closed-form E[L2] {} differs from linear solve {} (rel {:.3e})",
            cf_l2,
            e_l2,
            check.rel_discrepancy_l2
        );
    }
    Ok((rates, check))
}
