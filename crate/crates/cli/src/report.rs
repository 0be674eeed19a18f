//! Report types. Everything here serializes to the versioned JSON report;
//! non-finite floats are written as the strings `"inf"`, `"-inf"`, `"nan"`.

use serde::{Deserialize, Serialize};
use sticky_core::classify::TailAsymptotic;
use sticky_core::extreme::{
    BlockMaximaCheck, CoefficientFit, EvNorming, IndependenceCurve, JointTailModel,
};
use sticky_core::kernel::{BranchPoints, ClosedFormCrossCheck, SingularityCandidates};
use sticky_core::model::{LocalTimeCrossCheck, LocalTimeRates, ModelParams, Vec2};
use sticky_core::serde_ext::extended;
use sticky_core::sim::{BarResidual, OccupationSummary, RatesEstimate, SimConfig, TailFit};

use crate::config::EvConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Default tolerances. Every verdict names the constant it was judged by.
pub mod tolerances {
    /// Relative error of each simulated local-time rate.
    pub const RATES_REL: f64 = 0.05;
    /// Largest relative residual of the sticky adjoint relation on the θ grid.
    pub const BAR_RESIDUAL: f64 = 0.03;
    /// Relative error of a fitted decay rate.
    pub const ALPHA_REL: f64 = 0.10;
    /// Adjacent independence ratios allowed to rise above the previous
    /// upper confidence limit.
    pub const INDEPENDENCE_VIOLATIONS: f64 = 0.0;
    /// Upper bound on the last independence ratio.
    pub const INDEPENDENCE_LAST: f64 = 0.1;
    /// Allowed factor between empirical and predicted joint survival.
    pub const JOINT_FACTOR: f64 = 2.0;
    /// KS distance of normalized block maxima to the Gumbel law.
    pub const GUMBEL_KS: f64 = 0.05;
    /// Scaled kernel residual along the lower branch.
    pub const KERNEL_RESIDUAL: f64 = 1e-10;

    pub const ALL: [(&str, f64); 8] = [
        ("RATES_REL", RATES_REL),
        ("BAR_RESIDUAL", BAR_RESIDUAL),
        ("ALPHA_REL", ALPHA_REL),
        ("INDEPENDENCE_VIOLATIONS", INDEPENDENCE_VIOLATIONS),
        ("INDEPENDENCE_LAST", INDEPENDENCE_LAST),
        ("JOINT_FACTOR", JOINT_FACTOR),
        ("GUMBEL_KS", GUMBEL_KS),
        ("KERNEL_RESIDUAL", KERNEL_RESIDUAL),
    ];
}

/// A result that may have failed without failing the whole report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome<T> {
    Ok(T),
    Error(String),
}

impl<T> Outcome<T> {
    pub fn ok(&self) -> Option<&T> {
        match self {
            Outcome::Ok(v) => Some(v),
            Outcome::Error(_) => None,
        }
    }
}

impl<T, E: std::fmt::Display> From<Result<T, E>> for Outcome<T> {
    fn from(r: Result<T, E>) -> Self {
        match r {
            Ok(v) => Outcome::Ok(v),
            Err(e) => Outcome::Error(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub model: ModelParams,
    pub sim: SimConfig,
    pub directions: Vec<Vec2>,
    pub theta_grid: Vec<Vec2>,
    pub ev: EvConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityReport {
    pub branch_points: BranchPoints,
    /// Candidates for face 2 (`x*`, `y*`, `x̃`, `x2`).
    pub face2: SingularityCandidates,
    /// Candidates for face 1, from the coordinate-swapped model.
    pub face1: SingularityCandidates,
    pub closed_form: ClosedFormCrossCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTail {
    pub name: String,
    pub weights: Vec2,
    pub tail: Outcome<TailAsymptotic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormingReport {
    pub axis: u8,
    /// The tail coefficient is not known in closed form; this norming uses
    /// `k = 1` and is shifted by `ln k / α` once `k` is fitted.
    pub k_assumed: f64,
    pub norming: Outcome<EvNorming>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticReport {
    pub singularities: SingularityReport,
    pub local_time_rates: LocalTimeRates,
    pub local_time_cross_check: LocalTimeCrossCheck,
    pub boundary: Vec<NamedTail>,
    pub marginals: Vec<NamedTail>,
    pub directions: Vec<NamedTail>,
    pub joint: Outcome<JointTailModel>,
    pub ev_norming: Vec<NormingReport>,
    /// Largest scaled `|γ(x, Y0(x))|` on a grid over the branch interval.
    pub kernel_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub name: String,
    pub weights: Vec2,
    pub predicted: TailAsymptotic,
    pub fit: Outcome<TailFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSurvivalCheck {
    pub x: f64,
    pub y: f64,
    pub empirical: f64,
    pub lower: f64,
    pub upper: f64,
    pub predicted: f64,
    pub ratio: f64,
    pub joint_count: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedReport {
    pub steps_per_replication: u64,
    pub replications: u32,
    pub rates: RatesEstimate,
    pub occupation: OccupationSummary,
    pub bar: Vec<BarResidual>,
    pub tails: Vec<TailCheck>,
    pub stationary_samples: usize,
    pub coefficients: Vec<Outcome<CoefficientFit>>,
    pub independence: Outcome<IndependenceCurve>,
    pub joint_survival: Outcome<JointSurvivalCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GumbelReport {
    pub axis: u8,
    pub samples: usize,
    pub coefficient: CoefficientFit,
    pub check: BlockMaximaCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    #[serde(with = "extended")]
    pub value: f64,
    pub tolerance_name: String,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub command: String,
    pub config: ConfigEcho,
    pub analytic: AnalyticReport,
    pub simulated: Option<Outcome<SimulatedReport>>,
    pub gumbel: Option<Outcome<GumbelReport>>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
