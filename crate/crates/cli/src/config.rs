//! Run configuration: strict JSON in, validated [`RunConfig`] out.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sticky_core::classify::DirectionalQuery;
use sticky_core::model::{Mat2, Model, ModelParams, ValidationErrors, Vec2};
use sticky_core::sim::SimConfig;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
        })
    }
}

/// Block-maxima run used for the Gumbel check. It is a separate simulation
/// with its own step size and sample spacing, so that samples are close to
/// independent without inflating the main run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvConfig {
    pub enabled: bool,
    pub blocks: usize,
    pub block_size: usize,
    /// Axis (1 or 2) whose marginal maxima are checked.
    pub axis: u8,
    pub dt: f64,
    /// Sticky time between consecutive samples.
    pub spacing: f64,
    pub burn_in: f64,
}

impl Default for EvConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            blocks: 500,
            block_size: 10_000,
            axis: 1,
            dt: 1e-2,
            spacing: 5.0,
            burn_in: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub format: Format,
    pub dir: PathBuf,
    /// Steps between records of `simulate --trace`.
    pub trace_stride: u64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { format: Format::Json, dir: PathBuf::from("out"), trace_stride: 100 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mu: Vec2,
    sigma: Mat2,
    #[serde(rename = "R")]
    refl: Mat2,
    u: Vec2,
    #[serde(default)]
    sim: SimConfig,
    #[serde(default = "default_directions")]
    directions: Vec<Vec2>,
    #[serde(default = "default_theta_grid")]
    theta_grid: Vec<Vec2>,
    #[serde(default)]
    ev: EvConfig,
    #[serde(default)]
    output: OutputConfig,
}

fn default_directions() -> Vec<Vec2> {
    vec![[1.0, 1.0]]
}

/// 5×5 grid over `[-2, -0.1]²`.
pub fn default_theta_grid() -> Vec<Vec2> {
    let pts = [-2.0, -1.525, -1.05, -0.575, -0.1];
    pts.iter().flat_map(|&a| pts.iter().map(move |&b| [a, b])).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub model: Model,
    pub sim: SimConfig,
    pub directions: Vec<DirectionalQuery>,
    pub theta_grid: Vec<Vec2>,
    pub ev: EvConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{origin}: line {line}, column {column}: {message}")]
    Parse { origin: String, line: usize, column: usize, message: String },
    #[error("invalid model: {0}")]
    Validation(#[from] ValidationErrors),
    #[error("invalid {field}: {message}")]
    Invalid { field: &'static str, message: String },
}

impl RunConfig {
    /// Config for `model` with every other block at its default.
    pub fn with_defaults(model: Model) -> Self {
        Self {
            model,
            sim: SimConfig::default(),
            directions: default_directions()
                .into_iter()
                .map(|u| DirectionalQuery::new(u).expect("default direction"))
                .collect(),
            theta_grid: default_theta_grid(),
            ev: EvConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Read { path: path.to_owned(), source })?;
    parse_config_str(&text, &path.display().to_string())
}

/// Parses and validates config text; `origin` labels error messages.
pub fn parse_config_str(text: &str, origin: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        origin: origin.to_owned(),
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })?;
    let model = ModelParams::new(raw.mu, raw.sigma, raw.refl, raw.u).validate()?;
    raw.sim.validate().map_err(|e| ConfigError::Invalid { field: "sim", message: e.to_string() })?;

    let directions = raw
        .directions
        .iter()
        .map(|&u| {
            DirectionalQuery::new(u).map_err(|_| ConfigError::Invalid {
                field: "directions",
                message: format!("{u:?} must be componentwise >= 0 and nonzero"),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(t) = raw.theta_grid.iter().find(|t| !(t[0] < 0.0 && t[1] < 0.0)) {
        return Err(ConfigError::Invalid {
            field: "theta_grid",
            message: format!("{t:?} must have both components negative"),
        });
    }
    let ev = raw.ev;
    if ev.enabled {
        let bad = |m: String| Err(ConfigError::Invalid { field: "ev", message: m });
        if ev.blocks == 0 || ev.block_size < 3 {
            return bad(format!("need blocks >= 1 and block_size >= 3, got {} x {}", ev.blocks, ev.block_size));
        }
        if ev.axis != 1 && ev.axis != 2 {
            return bad(format!("axis must be 1 or 2, got {}", ev.axis));
        }
        if !(ev.dt > 0.0 && ev.spacing > 0.0 && ev.burn_in >= 0.0) {
            return bad("dt and spacing must be positive and burn_in nonnegative".into());
        }
    }
    Ok(RunConfig {
        model,
        sim: raw.sim,
        directions,
        theta_grid: raw.theta_grid,
        ev,
        output: raw.output,
    })
}

/// serde_json appends " at line L column C"; the position is reported
/// separately.
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_owned(),
        None => msg.to_owned(),
    }
}
