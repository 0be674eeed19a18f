//! analyze / simulate / verify.

use std::path::Path;

use sticky_core::classify::{
    classify_boundary, classify_direction, classify_marginal, joint_tail_params, TailAsymptotic,
};
use sticky_core::extreme::{
    block_maxima_check, estimate_coefficient, ev_norming, ev_norming_raw, gumbel_cdf,
    independence_diagnostic, joint_tail_eval, wilson_interval, Estimate, JointTailModel, Z95,
};
use sticky_core::kernel::{
    branch_points, closed_form_cross_check, kernel_eval, singularity_candidates, y_branch, Branch,
    KernelError,
};
use sticky_core::model::{local_time_rates_checked, Model, RatesError, Vec2};
use sticky_core::sim::{
    bar_residuals, default_window, estimate_local_time_rates, occupation_summary,
    run_replication, run_replications, survival_and_fit, AccumSpec, Accumulator, Functional,
    SimConfig, SimError, StickySampler, TraceWriter,
};
use thiserror::Error;

use crate::config::RunConfig;
use crate::report::*;

/// Histogram bins per tail functional.
pub const SURVIVAL_BINS: usize = 4000;
/// Occupation grid cells per axis.
pub const OCCUPATION_CELLS: usize = 400;
/// Tail histograms cover `[0, TAIL_EXTENT_RATES / α)`.
pub const TAIL_EXTENT_RATES: f64 = 12.0;
/// Independence grid in units of `1 / min(α1, α2)`.
pub const INDEPENDENCE_GRID: [f64; 5] = [2.0, 3.0, 4.0, 5.0, 6.0];
/// Joint survival is checked at `(JOINT_POINT / α1, JOINT_POINT / α2)`.
pub const JOINT_POINT: f64 = 4.0;
/// Quantile window for coefficient fits.
pub const COEFFICIENT_QUANTILES: (f64, f64) = (0.90, 0.999);
/// Random stream of the block-maxima run, disjoint from the main replications.
pub const EV_STREAM: u64 = 1 << 32;
/// Points on the branch interval for the kernel residual check.
pub const KERNEL_GRID: usize = 1000;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Rates(#[from] RatesError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Plot data kept out of the JSON report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotData {
    /// `(name, rows of t, empirical, fitted, lower, upper)`.
    pub tails: Vec<(String, Vec<[f64; 5]>)>,
    /// `x, y, mass`; face masses sit on the axes.
    pub occupation: Vec<[f64; 3]>,
    /// Sorted normalized maxima, empirical CDF, Gumbel CDF.
    pub gumbel: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: VerificationReport,
    pub plots: PlotData,
}

impl RunOutput {
    pub fn passed(&self) -> bool {
        self.report.passed
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v}").replace('-', "m")
}

fn direction_name(u: Vec2) -> String {
    format!("dir_{}_{}", fmt_num(u[0]), fmt_num(u[1]))
}

/// `max |γ(x, Y0(x))| / (1 + Σ|terms|)` over a grid of the branch interval.
pub fn kernel_residual(model: &Model, points: usize) -> Result<f64, KernelError> {
    let bp = branch_points(model)?;
    let s = &model.sigma;
    let mut worst: f64 = 0.0;
    for i in 0..points {
        let x = bp.x1 + (bp.x2 - bp.x1) * i as f64 / (points - 1).max(1) as f64;
        let y = y_branch(model, x, Branch::Lower)?;
        let scale = (model.mu[0] * x).abs()
            + (model.mu[1] * y).abs()
            + 0.5 * s[0][0] * x * x
            + (s[0][1] * x * y).abs()
            + 0.5 * s[1][1] * y * y;
        worst = worst.max(kernel_eval(model, x, y).abs() / (1.0 + scale));
    }
    Ok(worst)
}

fn echo(cfg: &RunConfig) -> ConfigEcho {
    ConfigEcho {
        model: *cfg.model.params(),
        sim: cfg.sim,
        directions: cfg.directions.iter().map(|d| d.u_bar()).collect(),
        theta_grid: cfg.theta_grid.clone(),
        ev: cfg.ev,
    }
}

/// Simulation-free half of the report.
pub fn analytic_report(cfg: &RunConfig) -> Result<AnalyticReport, PipelineError> {
    let m = &cfg.model;
    let face2 = singularity_candidates(m)?;
    let face1 = singularity_candidates(&m.swapped())?;
    let singularities = SingularityReport {
        branch_points: branch_points(m)?,
        closed_form: closed_form_cross_check(m, &face2),
        face2,
        face1,
    };
    let (rates, cross) = local_time_rates_checked(m)?;
    let boundary = (1..=2u8)
        .map(|f| NamedTail {
            name: format!("face{f}"),
            weights: if f == 1 { [0.0, 1.0] } else { [1.0, 0.0] },
            tail: classify_boundary(f, m).into(),
        })
        .collect();
    let marginals: Vec<NamedTail> = (1..=2u8)
        .map(|a| NamedTail {
            name: format!("axis{a}"),
            weights: if a == 1 { [1.0, 0.0] } else { [0.0, 1.0] },
            tail: classify_marginal(a, m).into(),
        })
        .collect();
    let directions = cfg
        .directions
        .iter()
        .map(|&q| NamedTail {
            name: direction_name(q.u_bar()),
            weights: q.u_bar(),
            tail: classify_direction(q, m).into(),
        })
        .collect();
    let joint = joint_tail_params(m)
        .map(|(a, b)| JointTailModel { alpha1: a.alpha, alpha2: b.alpha, p1: a.p, p2: b.p, k_hat: None })
        .into();
    let ev_norming = (1..=2u8)
        .map(|a| NormingReport {
            axis: a,
            k_assumed: 1.0,
            norming: match marginals[a as usize - 1].tail.ok() {
                Some(t) => ev_norming(cfg.ev.block_size as f64, t, 1.0).into(),
                None => Outcome::Error("marginal tail unavailable".into()),
            },
        })
        .collect();
    Ok(AnalyticReport {
        singularities,
        local_time_rates: rates,
        local_time_cross_check: cross,
        boundary,
        marginals,
        directions,
        joint,
        ev_norming,
        kernel_residual: kernel_residual(m, KERNEL_GRID)?,
    })
}

fn empty_report(cfg: &RunConfig, command: &str, analytic: AnalyticReport) -> VerificationReport {
    VerificationReport {
        schema_version: SCHEMA_VERSION,
        command: command.to_owned(),
        config: echo(cfg),
        analytic,
        simulated: None,
        gumbel: None,
        verdicts: Vec::new(),
        passed: true,
    }
}

pub fn run_analyze(cfg: &RunConfig) -> Result<RunOutput, PipelineError> {
    let analytic = analytic_report(cfg)?;
    Ok(RunOutput { report: empty_report(cfg, "analyze", analytic), plots: PlotData::default() })
}

struct Checked {
    name: String,
    weights: Vec2,
    predicted: Outcome<TailAsymptotic>,
    hist: Option<usize>,
}

fn tail_rows(reps: &[Accumulator], merged: &Accumulator, idx: usize, fit: Option<(f64, f64, f64)>) -> Vec<[f64; 5]> {
    let pooled = merged.survival[idx].survival(merged.sticky_time());
    let per: Vec<Vec<(f64, f64)>> =
        reps.iter().map(|r| r.survival[idx].survival(r.sticky_time())).collect();
    let stride = (pooled.len() / 500).max(1);
    let m = per.len() as f64;
    (1..pooled.len())
        .step_by(stride)
        .map(|k| {
            let (t, s) = pooled[k];
            let fitted = match fit {
                Some((alpha, p, kk)) => kk * t.powf(p) * (-alpha * t).exp(),
                None => f64::NAN,
            };
            let (lo, hi) = if per.len() >= 2 {
                let mean = per.iter().map(|c| c[k].1).sum::<f64>() / m;
                let var = per.iter().map(|c| (c[k].1 - mean).powi(2)).sum::<f64>() / (m - 1.0);
                let half = Z95 * (var / m).sqrt();
                ((s - half).max(0.0), (s + half).min(1.0))
            } else {
                (f64::NAN, f64::NAN)
            };
            [t, s, fitted, lo, hi]
        })
        .collect()
}

fn occupation_rows(acc: &Accumulator) -> Vec<[f64; 3]> {
    let occ = &acc.occupation;
    let total = acc.sticky_time();
    let [w1, w2] = occ.cell_width();
    let u = acc.spec.stick;
    let n = occ.cells;
    let mut rows = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let c = occ.interior[i * n + j];
            if c > 0 {
                rows.push([(i as f64 + 0.5) * w1, (j as f64 + 0.5) * w2, c as f64 * acc.dt / total]);
            }
        }
    }
    for (j, &l) in occ.face1.iter().enumerate() {
        if l > 0.0 {
            rows.push([0.0, (j as f64 + 0.5) * w2, u[0] * l / total]);
        }
    }
    for (i, &l) in occ.face2.iter().enumerate() {
        if l > 0.0 {
            rows.push([(i as f64 + 0.5) * w1, 0.0, u[1] * l / total]);
        }
    }
    rows
}

fn project(samples: &[Vec2], axis: u8) -> Vec<f64> {
    let k = axis as usize - 1;
    samples.iter().map(|z| z[k]).collect()
}

fn simulated_report(
    cfg: &RunConfig,
    analytic: &AnalyticReport,
) -> Result<(SimulatedReport, PlotData), PipelineError> {
    let model = &cfg.model;
    let mut checks: Vec<Checked> = analytic
        .marginals
        .iter()
        .chain(&analytic.directions)
        .map(|t| Checked { name: t.name.clone(), weights: t.weights, predicted: t.tail.clone(), hist: None })
        .collect();
    let mut functionals = Vec::new();
    for c in &mut checks {
        if let Some(t) = c.predicted.ok() {
            c.hist = Some(functionals.len());
            functionals.push(Functional {
                name: c.name.clone(),
                weights: c.weights,
                extent: TAIL_EXTENT_RATES / t.alpha,
            });
        }
    }
    let marginal_alpha = |a: usize| analytic.marginals[a].tail.ok().map_or(1.0, |t| t.alpha);
    let spec = AccumSpec {
        stick: model.stick,
        theta: cfg.theta_grid.clone(),
        functionals,
        survival_bins: SURVIVAL_BINS,
        occupation_cells: OCCUPATION_CELLS,
        occupation_extent: [2000f64.ln() / marginal_alpha(0), 2000f64.ln() / marginal_alpha(1)],
        sample_spacing: Some(cfg.sim.sample_spacing),
    };
    log::info!(
        "simulating {} replications of {} steps",
        cfg.sim.replications,
        cfg.sim.steps() + cfg.sim.burn_in_steps()
    );
    let started = std::time::Instant::now();
    let reps = run_replications(model, &cfg.sim, |_| Accumulator::new(spec.clone()))?;
    log::info!("simulation finished in {:.1?}", started.elapsed());
    let merged = Accumulator::merge_all(&reps).expect("at least one replication");
    let rates = estimate_local_time_rates(&reps).expect("at least one replication");

    let mut plots = PlotData { occupation: occupation_rows(&merged), ..Default::default() };
    let mut tails = Vec::new();
    for c in checks {
        let fit: Outcome<_> = match (&c.predicted, c.hist) {
            (Outcome::Ok(t), Some(idx)) => survival_and_fit(&reps, idx, t.p, default_window(t.alpha, t.p)).into(),
            (Outcome::Error(e), _) => Outcome::Error(format!("no prediction: {e}")),
            _ => unreachable!(),
        };
        if let Some(idx) = c.hist {
            let f = fit.ok().map(|f| (f.alpha_hat, f.p, f.k_hat));
            plots.tails.push((c.name.clone(), tail_rows(&reps, &merged, idx, f)));
        }
        if let Outcome::Ok(predicted) = c.predicted {
            tails.push(TailCheck { name: c.name, weights: c.weights, predicted, fit });
        }
    }

    let samples: &[Vec2] = merged.sampler.as_ref().map_or(&[], |s| &s.samples);
    let batches = (cfg.sim.replications as usize).max(2);
    let coefficients: Vec<Outcome<_>> = (1..=2u8)
        .map(|a| match analytic.marginals[a as usize - 1].tail.ok() {
            Some(t) => {
                let (lo, hi) = COEFFICIENT_QUANTILES;
                estimate_coefficient(&project(samples, a), t.alpha, t.p, lo, hi, batches).into()
            }
            None => Outcome::Error("marginal tail unavailable".into()),
        })
        .collect();
    let a_min = marginal_alpha(0).min(marginal_alpha(1));
    let grid: Vec<f64> = INDEPENDENCE_GRID.iter().map(|c| c / a_min).collect();
    let independence = independence_diagnostic(samples, &grid).into();
    let joint_survival = joint_survival_check(&analytic.joint, &coefficients, samples);

    let report = SimulatedReport {
        steps_per_replication: cfg.sim.steps(),
        replications: cfg.sim.replications,
        rates,
        occupation: occupation_summary(&merged),
        bar: bar_residuals(&merged, model),
        tails,
        stationary_samples: samples.len(),
        coefficients,
        independence,
        joint_survival,
    };
    Ok((report, plots))
}

fn joint_survival_check(
    joint: &Outcome<JointTailModel>,
    coefficients: &[Outcome<sticky_core::extreme::CoefficientFit>],
    samples: &[Vec2],
) -> Outcome<JointSurvivalCheck> {
    let jm = match joint {
        Outcome::Ok(j) => *j,
        Outcome::Error(e) => return Outcome::Error(e.clone()),
    };
    let (k1, k2) = match (coefficients[0].ok(), coefficients[1].ok()) {
        (Some(a), Some(b)) => (a.k, b.k),
        _ => return Outcome::Error("marginal coefficients unavailable".into()),
    };
    if samples.is_empty() {
        return Outcome::Error("no stationary samples".into());
    }
    let k_hat = Estimate { value: k1.value * k2.value, lower: k1.lower * k2.lower, upper: k1.upper * k2.upper };
    let jm = JointTailModel { k_hat: Some(k_hat), ..jm };
    let (x, y) = (JOINT_POINT / jm.alpha1, JOINT_POINT / jm.alpha2);
    let predicted = match joint_tail_eval(x, y, &jm) {
        Ok(v) => v,
        Err(e) => return Outcome::Error(e.to_string()),
    };
    let joint_count = samples.iter().filter(|z| z[0] > x && z[1] > y).count();
    let n = samples.len();
    let empirical = joint_count as f64 / n as f64;
    let (lower, upper) = wilson_interval(joint_count, n, Z95);
    Outcome::Ok(JointSurvivalCheck {
        x,
        y,
        empirical,
        lower,
        upper,
        predicted,
        ratio: empirical / predicted,
        joint_count,
        samples: n,
    })
}

/// Tail fits alone, from a run that records nothing but the survival
/// histograms. Cheap enough for horizons well beyond the default.
pub fn run_tail_study(cfg: &RunConfig) -> Result<Vec<TailCheck>, PipelineError> {
    let analytic = analytic_report(cfg)?;
    let predicted: Vec<&NamedTail> = analytic.marginals.iter().chain(&analytic.directions).collect();
    let mut named = Vec::new();
    let mut functionals = Vec::new();
    for n in predicted {
        if let Outcome::Ok(t) = &n.tail {
            functionals.push(Functional {
                name: n.name.clone(),
                weights: n.weights,
                extent: TAIL_EXTENT_RATES / t.alpha,
            });
            named.push((n.clone(), t.clone()));
        }
    }
    let spec = AccumSpec {
        functionals,
        survival_bins: SURVIVAL_BINS,
        occupation_cells: 1,
        ..AccumSpec::minimal(&cfg.model, [1.0, 1.0])
    };
    let reps = run_replications(&cfg.model, &cfg.sim, |_| Accumulator::new(spec.clone()))?;
    Ok(named
        .into_iter()
        .enumerate()
        .map(|(idx, (n, t))| TailCheck {
            name: n.name,
            weights: n.weights,
            fit: survival_and_fit(&reps, idx, t.p, default_window(t.alpha, t.p)).into(),
            predicted: t,
        })
        .collect())
}

pub fn run_simulate(cfg: &RunConfig) -> Result<RunOutput, PipelineError> {
    let analytic = analytic_report(cfg)?;
    let mut report = empty_report(cfg, "simulate", analytic);
    let (sim, plots) = simulated_report(cfg, &report.analytic)?;
    report.simulated = Some(Outcome::Ok(sim));
    report.verdicts = verdicts(&report);
    report.passed = report.verdicts.iter().all(|v| v.passed);
    Ok(RunOutput { report, plots })
}

/// Block-maxima run on one long path sampled at spacing `ev.spacing`.
pub fn gumbel_report(cfg: &RunConfig, analytic: &AnalyticReport) -> Result<(GumbelReport, Vec<[f64; 3]>), String> {
    let ev = cfg.ev;
    let tail = analytic.marginals[ev.axis as usize - 1].tail.ok().ok_or("marginal tail unavailable")?;
    let needed = ev.blocks * ev.block_size;
    let sticky = needed as f64 * ev.spacing;
    let sim = SimConfig {
        dt: ev.dt,
        horizon: 1.05 * sticky * analytic.local_time_rates.e_t1 + 10.0 * ev.spacing,
        burn_in: ev.burn_in,
        replications: 1,
        seed: cfg.sim.seed,
        sample_spacing: ev.spacing,
    };
    log::info!("block-maxima run: {needed} samples, {} steps", sim.steps() + sim.burn_in_steps());
    let mut sampler = StickySampler::with_capacity(cfg.model.stick, ev.spacing, needed + needed / 10);
    run_replication(&cfg.model, &sim, EV_STREAM, &mut sampler).map_err(|e| e.to_string())?;
    if sampler.samples.len() < needed {
        return Err(format!("block-maxima run produced {} of {needed} samples", sampler.samples.len()));
    }
    let xs: Vec<f64> = project(&sampler.samples[..needed], ev.axis);
    drop(sampler);
    let (lo, hi) = COEFFICIENT_QUANTILES;
    let coefficient = estimate_coefficient(&xs, tail.alpha, tail.p, lo, hi, 10).map_err(|e| e.to_string())?;
    let norming = ev_norming_raw(ev.block_size as f64, tail.alpha, tail.p, coefficient.k.value)
        .map_err(|e| e.to_string())?;
    let check = block_maxima_check(&xs, ev.block_size, norming).map_err(|e| e.to_string())?;
    let n = check.normalized.len() as f64;
    let rows = check
        .normalized
        .iter()
        .enumerate()
        .map(|(i, &x)| [x, (i as f64 + 1.0) / n, gumbel_cdf(x)])
        .collect();
    Ok((GumbelReport { axis: ev.axis, samples: needed, coefficient, check }, rows))
}

pub fn run_verify(cfg: &RunConfig) -> Result<RunOutput, PipelineError> {
    let analytic = analytic_report(cfg)?;
    let mut report = empty_report(cfg, "verify", analytic);
    let mut plots = PlotData::default();
    report.simulated = Some(match simulated_report(cfg, &report.analytic) {
        Ok((s, p)) => {
            plots = p;
            Outcome::Ok(s)
        }
        Err(e) => Outcome::Error(e.to_string()),
    });
    if cfg.ev.enabled {
        report.gumbel = Some(match gumbel_report(cfg, &report.analytic) {
            Ok((g, rows)) => {
                plots.gumbel = rows;
                Outcome::Ok(g)
            }
            Err(e) => Outcome::Error(e),
        });
    }
    report.verdicts = verdicts(&report);
    report.passed = report.verdicts.iter().all(|v| v.passed);
    Ok(RunOutput { report, plots })
}

/// Writes a binary trace of replication 0.
pub fn write_trace(cfg: &RunConfig, path: &Path) -> std::io::Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut w = TraceWriter::new(file, &cfg.sim, 0, cfg.output.trace_stride)?;
    run_replication(&cfg.model, &cfg.sim, 0, &mut w)
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    w.finish()?;
    Ok(())
}

fn verdict(name: &str, value: f64, passed: bool, tol: (&str, f64), detail: String) -> Verdict {
    Verdict {
        name: name.to_owned(),
        passed,
        value,
        tolerance_name: tol.0.to_owned(),
        tolerance: tol.1,
        detail,
    }
}

fn rel_err(est: f64, truth: f64) -> f64 {
    (est - truth).abs() / truth.abs()
}

macro_rules! tol {
    ($name:ident) => {
        (stringify!($name), tolerances::$name)
    };
}

/// Judges whatever sections the report contains.
pub fn verdicts(r: &VerificationReport) -> Vec<Verdict> {
    let mut out = Vec::new();
    let kr = r.analytic.kernel_residual;
    out.push(verdict(
        "kernel_residual",
        kr,
        kr < tolerances::KERNEL_RESIDUAL,
        tol!(KERNEL_RESIDUAL),
        format!("scaled |γ(x, Y0(x))| on {KERNEL_GRID} points"),
    ));

    match &r.simulated {
        None => {}
        Some(Outcome::Error(e)) => {
            out.push(verdict("simulation", f64::NAN, false, ("NONE", 0.0), e.clone()))
        }
        Some(Outcome::Ok(s)) => simulated_verdicts(r, s, &mut out),
    }

    match &r.gumbel {
        None => {}
        Some(Outcome::Error(e)) => {
            out.push(verdict("gumbel_ks", f64::NAN, false, tol!(GUMBEL_KS), e.clone()))
        }
        Some(Outcome::Ok(g)) => out.push(verdict(
            "gumbel_ks",
            g.check.ks,
            g.check.ks < tolerances::GUMBEL_KS,
            tol!(GUMBEL_KS),
            format!(
                "{} blocks of {}, k̂ = {:.4}, b_n = {:.4}",
                g.check.blocks, r.config.ev.block_size, g.coefficient.k.value, g.check.norming.b_n
            ),
        )),
    }
    out
}

fn simulated_verdicts(r: &VerificationReport, s: &SimulatedReport, out: &mut Vec<Verdict>) {
    let truth = r.analytic.local_time_rates;
    for (name, est, t) in [
        ("rates_e_t1", s.rates.e_t1.estimate, truth.e_t1),
        ("rates_e_l1", s.rates.e_l1.estimate, truth.e_l1),
        ("rates_e_l2", s.rates.e_l2.estimate, truth.e_l2),
    ] {
        let e = rel_err(est, t);
        out.push(verdict(
            name,
            e,
            e <= tolerances::RATES_REL,
            tol!(RATES_REL),
            format!("simulated {est:.5}, analytic {t:.5}"),
        ));
    }

    let worst = s.bar.iter().map(|b| b.sticky).fold(f64::NAN, f64::max);
    out.push(verdict(
        "bar_residual",
        worst,
        worst < tolerances::BAR_RESIDUAL,
        tol!(BAR_RESIDUAL),
        format!("max over {} θ points", s.bar.len()),
    ));

    for t in &s.tails {
        let name = format!("tail_{}", t.name);
        match &t.fit {
            Outcome::Ok(f) => {
                let e = rel_err(f.alpha_hat, t.predicted.alpha);
                out.push(verdict(
                    &name,
                    e,
                    e <= tolerances::ALPHA_REL,
                    tol!(ALPHA_REL),
                    format!(
                        "α̂ = {:.4} ± {:.4}, predicted α = {}, p = {}, {} samples",
                        f.alpha_hat, f.alpha_se, t.predicted.alpha, t.predicted.p, f.effective_samples
                    ),
                ));
            }
            Outcome::Error(e) => out.push(verdict(&name, f64::NAN, false, tol!(ALPHA_REL), e.clone())),
        }
    }

    // Asymptotic independence is only claimed for substochastic reflection.
    if r.analytic.joint.ok().is_none() {
        return;
    }
    match &s.independence {
        Outcome::Ok(c) => {
            let complete = c.truncated_at.is_none();
            let violations = c.points.windows(2).filter(|w| w[1].ratio > w[0].upper).count();
            out.push(verdict(
                "independence_decreasing",
                violations as f64,
                complete && violations as f64 <= tolerances::INDEPENDENCE_VIOLATIONS,
                tol!(INDEPENDENCE_VIOLATIONS),
                match c.truncated_at {
                    Some(t) => format!("curve truncated at t = {t}"),
                    None => format!("{} grid points", c.points.len()),
                },
            ));
            let last = c.points.last().map_or(f64::NAN, |p| p.ratio);
            out.push(verdict(
                "independence_last",
                last,
                complete && last < tolerances::INDEPENDENCE_LAST,
                tol!(INDEPENDENCE_LAST),
                format!("r(t) at t = {}", c.points.last().map_or(f64::NAN, |p| p.t)),
            ));
        }
        Outcome::Error(e) => out.push(verdict(
            "independence_decreasing",
            f64::NAN,
            false,
            tol!(INDEPENDENCE_VIOLATIONS),
            e.clone(),
        )),
    }
    match &s.joint_survival {
        Outcome::Ok(j) => {
            let factor = if j.ratio > 0.0 { j.ratio.max(1.0 / j.ratio) } else { f64::INFINITY };
            out.push(verdict(
                "joint_survival",
                factor,
                factor <= tolerances::JOINT_FACTOR,
                tol!(JOINT_FACTOR),
                format!(
                    "empirical {:.4e} ({} hits), predicted {:.4e} at ({}, {})",
                    j.empirical, j.joint_count, j.predicted, j.x, j.y
                ),
            ));
        }
        Outcome::Error(e) => {
            out.push(verdict("joint_survival", f64::NAN, false, tol!(JOINT_FACTOR), e.clone()))
        }
    }
}
