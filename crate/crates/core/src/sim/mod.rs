//! Monte Carlo simulation of the reflected process under the sticky clock.

pub mod accum;
pub mod engine;
pub mod fit;
pub mod path;
pub mod reflect;
pub mod trace;

pub use accum::{
    bar_residuals, estimate_local_time_rates, occupation_summary, AccumSpec, Accumulator,
    BarResidual, Functional, Interval, Occupation, OccupationSummary, RatesEstimate, StickySampler,
};
pub use engine::{run_replication, run_replications, PathObserver, SimConfig, SimError, StepRecord};
pub use fit::{default_window, survival_and_fit, FreeFit, TailFit};
pub use path::{simulate_srbm, sticky_clock_invert, SrbmPath, StickyPoints};
pub use reflect::{reflect_step, NoComplementarySolution};
pub use trace::{read_trace, TraceHeader, TraceRecord, TraceWriter};
