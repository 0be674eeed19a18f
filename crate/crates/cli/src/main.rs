use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sticky_cli::{emit, exit, parse_config, run_analyze, run_simulate, run_verify, Format, RunOutput};

#[derive(Parser)]
#[command(name = "sticky", version, about = "Tail asymptotics of sticky Brownian motion in the quadrant")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Singularities, tail classification and norming constants (no simulation).
    Analyze(Common),
    /// Monte Carlo estimates: rates, adjoint residuals, tail fits.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also write a binary trace of replication 0 to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Analyze, simulate and judge every check; exits 3 if any fails.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Output format (overrides the config).
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn print_summary(out: &RunOutput) {
    for v in &out.report.verdicts {
        println!(
            "{} {:<28} value={:<12.5e} {}={}",
            if v.passed { "PASS" } else { "FAIL" },
            v.name,
            v.value,
            v.tolerance_name,
            v.tolerance
        );
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (common, trace, which) = match cli.command {
        Command::Analyze(c) => (c, None, "analyze"),
        Command::Simulate { common, trace } => (common, trace, "simulate"),
        Command::Verify(c) => (c, None, "verify"),
    };
    let mut cfg = match parse_config(&common.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(exit::CONFIG as u8);
        }
    };
    if let Some(seed) = common.seed {
        cfg.sim.seed = seed;
    }
    let format = common.format.unwrap_or(cfg.output.format);
    let dir = common.out.unwrap_or_else(|| cfg.output.dir.clone());

    let result = match which {
        "analyze" => run_analyze(&cfg),
        "simulate" => run_simulate(&cfg),
        _ => run_verify(&cfg),
    };
    let out = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit::INTERNAL as u8);
        }
    };
    print_summary(&out);
    if let Err(e) = emit(&out, format, &dir) {
        eprintln!("cannot write output to {}: {e}", dir.display());
        return ExitCode::from(exit::IO as u8);
    }
    if let Some(path) = trace {
        if let Err(e) = sticky_cli::pipeline::write_trace(&cfg, &path) {
            eprintln!("cannot write trace {}: {e}", path.display());
            return ExitCode::from(exit::IO as u8);
        }
    }
    println!("wrote {}", dir.join("report.json").display());
    if which == "verify" && !out.passed() {
        return ExitCode::from(exit::VERIFY_FAILED as u8);
    }
    ExitCode::from(exit::SUCCESS as u8)
}
