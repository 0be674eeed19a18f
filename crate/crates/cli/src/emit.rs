//! Writes the report and plot data to a directory.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::config::Format;
use crate::pipeline::RunOutput;
use crate::report::Verdict;

fn csv_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:e}")
    }
}

fn write_table<const N: usize>(path: &Path, header: [&str; N], rows: &[[f64; N]]) -> io::Result<()> {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|&v| csv_num(v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    fs::write(path, s)
}

fn summary_csv(verdicts: &[Verdict]) -> String {
    let mut s = String::from("name,passed,value,tolerance_name,tolerance\n");
    for v in verdicts {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            v.name,
            v.passed,
            csv_num(v.value),
            v.tolerance_name,
            csv_num(v.tolerance)
        );
    }
    s
}

/// Writes `report.json` and every available plot table; `Format::Csv` adds a
/// flat `summary.csv` of the verdicts. Returns the paths written.
pub fn emit(out: &RunOutput, format: Format, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String| {
        let p = dir.join(name);
        written.push(p.clone());
        p
    };
    fs::write(put("report.json".into()), out.report.to_json() + "\n")?;
    for (name, rows) in &out.plots.tails {
        write_table(
            &put(format!("tails_{name}.csv")),
            ["t", "empirical_survival", "fitted_survival", "lower_ci", "upper_ci"],
            rows,
        )?;
    }
    if !out.plots.occupation.is_empty() {
        write_table(&put("occupation.csv".into()), ["x", "y", "mass"], &out.plots.occupation)?;
    }
    if !out.plots.gumbel.is_empty() {
        write_table(
            &put("gumbel.csv".into()),
            ["normalized_max", "empirical_cdf", "gumbel_cdf"],
            &out.plots.gumbel,
        )?;
    }
    if format == Format::Csv {
        fs::write(put("summary.csv".into()), summary_csv(&out.report.verdicts))?;
    }
    Ok(written)
}
