//! Report files: JSON mirrors of the in-memory structures, CSV tables for
//! spreadsheet work, and a manifest tying a run to its inputs.
//!
//! Every CSV starts with one `#` metadata line (command, seed, shape) so a
//! stray file can be traced back to the run that produced it. Floats are
//! written with Rust's shortest round-trip formatting.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use gramian::{ExperimentReport, OracleComparison};
use serde::Serialize;

use crate::CliError;

/// Run metadata written alongside the reports.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub master_seed: u64,
    pub workers: usize,
    pub resolved: serde_json::Value,
    pub duration_seconds: f64,
    pub gates_passed: bool,
}

impl Manifest {
    /// Current crate version, recorded in every manifest.
    pub fn version() -> String {
        env!("CARGO_PKG_VERSION").to_string()
    }
}

/// One `key=value` metadata line for the top of every CSV. Ends with the
/// full resolved configuration as compact JSON, so each table alone suffices
/// to rerun its experiment.
pub fn csv_metadata(
    command: &str,
    master_seed: u64,
    shape: &[(&str, String)],
    resolved: &serde_json::Value,
) -> String {
    let mut line = format!(
        "# command={command} master_seed={master_seed} version={}",
        env!("CARGO_PKG_VERSION")
    );
    for (key, value) in shape {
        let _ = write!(line, " {key}={value}");
    }
    let _ = write!(line, " config={resolved}");
    line
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::io(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_file(path, &text)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

fn push_row(out: &mut String, cells: &[String]) {
    out.push_str(&cells.join(","));
    out.push('\n');
}

fn opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// Per-prefix-length summary table (freeness, bound and zero-set runs).
pub fn write_per_k_csv(
    path: &Path,
    report: &ExperimentReport,
    meta: &str,
) -> Result<(), CliError> {
    let mut out = format!("{meta}\n");
    out.push_str(
        "k,freeness_rate,mean_log_det,stderr,trials,free_count,sum_log_det,sum_log_det_sq\n",
    );
    for s in &report.per_k {
        push_row(
            &mut out,
            &[
                s.k.to_string(),
                s.freeness_rate.to_string(),
                opt(s.mean_log_det),
                opt(s.stderr_log_det),
                s.trials.to_string(),
                s.free_count.to_string(),
                s.sum_log_det.to_string(),
                s.sum_log_det_sq.to_string(),
            ],
        );
    }
    write_file(path, &out)
}

/// Grid table of the exponential lower bound.
pub fn write_bound_csv(
    path: &Path,
    report: &ExperimentReport,
    meta: &str,
) -> Result<(), CliError> {
    let mut out = format!("{meta}\n");
    out.push_str("k,t,eps,lhs_hat,rhs_hat,stderr_rhs,satisfied\n");
    for r in &report.bound_table {
        push_row(
            &mut out,
            &[
                r.k.to_string(),
                r.t.to_string(),
                r.eps.to_string(),
                r.lhs_hat.to_string(),
                r.rhs_hat.to_string(),
                r.stderr_rhs.to_string(),
                r.satisfied.to_string(),
            ],
        );
    }
    write_file(path, &out)
}

/// Raw exponential-moment accumulators of a bound run.
pub fn write_moments_csv(
    path: &Path,
    report: &ExperimentReport,
    meta: &str,
) -> Result<(), CliError> {
    let trials = report.config.trials;
    let mut out = format!("{meta}\n");
    out.push_str("k,t,sum,sum_sq,mean\n");
    for m in &report.exp_moments {
        let mean = if trials > 0 { m.sum / trials as f64 } else { 0.0 };
        push_row(
            &mut out,
            &[
                m.k.to_string(),
                m.t.to_string(),
                m.sum.to_string(),
                m.sum_sq.to_string(),
                mean.to_string(),
            ],
        );
    }
    write_file(path, &out)
}

/// Hit counts of the affine-subspace probe.
pub fn write_hits_csv(
    path: &Path,
    report: &ExperimentReport,
    meta: &str,
) -> Result<(), CliError> {
    let mut out = format!("{meta}\n");
    out.push_str(
        "k,probe_hits,probe_trials,probe_rate,contrast_hits,contrast_trials,contrast_rate\n",
    );
    for h in &report.hit_counts {
        push_row(
            &mut out,
            &[
                h.k.to_string(),
                h.probe_hits.to_string(),
                h.probe_trials.to_string(),
                h.probe_rate.to_string(),
                h.contrast_hits.to_string(),
                h.contrast_trials.to_string(),
                h.contrast_rate.to_string(),
            ],
        );
    }
    write_file(path, &out)
}

/// Worst prefix per case from the incremental-vs-direct comparison.
pub fn write_cases_csv(
    path: &Path,
    comparison: &OracleComparison,
    meta: &str,
) -> Result<(), CliError> {
    let mut out = format!("{meta}\n");
    out.push_str("case_index,k,log_det_incremental,log_det_direct,abs_diff\n");
    for row in &comparison.rows {
        push_row(
            &mut out,
            &[
                row.case_index.to_string(),
                row.k.to_string(),
                row.log_det_incremental.to_string(),
                row.log_det_direct.to_string(),
                row.abs_diff.to_string(),
            ],
        );
    }
    write_file(path, &out)
}

/// Creates the output directory and returns a path inside it.
pub fn prepare_out_dir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", out.display())))
}
