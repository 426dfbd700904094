//! `gramian` — Monte Carlo experiments on the linear independence of random
//! vector sequences.
//!
//! Every command resolves its configuration (defaults, then TOML file, then
//! flags), runs a deterministic seeded experiment, writes `report.json`, CSV
//! tables and `manifest.json` into the output directory, and exits with:
//!
//! * `0` — run finished and its statistical gates held,
//! * `1` — run finished but at least one gate failed,
//! * `2` — the configuration or command line was invalid,
//! * `3` — an output file could not be written.

mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use gramian::{
    oracle_comparison, run_bound_with, run_freeness_with, run_negligibility_probe_with,
    run_zeroset_probe_with, ExperimentReport, RunOptions, SamplerSpec, SupportDim,
};

use config::{Overrides, ProbeSetup, Resolved};

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or command line (exit code 2).
    Config(String),
    /// Output could not be produced (exit code 3).
    Io(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(msg: impl Into<String>) -> Self {
        CliError::Io(msg.into())
    }
}

impl From<gramian::Error> for CliError {
    fn from(e: gramian::Error) -> Self {
        // By the time a core error escapes a runner, it describes a bad
        // experiment description, never a bad output path.
        CliError::Config(e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "output error: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "gramian",
    version,
    about = "Monte Carlo experiments on the linear independence of random vector sequences"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Defaults used when neither the config file nor a flag sets a value;
/// shown under every subcommand's `--help`.
const CONFIG_DEFAULTS: &str = "Configuration defaults (config file keys in brackets):
  [d] 64, [k_max] 10, [trials] 10000, [master_seed] 42, [tol_dep] 1e-10,
  [t_grid] [1, 10, 100, 1e4, 1e6], [eps_grid] [1e-12, 1e-8, 1e-4],
  [sampler] base_gaussian with the dyadic spectrum (lambda_i = 2^-i),
  [negligibility] k = 2, shift = first basis vector, subspace = {} (a point).
Precedence: defaults, then the config file, then flags.";

#[derive(Subcommand)]
enum Command {
    /// Estimate how often sampled sequences stay linearly independent.
    #[command(after_help = CONFIG_DEFAULTS)]
    Freeness(RunArgs),
    /// Check the exponential lower bound on the determinant tail.
    #[command(after_help = CONFIG_DEFAULTS)]
    Bound(RunArgs),
    /// Estimate the mass of the vanishing set of the Gramian determinant.
    #[command(after_help = CONFIG_DEFAULTS)]
    Zeroset(RunArgs),
    /// Probe a strict affine subspace for hits from continuous draws.
    #[command(after_help = CONFIG_DEFAULTS)]
    Negligibility(RunArgs),
    /// Compare the incremental engine against the direct determinant.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "gramian-out")]
    out: PathBuf,
    /// Master seed override [default: 42].
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (reports are identical for any value).
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Trial count override [default: 10000].
    #[arg(long)]
    trials: Option<u64>,
    /// Truncation dimension override [default: 64].
    #[arg(long)]
    d: Option<usize>,
    /// Largest prefix length override [default: 10].
    #[arg(long)]
    kmax: Option<usize>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Output directory, created if missing.
    #[arg(long, default_value = "gramian-out")]
    out: PathBuf,
    /// Master seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Number of random sequences to compare.
    #[arg(long, default_value_t = 1000)]
    cases: u64,
    /// Truncation dimension.
    #[arg(long, default_value_t = 32)]
    d: usize,
    /// Vectors per sequence.
    #[arg(long, default_value_t = 16)]
    kmax: usize,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ CliError::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e @ CliError::Io(_)) => {
            eprintln!("{e}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Freeness(args) => experiment_command("freeness", args, run_freeness_with),
        Command::Bound(args) => experiment_command("bound", args, run_bound_with),
        Command::Zeroset(args) => experiment_command("zeroset", args, run_zeroset_probe_with),
        Command::Negligibility(args) => negligibility_command(args),
        Command::Selftest(args) => selftest_command(args),
    }
}

fn resolve(args: &RunArgs) -> Result<Resolved, CliError> {
    config::load(
        args.config.as_ref(),
        Overrides {
            d: args.d,
            k_max: args.kmax,
            trials: args.trials,
            master_seed: args.seed,
        },
    )
}

type Runner = fn(&gramian::ExperimentConfig, &RunOptions) -> gramian::Result<ExperimentReport>;

fn experiment_command(name: &str, args: RunArgs, runner: Runner) -> Result<bool, CliError> {
    let resolved = resolve(&args)?;
    let experiment = resolved.experiment;
    let options = RunOptions { workers: args.workers, range: None };
    let start = Instant::now();
    let report = runner(&experiment, &options)?;
    let duration = start.elapsed();

    let (passed, verdicts) = match name {
        "freeness" => freeness_gate(&report),
        "bound" => bound_gate(&report),
        "zeroset" => zeroset_gate(&report),
        _ => unreachable!("experiment_command only serves the three table runners"),
    };

    output::prepare_out_dir(&args.out)?;
    let resolved_json = serde_json::to_value(&experiment)
        .map_err(|e| CliError::io(format!("cannot encode resolved config: {e}")))?;
    let meta = output::csv_metadata(
        name,
        experiment.master_seed,
        &[
            ("d", experiment.d.to_string()),
            ("k_max", experiment.k_max.to_string()),
            ("trials", experiment.trials.to_string()),
        ],
        &resolved_json,
    );
    output::write_json(&args.out.join("report.json"), &report)?;
    output::write_per_k_csv(&args.out.join("per_k.csv"), &report, &meta)?;
    if name == "bound" {
        output::write_bound_csv(&args.out.join("bound.csv"), &report, &meta)?;
        output::write_moments_csv(&args.out.join("moments.csv"), &report, &meta)?;
    }
    output::write_json(
        &args.out.join("manifest.json"),
        &output::Manifest {
            command: name.to_string(),
            version: output::Manifest::version(),
            config_path: args.config.clone(),
            out_dir: args.out.clone(),
            master_seed: experiment.master_seed,
            workers: args.workers,
            resolved: resolved_json,
            duration_seconds: duration.as_secs_f64(),
            gates_passed: passed,
        },
    )?;

    for line in &verdicts {
        println!("{line}");
    }
    println!(
        "{name}: {} in {:.2?}, reports in {}",
        if passed { "gates passed" } else { "GATE FAILED" },
        duration,
        args.out.display()
    );
    Ok(passed)
}

fn negligibility_command(args: RunArgs) -> Result<bool, CliError> {
    let resolved = resolve(&args)?;
    let experiment = resolved.experiment;
    let ProbeSetup { k, shift, subspace } = resolved.probe;
    let options = RunOptions { workers: args.workers, range: None };
    let start = Instant::now();
    let report =
        run_negligibility_probe_with(&subspace, &shift, k, &experiment, &options)?;
    let duration = start.elapsed();

    let (passed, verdicts) = negligibility_gate(&report);

    output::prepare_out_dir(&args.out)?;
    let resolved_json = serde_json::json!({
        "experiment": experiment,
        "probe": { "k": k, "shift": shift, "subspace": subspace },
    });
    let meta = output::csv_metadata(
        "negligibility",
        experiment.master_seed,
        &[
            ("d", experiment.d.to_string()),
            ("k", k.to_string()),
            ("subspace_dim", subspace.len().to_string()),
            ("trials", experiment.trials.to_string()),
        ],
        &resolved_json,
    );
    output::write_json(&args.out.join("report.json"), &report)?;
    output::write_hits_csv(&args.out.join("hits.csv"), &report, &meta)?;
    output::write_json(
        &args.out.join("manifest.json"),
        &output::Manifest {
            command: "negligibility".to_string(),
            version: output::Manifest::version(),
            config_path: args.config.clone(),
            out_dir: args.out.clone(),
            master_seed: experiment.master_seed,
            workers: args.workers,
            resolved: resolved_json,
            duration_seconds: duration.as_secs_f64(),
            gates_passed: passed,
        },
    )?;

    for line in &verdicts {
        println!("{line}");
    }
    println!(
        "negligibility: {} in {:.2?}, reports in {}",
        if passed { "gates passed" } else { "GATE FAILED" },
        duration,
        args.out.display()
    );
    Ok(passed)
}

fn selftest_command(args: SelftestArgs) -> Result<bool, CliError> {
    let start = Instant::now();
    let comparison = oracle_comparison(args.d, args.kmax, args.cases, args.seed)?;
    let duration = start.elapsed();
    let passed = comparison.pass;

    output::prepare_out_dir(&args.out)?;
    let resolved_json = serde_json::json!({
        "d": args.d,
        "k_max": args.kmax,
        "cases": args.cases,
        "master_seed": args.seed,
    });
    let meta = output::csv_metadata(
        "selftest",
        args.seed,
        &[
            ("d", args.d.to_string()),
            ("k_max", args.kmax.to_string()),
            ("cases", args.cases.to_string()),
        ],
        &resolved_json,
    );
    output::write_json(&args.out.join("report.json"), &comparison)?;
    output::write_cases_csv(&args.out.join("cases.csv"), &comparison, &meta)?;
    output::write_json(
        &args.out.join("manifest.json"),
        &output::Manifest {
            command: "selftest".to_string(),
            version: output::Manifest::version(),
            config_path: None,
            out_dir: args.out.clone(),
            master_seed: args.seed,
            workers: 1,
            resolved: resolved_json,
            duration_seconds: duration.as_secs_f64(),
            gates_passed: passed,
        },
    )?;

    println!(
        "selftest: max log discrepancy {:.3e} over {} comparable prefixes (tolerance {:.0e})",
        comparison.max_abs_log_discrepancy, comparison.compared, comparison.tolerance
    );
    println!(
        "selftest: {} in {:.2?}, reports in {}",
        if passed { "gates passed" } else { "GATE FAILED" },
        duration,
        args.out.display()
    );
    Ok(passed)
}

/// Whether [`SamplerSpec::support_dimension`] is exact (not a conservative
/// bound) for this sampler, i.e. whether freeness rates admit a sharp 0/1
/// prediction.
fn support_is_exact(sampler: &SamplerSpec) -> bool {
    match sampler {
        SamplerSpec::BaseGaussian { .. } | SamplerSpec::DegenerateSubspace { .. } => true,
        SamplerSpec::AffineShift { inner, .. } => matches!(
            inner.as_ref(),
            SamplerSpec::BaseGaussian { .. } | SamplerSpec::DegenerateSubspace { .. }
        ),
        _ => false,
    }
}

/// Freeness rates must match the support prediction exactly: `k + 1` draws
/// from a law supported on an `s`-dimensional set are free precisely while
/// `k + 1 <= s`. For samplers whose support dimension is only a bound, only
/// the unconditional truncation limit (`k + 1 > d` forces dependence) is
/// enforced.
fn freeness_gate(report: &ExperimentReport) -> (bool, Vec<String>) {
    let d = report.config.d;
    let support = match report.config.sampler.support_dimension() {
        SupportDim::Finite(s) => s,
        SupportDim::Unbounded => d,
    };
    let exact = support_is_exact(&report.config.sampler);
    let mut failures = Vec::new();
    for s in &report.per_k {
        let vectors = s.k + 1;
        if exact {
            let expected = if vectors <= support { 1.0 } else { 0.0 };
            if s.freeness_rate != expected {
                failures.push(format!(
                    "k={}: rate {} but {} draws from a {}-dimensional support predict {}",
                    s.k, s.freeness_rate, vectors, support, expected
                ));
            }
        } else if vectors > d && s.freeness_rate != 0.0 {
            failures.push(format!(
                "k={}: rate {} but {} draws cannot be free in dimension {}",
                s.k, s.freeness_rate, vectors, d
            ));
        }
    }
    let mut verdicts = vec![format!(
        "freeness: support dimension {support}{}, min rate {:?}",
        if exact { "" } else { " (upper bound)" },
        report.min_freeness_rate
    )];
    verdicts.extend(failures.iter().cloned());
    (failures.is_empty(), verdicts)
}

/// Every grid row must satisfy the bound and the exponential moments must be
/// non-increasing along the `t` grid.
fn bound_gate(report: &ExperimentReport) -> (bool, Vec<String>) {
    let violations: Vec<&gramian::BoundRow> =
        report.bound_table.iter().filter(|r| !r.satisfied).collect();
    let monotone = report.exp_moment_monotone != Some(false);
    let mut verdicts = vec![format!(
        "bound: {}/{} grid rows satisfied, exp-moments monotone: {}",
        report.bound_table.len() - violations.len(),
        report.bound_table.len(),
        monotone
    )];
    for r in &violations {
        verdicts.push(format!(
            "bound violated at k={} t={} eps={}: lhs {} vs rhs {} (stderr {})",
            r.k, r.t, r.eps, r.lhs_hat, r.rhs_hat, r.stderr_rhs
        ));
    }
    (violations.is_empty() && monotone, verdicts)
}

/// The vanishing set must carry zero empirical mass while `k + 1 <= d` and
/// full mass beyond the truncation.
fn zeroset_gate(report: &ExperimentReport) -> (bool, Vec<String>) {
    let d = report.config.d;
    let mut failures = Vec::new();
    for s in &report.per_k {
        let zero_mass = 1.0 - s.freeness_rate;
        // k + 1 vectors fit in dimension d exactly while k < d.
        let expected = if s.k < d { 0.0 } else { 1.0 };
        if zero_mass != expected {
            failures.push(format!(
                "k={}: zero-set mass {} but truncation at d={} predicts {}",
                s.k, zero_mass, d, expected
            ));
        }
    }
    let mut verdicts = vec![format!(
        "zeroset: mass 0 expected through k={}, mass 1 beyond",
        d.min(report.config.k_max + 1) - 1
    )];
    verdicts.extend(failures.iter().cloned());
    (failures.is_empty(), verdicts)
}

/// Continuous draws must never land in the strict affine subspace; the
/// subspace-supported contrast draws must always land in it.
fn negligibility_gate(report: &ExperimentReport) -> (bool, Vec<String>) {
    let mut failures = Vec::new();
    for h in &report.hit_counts {
        if h.probe_hits != 0 {
            failures.push(format!(
                "k={}: {} of {} continuous draws hit the subspace",
                h.k, h.probe_hits, h.probe_trials
            ));
        }
        if h.contrast_hits != h.contrast_trials {
            failures.push(format!(
                "k={}: only {} of {} supported draws hit the subspace",
                h.k, h.contrast_hits, h.contrast_trials
            ));
        }
    }
    let mut verdicts: Vec<String> = report
        .hit_counts
        .iter()
        .map(|h| {
            format!(
                "negligibility k={}: probe {}/{}, contrast {}/{}",
                h.k, h.probe_hits, h.probe_trials, h.contrast_hits, h.contrast_trials
            )
        })
        .collect();
    verdicts.extend(failures.iter().cloned());
    (failures.is_empty(), verdicts)
}
