//! Monte Carlo experiments over random vector sequences.
//!
//! Every experiment follows the same shape: draw vectors through the
//! counter-based sampler, push them through the incremental engine, and
//! aggregate per-trial observables into an [`ExperimentReport`]. Because each
//! trial is a pure function of `(master_seed, trial_index)`, trials can be
//! computed in any order and on any number of worker threads; aggregation
//! always walks them in trial order, so the report is bitwise independent of
//! the worker count.

use serde::{Deserialize, Serialize};

use crate::engine::GramState;
use crate::error::{Error, Result};
use crate::measures::{SamplerSpec, SeedPath};
use crate::report::{
    EpsCount, ExpMoment, ExperimentKind, ExperimentReport, HitRow, KSummary,
};
use crate::tolerances::{MEMBERSHIP_TOL_ABS, ORACLE_DET_FLOOR, ORACLE_LOG_TOL, TOL_DEP_DEFAULT};
use crate::vector::{gram_det_direct, gram_logdet_direct, TruncatedVector};

/// Default `t` grid for the exponential bound.
pub const DEFAULT_T_GRID: [f64; 5] = [1.0, 10.0, 100.0, 10_000.0, 1_000_000.0];

/// Default `eps` grid for the exponential bound.
pub const DEFAULT_EPS_GRID: [f64; 3] = [1e-12, 1e-8, 1e-4];

/// Fully resolved description of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Truncation dimension.
    pub d: usize,
    /// Largest prefix length: each trial absorbs `k_max + 1` vectors.
    pub k_max: usize,
    /// Number of trials.
    pub trials: u64,
    /// Root of every seed path used by the run.
    pub master_seed: u64,
    /// Law of the drawn vectors.
    pub sampler: SamplerSpec,
    /// Relative dependence threshold handed to the engine.
    pub tol_dep: f64,
    /// Exponents for the bound experiment.
    pub t_grid: Vec<f64>,
    /// Determinant thresholds for the bound experiment.
    pub eps_grid: Vec<f64>,
}

impl ExperimentConfig {
    /// Baseline configuration: the dyadic-spectrum Gaussian in dimension `d`,
    /// ten prefix lengths, ten thousand trials, and the default grids.
    pub fn base_gaussian(d: usize) -> Self {
        ExperimentConfig {
            d,
            k_max: 10,
            trials: 10_000,
            master_seed: 42,
            sampler: SamplerSpec::default_base(d),
            tol_dep: TOL_DEP_DEFAULT,
            t_grid: DEFAULT_T_GRID.to_vec(),
            eps_grid: DEFAULT_EPS_GRID.to_vec(),
        }
    }

    /// Validates every field, including the sampler (against `d`) and the
    /// draw coverage of sequence samplers.
    pub fn validate(&self) -> Result<()> {
        if self.d < 1 {
            return Err(Error::config("dimension d must be at least 1"));
        }
        if self.k_max < 1 {
            return Err(Error::config("k_max must be at least 1"));
        }
        if self.trials < 1 {
            return Err(Error::config("trials must be at least 1"));
        }
        if !(self.tol_dep.is_finite() && self.tol_dep >= 0.0) {
            return Err(Error::config(format!(
                "tol_dep must be finite and non-negative, got {}",
                self.tol_dep
            )));
        }
        for (name, grid) in [("t_grid", &self.t_grid), ("eps_grid", &self.eps_grid)] {
            if grid.is_empty() {
                return Err(Error::config(format!("{name} must not be empty")));
            }
            if let Some(&bad) = grid.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return Err(Error::config(format!(
                    "{name} entries must be finite and positive, got {bad}"
                )));
            }
        }
        self.sampler.validate(self.d)?;
        if let SamplerSpec::IndependentSequence { per_index } = &self.sampler {
            if per_index.len() <= self.k_max {
                return Err(Error::config(format!(
                    "independent_sequence covers {} draws but k_max {} needs {}",
                    per_index.len(),
                    self.k_max,
                    self.k_max + 1
                )));
            }
        }
        Ok(())
    }
}

/// Observables of one trial at one prefix length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Distance of vector `k` to the span of vectors `0..k`.
    pub residual: f64,
    /// Log-determinant of the Gram matrix of vectors `0..=k`
    /// (`-inf` once dependence is flagged).
    pub log_det: f64,
    /// Whether dependence has been flagged at or before `k` (monotone in `k`).
    pub dependent: bool,
}

/// All observables of one trial: one [`StepRecord`] per prefix length
/// `0..=k_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub per_k: Vec<StepRecord>,
}

/// Contiguous block of trial indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRange {
    pub offset: u64,
    pub count: u64,
}

/// Execution options shared by all runners.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; the report is bitwise identical for any value.
    pub workers: usize,
    /// Sub-range of trials to run; defaults to `[0, config.trials)`.
    pub range: Option<TrialRange>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { workers: 1, range: None }
    }
}

impl RunOptions {
    fn resolve(&self, config: &ExperimentConfig) -> Result<TrialRange> {
        if self.workers < 1 {
            return Err(Error::config("workers must be at least 1"));
        }
        let range = self.range.unwrap_or(TrialRange { offset: 0, count: config.trials });
        if range.count < 1 {
            return Err(Error::config("trial range must contain at least one trial"));
        }
        Ok(range)
    }
}

/// Runs one trial: absorbs `k_max + 1` drawn vectors into a fresh engine and
/// records residual, log-determinant and dependence flag at every prefix.
pub fn simulate_trial(config: &ExperimentConfig, trial_index: u64) -> Result<TrialRecord> {
    let mut state = GramState::with_dep_tolerance(config.d, config.tol_dep)?;
    let mut per_k = Vec::with_capacity(config.k_max + 1);
    for k in 0..=config.k_max {
        let v = config.sampler.sample(SeedPath {
            master_seed: config.master_seed,
            trial_index,
            draw_index: k as u64,
        })?;
        let outcome = state.append(&v)?;
        per_k.push(StepRecord {
            residual: outcome.residual,
            log_det: outcome.log_det_after,
            dependent: state.dependent(),
        });
    }
    Ok(TrialRecord { trial_index, per_k })
}

/// Computes the records of a trial range, splitting it into contiguous chunks
/// across `workers` threads and reassembling them in trial order.
fn collect_records(
    config: &ExperimentConfig,
    range: TrialRange,
    workers: usize,
) -> Result<Vec<TrialRecord>> {
    let count = range.count;
    if workers <= 1 || count <= 1 {
        return (range.offset..range.offset + count)
            .map(|t| simulate_trial(config, t))
            .collect();
    }
    let chunks = chunk_ranges(range, workers.min(count as usize));
    let results: Vec<Result<Vec<TrialRecord>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = chunks
            .iter()
            .map(|chunk| {
                let chunk = *chunk;
                scope.spawn(move || {
                    (chunk.offset..chunk.offset + chunk.count)
                        .map(|t| simulate_trial(config, t))
                        .collect()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker thread must not panic")).collect()
    });
    let mut records = Vec::with_capacity(count as usize);
    for part in results {
        records.extend(part?);
    }
    Ok(records)
}

/// Splits a range into at most `parts` contiguous, order-preserving chunks.
fn chunk_ranges(range: TrialRange, parts: usize) -> Vec<TrialRange> {
    let parts = parts.max(1) as u64;
    let base = range.count / parts;
    let extra = range.count % parts;
    let mut chunks = Vec::new();
    let mut offset = range.offset;
    for i in 0..parts {
        let count = base + if i < extra { 1 } else { 0 };
        if count > 0 {
            chunks.push(TrialRange { offset, count });
            offset += count;
        }
    }
    chunks
}

/// Folds trial records (in trial order) into a report skeleton and finalizes
/// the derived statistics.
fn aggregate(
    kind: ExperimentKind,
    config: &ExperimentConfig,
    range: TrialRange,
    records: &[TrialRecord],
) -> ExperimentReport {
    let k_len = config.k_max + 1;
    let mut per_k: Vec<KSummary> = (0..k_len)
        .map(|k| KSummary {
            k,
            trials: range.count,
            free_count: 0,
            freeness_rate: 0.0,
            sum_log_det: 0.0,
            sum_log_det_sq: 0.0,
            mean_log_det: None,
            stderr_log_det: None,
        })
        .collect();
    let bound = kind == ExperimentKind::Bound;
    let mut eps_counts: Vec<EpsCount> = Vec::new();
    let mut exp_moments: Vec<ExpMoment> = Vec::new();
    if bound {
        for k in 0..k_len {
            for &eps in &config.eps_grid {
                eps_counts.push(EpsCount { k, eps, gt_count: 0 });
            }
            for &t in &config.t_grid {
                exp_moments.push(ExpMoment { k, t, sum: 0.0, sum_sq: 0.0 });
            }
        }
    }
    let n_eps = config.eps_grid.len();
    let n_t = config.t_grid.len();
    for record in records {
        for (k, step) in record.per_k.iter().enumerate() {
            let summary = &mut per_k[k];
            if !step.dependent {
                summary.free_count += 1;
                summary.sum_log_det += step.log_det;
                summary.sum_log_det_sq += step.log_det * step.log_det;
            }
            if bound {
                let det = step.log_det.exp();
                for (e, &eps) in config.eps_grid.iter().enumerate() {
                    if det > eps {
                        eps_counts[k * n_eps + e].gt_count += 1;
                    }
                }
                for (ti, &t) in config.t_grid.iter().enumerate() {
                    let value = (-t * det).exp();
                    let moment = &mut exp_moments[k * n_t + ti];
                    moment.sum += value;
                    moment.sum_sq += value * value;
                }
            }
        }
    }
    let mut config_echo = config.clone();
    config_echo.trials = range.count;
    let mut report = ExperimentReport {
        kind,
        config: config_echo,
        trial_offset: range.offset,
        per_k,
        min_freeness_rate: None,
        eps_counts,
        exp_moments,
        bound_table: Vec::new(),
        exp_moment_monotone: None,
        hit_counts: Vec::new(),
    };
    report.finalize();
    report
}

/// Estimates, for every prefix length, how often the drawn sequence is still
/// linearly independent.
pub fn run_freeness(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_freeness_with(config, &RunOptions::default())
}

/// [`run_freeness`] with explicit worker count and/or trial sub-range.
pub fn run_freeness_with(
    config: &ExperimentConfig,
    options: &RunOptions,
) -> Result<ExperimentReport> {
    config.validate()?;
    let range = options.resolve(config)?;
    let records = collect_records(config, range, options.workers)?;
    Ok(aggregate(ExperimentKind::Freeness, config, range, &records))
}

/// Checks the exponential lower bound `P(det G_k > eps) >= 1 -
/// E[exp(-t det G_k)] * exp(t * eps)` over the configured grids, with three
/// standard errors of slack on the estimated right-hand side.
pub fn run_bound(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_bound_with(config, &RunOptions::default())
}

/// [`run_bound`] with explicit worker count and/or trial sub-range.
pub fn run_bound_with(
    config: &ExperimentConfig,
    options: &RunOptions,
) -> Result<ExperimentReport> {
    config.validate()?;
    let range = options.resolve(config)?;
    let records = collect_records(config, range, options.workers)?;
    Ok(aggregate(ExperimentKind::Bound, config, range, &records))
}

/// Estimates the probability that the Gramian determinant vanishes at each
/// prefix length under the base product measure. Requires the configured
/// sampler to *be* the base measure (independent identical Gaussians).
pub fn run_zeroset_probe(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_zeroset_probe_with(config, &RunOptions::default())
}

/// [`run_zeroset_probe`] with explicit worker count and/or trial sub-range.
pub fn run_zeroset_probe_with(
    config: &ExperimentConfig,
    options: &RunOptions,
) -> Result<ExperimentReport> {
    config.validate()?;
    if !is_base_product(&config.sampler) {
        return Err(Error::config(
            "the zero-set probe requires the base product measure \
             (a Gaussian sampler, or an independent sequence of identical Gaussians)",
        ));
    }
    let range = options.resolve(config)?;
    let records = collect_records(config, range, options.workers)?;
    Ok(aggregate(ExperimentKind::ZeroSet, config, range, &records))
}

/// Whether the sampler is the base Gaussian applied independently at every
/// draw index.
fn is_base_product(sampler: &SamplerSpec) -> bool {
    match sampler {
        SamplerSpec::BaseGaussian { .. } => true,
        SamplerSpec::IndependentSequence { per_index } => match per_index.split_first() {
            Some((SamplerSpec::BaseGaussian { covariance }, rest)) => rest
                .iter()
                .all(|s| matches!(s, SamplerSpec::BaseGaussian { covariance: c } if c == covariance)),
            _ => false,
        },
        _ => false,
    }
}

/// Draws `k`-tuples from the configured sampler and counts how often the
/// final block lands in the strict affine subspace `shift + span(subspace)`
/// (within the absolute membership tube). A contrast draw supported on the
/// subspace runs alongside and must hit every time.
pub fn run_negligibility_probe(
    subspace: &[TruncatedVector],
    shift: &TruncatedVector,
    k: usize,
    config: &ExperimentConfig,
) -> Result<ExperimentReport> {
    run_negligibility_probe_with(subspace, shift, k, config, &RunOptions::default())
}

/// [`run_negligibility_probe`] with explicit worker count and/or sub-range.
pub fn run_negligibility_probe_with(
    subspace: &[TruncatedVector],
    shift: &TruncatedVector,
    k: usize,
    config: &ExperimentConfig,
    options: &RunOptions,
) -> Result<ExperimentReport> {
    config.validate()?;
    if k < 1 {
        return Err(Error::config("tuple length k must be at least 1"));
    }
    let d = config.d;
    if shift.dim() != d {
        return Err(Error::Dimension { expected: d, got: shift.dim() });
    }
    for b in subspace {
        if b.dim() != d {
            return Err(Error::Dimension { expected: d, got: b.dim() });
        }
    }
    if subspace.len() >= d {
        return Err(Error::config(format!(
            "subspace of dimension {} is not strict in dimension {d}",
            subspace.len()
        )));
    }
    if !subspace.is_empty() && gram_det_direct(subspace)? <= 0.0 {
        return Err(Error::config("subspace basis is numerically linearly dependent"));
    }
    let mut span = GramState::new(d)?;
    for b in subspace {
        span.append(b)?;
    }
    let range = options.resolve(config)?;

    let probe_one = |trial: u64| -> Result<(bool, bool)> {
        // Probe branch: draw the tuple, test the final block.
        let mut last = None;
        for j in 0..k {
            last = Some(config.sampler.sample(SeedPath {
                master_seed: config.master_seed,
                trial_index: trial,
                draw_index: j as u64,
            })?);
        }
        let last = last.expect("k >= 1 guarantees a final block");
        let probe_hit = in_affine_subspace(&span, shift, &last)?;

        // Contrast branch: a Gaussian combination of the subspace basis,
        // translated by the shift, necessarily lies in the test set.
        let mut rng = SeedPath {
            master_seed: config.master_seed,
            trial_index: trial,
            draw_index: (k - 1) as u64,
        }
        .rng();
        let mut coords = shift.coords().to_vec();
        for b in subspace {
            let c: f64 = rand::Rng::sample(&mut rng, rand_distr::StandardNormal);
            for (x, bi) in coords.iter_mut().zip(b.coords()) {
                *x += c * bi;
            }
        }
        let contrast = TruncatedVector::new(coords)?;
        let contrast_hit = in_affine_subspace(&span, shift, &contrast)?;
        Ok((probe_hit, contrast_hit))
    };

    // Trials are pure functions of their index; compute in chunks, count in
    // trial order.
    let chunks = chunk_ranges(range, options.workers.min(range.count as usize).max(1));
    let outcomes: Vec<Result<Vec<(bool, bool)>>> = if options.workers <= 1 {
        chunks
            .iter()
            .map(|chunk| (chunk.offset..chunk.offset + chunk.count).map(probe_one).collect())
            .collect()
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunks
                .iter()
                .map(|chunk| {
                    let chunk = *chunk;
                    let probe_one = &probe_one;
                    scope.spawn(move || {
                        (chunk.offset..chunk.offset + chunk.count).map(probe_one).collect()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker thread must not panic"))
                .collect()
        })
    };
    let mut probe_hits = 0u64;
    let mut contrast_hits = 0u64;
    for part in outcomes {
        for (probe, contrast) in part? {
            probe_hits += probe as u64;
            contrast_hits += contrast as u64;
        }
    }

    let mut config_echo = config.clone();
    config_echo.trials = range.count;
    let mut report = ExperimentReport {
        kind: ExperimentKind::Negligibility,
        config: config_echo,
        trial_offset: range.offset,
        per_k: Vec::new(),
        min_freeness_rate: None,
        eps_counts: Vec::new(),
        exp_moments: Vec::new(),
        bound_table: Vec::new(),
        exp_moment_monotone: None,
        hit_counts: vec![HitRow {
            k,
            probe_hits,
            probe_trials: range.count,
            probe_rate: 0.0,
            contrast_hits,
            contrast_trials: range.count,
            contrast_rate: 0.0,
        }],
    };
    report.finalize();
    Ok(report)
}

/// Distance test against `shift + span(subspace)`, with the span held by a
/// pre-built engine state.
fn in_affine_subspace(
    span: &GramState,
    shift: &TruncatedVector,
    v: &TruncatedVector,
) -> Result<bool> {
    let centered: Vec<f64> =
        v.coords().iter().zip(shift.coords()).map(|(x, s)| x - s).collect();
    let dist = span.distance_to_span(&TruncatedVector::new(centered)?)?;
    Ok(dist <= MEMBERSHIP_TOL_ABS)
}

// ---------------------------------------------------------------------------
// Incremental-vs-direct self test
// ---------------------------------------------------------------------------

/// Worst prefix of one comparison case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleCase {
    pub case_index: u64,
    /// Prefix length at which the discrepancy peaked.
    pub k: usize,
    pub log_det_incremental: f64,
    pub log_det_direct: f64,
    /// Absolute log-domain discrepancy; zero when no prefix of the case was
    /// comparable (direct determinant below the floor).
    pub abs_diff: f64,
}

/// Result of comparing the incremental engine against the direct determinant
/// on random sequences with independent uniform coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub d: usize,
    pub k_max: usize,
    pub cases: u64,
    pub master_seed: u64,
    /// Largest log-domain discrepancy over all comparable prefixes.
    pub max_abs_log_discrepancy: f64,
    /// Number of prefixes whose direct determinant exceeded the floor.
    pub compared: u64,
    /// Agreement required of every comparable prefix.
    pub tolerance: f64,
    pub pass: bool,
    /// One row per case: its worst prefix.
    pub rows: Vec<OracleCase>,
}

/// Compares the two determinant routes on `cases` random sequences of
/// `k_max` vectors with coordinates uniform on `[-1, 1]`.
///
/// Prefixes whose direct determinant is at or below `ORACLE_DET_FLOOR` are
/// skipped: below that the log has no reliable meaning in either route.
pub fn oracle_comparison(
    d: usize,
    k_max: usize,
    cases: u64,
    master_seed: u64,
) -> Result<OracleComparison> {
    if d < 1 || k_max < 1 || cases < 1 {
        return Err(Error::config("oracle comparison needs d, k_max and cases of at least 1"));
    }
    let floor_log = ORACLE_DET_FLOOR.ln();
    let mut rows = Vec::with_capacity(cases as usize);
    let mut max_abs = 0.0_f64;
    let mut compared = 0u64;
    for case_index in 0..cases {
        let mut state = GramState::new(d)?;
        let mut prefix: Vec<TruncatedVector> = Vec::with_capacity(k_max);
        let mut worst = OracleCase {
            case_index,
            k: 0,
            log_det_incremental: 0.0,
            log_det_direct: 0.0,
            abs_diff: 0.0,
        };
        let mut worst_diff = -1.0_f64;
        for k in 0..k_max {
            let path = SeedPath { master_seed, trial_index: case_index, draw_index: k as u64 };
            let mut rng = path.rng();
            let coords: Vec<f64> =
                (0..d).map(|_| rand::Rng::random_range(&mut rng, -1.0..=1.0)).collect();
            let v = TruncatedVector::new(coords)?;
            state.append(&v)?;
            prefix.push(v);
            let direct = gram_logdet_direct(&prefix)?;
            if direct <= floor_log {
                continue;
            }
            compared += 1;
            let diff = (state.log_det() - direct).abs();
            if diff > worst_diff {
                worst_diff = diff;
                worst = OracleCase {
                    case_index,
                    k,
                    log_det_incremental: state.log_det(),
                    log_det_direct: direct,
                    abs_diff: diff,
                };
            }
            max_abs = max_abs.max(diff);
        }
        rows.push(worst);
    }
    Ok(OracleComparison {
        d,
        k_max,
        cases,
        master_seed,
        max_abs_log_discrepancy: max_abs,
        compared,
        tolerance: ORACLE_LOG_TOL,
        pass: max_abs <= ORACLE_LOG_TOL,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::CovarianceSpec;
    use crate::report::merge_reports;

    fn small_config() -> ExperimentConfig {
        let mut config = ExperimentConfig::base_gaussian(8);
        config.k_max = 4;
        config.trials = 200;
        config.master_seed = 7;
        config
    }

    fn degenerate_config(m: usize, d: usize) -> ExperimentConfig {
        let mut config = ExperimentConfig::base_gaussian(d);
        config.sampler = SamplerSpec::DegenerateSubspace {
            basis: (0..m).map(|i| TruncatedVector::standard_basis(d, i)).collect(),
        };
        config.k_max = 5;
        config.trials = 200;
        config.master_seed = 11;
        config
    }

    #[test]
    fn config_validation_rejects_out_of_range_fields() {
        let mut config = small_config();
        config.trials = 0;
        assert!(matches!(config.validate().unwrap_err(), Error::Config(_)));

        let mut config = small_config();
        config.eps_grid = vec![];
        assert!(config.validate().is_err());

        let mut config = small_config();
        config.t_grid = vec![1.0, -2.0];
        assert!(config.validate().is_err());

        let mut config = small_config();
        config.sampler = SamplerSpec::IndependentSequence {
            per_index: vec![SamplerSpec::default_base(8); 3],
        };
        assert!(config.validate().is_err(), "3 entries cannot cover k_max 4");
    }

    #[test]
    fn trial_records_have_one_step_per_prefix_and_monotone_flags() {
        let config = degenerate_config(3, 8);
        for trial in 0..20 {
            let record = simulate_trial(&config, trial).unwrap();
            assert_eq!(record.per_k.len(), config.k_max + 1);
            let mut seen_dependent = false;
            for step in &record.per_k {
                assert!(
                    !(seen_dependent && !step.dependent),
                    "dependence flag must be monotone"
                );
                seen_dependent = step.dependent;
            }
        }
    }

    #[test]
    fn freeness_rates_never_increase_with_k() {
        let report = run_freeness(&degenerate_config(3, 8)).unwrap();
        let rates: Vec<f64> = report.per_k.iter().map(|s| s.freeness_rate).collect();
        for pair in rates.windows(2) {
            assert!(pair[1] <= pair[0], "rates {rates:?} must be non-increasing");
        }
    }

    #[test]
    fn degenerate_sampler_forces_dependence_exactly_at_its_support_dimension() {
        let report = run_freeness(&degenerate_config(3, 8)).unwrap();
        for summary in &report.per_k {
            let expected = if summary.k < 3 { 1.0 } else { 0.0 };
            assert_eq!(
                summary.freeness_rate, expected,
                "k = {}: rate {}",
                summary.k, summary.freeness_rate
            );
        }
        assert_eq!(report.min_freeness_rate, Some(0.0));
    }

    #[test]
    fn continuous_sampler_stays_free_at_desk_scale() {
        let report = run_freeness(&small_config()).unwrap();
        assert_eq!(report.min_freeness_rate, Some(1.0));
        for summary in &report.per_k {
            assert_eq!(summary.free_count, summary.trials);
            assert!(summary.mean_log_det.is_some());
            assert!(summary.stderr_log_det.is_some());
        }
    }

    #[test]
    fn freeness_report_is_bitwise_identical_across_worker_counts() {
        let config = small_config();
        let serial = run_freeness(&config).unwrap();
        for workers in [2, 3, 4, 7] {
            let parallel =
                run_freeness_with(&config, &RunOptions { workers, range: None }).unwrap();
            assert_eq!(parallel, serial, "workers = {workers}");
        }
    }

    #[test]
    fn mean_log_det_matches_a_direct_average() {
        let config = small_config();
        let report = run_freeness(&config).unwrap();
        let records: Vec<TrialRecord> =
            (0..config.trials).map(|t| simulate_trial(&config, t).unwrap()).collect();
        for summary in &report.per_k {
            let values: Vec<f64> =
                records.iter().map(|r| r.per_k[summary.k].log_det).collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let got = summary.mean_log_det.unwrap();
            assert!((got - mean).abs() <= 1e-12 * mean.abs().max(1.0));
        }
    }

    #[test]
    fn bound_rows_cover_the_grids_and_hold_for_gaussian_input() {
        let mut config = small_config();
        config.trials = 400;
        let report = run_bound(&config).unwrap();
        assert_eq!(
            report.bound_table.len(),
            (config.k_max + 1) * config.t_grid.len() * config.eps_grid.len()
        );
        assert_eq!(report.exp_moment_monotone, Some(true));
        for row in &report.bound_table {
            assert!(row.rhs_hat <= 1.0, "rhs {} must not exceed 1", row.rhs_hat);
            assert!(
                row.satisfied,
                "row k={} t={} eps={} lhs={} rhs={} stderr={}",
                row.k, row.t, row.eps, row.lhs_hat, row.rhs_hat, row.stderr_rhs
            );
        }
    }

    #[test]
    fn bound_rows_stay_satisfied_on_a_degenerate_sampler() {
        // Zero determinants: lhs is 0 but the right-hand side collapses to
        // 1 - exp(t * eps) <= 0, so every row still holds.
        let report = run_bound(&degenerate_config(2, 6)).unwrap();
        for row in &report.bound_table {
            assert!(row.rhs_hat <= 1.0);
            assert!(row.satisfied);
        }
    }

    #[test]
    fn zeroset_probe_requires_the_base_measure() {
        let err = run_zeroset_probe(&degenerate_config(3, 8)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));

        let mut config = small_config();
        config.sampler = SamplerSpec::IndependentSequence {
            per_index: vec![SamplerSpec::default_base(8); config.k_max + 1],
        };
        run_zeroset_probe(&config).unwrap();

        let mut mixed = small_config();
        let mut other = CovarianceSpec::dyadic(8);
        other.lambdas[0] = 0.5;
        mixed.sampler = SamplerSpec::IndependentSequence {
            per_index: {
                let mut v = vec![SamplerSpec::default_base(8); mixed.k_max];
                v.push(SamplerSpec::BaseGaussian { covariance: other });
                v
            },
        };
        assert!(run_zeroset_probe(&mixed).is_err(), "non-identical marginals are not the base");
    }

    #[test]
    fn zeroset_probe_sees_zero_measure_below_d_and_one_at_d() {
        let mut config = ExperimentConfig::base_gaussian(6);
        config.k_max = 6;
        config.trials = 300;
        config.master_seed = 3;
        let report = run_zeroset_probe(&config).unwrap();
        for summary in &report.per_k {
            let dependent_rate = 1.0 - summary.freeness_rate;
            if summary.k < 6 {
                assert_eq!(dependent_rate, 0.0, "k = {}", summary.k);
            } else {
                assert_eq!(dependent_rate, 1.0, "k = {} is past the truncation", summary.k);
            }
        }
    }

    #[test]
    fn negligibility_probe_misses_strict_subspaces_and_contrast_hits_them() {
        let d = 6;
        let mut config = ExperimentConfig::base_gaussian(d);
        config.trials = 500;
        config.master_seed = 19;
        let subspace = vec![
            TruncatedVector::standard_basis(d, 0),
            TruncatedVector::standard_basis(d, 2),
        ];
        let shift = TruncatedVector::standard_basis(d, 1);
        for k in 1..=3 {
            let report = run_negligibility_probe(&subspace, &shift, k, &config).unwrap();
            let row = &report.hit_counts[0];
            assert_eq!(row.k, k);
            assert_eq!(row.probe_hits, 0, "continuous draws almost never hit a strict subspace");
            assert_eq!(row.contrast_hits, row.contrast_trials, "supported draws always hit");
            assert_eq!(row.probe_rate, 0.0);
            assert_eq!(row.contrast_rate, 1.0);
        }
    }

    #[test]
    fn negligibility_probe_accepts_the_zero_subspace_and_validates_input() {
        let d = 4;
        let mut config = ExperimentConfig::base_gaussian(d);
        config.trials = 200;
        let zero = TruncatedVector::zero(d);
        let report = run_negligibility_probe(&[], &zero, 2, &config).unwrap();
        assert_eq!(report.hit_counts[0].probe_hits, 0);
        assert_eq!(report.hit_counts[0].contrast_hits, 200);

        // Dependent basis is rejected.
        let dependent = vec![
            TruncatedVector::standard_basis(d, 0),
            TruncatedVector::standard_basis(d, 0),
        ];
        assert!(run_negligibility_probe(&dependent, &zero, 2, &config).is_err());

        // A subspace as large as the ambient space is not strict.
        let full: Vec<TruncatedVector> =
            (0..d).map(|i| TruncatedVector::standard_basis(d, i)).collect();
        assert!(run_negligibility_probe(&full, &zero, 2, &config).is_err());
    }

    #[test]
    fn partial_runs_merge_into_the_serial_report() {
        let config = small_config();
        let serial = run_freeness(&config).unwrap();
        let quarters: Vec<ExperimentReport> = (0..4)
            .map(|i| {
                run_freeness_with(
                    &config,
                    &RunOptions {
                        workers: 1,
                        range: Some(TrialRange { offset: i * 50, count: 50 }),
                    },
                )
                .unwrap()
            })
            .collect();
        let merged = merge_reports(&quarters).unwrap();
        assert_eq!(merged.config.trials, serial.config.trials);
        for (m, s) in merged.per_k.iter().zip(&serial.per_k) {
            assert_eq!(m.free_count, s.free_count, "counts merge exactly");
            let (a, b) = (m.mean_log_det.unwrap(), s.mean_log_det.unwrap());
            assert!(
                (a - b).abs() <= 1e-12 * b.abs().max(1.0),
                "means agree to merge tolerance"
            );
        }
    }

    #[test]
    fn merge_is_invariant_under_part_order_and_rejects_bad_parts() {
        let config = small_config();
        let parts: Vec<ExperimentReport> = (0..4)
            .map(|i| {
                run_freeness_with(
                    &config,
                    &RunOptions {
                        workers: 1,
                        range: Some(TrialRange { offset: i * 50, count: 50 }),
                    },
                )
                .unwrap()
            })
            .collect();
        let forward = merge_reports(&parts).unwrap();
        let reversed: Vec<ExperimentReport> = parts.iter().rev().cloned().collect();
        assert_eq!(merge_reports(&reversed).unwrap(), forward, "order must not matter");

        let single = merge_reports(&parts[..1]).unwrap();
        assert_eq!(single, parts[0], "merging one part is the identity");

        let overlapping = vec![parts[0].clone(), parts[0].clone()];
        assert!(matches!(merge_reports(&overlapping).unwrap_err(), Error::Merge(_)));

        let mut other = parts[1].clone();
        other.config.master_seed += 1;
        assert!(merge_reports(&[parts[0].clone(), other]).is_err());
        assert!(matches!(merge_reports(&[]).unwrap_err(), Error::EmptyInput(_)));
    }

    #[test]
    fn freeness_is_insensitive_to_the_dependence_tolerance_for_continuous_laws() {
        let mut rates = Vec::new();
        for tol_dep in [1e-8, 1e-10, 1e-12] {
            let mut config = small_config();
            config.tol_dep = tol_dep;
            let report = run_freeness(&config).unwrap();
            rates.push(report.per_k.iter().map(|s| s.freeness_rate).collect::<Vec<f64>>());
        }
        assert_eq!(rates[0], rates[1]);
        assert_eq!(rates[1], rates[2]);
    }

    #[test]
    fn oracle_comparison_agrees_on_random_sequences() {
        let result = oracle_comparison(16, 8, 50, 2024).unwrap();
        assert!(result.pass, "max discrepancy {}", result.max_abs_log_discrepancy);
        assert!(result.compared > 0);
        assert_eq!(result.rows.len(), 50);
        let rerun = oracle_comparison(16, 8, 50, 2024).unwrap();
        assert_eq!(rerun, result, "comparison is deterministic");
    }
}
