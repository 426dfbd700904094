//! Aggregated results of experiment runs, and deterministic merging of
//! partial runs.
//!
//! Reports carry two layers: raw accumulators (counts and sums over trials)
//! and derived statistics (rates, means, standard errors, bound rows). Only
//! the raw layer is merged; every derived field is recomputed from the merged
//! accumulators, so a merged report is internally consistent by construction.
//! Counts combine exactly; floating-point sums combine up to summation
//! grouping, which keeps merged means within `MERGE_MEAN_TOL` (relative) of a
//! single-pass run over the same trials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::ExperimentConfig;
use crate::tolerances::{BOUND_STDERR_SLACK, EXP_MOMENT_MONOTONE_TOL};

/// Which experiment produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Freeness,
    Bound,
    ZeroSet,
    Negligibility,
}

/// Per-prefix-length aggregate over trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSummary {
    /// Prefix length index: statistics describe the first `k + 1` vectors.
    pub k: usize,
    /// Trials aggregated here.
    pub trials: u64,
    /// Trials whose Gramian determinant was still positive at `k`.
    pub free_count: u64,
    /// `free_count / trials`.
    pub freeness_rate: f64,
    /// Sum of log-determinants over the free trials (raw accumulator).
    pub sum_log_det: f64,
    /// Sum of squared log-determinants over the free trials (raw accumulator).
    pub sum_log_det_sq: f64,
    /// Mean log-determinant over free trials; absent when none were free.
    pub mean_log_det: Option<f64>,
    /// Standard error of that mean; absent below two free trials.
    pub stderr_log_det: Option<f64>,
}

/// How many trials had `det > eps` at prefix length `k` (raw accumulator).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsCount {
    pub k: usize,
    pub eps: f64,
    pub gt_count: u64,
}

/// Accumulated `exp(-t * det)` at prefix length `k` (raw accumulator).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpMoment {
    pub k: usize,
    pub t: f64,
    pub sum: f64,
    pub sum_sq: f64,
}

/// One derived row of the exponential-bound table: the Monte Carlo estimate
/// of `P(det G_k > eps)` against `1 - E[exp(-t det G_k)] * exp(t * eps)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub k: usize,
    pub t: f64,
    pub eps: f64,
    /// Estimated `P(det G_k > eps)`.
    pub lhs_hat: f64,
    /// Estimated `1 - E[exp(-t det G_k)] * exp(t * eps)`; never exceeds 1.
    pub rhs_hat: f64,
    /// Standard error of `rhs_hat` inherited from the exponential moment.
    pub stderr_rhs: f64,
    /// `lhs_hat >= rhs_hat - BOUND_STDERR_SLACK * stderr_rhs`.
    pub satisfied: bool,
}

/// Membership counts of the negligibility probe at tuple length `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitRow {
    pub k: usize,
    /// Hits of the configured sampler on the affine test set.
    pub probe_hits: u64,
    pub probe_trials: u64,
    pub probe_rate: f64,
    /// Hits of the contrast draw (supported on the test set); should be all.
    pub contrast_hits: u64,
    pub contrast_trials: u64,
    pub contrast_rate: f64,
}

/// Complete result of one experiment run (possibly over a sub-range of
/// trials). Contains no wall-clock data, so identical inputs produce
/// byte-identical serialized reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    /// Echo of the resolved configuration; `trials` is the number aggregated
    /// in this report (a partial run echoes its own share).
    pub config: ExperimentConfig,
    /// First trial index covered by this report.
    pub trial_offset: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_k: Vec<KSummary>,
    /// Minimum freeness rate over the observed prefix lengths.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_freeness_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eps_counts: Vec<EpsCount>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exp_moments: Vec<ExpMoment>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bound_table: Vec<BoundRow>,
    /// Whether the empirical exponential moment decreases along increasing
    /// `t` at every prefix length (up to rounding of the mean).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exp_moment_monotone: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hit_counts: Vec<HitRow>,
}

impl ExperimentReport {
    /// Recomputes every derived field from the raw accumulators. Idempotent.
    pub(crate) fn finalize(&mut self) {
        let trials = self.config.trials;
        for s in &mut self.per_k {
            s.trials = trials;
            s.freeness_rate = ratio(s.free_count, trials);
            if s.free_count >= 1 {
                let n = s.free_count as f64;
                let mean = s.sum_log_det / n;
                s.mean_log_det = Some(mean);
                s.stderr_log_det = if s.free_count >= 2 {
                    let var = ((s.sum_log_det_sq - s.sum_log_det * s.sum_log_det / n)
                        / (n - 1.0))
                        .max(0.0);
                    Some((var / n).sqrt())
                } else {
                    None
                };
            } else {
                s.mean_log_det = None;
                s.stderr_log_det = None;
            }
        }
        self.min_freeness_rate = self
            .per_k
            .iter()
            .map(|s| s.freeness_rate)
            .min_by(|a, b| a.partial_cmp(b).expect("rates are finite"));
        self.rebuild_bound_table();
        for row in &mut self.hit_counts {
            row.probe_rate = ratio(row.probe_hits, row.probe_trials);
            row.contrast_rate = ratio(row.contrast_hits, row.contrast_trials);
        }
    }

    fn rebuild_bound_table(&mut self) {
        self.bound_table.clear();
        if self.eps_counts.is_empty() && self.exp_moments.is_empty() {
            self.exp_moment_monotone = None;
            return;
        }
        let n = self.config.trials;
        let nf = n as f64;
        for moment in &self.exp_moments {
            let mean_exp = moment.sum / nf;
            let var = if n >= 2 {
                ((moment.sum_sq - moment.sum * moment.sum / nf) / (nf - 1.0)).max(0.0)
            } else {
                0.0
            };
            let stderr_mean = (var / nf).sqrt();
            for count in self.eps_counts.iter().filter(|c| c.k == moment.k) {
                let scale = (moment.t * count.eps).exp();
                let lhs_hat = ratio(count.gt_count, n);
                let rhs_hat = 1.0 - mean_exp * scale;
                let stderr_rhs = stderr_mean * scale;
                let satisfied = lhs_hat >= rhs_hat - BOUND_STDERR_SLACK * stderr_rhs;
                self.bound_table.push(BoundRow {
                    k: moment.k,
                    t: moment.t,
                    eps: count.eps,
                    lhs_hat,
                    rhs_hat,
                    stderr_rhs,
                    satisfied,
                });
            }
        }
        // Deterministic row order: by k, then t, then eps, following the
        // (already deduplicated) grids.
        self.bound_table.sort_by(|a, b| {
            (a.k, a.t, a.eps)
                .partial_cmp(&(b.k, b.t, b.eps))
                .expect("grid values are finite")
        });
        self.exp_moment_monotone = Some(self.exp_moment_monotone_holds());
    }

    /// Term-wise, `exp(-t * det)` is non-increasing in `t`; the empirical
    /// means over a fixed trial set inherit that up to rounding.
    fn exp_moment_monotone_holds(&self) -> bool {
        let nf = self.config.trials as f64;
        let ks: Vec<usize> = {
            let mut ks: Vec<usize> = self.exp_moments.iter().map(|m| m.k).collect();
            ks.dedup();
            ks
        };
        for k in ks {
            let mut moments: Vec<(f64, f64)> = self
                .exp_moments
                .iter()
                .filter(|m| m.k == k)
                .map(|m| (m.t, m.sum / nf))
                .collect();
            moments.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("t grid is finite"));
            for pair in moments.windows(2) {
                if pair[1].1 > pair[0].1 + EXP_MOMENT_MONOTONE_TOL {
                    return false;
                }
            }
        }
        true
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Combines partial reports over disjoint trial ranges into one report, as if
/// the union had been run in a single pass.
///
/// Counts merge exactly; sums merge up to floating-point grouping (parts are
/// first sorted by trial offset, so the result does not depend on argument
/// order). Configurations must agree on everything except the trial count.
pub fn merge_reports(parts: &[ExperimentReport]) -> Result<ExperimentReport> {
    let first = parts.first().ok_or(Error::EmptyInput("merge_reports needs at least one part"))?;
    let mut order: Vec<&ExperimentReport> = parts.iter().collect();
    order.sort_by_key(|r| r.trial_offset);

    let mut merged = order[0].clone();
    let mut covered_end = order[0].trial_offset + order[0].config.trials;
    for (i, part) in order.iter().enumerate().skip(1) {
        if part.kind != first.kind {
            return Err(Error::merge(format!(
                "mixed experiment kinds: {:?} vs {:?}",
                first.kind, part.kind
            )));
        }
        check_compatible(&merged.config, &part.config)?;
        check_structure(&merged, part)?;
        if part.trial_offset < covered_end {
            return Err(Error::merge(format!(
                "trial ranges overlap: part {i} starts at {} before {}",
                part.trial_offset, covered_end
            )));
        }
        covered_end = part.trial_offset + part.config.trials;
        merged.config.trials += part.config.trials;
        for (a, b) in merged.per_k.iter_mut().zip(&part.per_k) {
            a.free_count += b.free_count;
            a.sum_log_det += b.sum_log_det;
            a.sum_log_det_sq += b.sum_log_det_sq;
        }
        for (a, b) in merged.eps_counts.iter_mut().zip(&part.eps_counts) {
            a.gt_count += b.gt_count;
        }
        for (a, b) in merged.exp_moments.iter_mut().zip(&part.exp_moments) {
            a.sum += b.sum;
            a.sum_sq += b.sum_sq;
        }
        for (a, b) in merged.hit_counts.iter_mut().zip(&part.hit_counts) {
            a.probe_hits += b.probe_hits;
            a.probe_trials += b.probe_trials;
            a.contrast_hits += b.contrast_hits;
            a.contrast_trials += b.contrast_trials;
        }
    }
    merged.finalize();
    Ok(merged)
}

/// Configs must agree on everything but the trial count.
fn check_compatible(a: &ExperimentConfig, b: &ExperimentConfig) -> Result<()> {
    let same = a.d == b.d
        && a.k_max == b.k_max
        && a.master_seed == b.master_seed
        && a.tol_dep == b.tol_dep
        && a.t_grid == b.t_grid
        && a.eps_grid == b.eps_grid
        && a.sampler == b.sampler;
    if same {
        Ok(())
    } else {
        Err(Error::merge("parts were produced by different configurations"))
    }
}

/// Row layouts must line up key-by-key before accumulators are added.
fn check_structure(a: &ExperimentReport, b: &ExperimentReport) -> Result<()> {
    let keys_match = a.per_k.len() == b.per_k.len()
        && a.per_k.iter().zip(&b.per_k).all(|(x, y)| x.k == y.k)
        && a.eps_counts.len() == b.eps_counts.len()
        && a.eps_counts
            .iter()
            .zip(&b.eps_counts)
            .all(|(x, y)| x.k == y.k && x.eps == y.eps)
        && a.exp_moments.len() == b.exp_moments.len()
        && a.exp_moments
            .iter()
            .zip(&b.exp_moments)
            .all(|(x, y)| x.k == y.k && x.t == y.t)
        && a.hit_counts.len() == b.hit_counts.len()
        && a.hit_counts.iter().zip(&b.hit_counts).all(|(x, y)| x.k == y.k);
    if keys_match {
        Ok(())
    } else {
        Err(Error::merge("parts disagree on report row layout"))
    }
}
