//! Gramian determinants of random vector sequences, and the Monte Carlo
//! experiments built on top of them.
//!
//! The crate has four layers, each usable on its own:
//!
//! * [`vector`] — finite truncations of Hilbert-space vectors, compensated
//!   inner products, Gram matrices, and a direct (pivoted-factorization)
//!   Gramian determinant that serves as the reference route.
//! * [`engine`] — an incremental engine that absorbs one vector at a time,
//!   maintains an orthonormal basis of the absorbed span, and updates the
//!   log-determinant of the Gram matrix from the distance of each new vector
//!   to the span of its predecessors.
//! * [`measures`] — truncated Gaussian product measures with diagonal
//!   covariance, degenerate (subspace-supported) laws, affine shifts and
//!   mixtures of these, all sampled by a counter-based generator so that every
//!   draw is a pure function of `(master_seed, trial_index, draw_index)`.
//! * [`experiments`] / [`report`] — trial runners that estimate how often a
//!   randomly drawn sequence stays linearly independent, check an exponential
//!   lower bound on `P(det G_k > eps)`, probe zero sets and strict affine
//!   subspaces, and merge partial reports deterministically.
//!
//! Numeric tolerances shared across the crate are centralized in
//! [`tolerances`].

pub mod engine;
pub mod error;
pub mod experiments;
pub mod measures;
pub mod report;
pub mod tolerances;
pub mod vector;

pub use engine::{AppendOutcome, GramState};
pub use error::{Error, Result};
pub use experiments::{
    oracle_comparison, run_bound, run_bound_with, run_freeness, run_freeness_with,
    run_negligibility_probe, run_negligibility_probe_with, run_zeroset_probe,
    run_zeroset_probe_with, ExperimentConfig, OracleCase, OracleComparison, RunOptions,
    StepRecord, TrialRange, TrialRecord,
};
pub use measures::{CovarianceSpec, SamplerSpec, SeedPath, SupportDim};
pub use report::{
    merge_reports, BoundRow, EpsCount, ExpMoment, ExperimentKind, ExperimentReport, HitRow,
    KSummary,
};
pub use vector::{gram_det_direct, gram_logdet_direct, gram_matrix, inner, GramMatrix, TruncatedVector};
