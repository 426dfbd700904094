//! Numeric tolerances and thresholds used across the crate.
//!
//! Every magic number that decides a rank, gates a comparison, or widens a
//! statistical bound lives here, so that tests and production code cannot
//! drift apart.

/// Relative tolerance for algebraic identities on determinants (permutation
/// invariance, scaling law, Hadamard bound). Direct and incremental routes
/// both deliver far better than this on well-scaled input; the gate leaves
/// two orders of magnitude of headroom over observed error.
pub const TOL_REL: f64 = 1e-9;

/// Absolute tolerance for quantities that should vanish (determinants of
/// exactly dependent families, distances of in-span vectors).
pub const TOL_ABS: f64 = 1e-9;

/// Rank clamp for the direct determinant: a pivot below
/// `TOL_PIVOT_FACTOR * max_initial_diagonal` certifies numerical rank
/// deficiency and the determinant is reported as exactly zero.
pub const TOL_PIVOT_FACTOR: f64 = 1e-12;

/// Default relative dependence threshold for the incremental engine: a new
/// vector whose residual against the absorbed span is at most
/// `TOL_DEP_DEFAULT * norm(v)` is flagged dependent.
pub const TOL_DEP_DEFAULT: f64 = 1e-10;

/// Re-orthogonalization trigger: if one pass of modified Gram-Schmidt leaves
/// a residual shorter than `REORTH_FACTOR * norm(v)`, a second pass runs.
/// The `1/sqrt(2)` choice bounds the orthogonality loss of the accepted
/// vector by a small multiple of machine epsilon.
pub const REORTH_FACTOR: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Orthonormality budget for the engine's basis: off-diagonal inner products
/// and diagonal deviations from one stay below this after re-orthogonalized
/// Gram-Schmidt.
pub const TOL_ORTHO: f64 = 1e-12;

/// Positive semidefiniteness budget for Gram matrices: eigenvalues may dip
/// below zero by at most `TOL_PSD * trace` through round-off.
pub const TOL_PSD: f64 = 1e-12;

/// Agreement required between the incremental log-determinant and the
/// logarithm of the direct determinant on random well-conditioned sequences.
pub const ORACLE_LOG_TOL: f64 = 1e-8;

/// Below this value the direct determinant is treated as unreliable in log
/// domain and the oracle comparison is skipped for that case.
pub const ORACLE_DET_FLOOR: f64 = 1e-200;

/// Absolute membership tube around an affine subspace for the negligibility
/// probe: a point whose distance to the subspace is at most this counts as a
/// hit.
pub const MEMBERSHIP_TOL_ABS: f64 = 1e-9;

/// Mixture weights must sum to one within this absolute slack.
pub const MIXTURE_WEIGHT_TOL: f64 = 1e-12;

/// The density of a law against itself must be one within this relative
/// slack, coordinate products included.
pub const DENSITY_SELF_TOL: f64 = 1e-12;

/// Merged means may differ from a single-pass run by this relative amount
/// (different summation grouping); counts must agree exactly.
pub const MERGE_MEAN_TOL: f64 = 1e-12;

/// Number of standard errors of slack granted to the Monte Carlo estimate of
/// the exponential bound's right-hand side.
pub const BOUND_STDERR_SLACK: f64 = 3.0;

/// Slack for the monotone-decay check of the empirical exponential moment
/// along increasing `t`: term-wise the moment decreases exactly, so only
/// rounding of the mean is forgiven.
pub const EXP_MOMENT_MONOTONE_TOL: f64 = 1e-12;
