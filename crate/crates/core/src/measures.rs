//! Truncated Gaussian product measures and the laws derived from them.
//!
//! The base measure is a centered (or shifted) Gaussian on the first `d`
//! coordinates with diagonal covariance `diag(lambda_0, ..., lambda_{d-1})`.
//! On top of it the module offers laws supported on proper subspaces, affine
//! shifts, finite mixtures, and per-index independent sequences.
//!
//! Sampling is *counter-based*: every draw is a pure function of a
//! [`SeedPath`] `(master_seed, trial_index, draw_index)`. No generator state
//! survives between draws, so results are bitwise reproducible across runs,
//! thread counts, and evaluation orders.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::engine::GramState;
use crate::error::{Error, Result};
use crate::tolerances::{MIXTURE_WEIGHT_TOL, TOL_ABS};
use crate::vector::{gram_det_direct, TruncatedVector};

/// Diagonal covariance together with a mean vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    /// Per-coordinate variances; all strictly positive.
    pub lambdas: Vec<f64>,
    /// Mean vector of the same dimension.
    pub mean: TruncatedVector,
}

impl CovarianceSpec {
    /// Centered spectrum `lambda_i = 2^{-i}`, the crate-wide default: summable
    /// (trace below 2 at any truncation) with fast but non-degenerate decay.
    pub fn dyadic(d: usize) -> Self {
        CovarianceSpec {
            lambdas: (0..d).map(|i| (2.0_f64).powi(-(i as i32))).collect(),
            mean: TruncatedVector::zero(d),
        }
    }

    /// Truncation dimension.
    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    /// Sum of the variances (finite for every truncation; the analogue of a
    /// trace-class condition).
    pub fn trace(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    /// Checks positivity and dimensional consistency.
    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() {
            return Err(Error::config("covariance needs at least one coordinate"));
        }
        if let Some((i, &l)) = self
            .lambdas
            .iter()
            .enumerate()
            .find(|(_, &l)| !(l.is_finite() && l > 0.0))
        {
            return Err(Error::config(format!(
                "covariance lambda[{i}] must be finite and positive, got {l}"
            )));
        }
        if self.mean.dim() != self.lambdas.len() {
            return Err(Error::Dimension { expected: self.lambdas.len(), got: self.mean.dim() });
        }
        Ok(())
    }
}

/// Identifies one draw: which run, which trial, which vector within the trial.
///
/// The sampler derives an independent ChaCha stream from the three fields, so
/// a draw can be reproduced in isolation without replaying anything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedPath {
    pub master_seed: u64,
    pub trial_index: u64,
    pub draw_index: u64,
}

impl SeedPath {
    /// Counter-based generator for this path. The three indices are laid out
    /// in the 32-byte ChaCha key (with a fixed domain tag in the last word),
    /// so distinct paths yield statistically independent streams.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        seed[0..8].copy_from_slice(&self.master_seed.to_le_bytes());
        seed[8..16].copy_from_slice(&self.trial_index.to_le_bytes());
        seed[16..24].copy_from_slice(&self.draw_index.to_le_bytes());
        seed[24..32].copy_from_slice(b"gramdraw");
        ChaCha8Rng::from_seed(seed)
    }
}

/// How many linearly independent directions one draw can occupy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SupportDim {
    /// The support spans exactly (or at most, for nested shifted laws) this
    /// many directions.
    Finite(usize),
    /// Reserved for laws without a finite-dimensional support bound; no
    /// currently constructible sampler returns it.
    Unbounded,
}

/// A law for one vector draw (or, for [`SamplerSpec::IndependentSequence`],
/// for a whole sequence of draws).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplerSpec {
    /// The base Gaussian itself.
    BaseGaussian { covariance: CovarianceSpec },
    /// A random Gaussian combination of a fixed independent family: the law
    /// is supported on the proper subspace the family spans.
    DegenerateSubspace { basis: Vec<TruncatedVector> },
    /// `point + X` where `X` follows the inner law.
    AffineShift { point: TruncatedVector, inner: Box<SamplerSpec> },
    /// Finite mixture; weights sum to one.
    Mixture { weights: Vec<f64>, parts: Vec<SamplerSpec> },
    /// One law per draw index; the sequence of draws is independent but not
    /// identically distributed. Only meaningful at the top level.
    IndependentSequence { per_index: Vec<SamplerSpec> },
}

impl SamplerSpec {
    /// The base Gaussian with the default dyadic spectrum.
    pub fn default_base(d: usize) -> Self {
        SamplerSpec::BaseGaussian { covariance: CovarianceSpec::dyadic(d) }
    }

    /// Full validation against ambient dimension `d`: dimensions line up,
    /// variances are positive, mixture weights sum to one, degenerate bases
    /// are genuinely independent (certified by the direct determinant), and
    /// sequence laws appear only at the top level.
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            SamplerSpec::IndependentSequence { per_index } => {
                if per_index.is_empty() {
                    return Err(Error::config("independent_sequence needs at least one entry"));
                }
                for spec in per_index {
                    spec.validate_vector_law(d)?;
                }
                Ok(())
            }
            _ => self.validate_vector_law(d),
        }
    }

    fn validate_vector_law(&self, d: usize) -> Result<()> {
        match self {
            SamplerSpec::BaseGaussian { covariance } => {
                covariance.validate()?;
                if covariance.dim() != d {
                    return Err(Error::Dimension { expected: d, got: covariance.dim() });
                }
                Ok(())
            }
            SamplerSpec::DegenerateSubspace { basis } => {
                if basis.is_empty() {
                    return Err(Error::config("degenerate_subspace needs a non-empty basis"));
                }
                for b in basis {
                    if b.dim() != d {
                        return Err(Error::Dimension { expected: d, got: b.dim() });
                    }
                }
                if gram_det_direct(basis)? <= 0.0 {
                    return Err(Error::config(
                        "degenerate_subspace basis is numerically linearly dependent",
                    ));
                }
                Ok(())
            }
            SamplerSpec::AffineShift { point, inner } => {
                if point.dim() != d {
                    return Err(Error::Dimension { expected: d, got: point.dim() });
                }
                inner.validate_vector_law(d)
            }
            SamplerSpec::Mixture { weights, parts } => {
                if parts.is_empty() {
                    return Err(Error::config("mixture needs at least one part"));
                }
                if weights.len() != parts.len() {
                    return Err(Error::config(format!(
                        "mixture has {} weights for {} parts",
                        weights.len(),
                        parts.len()
                    )));
                }
                if let Some((i, &w)) =
                    weights.iter().enumerate().find(|(_, &w)| !(w.is_finite() && w >= 0.0))
                {
                    return Err(Error::config(format!(
                        "mixture weight[{i}] must be finite and non-negative, got {w}"
                    )));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > MIXTURE_WEIGHT_TOL {
                    return Err(Error::config(format!(
                        "mixture weights sum to {total}, expected 1"
                    )));
                }
                for part in parts {
                    part.validate_vector_law(d)?;
                }
                Ok(())
            }
            SamplerSpec::IndependentSequence { .. } => Err(Error::config(
                "independent_sequence can only appear at the top level of a sampler",
            )),
        }
    }

    /// Draws one vector. A pure function of `(self, path)`: no hidden state,
    /// bitwise reproducible anywhere.
    pub fn sample(&self, path: SeedPath) -> Result<TruncatedVector> {
        let mut rng = path.rng();
        self.sample_with(&mut rng, path.draw_index)
    }

    fn sample_with(&self, rng: &mut ChaCha8Rng, draw_index: u64) -> Result<TruncatedVector> {
        match self {
            SamplerSpec::BaseGaussian { covariance } => {
                if covariance.mean.dim() != covariance.dim() {
                    return Err(Error::Dimension {
                        expected: covariance.dim(),
                        got: covariance.mean.dim(),
                    });
                }
                let mut coords = Vec::with_capacity(covariance.dim());
                for (l, m) in covariance.lambdas.iter().zip(covariance.mean.coords()) {
                    if !(l.is_finite() && *l > 0.0) {
                        return Err(Error::config(format!(
                            "covariance lambda must be finite and positive, got {l}"
                        )));
                    }
                    let z: f64 = rng.sample(StandardNormal);
                    coords.push(m + l.sqrt() * z);
                }
                TruncatedVector::new(coords)
            }
            SamplerSpec::DegenerateSubspace { basis } => {
                let first = basis
                    .first()
                    .ok_or(Error::config("degenerate_subspace needs a non-empty basis"))?;
                let d = first.dim();
                let mut coords = vec![0.0; d];
                for b in basis {
                    if b.dim() != d {
                        return Err(Error::Dimension { expected: d, got: b.dim() });
                    }
                    let c: f64 = rng.sample(StandardNormal);
                    for (x, bi) in coords.iter_mut().zip(b.coords()) {
                        *x += c * bi;
                    }
                }
                TruncatedVector::new(coords)
            }
            SamplerSpec::AffineShift { point, inner } => {
                let base = inner.sample_with(rng, draw_index)?;
                if base.dim() != point.dim() {
                    return Err(Error::Dimension { expected: point.dim(), got: base.dim() });
                }
                let coords =
                    base.coords().iter().zip(point.coords()).map(|(x, p)| x + p).collect();
                TruncatedVector::new(coords)
            }
            SamplerSpec::Mixture { weights, parts } => {
                if weights.len() != parts.len() || parts.is_empty() {
                    return Err(Error::config("mixture weights and parts must match and be non-empty"));
                }
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut chosen = parts.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        chosen = i;
                        break;
                    }
                }
                parts[chosen].sample_with(rng, draw_index)
            }
            SamplerSpec::IndependentSequence { per_index } => {
                let spec = per_index.get(draw_index as usize).ok_or_else(|| {
                    Error::config(format!(
                        "independent_sequence has {} entries but draw index {} was requested",
                        per_index.len(),
                        draw_index
                    ))
                })?;
                spec.sample_with(rng, draw_index)
            }
        }
    }

    /// Log of the joint density of `vs` under this law, relative to the
    /// product of `base` Gaussians: the sum over vectors (and, inside each
    /// vector, over coordinates) of log ratios of univariate normal densities.
    ///
    /// Fails with [`Error::NotAbsolutelyContinuous`] if any per-vector law is
    /// supported on a proper subspace.
    pub fn log_density_wrt_base(
        &self,
        base: &CovarianceSpec,
        vs: &[TruncatedVector],
    ) -> Result<f64> {
        base.validate()?;
        let mut total = 0.0;
        for (i, v) in vs.iter().enumerate() {
            let law = self.law_for_index(i, vs.len())?;
            total += law.log_density(v)? - gaussian_log_density(base, v)?;
        }
        Ok(total)
    }

    /// Linear-domain companion of [`SamplerSpec::log_density_wrt_base`].
    pub fn density_wrt_base(&self, base: &CovarianceSpec, vs: &[TruncatedVector]) -> Result<f64> {
        Ok(self.log_density_wrt_base(base, vs)?.exp())
    }

    fn law_for_index(&self, index: usize, total: usize) -> Result<&SamplerSpec> {
        match self {
            SamplerSpec::IndependentSequence { per_index } => {
                per_index.get(index).ok_or_else(|| {
                    Error::config(format!(
                        "independent_sequence has {} entries but {total} vectors were supplied",
                        per_index.len()
                    ))
                })
            }
            _ => Ok(self),
        }
    }

    /// Absolute log density of one vector under this per-vector law.
    fn log_density(&self, v: &TruncatedVector) -> Result<f64> {
        match self {
            SamplerSpec::BaseGaussian { covariance } => gaussian_log_density(covariance, v),
            SamplerSpec::DegenerateSubspace { .. } => Err(Error::NotAbsolutelyContinuous(
                "a subspace-supported law has no density".into(),
            )),
            SamplerSpec::AffineShift { point, inner } => {
                if point.dim() != v.dim() {
                    return Err(Error::Dimension { expected: point.dim(), got: v.dim() });
                }
                let shifted: Vec<f64> =
                    v.coords().iter().zip(point.coords()).map(|(x, p)| x - p).collect();
                inner.log_density(&TruncatedVector::new(shifted)?)
            }
            SamplerSpec::Mixture { weights, parts } => {
                if weights.len() != parts.len() || parts.is_empty() {
                    return Err(Error::config("mixture weights and parts must match and be non-empty"));
                }
                let mut terms = Vec::with_capacity(parts.len());
                for (w, part) in weights.iter().zip(parts) {
                    if *w > 0.0 {
                        terms.push(w.ln() + part.log_density(v)?);
                    }
                }
                Ok(log_sum_exp(&terms))
            }
            SamplerSpec::IndependentSequence { .. } => Err(Error::config(
                "independent_sequence cannot be evaluated as a per-vector law",
            )),
        }
    }

    /// Dimension of the linear span of the support of one draw, used to
    /// predict the index at which dependence becomes forced.
    ///
    /// Exact for Gaussians, degenerate laws, and degenerate laws under one
    /// affine shift; an upper bound for deeper nestings. Mixtures report the
    /// maximum over parts, sequences the maximum over indices.
    pub fn support_dimension(&self) -> SupportDim {
        match self {
            SamplerSpec::BaseGaussian { covariance } => SupportDim::Finite(covariance.dim()),
            SamplerSpec::DegenerateSubspace { basis } => SupportDim::Finite(basis.len()),
            SamplerSpec::AffineShift { point, inner } => {
                let d = point.dim();
                match inner.support_dimension() {
                    SupportDim::Unbounded => SupportDim::Unbounded,
                    SupportDim::Finite(m) if m >= d => SupportDim::Finite(d),
                    SupportDim::Finite(m) => {
                        if let SamplerSpec::DegenerateSubspace { basis } = inner.as_ref() {
                            if point_in_span(point, basis) {
                                return SupportDim::Finite(m);
                            }
                        } else if point.norm() == 0.0 {
                            return SupportDim::Finite(m);
                        }
                        SupportDim::Finite((m + 1).min(d))
                    }
                }
            }
            SamplerSpec::Mixture { parts, .. } => max_support(parts),
            SamplerSpec::IndependentSequence { per_index } => max_support(per_index),
        }
    }
}

fn max_support(specs: &[SamplerSpec]) -> SupportDim {
    let mut best = 0;
    for spec in specs {
        match spec.support_dimension() {
            SupportDim::Unbounded => return SupportDim::Unbounded,
            SupportDim::Finite(m) => best = best.max(m),
        }
    }
    SupportDim::Finite(best)
}

/// Whether `point` lies in the span of `basis` (up to the crate's absolute
/// tolerance, scaled by the point's norm). Malformed bases fall back to
/// `false`, which errs on the side of the larger support estimate.
fn point_in_span(point: &TruncatedVector, basis: &[TruncatedVector]) -> bool {
    let d = point.dim();
    if d == 0 {
        return true;
    }
    let Ok(mut state) = GramState::new(d) else {
        return false;
    };
    for b in basis {
        if state.append(b).is_err() {
            return false;
        }
    }
    match state.distance_to_span(point) {
        Ok(dist) => dist <= TOL_ABS * (1.0 + point.norm()),
        Err(_) => false,
    }
}

/// Log density of the diagonal Gaussian at `v`.
fn gaussian_log_density(cov: &CovarianceSpec, v: &TruncatedVector) -> Result<f64> {
    if v.dim() != cov.dim() {
        return Err(Error::Dimension { expected: cov.dim(), got: v.dim() });
    }
    let mut total = 0.0;
    for ((l, m), x) in cov.lambdas.iter().zip(cov.mean.coords()).zip(v.coords()) {
        if !(l.is_finite() && *l > 0.0) {
            return Err(Error::config(format!(
                "covariance lambda must be finite and positive, got {l}"
            )));
        }
        let centered = x - m;
        total += -0.5 * (2.0 * std::f64::consts::PI * l).ln() - centered * centered / (2.0 * l);
    }
    Ok(total)
}

/// Numerically stable `ln(sum(exp(terms)))`; empty input gives `-inf`.
fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}
