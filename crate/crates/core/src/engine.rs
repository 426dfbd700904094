//! Incremental Gramian determinant engine.
//!
//! The engine absorbs one vector at a time and maintains three coupled
//! quantities: an orthonormal basis of the span of the absorbed vectors, the
//! residual distance of each vector to the span of its predecessors, and the
//! log-determinant of the running Gram matrix. The update rule is the
//! product recursion `det G_k = det G_{k-1} * h_k^2`, where `h_k` is the
//! distance of the `k`-th vector to the span of the earlier ones (with
//! `h_0 = norm(v_0)` for the first vector).
//!
//! Orthogonalization is modified Gram-Schmidt with one conditional
//! re-orthogonalization pass, so the basis stays orthonormal to near machine
//! precision even when inputs are close to dependent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerances::{REORTH_FACTOR, TOL_DEP_DEFAULT};
use crate::vector::{dot, norm_sq, TruncatedVector};

/// Running state of the incremental engine.
///
/// `log_det` is the natural log of the Gramian determinant of every vector
/// absorbed so far; `f64::NEG_INFINITY` encodes an exactly-zero determinant.
/// Once a vector is flagged dependent the determinant stays zero forever
/// (multiplying by further squared residuals cannot revive it), so
/// `dependent` is monotone.
#[derive(Debug, Clone)]
pub struct GramState {
    d: usize,
    tol_dep: f64,
    basis: Vec<TruncatedVector>,
    residuals: Vec<f64>,
    log_det: f64,
    count: usize,
    dependent: bool,
}

/// What a single [`GramState::append`] observed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppendOutcome {
    /// Measured distance of the appended vector to the span of its
    /// predecessors (before any clamping).
    pub residual: f64,
    /// Log-determinant of the Gram matrix after the append.
    pub log_det_after: f64,
    /// Whether this vector was flagged dependent, i.e. its residual was at
    /// most `tol_dep * norm(v)`.
    pub dependent_now: bool,
}

impl GramState {
    /// Fresh engine over dimension `d` with the default dependence threshold.
    pub fn new(d: usize) -> Result<Self> {
        GramState::with_dep_tolerance(d, TOL_DEP_DEFAULT)
    }

    /// Fresh engine with an explicit relative dependence threshold.
    pub fn with_dep_tolerance(d: usize, tol_dep: f64) -> Result<Self> {
        if d < 1 {
            return Err(Error::config("engine dimension must be at least 1"));
        }
        if !(tol_dep.is_finite() && tol_dep >= 0.0) {
            return Err(Error::config(format!(
                "dependence tolerance must be finite and non-negative, got {tol_dep}"
            )));
        }
        Ok(GramState {
            d,
            tol_dep,
            basis: Vec::new(),
            residuals: Vec::new(),
            log_det: 0.0,
            count: 0,
            dependent: false,
        })
    }

    /// Ambient dimension the engine was created with.
    pub fn dimension(&self) -> usize {
        self.d
    }

    /// Number of vectors absorbed so far (independent or not).
    pub fn count(&self) -> usize {
        self.count
    }

    /// Orthonormal basis of the span of the absorbed vectors. Vectors whose
    /// residual fell below the dependence threshold contribute nothing here.
    pub fn basis(&self) -> &[TruncatedVector] {
        &self.basis
    }

    /// Residual recorded for each absorbed vector, in order. A vector flagged
    /// dependent is recorded as exactly `0.0` (its residual was certified
    /// negligible), so `log_det == 2 * sum(ln(residuals))` holds whenever no
    /// entry is zero.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// Log of the Gramian determinant; `f64::NEG_INFINITY` means exactly zero.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Whether any absorbed vector was flagged dependent.
    pub fn dependent(&self) -> bool {
        self.dependent
    }

    /// Determinant in linear domain: `exp(log_det)`, with underflow to zero
    /// and an exact zero when the state is dependent.
    pub fn det(&self) -> f64 {
        self.log_det.exp()
    }

    /// Relative dependence threshold for a candidate vector.
    pub fn dep_threshold(&self, v: &TruncatedVector) -> f64 {
        self.tol_dep * v.norm()
    }

    /// Absorbs `v`: updates basis, residual list, log-determinant and the
    /// dependence flag, and reports what happened.
    ///
    /// Appending more vectors than the ambient dimension is not an error;
    /// the surplus vectors are simply flagged dependent.
    pub fn append(&mut self, v: &TruncatedVector) -> Result<AppendOutcome> {
        if v.dim() != self.d {
            return Err(Error::Dimension { expected: self.d, got: v.dim() });
        }
        let (perp, residual, norm_v) = self.orthogonalize(v);
        let dependent_now = residual <= self.tol_dep * norm_v;
        if dependent_now {
            self.dependent = true;
            self.log_det = f64::NEG_INFINITY;
            self.residuals.push(0.0);
        } else {
            let unit: Vec<f64> = perp.iter().map(|c| c / residual).collect();
            self.basis.push(
                TruncatedVector::new(unit).expect("orthogonalized coordinates stay finite"),
            );
            // det G_k = det G_{k-1} * residual^2, accumulated in log domain.
            self.log_det += 2.0 * residual.ln();
            self.residuals.push(residual);
        }
        self.count += 1;
        Ok(AppendOutcome { residual, log_det_after: self.log_det, dependent_now })
    }

    /// Distance of `v` to the span of the absorbed vectors, without mutating
    /// the state. An empty span gives `norm(v)`.
    pub fn distance_to_span(&self, v: &TruncatedVector) -> Result<f64> {
        if v.dim() != self.d {
            return Err(Error::Dimension { expected: self.d, got: v.dim() });
        }
        let (_, residual, _) = self.orthogonalize(v);
        Ok(residual)
    }

    /// Modified Gram-Schmidt against the current basis, with one extra pass
    /// when the first pass shrank the vector below `REORTH_FACTOR * norm(v)`.
    /// Returns the perpendicular component, its norm, and `norm(v)`.
    fn orthogonalize(&self, v: &TruncatedVector) -> (Vec<f64>, f64, f64) {
        let norm_v = norm_sq(v.coords()).sqrt();
        let mut w: Vec<f64> = v.coords().to_vec();
        Self::subtract_projections(&mut w, &self.basis);
        let mut residual = norm_sq(&w).sqrt();
        if residual < REORTH_FACTOR * norm_v {
            Self::subtract_projections(&mut w, &self.basis);
            residual = norm_sq(&w).sqrt();
        }
        (w, residual, norm_v)
    }

    fn subtract_projections(w: &mut [f64], basis: &[TruncatedVector]) {
        for b in basis {
            let c = dot(w, b.coords());
            for (wi, bi) in w.iter_mut().zip(b.coords()) {
                *wi -= c * bi;
            }
        }
    }
}
