//! Finite truncations of Hilbert-space vectors and their Gram matrices.
//!
//! Everything here is deliberately direct: dense coordinates, compensated
//! inner products, and a pivoted-factorization determinant that is kept
//! independent of the incremental engine so the two can cross-check each
//! other.

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::tolerances::TOL_PIVOT_FACTOR;

/// A vector in the first `d` coordinates of a real sequence space.
///
/// Coordinates are always finite; constructors reject NaN and infinities so
/// downstream arithmetic never has to re-check.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct TruncatedVector {
    coords: Vec<f64>,
}

impl TruncatedVector {
    /// Wraps a coordinate vector, rejecting non-finite entries.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(index) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(TruncatedVector { coords })
    }

    /// The zero vector of dimension `d`.
    pub fn zero(d: usize) -> Self {
        TruncatedVector { coords: vec![0.0; d] }
    }

    /// The `i`-th standard basis vector of dimension `d`.
    pub fn standard_basis(d: usize, i: usize) -> Self {
        let mut coords = vec![0.0; d];
        if i < d {
            coords[i] = 1.0;
        }
        TruncatedVector { coords }
    }

    /// Number of retained coordinates.
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Coordinate slice.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Euclidean norm, `sqrt(<v, v>)`.
    pub fn norm(&self) -> f64 {
        dot(&self.coords, &self.coords).max(0.0).sqrt()
    }
}

impl<'de> Deserialize<'de> for TruncatedVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let coords = Vec::<f64>::deserialize(deserializer)?;
        TruncatedVector::new(coords).map_err(serde::de::Error::custom)
    }
}

/// Inner product of two equal-dimension vectors.
///
/// Uses compensated (Kahan-Babuska) summation so that long, badly scaled
/// coordinate lists do not lose the small terms that rank decisions hinge on.
pub fn inner(u: &TruncatedVector, v: &TruncatedVector) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::Dimension { expected: u.dim(), got: v.dim() });
    }
    Ok(dot(u.coords(), v.coords()))
}

/// Compensated dot product over raw slices. Callers guarantee equal lengths.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for (&x, &y) in a.iter().zip(b) {
        let term = x * y;
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Squared Euclidean norm of a raw slice.
pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a).max(0.0)
}

// ---------------------------------------------------------------------------
// Gram matrices
// ---------------------------------------------------------------------------

/// Symmetric matrix of pairwise inner products of a vector family.
///
/// Entries are stored row-major; symmetry is exact because each pair is
/// computed once and mirrored.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl GramMatrix {
    /// Side length (number of vectors the matrix was built from).
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entry at row `i`, column `j`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.n && j < self.n, "index out of range");
        self.entries[i * self.n + j]
    }

    /// Sum of the diagonal.
    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.entries[i * self.n + i]).sum()
    }

    /// Row-major entry slice.
    pub fn entries_row_major(&self) -> &[f64] {
        &self.entries
    }

    /// Certifies that every eigenvalue is at least `-tol * trace`.
    ///
    /// Works by attempting an unpivoted Cholesky factorization of
    /// `G + (tol * trace) * I`: success proves the shifted matrix is positive
    /// definite, which bounds the spectrum of `G` from below.
    pub fn psd_within(&self, tol: f64) -> bool {
        let shift = tol * self.trace().abs() + f64::MIN_POSITIVE;
        let n = self.n;
        let mut a = self.entries.clone();
        for i in 0..n {
            a[i * n + i] += shift;
        }
        for j in 0..n {
            let piv = a[j * n + j];
            // A NaN pivot (possible only from inf - inf overflow) must fail
            // the certificate, so the comparison is written NaN-rejecting.
            if piv.is_nan() || piv <= 0.0 {
                return false;
            }
            let s = piv.sqrt();
            for i in (j + 1)..n {
                a[i * n + j] /= s;
            }
            for i in (j + 1)..n {
                let lij = a[i * n + j];
                for m in (j + 1)..=i {
                    a[i * n + m] -= lij * a[m * n + j];
                }
            }
        }
        true
    }

    /// Determinant with rank clamping; see [`gram_det_direct`].
    pub fn det_clamped(&self) -> f64 {
        self.pivoted_factorization().0
    }

    /// Natural log of the determinant, `f64::NEG_INFINITY` when the rank
    /// clamp fires; see [`gram_logdet_direct`].
    pub fn log_det_clamped(&self) -> f64 {
        self.pivoted_factorization().1
    }

    /// Cholesky factorization with diagonal pivoting.
    ///
    /// Returns `(det, log_det)` as the product and log-sum of the pivots. A
    /// pivot at or below `TOL_PIVOT_FACTOR * max_initial_diagonal` certifies
    /// numerical rank deficiency, and the determinant is clamped to exactly
    /// zero (`log_det` to negative infinity).
    fn pivoted_factorization(&self) -> (f64, f64) {
        let n = self.n;
        let mut a = self.entries.clone();
        let max_diag = (0..n)
            .map(|i| a[i * n + i])
            .fold(0.0_f64, f64::max);
        let clamp = TOL_PIVOT_FACTOR * max_diag;
        let mut det = 1.0_f64;
        let mut log_det = 0.0_f64;
        for j in 0..n {
            // Largest remaining diagonal entry becomes the pivot.
            let p = (j..n)
                .max_by(|&x, &y| {
                    a[x * n + x]
                        .partial_cmp(&a[y * n + y])
                        .expect("gram diagonals are finite")
                })
                .expect("non-empty pivot range");
            let piv = a[p * n + p];
            if piv <= clamp {
                return (0.0, f64::NEG_INFINITY);
            }
            if p != j {
                for c in 0..n {
                    a.swap(j * n + c, p * n + c);
                }
                for r in 0..n {
                    a.swap(r * n + j, r * n + p);
                }
            }
            det *= piv;
            log_det += piv.ln();
            let s = piv.sqrt();
            for i in (j + 1)..n {
                a[i * n + j] /= s;
            }
            for i in (j + 1)..n {
                let lij = a[i * n + j];
                for m in (j + 1)..n {
                    a[i * n + m] -= lij * a[m * n + j];
                }
            }
        }
        (det, log_det)
    }
}

/// Builds the Gram matrix `[<v_i, v_j>]` of a non-empty family.
pub fn gram_matrix(vs: &[TruncatedVector]) -> Result<GramMatrix> {
    let first = vs.first().ok_or(Error::EmptyInput("gram_matrix needs at least one vector"))?;
    let d = first.dim();
    let n = vs.len();
    let mut entries = vec![0.0; n * n];
    for (i, vi) in vs.iter().enumerate() {
        if vi.dim() != d {
            return Err(Error::Dimension { expected: d, got: vi.dim() });
        }
        for (j, vj) in vs.iter().enumerate().take(i + 1) {
            let value = dot(vi.coords(), vj.coords());
            entries[i * n + j] = value;
            entries[j * n + i] = value;
        }
    }
    Ok(GramMatrix { n, entries })
}

/// Gramian determinant by the direct route: build the Gram matrix, factor it
/// with diagonal pivoting, clamp to zero on certified rank deficiency.
///
/// This function never goes through the incremental engine, so the two can
/// be compared as independent routes to the same quantity.
pub fn gram_det_direct(vs: &[TruncatedVector]) -> Result<f64> {
    Ok(gram_matrix(vs)?.det_clamped())
}

/// Log-domain companion of [`gram_det_direct`]; `f64::NEG_INFINITY` encodes a
/// clamped (zero) determinant.
pub fn gram_logdet_direct(vs: &[TruncatedVector]) -> Result<f64> {
    Ok(gram_matrix(vs)?.log_det_clamped())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(coords: &[f64]) -> TruncatedVector {
        TruncatedVector::new(coords.to_vec()).expect("finite coordinates")
    }

    #[test]
    fn inner_matches_hand_computation() {
        assert_eq!(inner(&v(&[1.0, 2.0]), &v(&[3.0, 4.0])).unwrap(), 11.0);
        assert_eq!(inner(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(inner(&v(&[0.0, 0.0]), &v(&[5.0, -3.0])).unwrap(), 0.0);
    }

    #[test]
    fn inner_rejects_dimension_mismatch() {
        let err = inner(&v(&[1.0, 2.0]), &v(&[1.0, 2.0, 3.0])).unwrap_err();
        assert!(matches!(err, Error::Dimension { expected: 2, got: 3 }));
    }

    #[test]
    fn inner_compensation_keeps_small_terms() {
        // Naive left-to-right summation loses the middle product entirely:
        // (1e16 + 1) - 1e16 rounds to 0.
        let u = v(&[1e8, 1.0, -1e8]);
        let w = v(&[1e8, 1.0, 1e8]);
        assert_eq!(inner(&u, &w).unwrap(), 1.0);
    }

    #[test]
    fn inner_with_self_is_nonnegative() {
        for coords in [&[0.0, 0.0][..], &[1e-8, -1e-8], &[3.0, 4.0], &[-2.5, 1e-300]] {
            let x = v(coords);
            assert!(inner(&x, &x).unwrap() >= 0.0);
        }
    }

    #[test]
    fn vector_rejects_non_finite_coordinates() {
        assert!(matches!(
            TruncatedVector::new(vec![0.0, f64::NAN]).unwrap_err(),
            Error::NonFinite { index: 1 }
        ));
        assert!(TruncatedVector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn norm_is_euclidean() {
        assert_eq!(v(&[3.0, 4.0]).norm(), 5.0);
        assert_eq!(TruncatedVector::zero(7).norm(), 0.0);
    }

    #[test]
    fn gram_matrix_of_empty_family_errors() {
        assert!(matches!(gram_matrix(&[]).unwrap_err(), Error::EmptyInput(_)));
    }

    #[test]
    fn gram_matrix_matches_hand_computation() {
        // [(1,0), (1,1)] has pairwise products [[1,1],[1,2]].
        let g = gram_matrix(&[v(&[1.0, 0.0]), v(&[1.0, 1.0])]).unwrap();
        assert_eq!(g.dim(), 2);
        assert_eq!(g.entry(0, 0), 1.0);
        assert_eq!(g.entry(0, 1), 1.0);
        assert_eq!(g.entry(1, 0), 1.0);
        assert_eq!(g.entry(1, 1), 2.0);
    }

    #[test]
    fn gram_matrix_of_zero_vector_is_zero() {
        let g = gram_matrix(&[v(&[0.0, 0.0])]).unwrap();
        assert_eq!(g.entry(0, 0), 0.0);
    }

    #[test]
    fn gram_matrix_is_exactly_symmetric() {
        let vs = [v(&[0.3, -1.7, 2.2]), v(&[1.1, 0.4, -0.9]), v(&[-2.0, 0.1, 0.5])];
        let g = gram_matrix(&vs).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(g.entry(i, j).to_bits(), g.entry(j, i).to_bits());
            }
        }
    }

    #[test]
    fn det_matches_hand_computation() {
        // det [[1,1],[1,2]] = 1.
        let det = gram_det_direct(&[v(&[1.0, 0.0]), v(&[1.0, 1.0])]).unwrap();
        assert!((det - 1.0).abs() <= 1e-12);

        // Stacked prefix family: each vector adds one fresh coordinate, so
        // every residual is 1 and the determinant is 1.
        let det3 = gram_det_direct(&[
            v(&[1.0, 0.0, 0.0]),
            v(&[1.0, 1.0, 0.0]),
            v(&[1.0, 1.0, 1.0]),
        ])
        .unwrap();
        assert!((det3 - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn det_of_zero_vector_clamps_to_zero() {
        assert_eq!(gram_det_direct(&[v(&[0.0, 0.0])]).unwrap(), 0.0);
        assert_eq!(gram_logdet_direct(&[v(&[0.0, 0.0])]).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn det_of_exactly_dependent_family_is_zero() {
        let det = gram_det_direct(&[v(&[1.0, 2.0, -1.0]), v(&[-2.0, -4.0, 2.0])]).unwrap();
        assert_eq!(det, 0.0);
    }

    #[test]
    fn det_of_orthonormal_family_is_one() {
        let vs = [
            TruncatedVector::standard_basis(4, 0),
            TruncatedVector::standard_basis(4, 2),
            TruncatedVector::standard_basis(4, 3),
        ];
        let det = gram_det_direct(&vs).unwrap();
        assert!((det - 1.0).abs() <= 1e-15);
        assert!(gram_logdet_direct(&vs).unwrap().abs() <= 1e-15);
    }

    #[test]
    fn log_det_agrees_with_det_in_linear_domain() {
        let vs = [v(&[0.5, 0.25, 0.0]), v(&[0.1, -0.3, 0.8]), v(&[0.0, 0.7, 0.2])];
        let det = gram_det_direct(&vs).unwrap();
        let log_det = gram_logdet_direct(&vs).unwrap();
        assert!((log_det.exp() - det).abs() <= 1e-12 * det.abs().max(1.0));
    }

    #[test]
    fn psd_certificate_accepts_gram_matrices() {
        let g = gram_matrix(&[v(&[0.3, -1.7, 2.2]), v(&[1.1, 0.4, -0.9]), v(&[0.3, -1.7, 2.2])])
            .unwrap();
        assert!(g.psd_within(crate::tolerances::TOL_PSD));
        let zero = gram_matrix(&[v(&[0.0, 0.0])]).unwrap();
        assert!(zero.psd_within(crate::tolerances::TOL_PSD));
    }

    #[test]
    fn psd_certificate_rejects_indefinite_matrices() {
        // Hand-built symmetric matrix with a negative eigenvalue.
        let g = GramMatrix { n: 2, entries: vec![1.0, 2.0, 2.0, 1.0] };
        assert!(!g.psd_within(crate::tolerances::TOL_PSD));
    }

    #[test]
    fn serde_round_trip_preserves_coordinates() {
        let x = v(&[1.5, -2.25, 1e-11]);
        let json = serde_json::to_string(&x).unwrap();
        assert_eq!(json, "[1.5,-2.25,1e-11]");
        let back: TruncatedVector = serde_json::from_str(&json).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn serde_rejects_non_finite_coordinates() {
        assert!(serde_json::from_str::<TruncatedVector>("[1.0,null]").is_err());
    }
}
