//! Minimal dense linear algebra for small symmetric systems.
//!
//! Matrices are row-major `&[F]` slices of length `n * n`. Problem dimensions
//! in this crate are tiny (d <= 10), so simple loops beat pulling in a matrix
//! library and keep the scalar type fully generic.

use crate::scalar::Real;

/// Cholesky factorization `A = L Lᵀ` of a symmetric matrix, lower triangle
/// returned row-major (strict upper triangle zero).
///
/// Returns `None` when a pivot is non-positive or non-finite, i.e. when `A`
/// is not numerically positive definite.
pub(crate) fn cholesky<F: Real>(n: usize, a: &[F]) -> Option<Vec<F>> {
    debug_assert_eq!(a.len(), n * n);
    let mut l = vec![F::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s = s - l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > F::zero()) || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves `L y = b` in place for lower-triangular `L` (forward substitution).
pub(crate) fn solve_lower_in_place<F: Real>(n: usize, l: &[F], b: &mut [F]) {
    debug_assert_eq!(l.len(), n * n);
    debug_assert_eq!(b.len(), n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Computes `L z` for lower-triangular `L`.
pub(crate) fn lower_mul_vec<F: Real>(n: usize, l: &[F], z: &[F]) -> Vec<F> {
    debug_assert_eq!(l.len(), n * n);
    debug_assert_eq!(z.len(), n);
    (0..n)
        .map(|i| {
            let mut s = F::zero();
            for k in 0..=i {
                s = s + l[i * n + k] * z[k];
            }
            s
        })
        .collect()
}

/// Multiplies the lower triangle by its transpose: `L Lᵀ`, full symmetric
/// matrix returned row-major. Test oracle for factorization round-trips.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn lower_times_transpose<F: Real>(n: usize, l: &[F]) -> Vec<F> {
    let mut out = vec![F::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = F::zero();
            for k in 0..=j.min(i) {
                s = s + l[i * n + k] * l[j * n + k];
            }
            out[i * n + j] = s;
            out[j * n + i] = s;
        }
    }
    out
}
