//! Dense complex helpers for the N×N and 2N×2N detector systems.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::CVec;

/// `aᴴ b`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub fn scale(a: &[Complex64], s: Complex64) -> CVec {
    a.iter().map(|x| x * s).collect()
}

/// Solves `(Σ_c c cᴴ + σ² I) X = B` for every right-hand side in `rhs`.
///
/// Returns `None` when the matrix is not numerically positive definite,
/// which only happens for `σ² = 0` with rank-deficient columns.
pub fn solve_regularized_gram(columns: &[&[Complex64]], sigma2: f64, rhs: &[&[Complex64]]) -> Option<Vec<CVec>> {
    let dim = rhs.first().map_or(0, |r| r.len());
    let mut gram = DMatrix::<Complex64>::identity(dim, dim) * Complex64::new(sigma2, 0.0);
    for c in columns {
        debug_assert_eq!(c.len(), dim);
        for i in 0..dim {
            for j in 0..dim {
                gram[(i, j)] += c[i] * c[j].conj();
            }
        }
    }
    let chol = gram.cholesky()?;
    let b = DMatrix::from_fn(dim, rhs.len(), |i, j| rhs[j][i]);
    let x = chol.solve(&b);
    Some((0..rhs.len()).map(|j| x.column(j).iter().copied().collect()).collect())
}
