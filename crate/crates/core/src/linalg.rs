//! Small dense-matrix helpers shared by the model and estimator code.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `(X + Xᵀ) / 2`.
pub fn symmetrize<T: Scalar>(x: &DMatrix<T>) -> DMatrix<T> {
    (x + x.transpose()) * T::lit(0.5)
}

pub fn trace<T: Scalar>(x: &DMatrix<T>) -> T {
    x.diagonal().iter().fold(T::zero(), |acc, &v| acc + v)
}

pub fn max_abs<T: Scalar>(x: &DMatrix<T>) -> T {
    x.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()))
}

/// Eigenvalues of the symmetric part of `x`, ascending.
pub fn sym_eigenvalues<T: Scalar>(x: &DMatrix<T>) -> Vec<T> {
    let mut ev: Vec<T> = symmetrize(x).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    ev
}

/// Smallest eigenvalue of the symmetric part of `x`.
pub fn min_eigenvalue<T: Scalar>(x: &DMatrix<T>) -> T {
    sym_eigenvalues(x)
        .first()
        .copied()
        .unwrap_or_else(T::zero)
}

/// Symmetric within `rel_tol · max(1, max|x|)`.
pub fn is_symmetric<T: Scalar>(x: &DMatrix<T>, rel_tol: T) -> bool {
    if !x.is_square() {
        return false;
    }
    let scale = max_abs(x).max(T::one());
    let n = x.nrows();
    (0..n).all(|i| (0..i).all(|j| (x[(i, j)] - x[(j, i)]).abs() <= rel_tol * scale))
}

/// `A ≥ B` in the positive semi-definite order, up to `-tol` on the smallest
/// eigenvalue of the difference.
pub fn psd_geq<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>, tol: T) -> bool {
    min_eigenvalue(&(a - b)) >= -tol
}

/// Symmetric square root via the eigendecomposition; negative eigenvalues
/// (round-off on singular PSD input) are clamped to zero.
pub fn sym_sqrt<T: Scalar>(x: &DMatrix<T>) -> DMatrix<T> {
    let eig = symmetrize(x).symmetric_eigen();
    let roots = eig.eigenvalues.map(|v| v.max(T::zero()).sqrt());
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&roots) * v.transpose()
}

/// Numerical rank with singular-value threshold `max(rows, cols) · ε · σ_max`.
pub fn rank<T: Scalar>(x: &DMatrix<T>) -> usize {
    if x.is_empty() {
        return 0;
    }
    let sv = x.clone().svd(false, false).singular_values;
    let smax = sv.iter().fold(T::zero(), |acc, &s| acc.max(s));
    if smax == T::zero() {
        return 0;
    }
    let dim = T::from_count(x.nrows().max(x.ncols()));
    let thresh = dim * T::default_epsilon() * smax;
    sv.iter().filter(|&&s| s > thresh).count()
}

/// `[C; CA; …; CA^{n-1}]`.
pub fn observability_matrix<T: Scalar>(a: &DMatrix<T>, c: &DMatrix<T>) -> DMatrix<T> {
    let n = a.nrows();
    let p = c.nrows();
    let mut out = DMatrix::zeros(p * n, n);
    let mut block = c.clone();
    for i in 0..n {
        out.view_mut((i * p, 0), (p, n)).copy_from(&block);
        block = &block * a;
    }
    out
}

/// `[B, AB, …, A^{n-1}B]`.
pub fn controllability_matrix<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let n = a.nrows();
    let m = b.ncols();
    let mut out = DMatrix::zeros(n, m * n);
    let mut block = b.clone();
    for i in 0..n {
        out.view_mut((0, i * m), (n, m)).copy_from(&block);
        block = a * &block;
    }
    out
}

/// Draw `N(0, S Sᵀ)` given a square root factor `S`.
pub fn gaussian<T: Scalar, R: rand::Rng + ?Sized>(sqrt_cov: &DMatrix<T>, rng: &mut R) -> DVector<T> {
    let z = DVector::from_fn(sqrt_cov.ncols(), |_, _| T::sample_standard_normal(rng));
    sqrt_cov * z
}

pub(crate) fn check_square<T: Scalar>(x: &DMatrix<T>, name: &str) -> Result<usize> {
    if x.is_square() {
        Ok(x.nrows())
    } else {
        Err(Error::Dimension(format!(
            "{name} must be square, got {}x{}",
            x.nrows(),
            x.ncols()
        )))
    }
}

pub(crate) fn check_shape<T: Scalar>(
    x: &DMatrix<T>,
    rows: usize,
    cols: usize,
    name: &str,
) -> Result<()> {
    if x.shape() == (rows, cols) {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{name} must be {rows}x{cols}, got {}x{}",
            x.nrows(),
            x.ncols()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_detects_deficiency() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(rank(&m), 1);
        assert_eq!(rank(&DMatrix::<f64>::identity(3, 3)), 3);
        assert_eq!(rank(&DMatrix::<f64>::zeros(2, 2)), 0);
    }

    #[test]
    fn sym_sqrt_squares_back() {
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let s = sym_sqrt(&q);
        assert!(max_abs(&(&s * &s - &q)) < 1e-12);
    }

    #[test]
    fn observability_stacks_blocks() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let o = observability_matrix(&a, &c);
        assert_eq!(o, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]));
        assert_eq!(rank(&o), 2);
    }
}
