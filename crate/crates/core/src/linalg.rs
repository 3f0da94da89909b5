//! Small dense linear-algebra helpers shared by the analysis and control modules.
//!
//! Numerical rank and pseudoinverse solves all use the same cutoff:
//! singular values below `σ_max · max(rows, cols) · f64::EPSILON` are treated as zero.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Singular-value cutoff for a matrix of the given shape and largest singular value.
pub fn rank_tolerance(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    sigma_max * rows.max(cols) as f64 * f64::EPSILON
}

/// Numerical rank from the singular values.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    let tol = rank_tolerance(m.nrows(), m.ncols(), smax);
    sv.iter().filter(|&&s| s > tol).count()
}

/// Minimum-norm least-squares solution of `m x = b` via SVD.
pub fn lstsq_min_norm(m: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if m.nrows() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            actual: b.len(),
        });
    }
    if m.ncols() == 0 {
        return Ok(DVector::zeros(0));
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return Ok(DVector::zeros(m.ncols()));
    }
    let tol = rank_tolerance(m.nrows(), m.ncols(), smax);
    svd.solve(b, tol).map_err(|e| Error::IllConditioned(e.to_string()))
}

/// Minimum-norm least-squares solution together with the numerical rank of `m`,
/// from a single SVD.
pub fn lstsq_with_rank(m: &DMatrix<f64>, b: &DVector<f64>) -> Result<(DVector<f64>, usize)> {
    if m.nrows() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            actual: b.len(),
        });
    }
    if m.is_empty() {
        return Ok((DVector::zeros(m.ncols()), 0));
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return Ok((DVector::zeros(m.ncols()), 0));
    }
    let tol = rank_tolerance(m.nrows(), m.ncols(), smax);
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let x = svd
        .solve(b, tol)
        .map_err(|e| Error::IllConditioned(e.to_string()))?;
    Ok((x, rank))
}

/// `R` with `RᵀR = g` for a symmetric positive semidefinite `g`; negative
/// rounding noise in the spectrum is clipped.
pub fn psd_factor(g: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = g.clone().symmetric_eigen();
    let mut r = eig.eigenvectors.transpose();
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        r.row_mut(k).scale_mut(l.max(0.0).sqrt());
    }
    r
}

/// Pseudoinverse solve for a symmetric positive semidefinite system `g x = b`.
///
/// Returns the solution together with the numerical rank of `g`.
pub fn psd_pinv_solve(g: &DMatrix<f64>, b: &DVector<f64>) -> Result<(DVector<f64>, usize)> {
    if g.nrows() != b.len() || !g.is_square() {
        return Err(Error::DimensionMismatch {
            expected: g.nrows(),
            actual: b.len(),
        });
    }
    let n = g.nrows();
    if n == 0 {
        return Ok((DVector::zeros(0), 0));
    }
    let eig = g.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
    if lmax == 0.0 {
        return Ok((DVector::zeros(n), 0));
    }
    let tol = rank_tolerance(n, n, lmax);
    let proj = eig.eigenvectors.transpose() * b;
    let mut x = DVector::zeros(n);
    let mut rank = 0;
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l > tol {
            rank += 1;
            x += eig.eigenvectors.column(k) * (proj[k] / l);
        }
    }
    Ok((x, rank))
}

/// 2-norm condition number of a symmetric matrix (infinite when singular).
pub fn symmetric_condition(g: &DMatrix<f64>) -> f64 {
    let eig = g.clone().symmetric_eigen();
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &l| (lo.min(l.abs()), hi.max(l.abs())));
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Largest elementwise asymmetry `|m_ij - m_ji|`.
pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_rank_deficient_matrix() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 1.0, 1.0]);
        assert_eq!(numerical_rank(&m), 2);
        assert_eq!(numerical_rank(&DMatrix::zeros(2, 4)), 0);
    }

    #[test]
    fn min_norm_solution_of_wide_system() {
        // x + y = 2 -> minimum norm (1, 1)
        let m = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let x = lstsq_min_norm(&m, &DVector::from_vec(vec![2.0])).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn psd_pinv_on_singular_matrix() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let (x, rank) = psd_pinv_solve(&g, &DVector::from_vec(vec![2.0, 2.0])).unwrap();
        assert_eq!(rank, 1);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        assert!(symmetric_condition(&g).is_infinite() || symmetric_condition(&g) > 1e15);
    }

    #[test]
    fn factor_reproduces_psd_matrix() {
        let x = DMatrix::from_fn(4, 3, |i, j| (i as f64 + 1.0) * (j as f64 - 1.5));
        let g = &x * x.transpose();
        let r = psd_factor(&g);
        assert!((r.transpose() * r - &g).amax() < 1e-12);
        let (sol, rank) = lstsq_with_rank(&x, &DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(rank, 1);
        assert_eq!(sol.len(), 3);
    }
}
