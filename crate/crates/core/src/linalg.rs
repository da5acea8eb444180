//! Numerical rank, pseudoinverse and least-squares helpers shared by the
//! state-space and data-model code.
//!
//! Every rank decision in the crate goes through [`RANK_RTOL`]: a singular
//! value counts as zero when it is below `RANK_RTOL * sigma_max`.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value cutoff for numerical rank.
pub const RANK_RTOL: f64 = 1e-8;

pub fn singular_values(mat: &DMatrix<f64>) -> DVector<f64> {
    if mat.is_empty() {
        return DVector::zeros(0);
    }
    mat.clone().svd(false, false).singular_values
}

pub fn rank_with_tol(mat: &DMatrix<f64>, rtol: f64) -> usize {
    let sv = singular_values(mat);
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rtol * smax).count()
}

pub fn rank(mat: &DMatrix<f64>) -> usize {
    rank_with_tol(mat, RANK_RTOL)
}

/// Moore-Penrose pseudoinverse with the shared relative cutoff.
pub fn pinv(mat: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = mat.shape();
    if mat.is_empty() {
        return DMatrix::zeros(c, r);
    }
    let svd = mat.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return DMatrix::zeros(c, r);
    }
    svd.pseudo_inverse(RANK_RTOL * smax)
        .expect("SVD computed with both U and V")
}

/// Orthonormal basis (as columns) of the column space of `mat`.
pub fn column_basis(mat: &DMatrix<f64>) -> DMatrix<f64> {
    let rows = mat.nrows();
    if mat.is_empty() {
        return DMatrix::zeros(rows, 0);
    }
    let svd = mat.clone().svd(true, false);
    let u = svd.u.expect("U requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| smax > 0.0 && s > RANK_RTOL * smax)
        .map(|(i, _)| i)
        .collect();
    DMatrix::from_fn(rows, keep.len(), |i, j| u[(i, keep[j])])
}

/// Sup-norm of `v - Q Q^T v` for an orthonormal column basis `q`.
pub fn projection_residual_sup(q: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    let coeffs = q.tr_mul(v);
    let r = v - q * coeffs;
    sup_norm(r.as_slice())
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}
