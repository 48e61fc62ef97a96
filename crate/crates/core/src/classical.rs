//! Classical leverage diagnostics: hat values, Mahalanobis distances, and
//! the identity h_i = MD_i^2/(n-1) + 1/n that links them when the design
//! has a constant column.

use crate::matrix::{Matrix, RankDeficiency, SymmetricPosDef, DEFAULT_RANK_TOL};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassicalError {
    #[error("design matrix is rank deficient: {0}")]
    RankDeficient(RankDeficiency),
    #[error("all columns are constant; no columns remain for a Mahalanobis distance")]
    AllColumnsConstant,
    #[error("sample covariance is singular at column {} of the reduced matrix; coded categorical columns often collapse after centering", column + 1)]
    SingularCovariance { column: usize },
    #[error("Mahalanobis distance needs n >= p + 2 rows (n = {n}, p = {p})")]
    TooFewRows { n: usize, p: usize },
    #[error("the hat/distance relation requires a design with a constant column")]
    NoIntercept,
    #[error("vector lengths disagree with n = {n}")]
    LengthMismatch { n: usize },
}

/// Classical per-observation diagnostics for one design.
#[derive(Debug, Clone)]
pub struct ClassicalDiagnostics {
    pub hat: Vec<f64>,
    pub md: Vec<f64>,
    pub has_intercept: bool,
}

/// Indices of columns that are constant across rows
/// (max - min <= 1e-12 * (1 + |max|)).
pub fn constant_columns(x: &Matrix) -> Vec<usize> {
    (0..x.cols())
        .filter(|&j| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for i in 0..x.rows() {
                let v = x.get(i, j);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            hi - lo <= 1e-12 * (1.0 + hi.abs())
        })
        .collect()
}

/// Hat values h_i = x_i' (X'X)^{-1} x_i via the Cholesky quadratic form.
pub fn hat_values(x: &Matrix) -> Result<Vec<f64>, ClassicalError> {
    let gram = SymmetricPosDef::from_matrix(&x.gram(), DEFAULT_RANK_TOL)
        .map_err(ClassicalError::RankDeficient)?;
    Ok((0..x.rows()).map(|i| gram.quad_form(x.row(i))).collect())
}

/// A design with its constant columns removed.
#[derive(Debug, Clone)]
pub struct StrippedDesign {
    pub x: Matrix,
    /// Original indices of the removed constant columns.
    pub removed: Vec<usize>,
}

/// Remove the constant column(s). Errors only when nothing would remain.
pub fn strip_constant(x: &Matrix) -> Result<StrippedDesign, ClassicalError> {
    let removed = constant_columns(x);
    if removed.len() == x.cols() {
        return Err(ClassicalError::AllColumnsConstant);
    }
    if removed.is_empty() {
        return Ok(StrippedDesign { x: x.clone(), removed });
    }
    let keep: Vec<usize> = (0..x.cols()).filter(|j| !removed.contains(j)).collect();
    Ok(StrippedDesign { x: x.select_columns(&keep), removed })
}

/// Mahalanobis distances of the rows of `xstar` from their own mean under
/// their own sample covariance.
pub fn mahalanobis(xstar: &Matrix) -> Result<Vec<f64>, ClassicalError> {
    let (n, p) = (xstar.rows(), xstar.cols());
    if n < p + 2 {
        return Err(ClassicalError::TooFewRows { n, p });
    }
    let mean = xstar.column_means();
    let cov = xstar.sample_covariance();
    let spd = SymmetricPosDef::from_matrix(&cov, DEFAULT_RANK_TOL)
        .map_err(|rd| ClassicalError::SingularCovariance { column: rd.column })?;
    let mut dev = vec![0.0; p];
    Ok((0..n)
        .map(|i| {
            for (j, v) in xstar.row(i).iter().enumerate() {
                dev[j] = v - mean[j];
            }
            spd.quad_form(&dev).sqrt()
        })
        .collect())
}

/// Max absolute discrepancy of h_i against MD_i^2/(n-1) + 1/n. Refuses to
/// run without an intercept, where the relation does not hold.
pub fn hat_md_relation_check(
    hat: &[f64],
    md: &[f64],
    n: usize,
    has_intercept: bool,
) -> Result<f64, ClassicalError> {
    if !has_intercept {
        return Err(ClassicalError::NoIntercept);
    }
    if hat.len() != n || md.len() != n {
        return Err(ClassicalError::LengthMismatch { n });
    }
    let nf = n as f64;
    Ok(hat
        .iter()
        .zip(md)
        .map(|(h, d)| (h - (d * d / (nf - 1.0) + 1.0 / nf)).abs())
        .fold(0.0, f64::max))
}
