//! Modified design matrix and the robust leverage diagnostics built on it.
//!
//! The continuous block X2 is replaced by
//! `scale * diag(w) (X2 - M) + M` with `scale = sqrt(c (n-1) / (sum w - 1))`
//! and M the robust location broadcast over rows. For binary weights the
//! plain mean and covariance of the modified block reproduce the robust
//! location and scatter exactly. Interaction columns are rebuilt from the
//! modified continuous values, and the robust hat value of each observation
//! is the quadratic form of its ORIGINAL row against the modified Gram
//! matrix, so gross leverage points can score above 1.

use crate::classical::{constant_columns, ClassicalDiagnostics};
use crate::design::{CodedFactor, PartitionedDesign};
use crate::matrix::{Matrix, SymmetricPosDef, DEFAULT_RANK_TOL};
use crate::mcd::McdFit;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RobustError {
    #[error("only {active} observations carry weight 1; need at least {needed} to modify a {p2}-column block")]
    TooFewWeights { active: usize, needed: usize, p2: usize },
    #[error("modified design matrix is rank deficient: column `{column}` lost its variation under the weights; raise --alpha toward 1 or lower --reweight-prob so fewer rows are zero-weighted")]
    RankDeficientModified { column: String },
    #[error("covariance of the modified non-constant columns is singular at column {}", column + 1)]
    SingularModifiedCovariance { column: usize },
    #[error("inconsistent dimensions: {what}")]
    DimensionMismatch { what: String },
}

/// The modified design [X1 X2~ X3~] plus everything needed to interpret it.
#[derive(Debug, Clone)]
pub struct ModifiedDesign {
    /// Full n x p modified matrix, columns in original design order.
    pub x_tilde: Matrix,
    /// The modified continuous block, `None` when p2 = 0.
    pub x2_tilde: Option<Matrix>,
    /// The prefactor sqrt(c (n-1) / (sum w - 1)).
    pub scale: f64,
    /// Row of M: the robust location of the continuous block.
    pub m_row: Vec<f64>,
    pub weights: Vec<u8>,
    pub c: f64,
    pub sum_w: usize,
}

impl ModifiedDesign {
    /// Identity modification for designs without a continuous block:
    /// X~ = X, unit weights, c = 1.
    pub fn identity(design: &PartitionedDesign) -> Self {
        ModifiedDesign {
            x_tilde: design.x.clone(),
            x2_tilde: None,
            scale: 1.0,
            m_row: Vec::new(),
            weights: vec![1; design.n()],
            c: 1.0,
            sum_w: design.n(),
        }
    }
}

/// Apply the modification to the continuous block alone.
///
/// Rows with weight 0 collapse to the robust location; rows with weight 1
/// are stretched about it by `scale`.
pub fn modify_x2(x2: &Matrix, fit: &McdFit) -> Result<Matrix, RobustError> {
    let (n, p2) = (x2.rows(), x2.cols());
    if fit.weights.len() != n || fit.location.len() != p2 {
        return Err(RobustError::DimensionMismatch {
            what: format!(
                "fit covers {} rows x {} columns, block is {} x {}",
                fit.weights.len(),
                fit.location.len(),
                n,
                p2
            ),
        });
    }
    let sum_w = fit.sum_weights();
    if sum_w < p2 + 2 {
        return Err(RobustError::TooFewWeights { active: sum_w, needed: p2 + 2, p2 });
    }
    let scale = (fit.c * (n as f64 - 1.0) / (sum_w as f64 - 1.0)).sqrt();
    let mut out = Matrix::zeros(n, p2);
    for i in 0..n {
        for j in 0..p2 {
            let t = fit.location[j];
            let v = if fit.weights[i] == 1 { scale * (x2.get(i, j) - t) + t } else { t };
            out.set(i, j, v);
        }
    }
    Ok(out)
}

/// Maximum gaps between the plain moments of the modified block and the
/// fit's (location, scatter), scaled by the largest reference magnitude.
/// Both are expected at the 1e-10 level for binary weights.
pub fn verify_equivalence(x2_tilde: &Matrix, fit: &McdFit) -> (f64, f64) {
    let mean = x2_tilde.column_means();
    let cov = x2_tilde.sample_covariance();
    let p = x2_tilde.cols();

    let loc_scale = fit.location.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mean_gap = mean
        .iter()
        .zip(&fit.location)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / loc_scale;

    let mut cov_scale = 1.0f64;
    for i in 0..p {
        for j in 0..p {
            cov_scale = cov_scale.max(fit.scatter.entry(i, j).abs());
        }
    }
    let mut cov_gap = 0.0f64;
    for i in 0..p {
        for j in 0..p {
            cov_gap = cov_gap.max((cov.get(i, j) - fit.scatter.entry(i, j)).abs());
        }
    }
    (mean_gap, cov_gap / cov_scale)
}

/// Recompute every X3 column as the product of its coded factors, reading
/// continuous main-effect values from the modified block. Returns
/// (design column index, rebuilt values) pairs; empty when p3 = 0.
pub fn rebuild_interactions(
    design: &PartitionedDesign,
    x2_tilde: &Matrix,
) -> Vec<(usize, Vec<f64>)> {
    let n = design.n();
    design
        .x3_indices()
        .into_iter()
        .map(|col| {
            let mut values = vec![1.0; n];
            for factor in &design.columns[col].factors {
                match factor {
                    CodedFactor::Level { .. } => {
                        for (v, ind) in values.iter_mut().zip(design.factor_values(factor)) {
                            *v *= ind;
                        }
                    }
                    CodedFactor::Continuous { var } => match design.x2_main_position(var) {
                        Some(pos) => {
                            for (i, v) in values.iter_mut().enumerate() {
                                *v *= x2_tilde.get(i, pos);
                            }
                        }
                        // a continuous variable with no main-effect column
                        // has no modified values; use the originals
                        None => {
                            for (v, raw) in values.iter_mut().zip(design.factor_values(factor)) {
                                *v *= raw;
                            }
                        }
                    },
                }
            }
            (col, values)
        })
        .collect()
}

/// Assemble the full modified design [X1 X2~ X3~] for a fitted estimator.
pub fn modified_design(
    design: &PartitionedDesign,
    fit: &McdFit,
) -> Result<ModifiedDesign, RobustError> {
    let x2 = design.x2_matrix().ok_or_else(|| RobustError::DimensionMismatch {
        what: "design has no continuous block; use ModifiedDesign::identity".to_string(),
    })?;
    let x2_tilde = modify_x2(&x2, fit)?;
    let sum_w = fit.sum_weights();
    let scale = (fit.c * (design.n() as f64 - 1.0) / (sum_w as f64 - 1.0)).sqrt();

    let mut x_tilde = design.x.clone();
    for (pos, col) in design.x2_indices().into_iter().enumerate() {
        for i in 0..design.n() {
            x_tilde.set(i, col, x2_tilde.get(i, pos));
        }
    }
    for (col, values) in rebuild_interactions(design, &x2_tilde) {
        for (i, v) in values.into_iter().enumerate() {
            x_tilde.set(i, col, v);
        }
    }
    Ok(ModifiedDesign {
        x_tilde,
        x2_tilde: Some(x2_tilde),
        scale,
        m_row: fit.location.clone(),
        weights: fit.weights.clone(),
        c: fit.c,
        sum_w,
    })
}

/// Robust hat values: original rows against the modified Gram matrix.
pub fn robust_hat(
    design: &PartitionedDesign,
    modified: &ModifiedDesign,
) -> Result<Vec<f64>, RobustError> {
    check_shapes(design, modified)?;
    let gram = SymmetricPosDef::from_matrix(&modified.x_tilde.gram(), DEFAULT_RANK_TOL)
        .map_err(|rd| RobustError::RankDeficientModified {
            column: design.columns[rd.column].name.clone(),
        })?;
    Ok((0..design.n()).map(|i| gram.quad_form(design.x.row(i))).collect())
}

/// Robust distances: original non-constant rows against the plain mean and
/// covariance of the modified non-constant columns.
pub fn robust_distance(
    design: &PartitionedDesign,
    modified: &ModifiedDesign,
) -> Result<Vec<f64>, RobustError> {
    check_shapes(design, modified)?;
    let removed = constant_columns(&design.x);
    let keep: Vec<usize> = (0..design.p()).filter(|j| !removed.contains(j)).collect();
    if keep.is_empty() {
        return Err(RobustError::DimensionMismatch {
            what: "no non-constant columns remain for a robust distance".to_string(),
        });
    }
    let x_star = design.x.select_columns(&keep);
    let xt_star = modified.x_tilde.select_columns(&keep);
    let mean = xt_star.column_means();
    let cov = xt_star.sample_covariance();
    let spd = SymmetricPosDef::from_matrix(&cov, DEFAULT_RANK_TOL)
        .map_err(|rd| RobustError::SingularModifiedCovariance { column: rd.column })?;
    let mut dev = vec![0.0; keep.len()];
    Ok((0..design.n())
        .map(|i| {
            for (j, v) in x_star.row(i).iter().enumerate() {
                dev[j] = v - mean[j];
            }
            spd.quad_form(&dev).sqrt()
        })
        .collect())
}

fn check_shapes(design: &PartitionedDesign, modified: &ModifiedDesign) -> Result<(), RobustError> {
    if modified.x_tilde.rows() != design.n()
        || modified.x_tilde.cols() != design.p()
        || modified.weights.len() != design.n()
    {
        return Err(RobustError::DimensionMismatch {
            what: format!(
                "modified design is {} x {} with {} weights, original is {} x {}",
                modified.x_tilde.rows(),
                modified.x_tilde.cols(),
                modified.weights.len(),
                design.n(),
                design.p()
            ),
        });
    }
    Ok(())
}

/// Per-observation diagnostics row.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationDiagnostics {
    /// 1-based observation index.
    pub obs: usize,
    pub robust_hat: f64,
    pub robust_rd: f64,
    pub classical_hat: f64,
    pub classical_md: f64,
    pub mcd_weight: u8,
    pub flagged: bool,
}

/// The assembled leverage report.
#[derive(Debug, Clone)]
pub struct LeverageReport {
    pub observations: Vec<ObservationDiagnostics>,
    pub n: usize,
    pub p: usize,
    pub p1: usize,
    pub p2: usize,
    pub p3: usize,
    pub c: f64,
    pub sum_w: usize,
    pub flag_cutoff: f64,
}

/// Merge classical and robust quantities into one report, ordered by
/// observation index. `flag_cutoff` defaults to 2p/n on the hat scale.
pub fn assemble_report(
    design: &PartitionedDesign,
    classical: &ClassicalDiagnostics,
    modified: &ModifiedDesign,
    flag_cutoff: Option<f64>,
) -> Result<LeverageReport, RobustError> {
    let n = design.n();
    if classical.hat.len() != n || classical.md.len() != n {
        return Err(RobustError::DimensionMismatch {
            what: format!(
                "classical diagnostics cover {} observations, design has {n}",
                classical.hat.len()
            ),
        });
    }
    let hat = robust_hat(design, modified)?;
    // intercept-only designs have no non-constant columns; every
    // observation sits at the 0-dimensional center, distance 0
    let rd = if constant_columns(&design.x).len() == design.p() {
        vec![0.0; n]
    } else {
        robust_distance(design, modified)?
    };
    let cutoff = flag_cutoff.unwrap_or(2.0 * design.p() as f64 / n as f64);
    let observations = (0..n)
        .map(|i| ObservationDiagnostics {
            obs: i + 1,
            robust_hat: hat[i],
            robust_rd: rd[i],
            classical_hat: classical.hat[i],
            classical_md: classical.md[i],
            mcd_weight: modified.weights[i],
            flagged: hat[i] > cutoff,
        })
        .collect();
    Ok(LeverageReport {
        observations,
        n,
        p: design.p(),
        p1: design.p1(),
        p2: design.p2(),
        p3: design.p3(),
        c: modified.c,
        sum_w: modified.sum_w,
        flag_cutoff: cutoff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{hat_values, mahalanobis, strip_constant};
    use crate::data::Dataset;
    use crate::design::build_design;
    use crate::formula::parse_formula;

    fn one_d_fit() -> (Matrix, McdFit) {
        let x = Matrix::new(5, 1, vec![1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        let fit = McdFit::from_weights(&x, vec![1, 1, 1, 1, 0], 1.0).unwrap();
        (x, fit)
    }

    #[test]
    fn unit_weights_leave_block_unchanged() {
        let x = Matrix::new(4, 2, vec![1.0, 5.0, 2.0, 7.0, 3.0, 6.0, 4.0, 8.0]).unwrap();
        let fit = McdFit::from_weights(&x, vec![1; 4], 1.0).unwrap();
        let xt = modify_x2(&x, &fit).unwrap();
        for i in 0..4 {
            for j in 0..2 {
                assert!((xt.get(i, j) - x.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_weight_rows_collapse_to_location() {
        let (x, fit) = one_d_fit();
        let xt = modify_x2(&x, &fit).unwrap();
        assert!((xt.get(4, 0) - 2.5).abs() < 1e-15);
        // hand-computed: 2.5 + sqrt(4/3) * (x - 2.5) for the kept rows
        let s = (4.0f64 / 3.0).sqrt();
        for (i, orig) in [1.0, 2.0, 3.0, 4.0].iter().enumerate() {
            assert!((xt.get(i, 0) - (2.5 + s * (orig - 2.5))).abs() < 1e-12);
        }
        // sample variance of the modified block = weighted variance = 5/3
        let var = xt.sample_covariance().get(0, 0);
        assert!((var - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn equivalence_gaps_are_tiny() {
        let (x, fit) = one_d_fit();
        let xt = modify_x2(&x, &fit).unwrap();
        let (mg, cg) = verify_equivalence(&xt, &fit);
        assert!(mg < 1e-14, "mean gap {mg}");
        assert!(cg < 1e-14, "cov gap {cg}");
    }

    #[test]
    fn too_few_weights_rejected() {
        let x = Matrix::new(5, 1, vec![1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        let err = McdFit::from_weights(&x, vec![1, 1, 0, 0, 0], 1.0).unwrap_err();
        assert!(matches!(err, crate::mcd::McdError::TooFewWeights { .. }));
    }

    fn epilepsy_like() -> (PartitionedDesign, McdFit) {
        let data = Dataset::from_csv_str(
            "x,z,g\n1,2,a\n2,7,a\n3,6,b\n4,9,b\n5,1,a\n6,3,b\n7,8,a\n8,2,b\n9,5,a\n10,4,b\n",
            &[],
        )
        .unwrap();
        let design = build_design(&parse_formula("~ x + z * g").unwrap(), &data).unwrap();
        let x2 = design.x2_matrix().unwrap();
        let fit = McdFit::from_weights(&x2, vec![1, 1, 1, 0, 1, 1, 1, 1, 1, 0], 1.3).unwrap();
        (design, fit)
    }

    #[test]
    fn rebuild_keeps_indicator_zeros() {
        let (design, fit) = epilepsy_like();
        let modified = modified_design(&design, &fit).unwrap();
        // interaction column z:gb must be exactly x2_tilde's z times the
        // indicator, so rows with g = a stay 0
        let x3 = design.x3_indices()[0];
        let zpos = design.x2_main_position("z").unwrap();
        let x2t = modified.x2_tilde.as_ref().unwrap();
        for i in 0..design.n() {
            let ind = design.x.get(i, 3); // gb indicator column
            let expect = x2t.get(i, zpos) * ind;
            assert!((modified.x_tilde.get(i, x3) - expect).abs() < 1e-12);
            if ind == 0.0 {
                assert_eq!(modified.x_tilde.get(i, x3), 0.0);
            }
        }
    }

    #[test]
    fn rebuild_empty_without_interactions() {
        let data = Dataset::from_csv_str("x\n1\n2\n3\n4\n5\n", &[]).unwrap();
        let design = build_design(&parse_formula("~ x").unwrap(), &data).unwrap();
        let x2 = design.x2_matrix().unwrap();
        let fit = McdFit::from_weights(&x2, vec![1; 5], 1.0).unwrap();
        let x2t = modify_x2(&x2, &fit).unwrap();
        assert!(rebuild_interactions(&design, &x2t).is_empty());
    }

    #[test]
    fn unit_weights_reduce_to_classical() {
        let (design, _) = epilepsy_like();
        let x2 = design.x2_matrix().unwrap();
        let fit = McdFit::from_weights(&x2, vec![1; 10], 1.0).unwrap();
        let modified = modified_design(&design, &fit).unwrap();
        let rh = robust_hat(&design, &modified).unwrap();
        let ch = hat_values(&design.x).unwrap();
        for (a, b) in rh.iter().zip(&ch) {
            assert!((a - b).abs() < 1e-12);
        }
        let rd = robust_distance(&design, &modified).unwrap();
        let md = mahalanobis(&strip_constant(&design.x).unwrap().x).unwrap();
        for (a, b) in rd.iter().zip(&md) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn intercept_relation_transfers_to_robust_quantities() {
        let (design, fit) = epilepsy_like();
        let modified = modified_design(&design, &fit).unwrap();
        let rh = robust_hat(&design, &modified).unwrap();
        let rd = robust_distance(&design, &modified).unwrap();
        let n = design.n() as f64;
        for (h, d) in rh.iter().zip(&rd) {
            assert!((h - (d * d / (n - 1.0) + 1.0 / n)).abs() < 1e-10);
        }
    }

    #[test]
    fn intercept_only_hat_is_one_over_n() {
        let data = Dataset::from_csv_str("x\n1\n2\n3\n4\n", &[]).unwrap();
        let design = build_design(&parse_formula("~ 1").unwrap(), &data).unwrap();
        let modified = ModifiedDesign::identity(&design);
        let rh = robust_hat(&design, &modified).unwrap();
        assert!(rh.iter().all(|v| (v - 0.25).abs() < 1e-14));
    }

    #[test]
    fn report_assembles_and_flags() {
        let (design, fit) = epilepsy_like();
        let modified = modified_design(&design, &fit).unwrap();
        let classical = ClassicalDiagnostics {
            hat: hat_values(&design.x).unwrap(),
            md: mahalanobis(&strip_constant(&design.x).unwrap().x).unwrap(),
            has_intercept: true,
        };
        let report = assemble_report(&design, &classical, &modified, None).unwrap();
        assert_eq!(report.n, 10);
        assert_eq!((report.p1, report.p2, report.p3), (2, 2, 1));
        assert_eq!(report.sum_w, 8);
        assert!((report.flag_cutoff - 2.0 * 5.0 / 10.0).abs() < 1e-15);
        assert_eq!(report.observations[0].obs, 1);
        for row in &report.observations {
            assert_eq!(row.flagged, row.robust_hat > report.flag_cutoff);
        }
    }
}
