//! End-to-end pipeline: formula -> design -> classical diagnostics ->
//! MCD -> modified design -> leverage report.

use crate::classical::{constant_columns, hat_values, mahalanobis, strip_constant, ClassicalDiagnostics};
use crate::data::Dataset;
use crate::design::build_design;
use crate::error::Error;
use crate::formula::parse_formula;
use crate::mcd::{fast_mcd, McdConfig, McdFit};
use crate::robust::{assemble_report, modified_design, LeverageReport, ModifiedDesign};

/// Everything one pipeline run needs beyond the dataset.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub formula: String,
    pub mcd: McdConfig,
    /// Hat-scale flagging cutoff; defaults to 2p/n.
    pub flag_cutoff: Option<f64>,
}

impl RunConfig {
    pub fn new(formula: impl Into<String>) -> Self {
        RunConfig { formula: formula.into(), mcd: McdConfig::default(), flag_cutoff: None }
    }
}

/// A finished run: the report plus run-level metadata.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: LeverageReport,
    /// Subset size used by the MCD search (n when no MCD ran).
    pub h: usize,
    pub seed: u64,
    pub formula: String,
    /// The MCD fit, when the design had a continuous block.
    pub mcd: Option<McdFit>,
}

/// Run the full pipeline over an ingested dataset.
pub fn run(cfg: &RunConfig, data: &Dataset) -> Result<RunOutput, Error> {
    let spec = parse_formula(&cfg.formula)?;
    let design = build_design(&spec, data)?;
    let n = design.n();

    let hat = hat_values(&design.x)?;
    // a design whose every column is constant (intercept-only) has no
    // distance scale; every observation is the 0-dimensional center
    let md = if constant_columns(&design.x).len() == design.p() {
        vec![0.0; n]
    } else {
        mahalanobis(&strip_constant(&design.x)?.x)?
    };
    let classical = ClassicalDiagnostics { hat, md, has_intercept: design.has_intercept };

    let (modified, fit, h) = match design.x2_matrix() {
        Some(x2) => {
            let fit = fast_mcd(&x2, &cfg.mcd)?;
            let modified = modified_design(&design, &fit)?;
            let h = fit.h;
            (modified, Some(fit), h)
        }
        // no continuous block: nothing to robustify, X~ = X
        None => (ModifiedDesign::identity(&design), None, n),
    };

    let report = assemble_report(&design, &classical, &modified, cfg.flag_cutoff)?;
    Ok(RunOutput { report, h, seed: cfg.mcd.seed, formula: cfg.formula.clone(), mcd: fit })
}

/// Convenience wrapper: ingest CSV text (with categorical overrides) and run.
pub fn run_csv(
    cfg: &RunConfig,
    csv_text: &str,
    categorical_overrides: &[String],
) -> Result<RunOutput, Error> {
    let data = Dataset::from_csv_str(csv_text, categorical_overrides)?;
    run(cfg, &data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intercept_only_formula_gives_uniform_hats() {
        let out = run_csv(&RunConfig::new("~ 1"), "x\n1\n2\n3\n4\n5\n", &[]).unwrap();
        for row in &out.report.observations {
            assert!((row.classical_hat - 0.2).abs() < 1e-14);
            assert!((row.robust_hat - 0.2).abs() < 1e-14);
            assert_eq!(row.classical_md, 0.0);
            assert_eq!(row.robust_rd, 0.0);
            assert_eq!(row.mcd_weight, 1);
        }
        assert_eq!(out.h, 5);
        assert_eq!(out.report.sum_w, 5);
        assert_eq!(out.report.c, 1.0);
    }

    #[test]
    fn pure_categorical_design_reduces_to_classical() {
        let csv = "g\na\na\nb\nb\na\nb\n";
        let out = run_csv(&RunConfig::new("~ g"), csv, &[]).unwrap();
        assert!(out.mcd.is_none());
        for row in &out.report.observations {
            assert!((row.robust_hat - row.classical_hat).abs() < 1e-12);
            assert!((row.robust_rd - row.classical_md).abs() < 1e-12);
        }
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        let ok_csv = "x,z\n1,2\n2,4\n3,1\n4,5\n5,3\n6,6\n";
        let e = run_csv(&RunConfig::new("~ x +"), ok_csv, &[]).unwrap_err();
        assert_eq!(e.exit_code(), 4);
        let e = run_csv(&RunConfig::new("~ nope"), ok_csv, &[]).unwrap_err();
        assert_eq!(e.exit_code(), 4);
        let e = run_csv(&RunConfig::new("~ x"), "x,y\n1,1\n,2\n3,3\n", &[]).unwrap_err();
        assert_eq!(e.exit_code(), 3);
        let e = run_csv(&RunConfig::new("~ x"), "x,b\n1,2\n3\n", &[]).unwrap_err();
        assert_eq!(e.exit_code(), 3);
        // collinear design
        let e = run_csv(&RunConfig::new("~ x + z"), "x,z\n1,2\n2,4\n3,6\n4,8\n", &[]).unwrap_err();
        assert_eq!(e.exit_code(), 5);
        // exact fit in the continuous block: z has near-duplicate structure
        let e = run_csv(
            &RunConfig::new("~ z"),
            "z\n1\n1\n1\n1\n1\n1\n1\n9\n8\n7\n",
            &[],
        )
        .unwrap_err();
        assert_eq!(e.exit_code(), 6);
    }
}
