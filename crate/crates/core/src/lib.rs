//! Classical and robust leverage diagnostics for linear regression designs
//! with coded categorical predictors, continuous predictors, and their
//! interactions.
//!
//! Designs that mix indicator columns with continuous columns are usually
//! too sparse for a robust covariance estimate of the whole matrix: row
//! subsets are likely singular, so subsampling estimators fail. Leverage,
//! however, is extreme exactly where the continuous predictors are extreme.
//! This crate therefore fits a high-breakdown MCD estimator to the
//! continuous block X2 alone, rewrites that block so its plain mean and
//! covariance equal the robust estimates, rebuilds the interaction columns
//! from the rewritten values, and reports each observation's quadratic form
//! against the modified Gram matrix — a robust hat value that stays
//! well-defined for any mix of predictors, alongside the matching robust
//! distance.
//!
//! ```
//! use roblev::pipeline::{run_csv, RunConfig};
//!
//! let csv = "x,g\n1.0,a\n2.0,a\n3.0,b\n4.0,b\n5.0,a\n50.0,b\n9.0,a\n2.5,b\n";
//! let out = run_csv(&RunConfig::new("~ x * g"), csv, &[]).unwrap();
//! let worst = out.report.observations.iter()
//!     .max_by(|a, b| a.robust_hat.total_cmp(&b.robust_hat)).unwrap();
//! assert_eq!(worst.obs, 6); // the x = 50 row
//! ```

pub mod chi2;
pub mod classical;
pub mod data;
pub mod design;
mod error;
pub mod formula;
pub mod matrix;
pub mod mcd;
pub mod output;
pub mod pipeline;
pub mod repro;
pub mod robust;

pub use data::{ColumnKind, Dataset};
pub use design::{build_design, PartitionedDesign, PartTag};
pub use error::Error;
pub use formula::{parse_formula, ModelSpec, Term};
pub use matrix::{Matrix, SymmetricPosDef};
pub use mcd::{fast_mcd, McdConfig, McdFit};
pub use pipeline::{run, run_csv, RunConfig, RunOutput};
pub use robust::{LeverageReport, ModifiedDesign};
