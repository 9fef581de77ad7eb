//! Robust ranking from pairwise comparisons.
//!
//! This crate fits global item scores to (possibly inconsistent, possibly
//! corrupted) pairwise-comparison data and detects the corrupted rows:
//!
//! * [`dataset`] / [`design`] — the comparison data model, CSV I/O, and the
//!   matrix-free design operator with optional home-advantage column.
//! * [`hodge`] — least-squares scores via deflated conjugate gradient, and
//!   the projection onto the cyclic (gradient-free) space.
//! * [`tsr`] — triangle transitivity statistics for complete tournaments.
//! * [`lasso`] — sparse outlier estimation on the projected data, the
//!   regularization path, and debiased refits.
//! * [`scale`] — joint score/noise-scale estimation (Huber concomitant).
//! * [`cv`] — lambda selection by cross validation over random cyclic
//!   directions.
//! * [`lbi`] — Linearized Bregman Iteration solvers (full and projected),
//!   whose iterate paths play the role of a regularization path.
//! * [`diagnostics`] — model-consistency certificates (restricted
//!   eigenvalue, irrepresentability, outlier-magnitude condition) and
//!   support-recovery checks.
//! * [`sim`] / [`metrics`] — synthetic data generators, the experiment
//!   grid runner, and evaluation metrics (ROC/AUC, Kendall tau, aligned
//!   MSE).
//! * [`report`] — deterministic output formatting shared with the CLI.

pub mod cv;
pub mod dataset;
pub mod design;
pub mod diagnostics;
pub mod error;
pub mod hodge;
pub mod lasso;
pub mod lbi;
pub mod metrics;
pub mod report;
pub mod scale;
pub mod sim;
pub mod tsr;
mod util;

pub use cv::{cv_lambda, CvResult};
pub use dataset::{Comparison, ComparisonDataset, Connectivity, CsvSchema, Host};
pub use design::{build_design, DesignOperator};
pub use diagnostics::{
    consistency_report, sign_consistency_check, ConsistencyReport, SignCheck,
    MAX_DIAGNOSTIC_SUPPORT,
};
pub use error::{Error, Result};
pub use hodge::{
    laplacian_solve, project_cyclic, solve_l2, CyclicProjection, Method, RankingResult,
    DEFAULT_CG_TOL,
};
pub use lasso::{
    kkt_violation, lambda_max, lasso_path, refit_scores, solve_lasso, solve_lasso_accelerated,
    soft_threshold, top_fraction, EntryRecord, OutlierEstimate, PathParam, RefitMode,
    RegularizationPath,
};
pub use lbi::{
    lbi_path, lbi_run, LbiConfig, LbiOutcome, LbiRefit, LbiSolver, LbiVariant, RecordRule,
    StopCondition,
};
pub use metrics::{aligned_mse, kendall_tau, roc_auc, roc_curve, RocCurve, RocPoint};
pub use report::{
    entry_order_csv, fmt_float, grid_csv, mapping_csv, outlier_rows, path_csv, ranking_csv,
    to_canonical_json, truth_csv, OutlierRow,
};
pub use scale::{
    concomitant_scale, huber_consistency_constant, huber_rho, ScaleFit, DEFAULT_HUBER_M,
};
pub use sim::{
    default_truth_image, gen_flip, gen_gaussian, gen_image, run_grid, GenParams, GridCell,
    GridMethod, SyntheticInstance,
};
pub use tsr::tsr;
