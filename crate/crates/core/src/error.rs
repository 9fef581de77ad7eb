//! Shared error type for the whole crate.
//!
//! Errors are split roughly into *data* problems (bad input files, graphs
//! that cannot support the requested computation) and *numerical* problems
//! (iteration caps, degenerate subproblems). The CLI maps the two families
//! to distinct exit codes.

use thiserror::Error;

/// Alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A CSV row that could not be parsed at all.
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },

    /// A comparison of an item against itself.
    #[error("line {line}: item {label:?} compared with itself")]
    SelfComparison { line: usize, label: String },

    /// NaN or infinite numeric field.
    #[error("line {line}: non-finite {field} value")]
    NonFiniteValue { line: usize, field: &'static str },

    /// Input with no comparison rows.
    #[error("input contains no comparison rows")]
    EmptyInput,

    /// Vector length does not match the operator.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The comparison graph must be connected for global scores to exist.
    /// `components` holds one representative item index per component,
    /// together with the component size.
    #[error("comparison graph is disconnected: {} components (size, representative item): {components:?}", components.len())]
    Disconnected { components: Vec<(usize, usize)> },

    /// Conjugate gradient ran out of iterations.
    #[error("conjugate gradient failed to reach tolerance {tol:e} in {iters} iterations (residual {residual:e})")]
    CgStalled { iters: usize, tol: f64, residual: f64 },

    /// Intercept requested but no row carries host information.
    #[error("intercept requested but the dataset has no host information")]
    MissingHostInfo,

    /// The projected intercept column is (numerically) a gradient flow, so
    /// the home-advantage coefficient is not identifiable.
    #[error("intercept column is numerically collinear with score differences (projected norm {norm:e})")]
    InterceptNotIdentifiable { norm: f64 },

    /// Step size violates the stability bound of the iteration.
    #[error("step size h = {h:e} violates the stability requirement h < {bound:e}")]
    StepSizeTooLarge { h: f64, bound: f64 },

    /// Concomitant-scale alternation collapsed to sigma = 0.
    #[error("scale estimate collapsed toward zero (residuals are exactly consistent)")]
    ScaleCollapse,

    /// Dropping rows disconnected the comparison graph.
    #[error("dropping {dropped} rows disconnects the graph: {} components (size, representative item): {components:?}", components.len())]
    DropDisconnects {
        dropped: usize,
        components: Vec<(usize, usize)>,
    },

    /// Diagnostics refuse very large candidate supports.
    #[error("candidate support has {size} rows, above the dense-diagnostics cap of {cap}")]
    SupportTooLarge { size: usize, cap: usize },

    /// Empty candidate support where a non-empty one is required.
    #[error("candidate support is empty")]
    EmptySupport,

    /// A support index outside 0..m.
    #[error("support index {index} out of range for {m} comparisons")]
    SupportOutOfRange { index: usize, m: usize },

    /// Cross validation needs at least as many probes as folds.
    #[error("cannot split {probes} probe directions into {folds} folds")]
    BadFoldCount { probes: usize, folds: usize },

    /// Transitivity statistics need every pair compared at least once.
    #[error("tournament is incomplete: items {i} and {j} were never compared")]
    IncompleteTournament { i: usize, j: usize },

    /// Transitivity statistics need a majority direction on every pair.
    #[error("tournament has an exactly tied pair: items {i} and {j}")]
    TiedPair { i: usize, j: usize },

    /// ROC analysis needs both classes present.
    #[error("degenerate truth labels: need at least one outlier and one inlier")]
    DegenerateTruth,

    /// Invalid user-supplied parameter (positive lambda, grid shape, ...).
    #[error("invalid parameter {name}: {reason}")]
    BadParameter { name: &'static str, reason: String },

    /// Generator could not produce a connected instance.
    #[error("failed to draw a connected comparison graph after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// CSV-level failure not attributable to a specific row.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by the input data (as opposed to numerical
    /// breakdown inside a solver). Used by the CLI for exit codes.
    pub fn is_data_error(&self) -> bool {
        !matches!(
            self,
            Error::CgStalled { .. }
                | Error::StepSizeTooLarge { .. }
                | Error::ScaleCollapse
                | Error::InterceptNotIdentifiable { .. }
        )
    }
}
