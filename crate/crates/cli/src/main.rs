//! `robrank` — global ranking and outlier detection for pairwise
//! comparison data.
//!
//! Subcommands: `rank`, `detect`, `path`, `simulate`, `grid`, `image-sim`,
//! `check`, `tsr`. Machine outputs go to files under `--out`; stdout carries
//! a short human summary (suppressed by `--quiet`); stderr carries wall-clock
//! timing. Every subcommand is deterministic for a fixed `--seed`: repeated
//! runs reproduce stdout and every output file byte-for-byte.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (malformed or
//! disconnected input), 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

mod exec;
mod report;

#[derive(Parser)]
#[command(
    name = "robrank",
    version,
    about = "Rank items from pairwise comparisons and detect outlier comparisons",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,

    /// Directory for output files (created if missing).
    #[arg(long, global = true, default_value = ".", value_name = "DIR")]
    pub out: PathBuf,

    /// Suppress the stdout summary (files are still written).
    #[arg(long, global = true)]
    pub quiet: bool,

    /// Random seed for every stochastic step (generators, cross-validation).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Convergence tolerance for the iterative solvers.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,

    /// Iteration cap for the iterative solvers (default depends on the
    /// solver: 50000 for the sparse-outlier problem, the configuration's
    /// own cap for the iteration-path solver).
    #[arg(long, global = true, value_name = "N")]
    pub max_iters: Option<usize>,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Fit global scores from a comparison CSV; writes ranking.csv and
    /// report.json.
    Rank {
        /// Comparison CSV (columns item_i,item_j,value[,rater][,weight][,host]).
        input: PathBuf,
        /// Estimator: plain least squares, outlier-corrected refit,
        /// iteration-path dynamics, or detect-then-drop least squares.
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Fit a shared host-advantage intercept (input must carry host info).
        #[arg(long)]
        intercept: bool,
        #[command(flatten)]
        selection: SelectionArgs,
        #[command(flatten)]
        lbi: LbiArgs,
    },
    /// Detect outlier comparisons in a comparison CSV; writes outliers.json.
    Detect {
        input: PathBuf,
        #[arg(long)]
        intercept: bool,
        #[command(flatten)]
        selection: SelectionArgs,
    },
    /// Export a full regularization or iteration path; writes path.csv and
    /// entry_order.csv.
    Path {
        input: PathBuf,
        /// Path driver: lambda grid (lasso) or iteration dynamics (lbi).
        #[arg(long, value_enum)]
        solver: SolverArg,
        #[arg(long)]
        intercept: bool,
        #[command(flatten)]
        selection: SelectionArgs,
        #[command(flatten)]
        lbi: LbiArgs,
    },
    /// Generate a synthetic comparison instance; writes comparisons.csv and
    /// the planted-corruption sidecar truth.csv.
    Simulate {
        /// Generator family.
        #[arg(long, value_enum, default_value_t = GenArg::Flip)]
        gen: GenArg,
        /// Number of items.
        #[arg(long, default_value_t = 16)]
        n: usize,
        /// Number of comparisons.
        #[arg(long, default_value_t = 1000)]
        sn: usize,
        /// Outlier fraction (flipped or corrupted comparisons).
        #[arg(long, default_value_t = 0.05)]
        op: f64,
        /// Gaussian noise level (gaussian generator only).
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        /// Outlier magnitude (gaussian generator only).
        #[arg(long, default_value_t = 5.0)]
        mag: f64,
    },
    /// Run the synthetic benchmark grid; writes grid.csv with one row per
    /// (SN, OP) cell.
    Grid {
        /// Detection method under test.
        #[arg(long, value_enum)]
        method: GridMethodArg,
        #[arg(long, default_value_t = 16)]
        n: usize,
        /// Comparison counts, comma separated (e.g. 1000,2000).
        #[arg(long, value_delimiter = ',', default_value = "1000")]
        sn: Vec<usize>,
        /// Outlier fractions, comma separated (e.g. 0.05,0.2,0.4).
        #[arg(long, value_delimiter = ',', default_value = "0.05")]
        op: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        repeats: usize,
        #[command(flatten)]
        lbi: LbiArgs,
    },
    /// Reconstruct a synthetic image from noisy pairwise intensity
    /// differences; writes image_report.json and reconstruction.csv.
    ImageSim {
        #[arg(long, default_value_t = 50)]
        width: usize,
        #[arg(long, default_value_t = 50)]
        height: usize,
        /// Chebyshev neighborhood radius for pixel pairs.
        #[arg(long, default_value_t = 2)]
        radius: usize,
        #[arg(long, default_value_t = 0.05)]
        sigma: f64,
        /// Fraction of comparisons corrupted by +/- mag outliers.
        #[arg(long, default_value_t = 0.1)]
        op: f64,
        #[arg(long, default_value_t = 0.5)]
        mag: f64,
        #[command(flatten)]
        lbi: LbiArgs,
    },
    /// Evaluate recovery-condition diagnostics for a candidate outlier
    /// support; writes consistency.json.
    Check {
        input: PathBuf,
        /// CSV whose first column lists candidate comparison indices
        /// (entry_order.csv works as-is).
        #[arg(long, value_name = "FILE")]
        support: PathBuf,
        /// Noise level for the recovery bounds (default: estimated from the
        /// least-squares residual).
        #[arg(long)]
        sigma: Option<f64>,
        /// Planted-corruption sidecar (truth.csv) enabling the
        /// signal-strength condition.
        #[arg(long, value_name = "FILE")]
        truth: Option<PathBuf>,
        /// Damping of the iteration-path solver, for its step-size bound.
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        intercept: bool,
    },
    /// Transitivity satisfaction rate of the majority-vote tournament;
    /// writes tsr.json.
    Tsr { input: PathBuf },
}

/// Estimators for `rank`.
#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Least squares on all comparisons.
    L2,
    /// Sparse outlier estimate, then least squares on corrected data.
    Hlasso,
    /// Iteration-path dynamics (early stopping as implicit regularization).
    Lbi,
    /// Sparse outlier estimate, then least squares with the support dropped.
    LassoL2,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Lasso,
    Lbi,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum GenArg {
    /// Planted total order with dichotomous comparisons, a fraction flipped.
    Flip,
    /// Gaussian scores and noise with sparse +/- mag corruptions.
    Gaussian,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum GridMethodArg {
    Lasso,
    Lbi,
}

/// How the regularization level is chosen, in precedence order:
/// an explicit `--lambda` wins, then `--top-frac`, then `--cv`; with none
/// given, dichotomous (+/-1) data uses lambda = 1 and anything else fits the
/// noise scale and its matched lambda jointly.
#[derive(Args)]
pub struct SelectionArgs {
    /// Fixed regularization level.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Flag the earliest-entering fraction of comparisons as outliers.
    #[arg(long, value_name = "FRAC")]
    pub top_frac: Option<f64>,
    /// Choose lambda by cross-validation over random cyclic directions.
    #[arg(long)]
    pub cv: bool,
}

/// Iteration-path dynamics parameters (rank/path `--method lbi`, grid,
/// image-sim).
#[derive(Args)]
pub struct LbiArgs {
    /// Damping: larger values shrink less but need more iterations.
    #[arg(long, default_value_t = 50.0)]
    pub kappa: f64,
    /// Time step (default: half the stability bound for the variant).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Named (kappa, dt) preset: pcvqa, nba, or tennis (joint dynamics).
    #[arg(long)]
    pub preset: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes; everything else is a
            // usage error.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match exec::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
