//! Run-report plumbing: the JSON artifacts the CLI writes and the wall-clock
//! bookkeeping it prints to stderr.
//!
//! Serialized artifacts are canonical (fixed field order, 17-significant-digit
//! floats) so fixed-seed runs are byte-reproducible; wall-clock timing is
//! therefore kept out of the files and reported on stderr only.

use std::time::Instant;

use robrank::{OutlierRow, RankingResult};
use serde::{Deserialize, Serialize};

/// Full record of a `rank` run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    /// Estimator tag: L2, HLASSO, LBI, or LASSO+L2.
    pub method: String,
    pub parameters: Parameters,
    /// Items ordered best-first; positions are 1-based.
    pub ranking: Vec<RankRow>,
    /// Shared host-advantage coefficient, when one was fit.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub intercept: Option<f64>,
    /// Detected outliers sorted by entry rank (empty for plain least
    /// squares).
    pub outliers: Vec<OutlierRow>,
    /// Wall-clock per phase; diagnostics only (stderr), never serialized,
    /// so artifacts stay byte-reproducible.
    #[serde(skip)]
    pub timing: Vec<Phase>,
}

/// One ranked item.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankRow {
    pub label: String,
    pub position: usize,
    pub score: f64,
}

/// Everything that parameterized a run. Unused knobs are omitted from the
/// JSON rather than serialized as null.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Parameters {
    /// How lambda was chosen: explicit-lambda, top-frac, cross-validation,
    /// dichotomous, or concomitant-scale.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub selection: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub top_frac: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cv_folds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta_t: Option<f64>,
    /// Effective step `h = kappa * delta_t` of the iteration dynamics.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub preset: Option<String>,
    /// Stopping rule of the iteration dynamics, human-readable.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stop: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sigma: Option<f64>,
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub max_iters: Option<usize>,
    pub seed: u64,
    pub intercept: bool,
}

/// Outlier report written by `detect`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutlierReport {
    pub method: String,
    pub parameters: Parameters,
    pub outliers: Vec<OutlierRow>,
}

/// One timed phase.
#[derive(Debug, Clone)]
pub struct Phase {
    pub name: &'static str,
    pub seconds: f64,
}

/// Accumulates named wall-clock phases.
pub struct Timer {
    last: Instant,
    phases: Vec<Phase>,
}

impl Timer {
    pub fn start() -> Self {
        Timer {
            last: Instant::now(),
            phases: Vec::new(),
        }
    }

    /// Close the current phase under `name` and start the next one.
    pub fn mark(&mut self, name: &'static str) {
        let now = Instant::now();
        self.phases.push(Phase {
            name,
            seconds: now.duration_since(self.last).as_secs_f64(),
        });
        self.last = now;
    }

    pub fn into_phases(self) -> Vec<Phase> {
        self.phases
    }
}

/// Print per-phase wall-clock to stderr (never to the artifacts).
pub fn report_timing(phases: &[Phase]) {
    for phase in phases {
        eprintln!("timing {}: {:.3}s", phase.name, phase.seconds);
    }
}

/// Build the ordered ranking rows of a fitted result.
pub fn rank_rows(fit: &RankingResult, labels: &[String]) -> Vec<RankRow> {
    fit.order()
        .into_iter()
        .enumerate()
        .map(|(position, idx)| RankRow {
            label: labels[idx].clone(),
            position: position + 1,
            score: fit.theta[idx],
        })
        .collect()
}
