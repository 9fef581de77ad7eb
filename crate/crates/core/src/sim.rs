//! Synthetic comparison-data generators and the grid experiment runner.
//!
//! Three generators cover the standard stress tests for outlier-robust
//! ranking: dichotomous comparisons from a planted total order with a
//! fraction of preferences reversed ([`gen_flip`]), Gaussian score
//! differences with additive sparse corruptions ([`gen_gaussian`]), and
//! pixel-intensity differences on an image neighborhood graph
//! ([`gen_image`]). [`run_grid`] sweeps sample-number / outlier-percentage
//! cells and aggregates detection AUC over repeats.
//!
//! Every generator is a pure function of its parameters and seed:
//! regenerating with the same arguments reproduces the instance bitwise.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{connectivity_of, Comparison, ComparisonDataset};
use crate::design::build_design;
use crate::error::{Error, Result};
use crate::hodge::{CyclicProjection, DEFAULT_CG_TOL};
use crate::lasso::lasso_path;
use crate::lbi::{lbi_path, LbiConfig, StopCondition};
use crate::metrics::roc_auc;
use crate::util::splitmix64;

/// How many times a generator redraws the comparison graph before giving
/// up on connectivity.
const MAX_REDRAWS: usize = 100;

/// The arguments a synthetic instance was generated from (minus the seed,
/// which lives next to it). Kept on the instance so dumps are
/// self-describing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum GenParams {
    Flip {
        n: usize,
        comparisons: usize,
        flip_frac: f64,
    },
    Gaussian {
        n: usize,
        comparisons: usize,
        sigma: f64,
        outlier_frac: f64,
        outlier_mag: f64,
    },
    Image {
        width: usize,
        height: usize,
        radius: usize,
        sigma: f64,
        outlier_frac: f64,
        outlier_mag: f64,
    },
}

/// A generated dataset together with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticInstance {
    pub dataset: ComparisonDataset,
    /// Planted scores, one per item. Flip instances use equally spaced
    /// zero-sum scores encoding the planted total order; image instances
    /// store raw intensities (compare with a gauge-aligned metric).
    pub truth_theta: Vec<f64>,
    /// Planted sparse corruption, sorted by comparison index. For flip
    /// instances this is the difference the reversal added, `-2 Y_clean`.
    pub truth_gamma: Vec<(usize, f64)>,
    pub seed: u64,
    pub params: GenParams,
}

impl SyntheticInstance {
    /// Indices of the corrupted comparisons (the support of
    /// [`truth_gamma`](Self::truth_gamma)), sorted.
    pub fn truth_outliers(&self) -> Vec<usize> {
        self.truth_gamma.iter().map(|&(r, _)| r).collect()
    }

    /// Per-comparison outlier labels for ROC analysis.
    pub fn outlier_labels(&self) -> Vec<bool> {
        let mut labels = vec![false; self.dataset.n_comparisons()];
        for &(r, _) in &self.truth_gamma {
            labels[r] = true;
        }
        labels
    }
}

fn check_fraction(name: &'static str, value: f64) -> Result<()> {
    if !(value.is_finite() && (0.0..=1.0).contains(&value)) {
        return Err(Error::BadParameter {
            name,
            reason: format!("must be a fraction in [0, 1], got {value}"),
        });
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::BadParameter {
            name: "sigma",
            reason: format!("must be finite and nonnegative, got {sigma}"),
        });
    }
    Ok(())
}

/// Draw `count` uniform unordered pairs (with replacement across
/// comparisons) until the resulting graph is connected, up to
/// [`MAX_REDRAWS`] attempts.
fn connected_pairs(
    rng: &mut ChaCha8Rng,
    n: usize,
    count: usize,
) -> Result<Vec<(usize, usize)>> {
    for _ in 0..MAX_REDRAWS {
        let pairs: Vec<(usize, usize)> = (0..count)
            .map(|_| {
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                (i, j)
            })
            .collect();
        if connectivity_of(n, pairs.iter().copied()).is_connected() {
            return Ok(pairs);
        }
    }
    Err(Error::GenerationFailed {
        attempts: MAX_REDRAWS,
    })
}

/// Choose `count` distinct comparison rows to corrupt, sorted.
fn corrupted_rows(rng: &mut ChaCha8Rng, m: usize, count: usize) -> Vec<usize> {
    let mut rows = rand::seq::index::sample(rng, m, count).into_vec();
    rows.sort_unstable();
    rows
}

fn index_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// Dichotomous comparisons from a planted random total order, with a
/// fraction of the comparisons reversed.
///
/// `comparisons` pairs are sampled uniformly (multi-edges allowed, graph
/// redraws bounded for connectivity); each gets `Y = +1` when the planted
/// order prefers the first item, `-1` otherwise. Then
/// `floor(flip_frac * comparisons)` distinct rows are reversed; the planted
/// corruption recorded for row `r` is `-2 Y_clean[r]`.
pub fn gen_flip(
    n: usize,
    comparisons: usize,
    flip_frac: f64,
    seed: u64,
) -> Result<SyntheticInstance> {
    if n < 2 {
        return Err(Error::BadParameter {
            name: "n",
            reason: format!("need at least 2 items, got {n}"),
        });
    }
    if comparisons == 0 {
        return Err(Error::EmptyInput);
    }
    check_fraction("flip_frac", flip_frac)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Random total order: item order[0] is the strongest. Equally spaced
    // zero-sum scores encode it.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut truth_theta = vec![0.0; n];
    for (position, &item) in order.iter().enumerate() {
        truth_theta[item] = (n as f64 - 1.0) / 2.0 - position as f64;
    }

    let pairs = connected_pairs(&mut rng, n, comparisons)?;
    let flips = corrupted_rows(
        &mut rng,
        comparisons,
        (flip_frac * comparisons as f64).floor() as usize,
    );

    let mut rows: Vec<Comparison> = pairs
        .iter()
        .map(|&(i, j)| {
            let clean = if truth_theta[i] > truth_theta[j] { 1.0 } else { -1.0 };
            Comparison::new(i, j, clean)
        })
        .collect();
    let truth_gamma: Vec<(usize, f64)> = flips
        .iter()
        .map(|&r| {
            let delta = -2.0 * rows[r].value;
            rows[r].value = -rows[r].value;
            (r, delta)
        })
        .collect();

    Ok(SyntheticInstance {
        dataset: ComparisonDataset::new(index_labels(n), rows)?,
        truth_theta,
        truth_gamma,
        seed,
        params: GenParams::Flip {
            n,
            comparisons,
            flip_frac,
        },
    })
}

/// Gaussian score-difference comparisons with sparse additive outliers.
///
/// Planted scores are i.i.d. standard normal re-gauged to sum zero;
/// `Y = theta_i - theta_j + sigma * eps + gamma`, with
/// `floor(outlier_frac * comparisons)` rows corrupted by `±outlier_mag`
/// (random sign).
pub fn gen_gaussian(
    n: usize,
    comparisons: usize,
    sigma: f64,
    outlier_frac: f64,
    outlier_mag: f64,
    seed: u64,
) -> Result<SyntheticInstance> {
    if n < 2 {
        return Err(Error::BadParameter {
            name: "n",
            reason: format!("need at least 2 items, got {n}"),
        });
    }
    if comparisons == 0 {
        return Err(Error::EmptyInput);
    }
    check_sigma(sigma)?;
    check_fraction("outlier_frac", outlier_frac)?;
    if !outlier_mag.is_finite() {
        return Err(Error::BadParameter {
            name: "outlier_mag",
            reason: format!("must be finite, got {outlier_mag}"),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut truth_theta: Vec<f64> = (0..n)
        .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
        .collect();
    let mean = truth_theta.iter().sum::<f64>() / n as f64;
    for t in &mut truth_theta {
        *t -= mean;
    }

    let pairs = connected_pairs(&mut rng, n, comparisons)?;
    let noise: Vec<f64> = (0..comparisons)
        .map(|_| {
            sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
        })
        .collect();
    let outliers = corrupted_rows(
        &mut rng,
        comparisons,
        (outlier_frac * comparisons as f64).floor() as usize,
    );
    let truth_gamma: Vec<(usize, f64)> = outliers
        .iter()
        .map(|&r| {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            (r, sign * outlier_mag)
        })
        .collect();

    let mut rows: Vec<Comparison> = pairs
        .iter()
        .zip(&noise)
        .map(|(&(i, j), eps)| Comparison::new(i, j, truth_theta[i] - truth_theta[j] + eps))
        .collect();
    for &(r, g) in &truth_gamma {
        rows[r].value += g;
    }

    Ok(SyntheticInstance {
        dataset: ComparisonDataset::new(index_labels(n), rows)?,
        truth_theta,
        truth_gamma,
        seed,
        params: GenParams::Gaussian {
            n,
            comparisons,
            sigma,
            outlier_frac,
            outlier_mag,
        },
    })
}

/// Deterministic test image in `[0, 1]`: a horizontal ramp with a brighter
/// disc in the middle, so image experiments need no binary asset.
pub fn default_truth_image(width: usize, height: usize) -> Vec<f64> {
    let disc_radius = (width.min(height) as f64) / 4.0;
    let center_r = (height as f64 - 1.0) / 2.0;
    let center_c = (width as f64 - 1.0) / 2.0;
    let mut image = Vec::with_capacity(width * height);
    for r in 0..height {
        for c in 0..width {
            let ramp = if width > 1 {
                c as f64 / (width as f64 - 1.0)
            } else {
                0.0
            };
            let mut v = 0.15 + 0.6 * ramp;
            let dr = r as f64 - center_r;
            let dc = c as f64 - center_c;
            if dr * dr + dc * dc <= disc_radius * disc_radius {
                v += 0.2;
            }
            image.push(v.clamp(0.0, 1.0));
        }
    }
    image
}

/// Pixel-intensity comparisons on an image neighborhood graph.
///
/// One node per pixel; one comparison per unordered pixel pair within
/// Chebyshev distance `radius`, valued as the intensity difference plus
/// `N(0, sigma^2)` noise, with a `outlier_frac` fraction corrupted by
/// `±outlier_mag`. `truth_image` is row-major with intensities in `[0, 1]`;
/// `None` uses [`default_truth_image`].
pub fn gen_image(
    width: usize,
    height: usize,
    radius: usize,
    sigma: f64,
    outlier_frac: f64,
    outlier_mag: f64,
    truth_image: Option<&[f64]>,
    seed: u64,
) -> Result<SyntheticInstance> {
    if width * height < 2 {
        return Err(Error::BadParameter {
            name: "image",
            reason: format!("degenerate {width}x{height} image has nothing to compare"),
        });
    }
    if radius == 0 {
        return Err(Error::BadParameter {
            name: "radius",
            reason: "neighborhood radius must be at least 1".into(),
        });
    }
    check_sigma(sigma)?;
    check_fraction("outlier_frac", outlier_frac)?;
    if !outlier_mag.is_finite() {
        return Err(Error::BadParameter {
            name: "outlier_mag",
            reason: format!("must be finite, got {outlier_mag}"),
        });
    }
    let truth: Vec<f64> = match truth_image {
        Some(img) => {
            if img.len() != width * height {
                return Err(Error::BadParameter {
                    name: "truth_image",
                    reason: format!(
                        "expected {} pixels for {width}x{height}, got {}",
                        width * height,
                        img.len()
                    ),
                });
            }
            if img.iter().any(|v| !(v.is_finite() && (0.0..=1.0).contains(v))) {
                return Err(Error::BadParameter {
                    name: "truth_image",
                    reason: "intensities must lie in [0, 1]".into(),
                });
            }
            img.to_vec()
        }
        None => default_truth_image(width, height),
    };

    // Unordered neighbor pairs, first pixel earlier in row-major order:
    // offsets (0, 1..=radius) within the row plus all offsets with a
    // positive row step.
    let pixel = |r: usize, c: usize| r * width + c;
    let mut rows: Vec<Comparison> = Vec::new();
    let rad = radius as isize;
    for r in 0..height {
        for c in 0..width {
            for dc in 1..=radius {
                if c + dc < width {
                    let (a, b) = (pixel(r, c), pixel(r, c + dc));
                    rows.push(Comparison::new(a, b, truth[a] - truth[b]));
                }
            }
            for dr in 1..=radius {
                if r + dr >= height {
                    break;
                }
                for dc in -rad..=rad {
                    let cc = c as isize + dc;
                    if cc < 0 || cc as usize >= width {
                        continue;
                    }
                    let (a, b) = (pixel(r, c), pixel(r + dr, cc as usize));
                    rows.push(Comparison::new(a, b, truth[a] - truth[b]));
                }
            }
        }
    }
    let m = rows.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for row in &mut rows {
        row.value +=
            sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
    }
    let outliers = corrupted_rows(&mut rng, m, (outlier_frac * m as f64).floor() as usize);
    let truth_gamma: Vec<(usize, f64)> = outliers
        .iter()
        .map(|&r| {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            (r, sign * outlier_mag)
        })
        .collect();
    for &(r, g) in &truth_gamma {
        rows[r].value += g;
    }

    let labels = (0..height)
        .flat_map(|r| (0..width).map(move |c| format!("r{r}c{c}")))
        .collect();
    Ok(SyntheticInstance {
        dataset: ComparisonDataset::new(labels, rows)?,
        truth_theta: truth,
        truth_gamma,
        seed,
        params: GenParams::Image {
            width,
            height,
            radius,
            sigma,
            outlier_frac,
            outlier_mag,
        },
    })
}

/// Which detector a grid experiment runs.
#[derive(Debug, Clone)]
pub enum GridMethod {
    /// Regularization path with entry-order suspicion scores.
    Lasso,
    /// Early-stopped iteration path with the given configuration. A
    /// configuration without stop rules gets a per-cell support budget of
    /// `min(m, max(4 * planted, 64))` so every cell terminates while the
    /// planted outliers still have room to enter.
    Lbi(LbiConfig),
}

impl GridMethod {
    fn name(&self) -> &'static str {
        match self {
            GridMethod::Lasso => "lasso",
            GridMethod::Lbi(_) => "lbi",
        }
    }
}

/// One aggregated cell of a detection-performance grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCell {
    /// Sample number: comparisons drawn per instance.
    pub sn: usize,
    /// Outlier percentage as a fraction in [0, 1].
    pub op_frac: f64,
    pub mean_auc: f64,
    /// Sample standard deviation over repeats (0 for a single repeat).
    pub sd_auc: f64,
    pub repeats: usize,
    pub method: String,
}

/// Detection AUC of one method on one flip instance.
fn instance_auc(method: &GridMethod, instance: &SyntheticInstance) -> Result<f64> {
    let op = build_design(&instance.dataset, false)?;
    let y = op.scale_data(&instance.dataset.values())?;
    let path = match method {
        GridMethod::Lasso => {
            let proj = CyclicProjection::new(&op, DEFAULT_CG_TOL)?;
            lasso_path(&proj, &y, None, 1e-8, 5_000)?
        }
        GridMethod::Lbi(config) => {
            let mut config = config.clone();
            if config.stop.is_empty() {
                let planted = instance.truth_gamma.len();
                let budget = (4 * planted).max(64).min(op.n_rows());
                config.stop = vec![StopCondition::SupportBudget(budget)];
            }
            lbi_path(&op, &y, &config)?
        }
    };
    roc_auc(&path.suspicion_scores(), &instance.outlier_labels())
}

/// Sweep (sample number, outlier percentage) cells of the reversed-
/// comparison experiment, aggregating detection AUC over `repeats`
/// regenerated instances per cell.
///
/// Per-repeat seeds are derived deterministically from `seed` (master seed
/// XOR a bit-mixed stream index), so the whole table is reproducible; the
/// comparison graph is resampled on every repeat.
pub fn run_grid(
    method: &GridMethod,
    n: usize,
    sn_list: &[usize],
    op_list: &[f64],
    repeats: usize,
    seed: u64,
) -> Result<Vec<GridCell>> {
    if repeats == 0 {
        return Err(Error::BadParameter {
            name: "repeats",
            reason: "need at least one repeat per cell".into(),
        });
    }
    let mut cells = Vec::with_capacity(sn_list.len() * op_list.len());
    for (cell_index, (&sn, &op_frac)) in sn_list
        .iter()
        .flat_map(|sn| op_list.iter().map(move |op| (sn, op)))
        .enumerate()
    {
        let aucs: Vec<f64> = (0..repeats)
            .into_par_iter()
            .map(|rep| {
                let stream = (cell_index * repeats + rep) as u64;
                let instance = gen_flip(n, sn, op_frac, seed ^ splitmix64(stream))?;
                instance_auc(method, &instance)
            })
            .collect::<Result<_>>()?;
        let mean = aucs.iter().sum::<f64>() / repeats as f64;
        let sd = if repeats > 1 {
            (aucs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>()
                / (repeats as f64 - 1.0))
                .sqrt()
        } else {
            0.0
        };
        cells.push(GridCell {
            sn,
            op_frac,
            mean_auc: mean,
            sd_auc: sd,
            repeats,
            method: method.name().to_string(),
        });
    }
    Ok(cells)
}
