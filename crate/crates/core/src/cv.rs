//! Cross-validation for the outlier regularization level.
//!
//! Ordinary CV cannot hold out comparison rows here: removing rows changes
//! the projection `P` itself and with it the meaning of the remaining
//! residuals. Instead the cyclic space itself is split: `l = dim(cyclic)`
//! standard normal vectors are pushed through `P` and orthonormalized,
//! yielding a random orthonormal basis of the cyclic space (a random
//! rotation of the kernel basis, built matrix-free). Basis directions are
//! then partitioned into folds; each fold's held-out directions score an
//! outlier estimate fitted on the remaining ones.
//!
//! Orthonormality is what makes the held-out score honest: fitting the
//! training directions says nothing about orthogonal ones, so interpolating
//! noise at small lambda is punished rather than rewarded. Training
//! objectives are scaled by `l / |T|` so each fold sees the same lambda
//! scale as the full problem (whose Gram is the sum over the whole basis).

use crate::error::{Error, Result};
use crate::hodge::CyclicProjection;
use crate::lasso::soft_threshold;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// Cross-validation summary over a lambda grid (sorted descending).
#[derive(Debug, Clone)]
pub struct CvResult {
    /// The lambda grid, largest first.
    pub grid: Vec<f64>,
    /// Held-out loss per fold and grid point: `fold_losses[fold][k]`.
    pub fold_losses: Vec<Vec<f64>>,
    /// Mean held-out loss per grid point.
    pub mean_loss: Vec<f64>,
    /// Standard error (over folds) per grid point.
    pub se_loss: Vec<f64>,
    /// Grid index minimizing the mean held-out loss (ties: larger lambda).
    pub selected_index: usize,
    /// The minimizing lambda.
    pub selected: f64,
    /// Largest lambda whose mean loss is within one standard error of the
    /// minimum.
    pub one_se_index: usize,
    pub one_se: f64,
    /// False when some inner solve hit its iteration cap.
    pub all_converged: bool,
}

/// One fold's training problem: minimize
/// `1/2 * (1/|T|) sum_{t in T} (u_t^T (Y - gamma))^2 + lambda ||gamma||_1`
/// by proximal gradient with an explicitly estimated step size.
struct FoldProblem<'a> {
    probes: &'a [Vec<f64>],
    train: Vec<usize>,
    /// `u_t^T Y` for each training probe (aligned with `train`).
    targets: Vec<f64>,
    step: f64,
}

impl<'a> FoldProblem<'a> {
    fn new(probes: &'a [Vec<f64>], y: &[f64], fold: usize, folds: usize) -> Self {
        let train: Vec<usize> = (0..probes.len()).filter(|t| t % folds != fold).collect();
        let targets: Vec<f64> = train.iter().map(|&t| dot(&probes[t], y)).collect();
        // With orthonormal directions the training Gram is a projection
        // scaled by l / |T|; 1 / (that scale) is a valid step size.
        let scale = probes.len() as f64 / train.len() as f64;
        FoldProblem {
            probes,
            train,
            targets,
            step: 1.0 / (scale * 1.0000001),
        }
    }

    /// Gradient of the smooth part at `gamma`, written into `out`.
    fn gradient(&self, gamma: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let scale = self.probes.len() as f64 / self.train.len() as f64;
        for (&t, &c) in self.train.iter().zip(&self.targets) {
            let u = &self.probes[t];
            let w = scale * (dot(u, gamma) - c);
            for (o, ui) in out.iter_mut().zip(u) {
                *o += w * ui;
            }
        }
    }

    /// KKT stationarity violation at `gamma` given its gradient.
    fn kkt(&self, gamma: &[f64], grad: &[f64], lambda: f64) -> f64 {
        gamma
            .iter()
            .zip(grad)
            .map(|(&g, &d)| {
                if g != 0.0 {
                    (d + lambda * g.signum()).abs()
                } else {
                    (d.abs() - lambda).max(0.0)
                }
            })
            .fold(0.0, f64::max)
    }

    /// Solve at one lambda, warm-started in place. Returns convergence.
    fn solve(&self, y: &[f64], lambda: f64, gamma: &mut [f64], tol: f64, max_iter: usize) -> bool {
        let m = gamma.len();
        let mut diff = vec![0.0; m];
        let mut grad = vec![0.0; m];
        for iter in 0..=max_iter {
            for r in 0..m {
                diff[r] = y[r] - gamma[r];
            }
            // Gradient wrt gamma is minus the gradient wrt the residual.
            self.gradient(gamma, &mut grad);
            if self.kkt(gamma, &grad, lambda) <= tol {
                return true;
            }
            if iter == max_iter {
                return false;
            }
            for r in 0..m {
                gamma[r] = soft_threshold(gamma[r] - self.step * grad[r], self.step * lambda);
            }
        }
        // Unreachable: the loop returns from inside.
        false
    }

    /// Held-out loss of `gamma` on this fold's validation probes.
    fn validation_loss(&self, y: &[f64], gamma: &[f64], fold: usize, folds: usize) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (t, u) in self.probes.iter().enumerate() {
            if t % folds == fold {
                let mut r = 0.0;
                for i in 0..y.len() {
                    r += u[i] * (y[i] - gamma[i]);
                }
                sum += r * r;
                count += 1;
            }
        }
        sum / count as f64
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Random orthonormal basis of the cyclic space: projected standard
/// normals, orthonormalized by classical Gram-Schmidt with
/// re-orthogonalization. Deterministic in `seed`.
pub(crate) fn random_cyclic_basis(
    proj: &CyclicProjection<'_>,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let m = proj.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut scratch = proj.scratch();
    let mut v = vec![0.0; m];
    while basis.len() < count {
        let mut accepted = false;
        // A fresh Gaussian is almost surely fine; the retry guards the
        // astronomically rare draw that is numerically dependent on the
        // directions already taken.
        for _ in 0..100 {
            let noise: Vec<f64> = (0..m)
                .map(|_| {
                    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
                })
                .collect();
            proj.project_with(&noise, &mut v, &mut scratch)?;
            let initial = dot(&v, &v).sqrt();
            for _ in 0..2 {
                let coeffs: Vec<f64> = basis.par_iter().map(|u| dot(u, &v)).collect();
                for (u, c) in basis.iter().zip(&coeffs) {
                    for (vi, ui) in v.iter_mut().zip(u) {
                        *vi -= c * ui;
                    }
                }
            }
            let norm = dot(&v, &v).sqrt();
            if norm > 1e-8 * initial.max(1e-300) {
                basis.push(v.iter().map(|x| x / norm).collect());
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(Error::BadParameter {
                name: "probes",
                reason: "could not draw independent cyclic directions".into(),
            });
        }
    }
    Ok(basis)
}

/// Select lambda by cross-validation over random cyclic directions.
///
/// Draws `l = cyclic_dim` projected standard-normal probes (deterministic
/// in `seed`), splits them round-robin into `folds` groups, fits the
/// outlier vector on each training group along the grid (largest lambda
/// first, warm-started), and scores the held-out group. The default grid
/// is the same 100-point geometric grid used by the regularization path.
pub fn cv_lambda(
    proj: &CyclicProjection<'_>,
    y: &[f64],
    folds: usize,
    grid: Option<&[f64]>,
    seed: u64,
    tol: f64,
    max_iter: usize,
) -> Result<CvResult> {
    let m = proj.len();
    if y.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: y.len(),
        });
    }
    if folds < 2 {
        return Err(Error::BadParameter {
            name: "folds",
            reason: format!("cross-validation needs at least 2 folds, got {folds}"),
        });
    }
    let l = proj.cyclic_dim();
    if l < folds {
        return Err(Error::BadFoldCount { probes: l, folds });
    }

    let grid: Vec<f64> = match grid {
        Some(g) => {
            if g.is_empty() {
                return Err(Error::BadParameter {
                    name: "grid",
                    reason: "lambda grid is empty".into(),
                });
            }
            for &lam in g {
                if !(lam > 0.0 && lam.is_finite()) {
                    return Err(Error::BadParameter {
                        name: "grid",
                        reason: format!("lambda must be positive and finite, got {lam}"),
                    });
                }
            }
            let mut g = g.to_vec();
            g.sort_by(|a, b| b.partial_cmp(a).expect("finite lambdas"));
            g.dedup();
            g
        }
        None => {
            let lmax = crate::lasso::lambda_max(proj, y)?;
            let y_inf = y.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            let floor = 1e-6 * y_inf.max(1.0);
            let hi = lmax.max(floor);
            let ratio = 1e-3f64.powf(1.0 / 99.0);
            (0..100).map(|k| hi * ratio.powi(k)).collect()
        }
    };

    let probes = random_cyclic_basis(proj, l, seed)?;

    // Each fold walks the full grid with warm starts; folds in parallel.
    let fold_results: Vec<(Vec<f64>, bool)> = (0..folds)
        .into_par_iter()
        .map(|fold| {
            let problem = FoldProblem::new(&probes, y, fold, folds);
            let mut gamma = vec![0.0; m];
            let mut losses = Vec::with_capacity(grid.len());
            let mut ok = true;
            for &lam in &grid {
                ok &= problem.solve(y, lam, &mut gamma, tol, max_iter);
                losses.push(problem.validation_loss(y, &gamma, fold, folds));
            }
            (losses, ok)
        })
        .collect();

    let all_converged = fold_results.iter().all(|(_, ok)| *ok);
    let fold_losses: Vec<Vec<f64>> = fold_results.into_iter().map(|(l, _)| l).collect();
    let mut mean_loss = Vec::with_capacity(grid.len());
    let mut se_loss = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let vals: Vec<f64> = fold_losses.iter().map(|f| f[k]).collect();
        let mean = vals.iter().sum::<f64>() / folds as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (folds - 1) as f64;
        mean_loss.push(mean);
        se_loss.push((var / folds as f64).sqrt());
    }

    // Ties resolve toward the larger lambda (earlier index).
    let selected_index = (0..grid.len())
        .min_by(|&a, &b| mean_loss[a].partial_cmp(&mean_loss[b]).expect("finite"))
        .expect("grid nonempty");
    let threshold = mean_loss[selected_index] + se_loss[selected_index];
    let one_se_index = (0..grid.len())
        .find(|&k| mean_loss[k] <= threshold)
        .expect("selected index satisfies the bound");

    Ok(CvResult {
        selected: grid[selected_index],
        selected_index,
        one_se: grid[one_se_index],
        one_se_index,
        grid,
        fold_losses,
        mean_loss,
        se_loss,
        all_converged,
    })
}
