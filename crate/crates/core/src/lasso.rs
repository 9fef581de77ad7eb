//! Sparse outlier estimation on the cyclic component of comparison data.
//!
//! With `P` the cyclic projection and `Y` the (weighted) data, an outlier
//! vector is estimated by
//!
//! ```text
//! min over gamma:  1/2 ||P (Y - gamma)||^2  +  lambda ||gamma||_1
//! ```
//!
//! Because `P` is an orthogonal projection the smooth part has a
//! 1-Lipschitz gradient, so plain proximal gradient descent with unit step
//! (one projection per iteration) is monotone and needs no line search.
//! Iterations stop when the KKT residual drops below tolerance, which makes
//! the reported optimality gap explicit. The regularization path is solved
//! on a decreasing grid with warm starts and records the order in which
//! coordinates first become nonzero — the ranking used everywhere else for
//! "which rows look corrupted".

use crate::design::DesignOperator;
use crate::error::{Error, Result};
use crate::hodge::{solve_l2, CyclicProjection, Method, RankingResult};

/// Soft-thresholding: `sign(x) * max(|x| - t, 0)`.
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// A sparse outlier estimate at one regularization level.
///
/// `gamma` holds only the nonzero coordinates, sorted by comparison index;
/// the support is exactly the set of stored indices. For estimates taken
/// from an iteration path, `lambda` holds the path parameter (the algorithm
/// time `t`), and `kkt_violation` is `None` because no single lambda defines
/// stationarity there.
#[derive(Debug, Clone, PartialEq)]
pub struct OutlierEstimate {
    /// Regularization level lambda (or path time for iteration paths).
    pub lambda: f64,
    /// Nonzero coordinates `(comparison_index, gamma_value)`, index-sorted.
    pub gamma: Vec<(usize, f64)>,
    /// `1/2 ||P(Y - gamma)||^2 + lambda ||gamma||_1` at the estimate (for
    /// iteration paths, just the quadratic part).
    pub objective: f64,
    /// Largest KKT stationarity violation, when lambda-stationarity applies.
    pub kkt_violation: Option<f64>,
    /// False when the iteration cap was hit before reaching tolerance.
    pub converged: bool,
}

impl OutlierEstimate {
    /// Sorted support indices.
    pub fn support(&self) -> Vec<usize> {
        self.gamma.iter().map(|&(r, _)| r).collect()
    }

    /// Dense copy of gamma with explicit zeros.
    pub fn dense(&self, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m];
        for &(r, v) in &self.gamma {
            out[r] = v;
        }
        out
    }
}

fn sparsify(gamma: &[f64]) -> Vec<(usize, f64)> {
    gamma
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v != 0.0)
        .map(|(r, &v)| (r, v))
        .collect()
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::BadParameter {
            name: "lambda",
            reason: format!("must be positive and finite, got {lambda}"),
        });
    }
    Ok(())
}

/// Largest entry of `|P Y|`: the smallest lambda at which the outlier
/// estimate is exactly zero.
pub fn lambda_max(proj: &CyclicProjection<'_>, y: &[f64]) -> Result<f64> {
    let py = proj.project(y)?;
    Ok(py.iter().fold(0.0f64, |a, &b| a.max(b.abs())))
}

/// KKT stationarity residual of `gamma` (dense, length `m`) at `lambda`:
/// with `g = -P(Y - gamma)`, the largest of `|g_r + lambda * sign(gamma_r)|`
/// on the support and `max(0, |g_r| - lambda)` off it. Zero exactly at the
/// optimum.
pub fn kkt_violation(
    proj: &CyclicProjection<'_>,
    y: &[f64],
    gamma: &[f64],
    lambda: f64,
) -> Result<f64> {
    check_lambda(lambda)?;
    if gamma.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: gamma.len(),
        });
    }
    let diff: Vec<f64> = y.iter().zip(gamma).map(|(a, b)| a - b).collect();
    let pr = proj.project(&diff)?;
    Ok(kkt_from_residual(&pr, gamma, lambda))
}

/// KKT residual given the already-projected residual `pr = P(Y - gamma)`.
fn kkt_from_residual(pr: &[f64], gamma: &[f64], lambda: f64) -> f64 {
    let mut worst = 0.0f64;
    for (r, &g) in gamma.iter().enumerate() {
        let viol = if g != 0.0 {
            (lambda * g.signum() - pr[r]).abs()
        } else {
            (pr[r].abs() - lambda).max(0.0)
        };
        worst = worst.max(viol);
    }
    worst
}

/// Proximal gradient descent for the projected outlier problem. `warm`
/// optionally seeds the iterate (dense, length `m`). Returns a converged
/// flag instead of erroring when `max_iter` is reached.
pub fn solve_lasso(
    proj: &CyclicProjection<'_>,
    y: &[f64],
    lambda: f64,
    tol: f64,
    max_iter: usize,
    warm: Option<&[f64]>,
) -> Result<OutlierEstimate> {
    solve_lasso_impl(proj, y, lambda, tol, max_iter, warm, false, |_| {})
}

/// FISTA-accelerated variant of [`solve_lasso`]. Iterations are not
/// individually monotone; the KKT criterion still decides convergence.
pub fn solve_lasso_accelerated(
    proj: &CyclicProjection<'_>,
    y: &[f64],
    lambda: f64,
    tol: f64,
    max_iter: usize,
    warm: Option<&[f64]>,
) -> Result<OutlierEstimate> {
    solve_lasso_impl(proj, y, lambda, tol, max_iter, warm, true, |_| {})
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn solve_lasso_impl(
    proj: &CyclicProjection<'_>,
    y: &[f64],
    lambda: f64,
    tol: f64,
    max_iter: usize,
    warm: Option<&[f64]>,
    accelerate: bool,
    mut on_objective: impl FnMut(f64),
) -> Result<OutlierEstimate> {
    check_lambda(lambda)?;
    let m = proj.len();
    if y.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: y.len(),
        });
    }
    if let Some(w) = warm {
        if w.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: w.len(),
            });
        }
    }

    let mut scratch = proj.scratch();
    let mut gamma: Vec<f64> = warm.map(|w| w.to_vec()).unwrap_or_else(|| vec![0.0; m]);
    // FISTA extrapolation point; aliases gamma when not accelerating.
    let mut look = gamma.clone();
    let mut gamma_prev = gamma.clone();
    let mut t_momentum = 1.0f64;

    let mut diff = vec![0.0; m];
    let mut pr = vec![0.0; m];

    let mut best: Option<(f64, Vec<f64>, f64)> = None; // (kkt, gamma, objective)
    for iter in 0..=max_iter {
        // Residual at the current iterate (not the extrapolated point), so
        // the KKT test and the reported objective refer to `gamma` itself.
        for r in 0..m {
            diff[r] = y[r] - gamma[r];
        }
        proj.project_with(&diff, &mut pr, &mut scratch)?;
        let quad = 0.5 * pr.iter().map(|v| v * v).sum::<f64>();
        let l1: f64 = gamma.iter().map(|v| v.abs()).sum();
        let objective = quad + lambda * l1;
        on_objective(objective);
        let kkt = kkt_from_residual(&pr, &gamma, lambda);
        if best.as_ref().is_none_or(|(k, _, _)| kkt < *k) {
            best = Some((kkt, gamma.clone(), objective));
        }
        if kkt <= tol {
            return Ok(OutlierEstimate {
                lambda,
                gamma: sparsify(&gamma),
                objective,
                kkt_violation: Some(kkt),
                converged: true,
            });
        }
        if iter == max_iter {
            break;
        }

        if accelerate {
            // Gradient step taken from the extrapolated point.
            for r in 0..m {
                diff[r] = y[r] - look[r];
            }
            proj.project_with(&diff, &mut pr, &mut scratch)?;
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_momentum * t_momentum).sqrt());
            let mix = (t_momentum - 1.0) / t_next;
            for r in 0..m {
                let next = soft_threshold(look[r] + pr[r], lambda);
                look[r] = next + mix * (next - gamma_prev[r]);
                gamma_prev[r] = gamma[r];
                gamma[r] = next;
            }
            t_momentum = t_next;
        } else {
            for r in 0..m {
                gamma[r] = soft_threshold(gamma[r] + pr[r], lambda);
            }
        }
    }

    let (kkt, gamma, objective) = best.expect("at least one iterate evaluated");
    Ok(OutlierEstimate {
        lambda,
        gamma: sparsify(&gamma),
        objective,
        kkt_violation: Some(kkt),
        converged: false,
    })
}

/// Whether path points are indexed by decreasing lambda or increasing
/// algorithm time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathParam {
    Lambda,
    Time,
}

/// First appearance of a coordinate along a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntryRecord {
    /// Grid index (lambda paths) or iteration count (time paths). For time
    /// paths this is finer than the recorded points: a coordinate's entry
    /// is tracked even between recordings.
    pub step: usize,
    /// Parameter value at entry (the lambda, or the time `t`).
    pub param: f64,
}

/// A solved regularization path plus per-coordinate entry bookkeeping.
#[derive(Debug, Clone)]
pub struct RegularizationPath {
    /// Estimates in path order: lambda strictly decreasing, or time
    /// strictly increasing.
    pub points: Vec<OutlierEstimate>,
    /// Per-comparison first-nonzero record; `None` = never entered.
    pub entry: Vec<Option<EntryRecord>>,
    pub param: PathParam,
}

impl RegularizationPath {
    /// Comparisons that entered, ordered by entry step (ties by index),
    /// i.e. most-suspicious-first. Ranks are this order, 1-based.
    pub fn ranked_entries(&self) -> Vec<usize> {
        let mut entered: Vec<(usize, usize)> = self
            .entry
            .iter()
            .enumerate()
            .filter_map(|(r, e)| e.map(|rec| (rec.step, r)))
            .collect();
        entered.sort_unstable();
        entered.into_iter().map(|(_, r)| r).collect()
    }

    /// Per-comparison suspicion score for ROC analysis: higher = entered
    /// earlier. Never-entered coordinates share `-inf` (one tie group).
    pub fn suspicion_scores(&self) -> Vec<f64> {
        self.entry
            .iter()
            .map(|e| match (self.param, e) {
                (_, None) => f64::NEG_INFINITY,
                (PathParam::Lambda, Some(rec)) => rec.param,
                (PathParam::Time, Some(rec)) => -rec.param,
            })
            .collect()
    }
}

/// Geometric grid of `count` points from `hi` down to `lo_frac * hi`.
fn geometric_grid(hi: f64, lo_frac: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![hi];
    }
    let ratio = lo_frac.powf(1.0 / (count as f64 - 1.0));
    (0..count).map(|k| hi * ratio.powi(k as i32)).collect()
}

/// Solve the outlier problem along a decreasing lambda grid with warm
/// starts.
///
/// The default grid is 100 geometric points from `lambda_max = ||P Y||_inf`
/// down to `1e-3 * lambda_max`. Data whose cyclic part is numerically zero
/// (`lambda_max <= 1e-6 * max(1, ||Y||_inf)`) gets a nominal grid at that
/// floor instead, on which every support is empty — asking for outliers in
/// exactly consistent data is answered with "none" rather than an error.
pub fn lasso_path(
    proj: &CyclicProjection<'_>,
    y: &[f64],
    grid: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<RegularizationPath> {
    let m = proj.len();
    if y.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: y.len(),
        });
    }

    let grid: Vec<f64> = match grid {
        Some(g) => {
            if g.is_empty() {
                return Err(Error::BadParameter {
                    name: "grid",
                    reason: "lambda grid is empty".into(),
                });
            }
            for &l in g {
                check_lambda(l)?;
            }
            let mut g = g.to_vec();
            g.sort_by(|a, b| b.partial_cmp(a).expect("finite lambdas"));
            g.dedup();
            g
        }
        None => {
            let lmax = lambda_max(proj, y)?;
            let y_inf = y.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            let floor = 1e-6 * y_inf.max(1.0);
            geometric_grid(lmax.max(floor), 1e-3, 100)
        }
    };

    let mut points = Vec::with_capacity(grid.len());
    let mut entry: Vec<Option<EntryRecord>> = vec![None; m];
    let mut warm = vec![0.0; m];
    for (step, &lam) in grid.iter().enumerate() {
        let est = solve_lasso(proj, y, lam, tol, max_iter, Some(&warm))?;
        warm.fill(0.0);
        for &(r, v) in &est.gamma {
            warm[r] = v;
            if entry[r].is_none() {
                entry[r] = Some(EntryRecord { step, param: lam });
            }
        }
        points.push(est);
    }
    Ok(RegularizationPath {
        points,
        entry,
        param: PathParam::Lambda,
    })
}

/// The `ceil(p * m)` most-suspicious comparisons by path entry order (ties
/// broken by comparison index). Never-entered coordinates are not padded
/// in: asking for more than ever entered returns the full entered set.
pub fn top_fraction(path: &RegularizationPath, p: f64) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(Error::BadParameter {
            name: "top_fraction",
            reason: format!("fraction must lie in [0, 1], got {p}"),
        });
    }
    let m = path.entry.len();
    let want = (p * m as f64).ceil() as usize;
    let mut ranked = path.ranked_entries();
    ranked.truncate(want);
    Ok(ranked)
}

/// How to turn an outlier estimate into final scores.
pub enum RefitMode<'a> {
    /// Subtract the estimated outliers and least-squares fit all rows.
    CorrectedData { gamma: &'a [(usize, f64)] },
    /// Drop the support rows entirely and fit the remainder (debiased).
    Drop { support: &'a [usize] },
}

/// Refit global scores after outlier detection. `Drop` fails when removing
/// the support disconnects the comparison graph (the error reports the
/// resulting components).
pub fn refit_scores(
    op: &DesignOperator,
    y: &[f64],
    mode: RefitMode<'_>,
    tol: f64,
) -> Result<RankingResult> {
    if y.len() != op.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: op.n_rows(),
            got: y.len(),
        });
    }
    match mode {
        RefitMode::CorrectedData { gamma } => {
            let mut y_corr = y.to_vec();
            for &(r, v) in gamma {
                if r >= y_corr.len() {
                    return Err(Error::SupportOutOfRange {
                        index: r,
                        m: y_corr.len(),
                    });
                }
                y_corr[r] -= v;
            }
            let mut fit = solve_l2(op, &y_corr, tol)?;
            fit.method = Method::Hlasso;
            Ok(fit)
        }
        RefitMode::Drop { support } => {
            let (sub, kept) = op.drop_rows(support)?;
            let conn = sub.connectivity();
            if !conn.is_connected() {
                return Err(Error::DropDisconnects {
                    dropped: support.len(),
                    components: conn.summaries(),
                });
            }
            let y_sub: Vec<f64> = kept.iter().map(|&r| y[r]).collect();
            let mut fit = solve_l2(&sub, &y_sub, tol)?;
            fit.method = Method::LassoL2;
            Ok(fit)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hodge::DEFAULT_CG_TOL;
    use crate::util::mixed_unit;

    const TOL: f64 = 1e-10;

    fn triangle_proj(op: &DesignOperator) -> CyclicProjection<'_> {
        CyclicProjection::new(op, DEFAULT_CG_TOL).unwrap()
    }

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(-0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(0.0, 0.0), 0.0);
    }

    #[test]
    fn lambda_above_max_gives_empty_estimate() {
        let op = DesignOperator::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let proj = triangle_proj(&op);
        let y = [1.0, -0.5, 0.25];
        let lmax = lambda_max(&proj, &y).unwrap();
        let est = solve_lasso(&proj, &y, lmax * 1.0001, TOL, 1000, None).unwrap();
        assert!(est.gamma.is_empty());
        assert!(est.converged);
    }

    #[test]
    fn cyclic_triangle_matches_the_analytic_solution() {
        // P is rank one on the triangle; the problem reduces to a 1-D
        // shrinkage with solution sum(gamma) = 3 (1 - lambda) and objective
        // 3 lambda - 1.5 lambda^2.
        let op = DesignOperator::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let proj = triangle_proj(&op);
        let y = [1.0, 1.0, 1.0];
        let lambda = 0.5;
        let est = solve_lasso(&proj, &y, lambda, TOL, 1000, None).unwrap();
        assert!(est.converged);
        let total: f64 = est.gamma.iter().map(|&(_, v)| v).sum();
        assert!((total - 3.0 * (1.0 - lambda)).abs() < 1e-8);
        let want_obj = 3.0 * lambda - 1.5 * lambda * lambda;
        assert!((est.objective - want_obj).abs() < 1e-8);
    }

    #[test]
    fn estimate_is_a_fixed_point() {
        // gamma == soft_threshold(gamma + P(Y - gamma), lambda) at the
        // returned solution.
        let op =
            DesignOperator::from_edges(4, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 0)]).unwrap();
        let proj = triangle_proj(&op);
        let y: Vec<f64> = (0..5).map(|k| 2.0 * mixed_unit(40 + k)).collect();
        let est = solve_lasso(&proj, &y, 0.3, TOL, 10_000, None).unwrap();
        assert!(est.converged);
        let dense = est.dense(5);
        let diff: Vec<f64> = y.iter().zip(&dense).map(|(a, b)| a - b).collect();
        let pr = proj.project(&diff).unwrap();
        for r in 0..5 {
            let next = soft_threshold(dense[r] + pr[r], 0.3);
            assert!((next - dense[r]).abs() < 1e-8, "coordinate {r}");
        }
    }

    #[test]
    fn objective_is_monotone_without_acceleration() {
        let op =
            DesignOperator::from_edges(5, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2)])
                .unwrap();
        let proj = triangle_proj(&op);
        let y: Vec<f64> = (0..6).map(|k| 2.0 * mixed_unit(90 + k)).collect();
        let mut objectives = Vec::new();
        solve_lasso_impl(&proj, &y, 0.1, TOL, 5000, None, false, |obj| {
            objectives.push(obj)
        })
        .unwrap();
        for pair in objectives.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12 * pair[0].abs().max(1.0));
        }
    }

    #[test]
    fn accelerated_solver_agrees_with_plain() {
        let op =
            DesignOperator::from_edges(5, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2)])
                .unwrap();
        let proj = triangle_proj(&op);
        let y: Vec<f64> = (0..6).map(|k| 2.0 * mixed_unit(7000 + k)).collect();
        let a = solve_lasso(&proj, &y, 0.2, TOL, 20_000, None).unwrap();
        let b = solve_lasso_accelerated(&proj, &y, 0.2, TOL, 20_000, None).unwrap();
        assert!(b.converged);
        assert!((a.objective - b.objective).abs() <= 1e-8 * a.objective.max(1.0));
    }

    #[test]
    fn kkt_violation_of_zero_gamma() {
        let op = DesignOperator::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let proj = triangle_proj(&op);
        let y = [1.0, 1.0, 1.0];
        let lmax = lambda_max(&proj, &y).unwrap();
        let viol = kkt_violation(&proj, &y, &[0.0, 0.0, 0.0], lmax / 2.0).unwrap();
        assert!((viol - lmax / 2.0).abs() < 1e-10);
    }

    #[test]
    fn path_on_consistent_data_has_empty_supports() {
        let op = DesignOperator::from_edges(4, &[(0, 1), (1, 2), (2, 0), (2, 3)]).unwrap();
        let theta = [1.0, 0.25, -0.25, -1.0];
        let y = op.forward(&theta).unwrap();
        let proj = triangle_proj(&op);
        let path = lasso_path(&proj, &y, None, TOL, 1000).unwrap();
        assert_eq!(path.points.len(), 100);
        for p in &path.points {
            assert!(p.gamma.is_empty(), "lambda {}", p.lambda);
        }
        assert!(path.entry.iter().all(|e| e.is_none()));
    }

    #[test]
    fn first_path_entry_is_the_largest_cyclic_coordinate() {
        // Two triangles sharing edge 2; an outlier planted on the shared
        // edge projects to a cyclic component with a unique, well-separated
        // largest coordinate.
        let op =
            DesignOperator::from_edges(4, &[(0, 1), (1, 2), (2, 0), (0, 3), (3, 2)]).unwrap();
        let proj = triangle_proj(&op);
        let mut y: Vec<f64> = (0..5).map(|k| 0.3 * mixed_unit(123 + k)).collect();
        y[2] += 2.5; // strong planted outlier on the shared edge
        let py = proj.project(&y).unwrap();
        let argmax = (0..py.len())
            .max_by(|&a, &b| py[a].abs().partial_cmp(&py[b].abs()).unwrap())
            .unwrap();
        assert_eq!(argmax, 2);
        let path = lasso_path(&proj, &y, None, TOL, 5000).unwrap();
        assert_eq!(path.ranked_entries()[0], argmax);
        // The grid starts exactly at lambda_max, where the support is empty.
        assert!(path.points[0].gamma.is_empty());
        // Just below lambda_max only the largest coordinate is active.
        let lmax = lambda_max(&proj, &y).unwrap();
        let near = solve_lasso(&proj, &y, 0.9999 * lmax, TOL, 5000, None).unwrap();
        assert_eq!(near.support(), vec![argmax]);
    }

    #[test]
    fn entry_order_is_monotone_under_grid_refinement() {
        let op =
            DesignOperator::from_edges(5, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2)])
                .unwrap();
        let proj = triangle_proj(&op);
        let y: Vec<f64> = (0..6).map(|k| 2.0 * mixed_unit(55 + k)).collect();
        let path = lasso_path(&proj, &y, None, TOL, 5000).unwrap();
        // Ranked entries list earlier-entering coordinates first, and their
        // entry parameters are non-increasing along that ranking.
        let ranked = path.ranked_entries();
        let params: Vec<f64> = ranked
            .iter()
            .map(|&r| path.entry[r].unwrap().param)
            .collect();
        for pair in params.windows(2) {
            assert!(pair[0] >= pair[1]);
        }
    }

    #[test]
    fn top_fraction_counts_and_bounds() {
        let op =
            DesignOperator::from_edges(5, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2)])
                .unwrap();
        let proj = triangle_proj(&op);
        let y: Vec<f64> = (0..6).map(|k| 2.0 * mixed_unit(55 + k)).collect();
        let path = lasso_path(&proj, &y, None, TOL, 5000).unwrap();
        let entered = path.ranked_entries().len();
        // ceil(0.34 * 6) = 3 indices (or fewer if fewer ever entered).
        let top = top_fraction(&path, 0.34).unwrap();
        assert_eq!(top.len(), 3.min(entered));
        // Asking for everything returns exactly the entered set.
        let all = top_fraction(&path, 1.0).unwrap();
        assert_eq!(all.len(), entered);
        assert!(top_fraction(&path, -0.1).is_err());
        assert!(top_fraction(&path, 1.5).is_err());
    }

    #[test]
    fn drop_refit_recovers_chain_scores() {
        // Chain 0-1-2 with consistent rows plus one flipped duplicate of
        // the first edge; dropping the flip refits to exactly (1, 0, -1).
        let op = DesignOperator::from_edges(3, &[(0, 1), (1, 2), (0, 1)]).unwrap();
        let y = [1.0, 1.0, -1.0];
        let fit = refit_scores(&op, &y, RefitMode::Drop { support: &[2] }, TOL).unwrap();
        assert_eq!(fit.method, Method::LassoL2);
        for (got, want) in fit.theta.iter().zip([1.0, 0.0, -1.0]) {
            assert!((got - want).abs() < 1e-10);
        }
        assert!(fit.residual_l2 < 1e-10);
    }

    #[test]
    fn drop_refit_reports_disconnection() {
        let op = DesignOperator::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let err = refit_scores(&op, &[1.0, 1.0], RefitMode::Drop { support: &[1] }, TOL)
            .unwrap_err();
        assert!(matches!(err, Error::DropDisconnects { dropped: 1, .. }));
    }

    #[test]
    fn empty_support_refits_match_plain_least_squares() {
        let op = DesignOperator::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let y = [1.0, -0.5, 0.25];
        let plain = solve_l2(&op, &y, TOL).unwrap();
        let dropped = refit_scores(&op, &y, RefitMode::Drop { support: &[] }, TOL).unwrap();
        let corrected = refit_scores(&op, &y, RefitMode::CorrectedData { gamma: &[] }, TOL).unwrap();
        for i in 0..3 {
            assert_eq!(plain.theta[i], dropped.theta[i]);
            assert_eq!(plain.theta[i], corrected.theta[i]);
        }
    }

    #[test]
    fn corrected_refit_subtracts_gamma() {
        let op = DesignOperator::from_edges(3, &[(0, 1), (1, 2), (0, 1)]).unwrap();
        let y = [1.0, 1.0, -1.0];
        // Correcting the flipped duplicate back to +1.
        let fit = refit_scores(
            &op,
            &y,
            RefitMode::CorrectedData {
                gamma: &[(2, -2.0)],
            },
            TOL,
        )
        .unwrap();
        assert_eq!(fit.method, Method::Hlasso);
        for (got, want) in fit.theta.iter().zip([1.0, 0.0, -1.0]) {
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_lambdas() {
        let op = DesignOperator::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let proj = triangle_proj(&op);
        let y = [1.0, 1.0, 1.0];
        for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(solve_lasso(&proj, &y, bad, TOL, 10, None).is_err());
        }
    }

    #[test]
    fn hitting_the_cap_flags_non_convergence() {
        // Overlapping cycles keep the iteration from terminating in a
        // couple of steps, so a tiny cap must be reported as such.
        let op =
            DesignOperator::from_edges(4, &[(0, 1), (1, 2), (2, 0), (0, 3), (3, 2)]).unwrap();
        let proj = triangle_proj(&op);
        let y: Vec<f64> = (0..5).map(|k| 2.0 * mixed_unit(55 + k)).collect();
        let est = solve_lasso(&proj, &y, 0.05, 1e-14, 2, None).unwrap();
        assert!(!est.converged);
        assert!(est.kkt_violation.unwrap() > 1e-14);
    }
}
