//! Joint estimation of scores and noise scale (concomitant Huber
//! regression).
//!
//! The regularization level of the outlier fit should scale with the noise
//! level, which is itself unknown. This module alternates between
//!
//! * an outlier-robust score fit at `lambda = M * sigma` (shrink-and-refit,
//!   exactly the joint minimizer over scores and outliers at that lambda),
//!   and
//! * a scale update solving `sum_i min(r_i^2 / sigma^2, M^2) = 2 a(M) m`
//!   in `sigma`, where `r` are the current fit residuals,
//!
//! which is coordinate descent on the concomitant objective
//!
//! ```text
//! F(theta, sigma) = sum_i rho_M((Y - X theta)_i / sigma) * sigma
//!                   + a(M) * m * sigma
//! ```
//!
//! with `rho_M` the Huber function. The constant `a(M)` is chosen so the
//! sigma update is Fisher-consistent under Gaussian noise — without it the
//! objective has no interior minimum in `sigma` for moderate `M` and every
//! data set would collapse to `sigma = 0`. Data whose residuals are
//! (numerically) exactly consistent still has no interior minimum; that
//! case is reported as [`Error::ScaleCollapse`].

use crate::design::DesignOperator;
use crate::error::{Error, Result};
use crate::hodge::{CyclicProjection, RankingResult};
use crate::lasso::{refit_scores, solve_lasso, OutlierEstimate, RefitMode};

/// Standard Huber tuning constant (95% Gaussian efficiency).
pub const DEFAULT_HUBER_M: f64 = 1.35;

/// The Huber function: quadratic inside `[-m, m]`, linear outside.
pub fn huber_rho(u: f64, m_const: f64) -> f64 {
    let a = u.abs();
    if a <= m_const {
        0.5 * u * u
    } else {
        m_const * a - 0.5 * m_const * m_const
    }
}

/// Fisher-consistency constant `a(M) = E[min(Z^2, M^2)] / 2` for standard
/// normal `Z`, in closed form via the normal density and CDF.
pub fn huber_consistency_constant(m_const: f64) -> f64 {
    let m = m_const;
    let phi = (-0.5 * m * m).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let cdf = 0.5 * libm::erfc(-m / std::f64::consts::SQRT_2);
    0.5 * ((2.0 * cdf - 1.0) - 2.0 * m * phi + 2.0 * m * m * (1.0 - cdf))
}

/// Result of the concomitant alternation.
#[derive(Debug, Clone)]
pub struct ScaleFit {
    /// Estimated noise scale.
    pub sigma: f64,
    /// Final regularization level `M * sigma`.
    pub lambda: f64,
    /// Scores refit on outlier-corrected data at the final lambda.
    pub ranking: RankingResult,
    /// Outlier estimate at the final lambda.
    pub outliers: OutlierEstimate,
    /// Alternation rounds performed.
    pub iterations: usize,
    /// False when the alternation cap was reached before the scale settled.
    pub converged: bool,
}

/// Solve `sum_i min(r_i^2 / s^2, M^2) = 2 a m` for `s` by bisection.
/// Returns `None` when no positive root exists (too few nonzero residuals:
/// the objective decreases all the way to `sigma = 0`).
fn sigma_root(residuals: &[f64], m_const: f64, a_const: f64) -> Option<f64> {
    let m2 = m_const * m_const;
    let target = 2.0 * a_const * residuals.len() as f64;
    let nonzero = residuals.iter().filter(|r| **r != 0.0).count();
    // As s -> 0 the left side tends to m2 * nonzero; below the target the
    // equation has no positive solution.
    if m2 * nonzero as f64 <= target {
        return None;
    }
    let sum_sq: f64 = residuals.iter().map(|r| r * r).sum();
    // At s = sqrt(sum_sq / target) the unclipped sum already equals the
    // target, so the clipped sum is at or below it: upper bracket.
    let mut hi = (sum_sq / target).sqrt();
    let eval = |s: f64| {
        residuals
            .iter()
            .map(|r| ((r / s) * (r / s)).min(m2))
            .sum::<f64>()
            - target
    };
    let mut lo = hi;
    while eval(lo) <= 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return None;
        }
    }
    if lo < hi {
        // Root lies in [lo, 2 lo] by construction of the shrink loop.
        hi = 2.0 * lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if eval(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Concomitant objective `F(theta, sigma)` for the given residuals.
pub(crate) fn concomitant_objective(
    residuals: &[f64],
    sigma: f64,
    m_const: f64,
    a_const: f64,
) -> f64 {
    residuals
        .iter()
        .map(|r| huber_rho(r / sigma, m_const) * sigma)
        .sum::<f64>()
        + a_const * residuals.len() as f64 * sigma
}

/// Jointly estimate scores and noise scale by alternating an outlier-robust
/// fit at `lambda = M * sigma` with the Fisher-consistent scale update.
///
/// `sigma_tol` is the relative change in `sigma` that counts as converged;
/// `max_alternations` caps the number of rounds (reported via `converged`
/// rather than an error). `lasso_tol` / `lasso_max_iter` are passed to the
/// inner outlier solver.
pub fn concomitant_scale(
    op: &DesignOperator,
    y: &[f64],
    m_const: f64,
    sigma_tol: f64,
    max_alternations: usize,
    lasso_tol: f64,
    lasso_max_iter: usize,
) -> Result<ScaleFit> {
    concomitant_scale_impl(
        op,
        y,
        m_const,
        sigma_tol,
        max_alternations,
        lasso_tol,
        lasso_max_iter,
        |_| {},
    )
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn concomitant_scale_impl(
    op: &DesignOperator,
    y: &[f64],
    m_const: f64,
    sigma_tol: f64,
    max_alternations: usize,
    lasso_tol: f64,
    lasso_max_iter: usize,
    mut on_objective: impl FnMut(f64),
) -> Result<ScaleFit> {
    if !(m_const > 0.0 && m_const.is_finite()) {
        return Err(Error::BadParameter {
            name: "huber_m",
            reason: format!("must be positive and finite, got {m_const}"),
        });
    }
    if !(sigma_tol > 0.0 && sigma_tol.is_finite()) {
        return Err(Error::BadParameter {
            name: "sigma_tol",
            reason: format!("must be positive and finite, got {sigma_tol}"),
        });
    }
    if y.len() != op.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: op.n_rows(),
            got: y.len(),
        });
    }

    let a_const = huber_consistency_constant(m_const);
    let y_scale = y.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let collapse_floor = 1e-10 * y_scale;
    let proj = CyclicProjection::new(op, lasso_tol.min(crate::hodge::DEFAULT_CG_TOL))?;

    // Initialize from the plain least-squares fit.
    let mut ranking = crate::hodge::solve_l2(op, y, crate::hodge::DEFAULT_CG_TOL)?;
    let mut residuals = fit_residuals(op, y, &ranking);
    let mut sigma = match sigma_root(&residuals, m_const, a_const) {
        Some(s) if s > collapse_floor => s,
        _ => return Err(Error::ScaleCollapse),
    };
    on_objective(concomitant_objective(&residuals, sigma, m_const, a_const));

    let mut outliers: Option<OutlierEstimate> = None;
    let mut warm = vec![0.0; y.len()];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_alternations {
        iterations += 1;
        let lambda = m_const * sigma;
        let est = solve_lasso(&proj, y, lambda, lasso_tol, lasso_max_iter, Some(&warm))?;
        warm.fill(0.0);
        for &(r, v) in &est.gamma {
            warm[r] = v;
        }
        ranking = refit_scores(op, y, RefitMode::CorrectedData { gamma: &est.gamma },
            crate::hodge::DEFAULT_CG_TOL)?;
        outliers = Some(est);
        residuals = fit_residuals(op, y, &ranking);
        let next = match sigma_root(&residuals, m_const, a_const) {
            Some(s) if s > collapse_floor => s,
            _ => return Err(Error::ScaleCollapse),
        };
        on_objective(concomitant_objective(&residuals, next, m_const, a_const));
        let done = (next - sigma).abs() <= sigma_tol * next.max(1e-30);
        sigma = next;
        if done {
            converged = true;
            break;
        }
    }

    let lambda = m_const * sigma;
    let outliers = match outliers {
        Some(o) => o,
        None => solve_lasso(&proj, y, lambda, lasso_tol, lasso_max_iter, None)?,
    };
    Ok(ScaleFit {
        sigma,
        lambda,
        ranking,
        outliers,
        iterations,
        converged,
    })
}

/// Residuals `Y - X theta_hat` of a ranking fit (outliers not subtracted:
/// corrupted rows should look large here).
fn fit_residuals(op: &DesignOperator, y: &[f64], fit: &RankingResult) -> Vec<f64> {
    let mut input = fit.theta.clone();
    if op.has_intercept() {
        input.push(fit.intercept.unwrap_or(0.0));
    }
    let fitted = op.forward(&input).expect("fit dimensions match the operator");
    y.iter().zip(&fitted).map(|(a, b)| a - b).collect()
}
