//! Global least-squares ranking and the cyclic projection.
//!
//! The comparison data `Y` decomposes orthogonally against the design `X`:
//! a gradient part `X theta_hat` (fitted score differences) and a cyclic
//! residual `P Y`, where `P = I - X L^+ X^T` projects onto the orthogonal
//! complement of the gradient flows and `L = X^T X` is the graph Laplacian.
//! Scores are identified up to a constant, fixed by the zero-sum gauge
//! `sum(theta) = 0`; the minimum-norm Laplacian solution realizes it.
//!
//! Nothing here materializes a matrix: Laplacian systems are solved by
//! conjugate gradient with the all-ones null direction deflated out, and
//! `P` is applied via one such solve per application.

use serde::Serialize;

use crate::design::DesignOperator;
use crate::error::{Error, Result};

/// Default relative residual tolerance for conjugate gradient.
pub const DEFAULT_CG_TOL: f64 = 1e-10;

/// Which estimator produced a ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    #[serde(rename = "L2")]
    L2,
    #[serde(rename = "HLASSO")]
    Hlasso,
    #[serde(rename = "LBI")]
    Lbi,
    #[serde(rename = "LASSO+L2")]
    LassoL2,
}

/// A fitted global ranking.
#[derive(Debug, Clone, Serialize)]
pub struct RankingResult {
    /// Estimator tag.
    pub method: Method,
    /// Item scores in the zero-sum gauge, one per item.
    pub theta: Vec<f64>,
    /// Home-advantage coefficient, when the design carried one.
    pub intercept: Option<f64>,
    /// `||Y - X theta - c * host||` over the weighted rows.
    pub residual_l2: f64,
    /// Total conjugate-gradient iterations spent.
    pub iterations: usize,
}

impl RankingResult {
    /// Item indices ordered best-first (score descending, index ascending on
    /// exact ties), paired with the scores.
    pub fn order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.theta.len()).collect();
        idx.sort_by(|&a, &b| {
            self.theta[b]
                .partial_cmp(&self.theta[a])
                .expect("scores are finite")
                .then(a.cmp(&b))
        });
        idx
    }
}

fn deflate(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Reusable buffers for [`cg_laplacian`].
pub(crate) struct CgScratch {
    r: Vec<f64>,
    p: Vec<f64>,
    ap: Vec<f64>,
    edge: Vec<f64>,
}

impl CgScratch {
    pub(crate) fn new(n: usize, m: usize) -> Self {
        CgScratch {
            r: vec![0.0; n],
            p: vec![0.0; n],
            ap: vec![0.0; n],
            edge: vec![0.0; m],
        }
    }
}

/// Conjugate gradient for `L x = b` on the zero-mean subspace, where `L` is
/// the weighted graph Laplacian of `op`. `b` is deflated first, so any
/// right-hand side is accepted; the solution has mean zero (the minimum-norm
/// pseudo-inverse solution). Does not check connectivity; callers do.
///
/// Returns the iteration count alongside writing the solution to `x`.
pub(crate) fn cg_laplacian(
    op: &DesignOperator,
    b: &[f64],
    tol: f64,
    max_iters: usize,
    x: &mut [f64],
    scratch: &mut CgScratch,
) -> Result<usize> {
    let n = op.n_items();
    debug_assert_eq!(b.len(), n);
    debug_assert_eq!(x.len(), n);

    x.fill(0.0);
    scratch.r.copy_from_slice(b);
    deflate(&mut scratch.r);
    let b_norm = norm(&scratch.r);
    if b_norm == 0.0 {
        return Ok(0);
    }
    scratch.p.copy_from_slice(&scratch.r);
    let mut rs = dot(&scratch.r, &scratch.r);

    for k in 0..max_iters {
        if rs.sqrt() <= tol * b_norm {
            return Ok(k);
        }
        op.laplacian_into(&scratch.p, &mut scratch.edge, &mut scratch.ap);
        // The Laplacian maps zero-mean vectors to zero-mean vectors exactly;
        // deflating the product only clears floating-point drift.
        deflate(&mut scratch.ap);
        let p_ap = dot(&scratch.p, &scratch.ap);
        if !(p_ap > 0.0) {
            return Err(Error::CgStalled {
                iters: k,
                tol,
                residual: rs.sqrt() / b_norm,
            });
        }
        let alpha = rs / p_ap;
        for i in 0..n {
            x[i] += alpha * scratch.p[i];
            scratch.r[i] -= alpha * scratch.ap[i];
        }
        let rs_new = dot(&scratch.r, &scratch.r);
        let beta = rs_new / rs;
        for i in 0..n {
            scratch.p[i] = scratch.r[i] + beta * scratch.p[i];
        }
        rs = rs_new;
    }
    if rs.sqrt() <= tol * b_norm {
        return Ok(max_iters);
    }
    Err(Error::CgStalled {
        iters: max_iters,
        tol,
        residual: rs.sqrt() / b_norm,
    })
}

/// Minimum-norm solution of the Laplacian system `L x = b` (with `b`
/// projected onto the zero-mean subspace first). Fails on disconnected
/// graphs and when conjugate gradient exceeds its cap of `10 n` iterations.
pub fn laplacian_solve(op: &DesignOperator, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    if b.len() != op.n_items() {
        return Err(Error::DimensionMismatch {
            expected: op.n_items(),
            got: b.len(),
        });
    }
    op.require_connected()?;
    let n = op.n_items();
    let mut x = vec![0.0; n];
    let mut scratch = CgScratch::new(n, op.n_rows());
    cg_laplacian(op, b, tol, 10 * n.max(1), &mut x, &mut scratch)?;
    Ok(x)
}

/// Least-squares scores for weighted comparison data `y` (already in the
/// operator's row space; see [`DesignOperator::scale_data`]).
///
/// Without an intercept this solves `L theta = X^T y` in the zero-sum
/// gauge. With one, the home-advantage coefficient is eliminated by a Schur
/// complement on the bordered normal equations: two Laplacian solves, then
/// `c = <h, y - X u> / <h, h - X v>` where `u`, `v` solve against `X^T y`
/// and `X^T h`. The denominator is the squared norm of the projected
/// intercept column, so a (numerically) gradient-flow host pattern is
/// reported as unidentifiable rather than divided by.
pub fn solve_l2(op: &DesignOperator, y: &[f64], tol: f64) -> Result<RankingResult> {
    if y.len() != op.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: op.n_rows(),
            got: y.len(),
        });
    }
    op.require_connected()?;
    let n = op.n_items();
    let m = op.n_rows();
    let cap = 10 * n.max(1);
    let mut scratch = CgScratch::new(n, m);

    let mut xty = vec![0.0; n];
    op.adjoint_into(y, &mut xty);
    let mut u = vec![0.0; n];
    let mut iters = cg_laplacian(op, &xty, tol, cap, &mut u, &mut scratch)?;

    let (theta, intercept) = if let Some(h) = op.intercept_column() {
        let mut xth = vec![0.0; n];
        op.adjoint_into(&h, &mut xth);
        let mut v = vec![0.0; n];
        iters += cg_laplacian(op, &xth, tol, cap, &mut v, &mut scratch)?;

        let mut xu = vec![0.0; m];
        op.apply_into(&u, 0.0, &mut xu);
        let mut xv = vec![0.0; m];
        op.apply_into(&v, 0.0, &mut xv);

        let denom = dot(&h, &h) - dot(&h, &xv);
        let h_norm2 = dot(&h, &h);
        if !(denom > 1e-12 * h_norm2) {
            return Err(Error::InterceptNotIdentifiable { norm: denom.max(0.0) });
        }
        let c = (dot(&h, y) - dot(&h, &xu)) / denom;
        let mut theta: Vec<f64> = u.iter().zip(&v).map(|(ui, vi)| ui - c * vi).collect();
        deflate(&mut theta);
        (theta, Some(c))
    } else {
        deflate(&mut u);
        (u, None)
    };

    let mut fitted = vec![0.0; m];
    op.apply_into(&theta, intercept.unwrap_or(0.0), &mut fitted);
    let residual_l2 = y
        .iter()
        .zip(&fitted)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();

    Ok(RankingResult {
        method: Method::L2,
        theta,
        intercept,
        residual_l2,
        iterations: iters,
    })
}

/// Reusable buffers for repeated projections.
pub(crate) struct ProjectionScratch {
    scores: Vec<f64>,
    solved: Vec<f64>,
    cg: CgScratch,
}

impl ProjectionScratch {
    pub(crate) fn new(n: usize, m: usize) -> Self {
        ProjectionScratch {
            scores: vec![0.0; n],
            solved: vec![0.0; n],
            cg: CgScratch::new(n, m),
        }
    }
}

/// The orthogonal projection onto the cyclic space: the complement of the
/// column span of the design (intercept column included when present).
///
/// Construction checks connectivity once and, with an intercept, caches the
/// gradient-free part of the host column so each later application costs a
/// single Laplacian solve.
pub struct CyclicProjection<'a> {
    op: &'a DesignOperator,
    cg_tol: f64,
    cg_max_iters: usize,
    h_tilde: Option<Vec<f64>>,
    h_tilde_norm2: f64,
}

impl<'a> CyclicProjection<'a> {
    pub fn new(op: &'a DesignOperator, cg_tol: f64) -> Result<Self> {
        Self::with_cap(op, cg_tol, 10 * op.n_items().max(1))
    }

    pub fn with_cap(op: &'a DesignOperator, cg_tol: f64, cg_max_iters: usize) -> Result<Self> {
        op.require_connected()?;
        let mut proj = CyclicProjection {
            op,
            cg_tol,
            cg_max_iters,
            h_tilde: None,
            h_tilde_norm2: 0.0,
        };
        if let Some(h) = op.intercept_column() {
            let mut scratch = ProjectionScratch::new(op.n_items(), op.n_rows());
            let mut h_tilde = vec![0.0; op.n_rows()];
            proj.project_gradients_out(&h, &mut h_tilde, &mut scratch)?;
            let norm2 = dot(&h_tilde, &h_tilde);
            // A host column that is itself a gradient flow adds nothing to
            // the projected-out span; skip it instead of dividing by ~0.
            if norm2 > 1e-20 * dot(&h, &h) {
                proj.h_tilde = Some(h_tilde);
                proj.h_tilde_norm2 = norm2;
            }
        }
        Ok(proj)
    }

    pub fn op(&self) -> &DesignOperator {
        self.op
    }

    /// Dimension of the vectors being projected (= number of comparisons).
    pub fn len(&self) -> usize {
        self.op.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.op.n_rows() == 0
    }

    /// Dimension of the cyclic space, `m - n + 1` for a connected graph,
    /// minus one more when an identifiable intercept column is present.
    pub fn cyclic_dim(&self) -> usize {
        let base = self.op.n_rows() + 1 - self.op.n_items();
        base - usize::from(self.h_tilde.is_some())
    }

    /// Whether the intercept column was projected out alongside the
    /// gradient flows.
    pub fn intercept_projected(&self) -> bool {
        self.h_tilde.is_some()
    }

    /// Gradient-free part of the intercept column and its squared norm,
    /// when one is being projected out. Lets callers form diagonal entries
    /// of the projection without a full column solve.
    pub(crate) fn intercept_component(&self) -> Option<(&[f64], f64)> {
        self.h_tilde
            .as_deref()
            .map(|h| (h, self.h_tilde_norm2))
    }

    /// `v - X L^+ X^T v`: remove the gradient-flow component only.
    fn project_gradients_out(
        &self,
        v: &[f64],
        out: &mut [f64],
        scratch: &mut ProjectionScratch,
    ) -> Result<usize> {
        self.op.adjoint_into(v, &mut scratch.scores);
        let iters = cg_laplacian(
            self.op,
            &scratch.scores,
            self.cg_tol,
            self.cg_max_iters,
            &mut scratch.solved,
            &mut scratch.cg,
        )?;
        self.op.apply_into(&scratch.solved, 0.0, out);
        for (o, vi) in out.iter_mut().zip(v) {
            *o = vi - *o;
        }
        Ok(iters)
    }

    /// Apply the projection into a preallocated buffer, reusing scratch.
    /// Returns the conjugate-gradient iteration count.
    pub(crate) fn project_with(
        &self,
        v: &[f64],
        out: &mut [f64],
        scratch: &mut ProjectionScratch,
    ) -> Result<usize> {
        if v.len() != self.op.n_rows() {
            return Err(Error::DimensionMismatch {
                expected: self.op.n_rows(),
                got: v.len(),
            });
        }
        let iters = self.project_gradients_out(v, out, scratch)?;
        if let Some(h_tilde) = &self.h_tilde {
            let coef = dot(out, h_tilde) / self.h_tilde_norm2;
            for (o, hi) in out.iter_mut().zip(h_tilde) {
                *o -= coef * hi;
            }
        }
        Ok(iters)
    }

    /// Apply the projection: the cyclic component of `v`.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.op.n_rows()];
        let mut scratch = ProjectionScratch::new(self.op.n_items(), self.op.n_rows());
        self.project_with(v, &mut out, &mut scratch)?;
        Ok(out)
    }

    pub(crate) fn scratch(&self) -> ProjectionScratch {
        ProjectionScratch::new(self.op.n_items(), self.op.n_rows())
    }
}

/// Convenience wrapper: one-off cyclic projection of `v`.
pub fn project_cyclic(op: &DesignOperator, v: &[f64], tol: f64) -> Result<Vec<f64>> {
    CyclicProjection::new(op, tol)?.project(v)
}
