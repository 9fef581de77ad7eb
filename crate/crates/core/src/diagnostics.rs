//! Support-recovery diagnostics for a candidate outlier set.
//!
//! Given a candidate support `S` of comparison rows, this module evaluates
//! the classical sparse-recovery quantities of the cyclic-space design: the
//! restricted eigenvalue of the support Gram matrix, the irrepresentability
//! margin of the complement, the complement incoherence, and the resulting
//! regularization-strength and early-stopping thresholds. All values are
//! numerical plug-ins computed from the data at hand — they are diagnostic
//! signals, not certificates.
//!
//! The support Gram matrix and complement cross terms are assembled from
//! `|S|` dense projection columns (one solve per column). The complement
//! diagonal is recovered from graph effective resistances instead, which
//! needs one Laplacian solve per *node* rather than per row and therefore
//! stays cheap on data sets with many repeated comparisons.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::design::DesignOperator;
use crate::error::{Error, Result};
use crate::hodge::{cg_laplacian, CgScratch, CyclicProjection, DEFAULT_CG_TOL};

/// Hard cap on `|S|`: the report builds dense `|S| x |S|` factorizations,
/// so it refuses supports where that stops being a small-matrix job.
pub const MAX_DIAGNOSTIC_SUPPORT: usize = 2000;

/// Eigenvalues of the support Gram matrix at or below this threshold are
/// treated as exact rank deficiency (the projection is computed to a much
/// tighter conjugate-gradient tolerance).
const RANK_TOL: f64 = 1e-8;

/// Recovery-condition diagnostics for one candidate support.
///
/// `Option` fields are `None` when the inputs needed to evaluate them were
/// not supplied or when a prerequisite quantity is degenerate (for example
/// the irrepresentability value has no meaning once the support Gram matrix
/// is singular). The three `*_holds` flags are certification booleans:
/// `false` means "not certified", which covers both a failed check and a
/// check that could not be evaluated.
#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    /// The candidate support, sorted and deduplicated.
    pub support: Vec<usize>,
    /// Dimension of the cyclic space the outlier design lives in.
    pub l: usize,
    /// Smallest eigenvalue of the scaled support Gram matrix
    /// `(1/l) P_{S,S}`; reported as exactly `0` on rank deficiency.
    pub c_min: f64,
    /// Largest eigenvalue of the (unscaled) support Gram matrix `P_{S,S}`,
    /// for step-size checks of support-restricted iterations.
    pub support_gram_norm: f64,
    /// `max` absolute row sum of `P_{S^c,S} (P_{S,S})^{-1}`; the complement
    /// is representable by the support iff this stays below `1`. `None`
    /// when the Gram matrix is singular; `0` for an empty complement.
    pub irrep_value: Option<f64>,
    /// Irrepresentability margin `1 - irrep_value`, clamped at `0`.
    pub eta: Option<f64>,
    /// Complement incoherence: largest scaled diagonal entry
    /// `(1/l) P_{jj}` over rows outside the support.
    pub mu_psi: f64,
    /// Smallest magnitude of the supplied reference outlier vector over the
    /// support (missing coordinates count as `0`). `None` without one.
    pub gamma_min: Option<f64>,
    /// Noise scale used by the thresholds.
    pub sigma: f64,
    /// Inverse damping of the early-stopped iteration, when supplied.
    pub kappa: Option<f64>,
    /// Smallest regularization strength with the standard noise-dominance
    /// guarantee: `(2 sigma sqrt(mu_psi) / eta) sqrt(l log m)`. `None` when
    /// `eta` is `0` or undefined.
    pub lambda_bound: Option<f64>,
    /// Plug-in magnitude bound `B` entering the early-stopping horizon;
    /// needs the reference outlier vector and a nonsingular Gram matrix.
    pub b_plugin: Option<f64>,
    /// Early-stopping horizon `((1 - B/(kappa eta)) eta / (2 sigma
    /// sqrt(mu_psi))) sqrt(1/(l log m))`. Negative when `kappa` is too
    /// small for the plug-in `B`; `None` when any ingredient is missing.
    pub tau_bar: Option<f64>,
    /// Restricted-eigenvalue check: `c_min > 0`.
    pub c1_holds: bool,
    /// Irrepresentability check: `irrep_value < 1`, asked with a small
    /// numerical margin so solver noise around an exact `1` cannot
    /// certify an indistinguishable support.
    pub c2_holds: bool,
    /// Large-outlier check: `gamma_min` exceeds the recovery threshold at
    /// `lambda_bound`. Requires the reference vector; `false` otherwise.
    pub c3_holds: bool,
    /// Whether an intercept column was projected out alongside the score
    /// differences (it then also reduces `l` by one).
    pub intercept_projected: bool,
}

/// Outcome of comparing an estimated sparse outlier vector against a
/// reference one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignCheck {
    /// Every estimated outlier is a true one: `supp(est) ⊆ supp(truth)`.
    pub no_false_positive: bool,
    /// Supports match exactly and every shared coordinate has the same
    /// sign.
    pub sign_consistent: bool,
    /// Jaccard index of the two supports (`1` when both are empty).
    pub jaccard: f64,
}

/// Compare an estimated sparse outlier vector with a reference vector.
/// Entries with value exactly `0` are treated as absent; duplicate indices
/// within one vector are summed first.
pub fn sign_consistency_check(estimate: &[(usize, f64)], truth: &[(usize, f64)]) -> SignCheck {
    let est = collect_sparse(estimate);
    let tru = collect_sparse(truth);

    let no_false_positive = est.keys().all(|r| tru.contains_key(r));
    let sign_consistent = est.len() == tru.len()
        && tru
            .iter()
            .all(|(r, &v)| est.get(r).is_some_and(|&e| e.signum() == v.signum()));

    let inter = est.keys().filter(|r| tru.contains_key(r)).count();
    let union = est.len() + tru.len() - inter;
    let jaccard = if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    };

    SignCheck {
        no_false_positive,
        sign_consistent,
        jaccard,
    }
}

fn collect_sparse(entries: &[(usize, f64)]) -> BTreeMap<usize, f64> {
    let mut map = BTreeMap::new();
    for &(r, v) in entries {
        *map.entry(r).or_insert(0.0) += v;
    }
    map.retain(|_, v| *v != 0.0);
    map
}

/// Evaluate the recovery-condition diagnostics for candidate support
/// `support` on the comparison design `op`.
///
/// `sigma` is the noise scale entering the thresholds. `gamma_star`, when
/// given, is a reference sparse outlier vector (ground truth in
/// simulations, or a reference fit): it enables `gamma_min`, the plug-in
/// `B`, the early-stopping horizon, and the large-outlier check. `kappa`
/// is the inverse-damping constant of the early-stopped iteration and is
/// only used for the horizon.
pub fn consistency_report(
    op: &DesignOperator,
    support: &[usize],
    sigma: f64,
    gamma_star: Option<&[(usize, f64)]>,
    kappa: Option<f64>,
) -> Result<ConsistencyReport> {
    let m = op.n_rows();
    let support = validate_support(support, m)?;
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::BadParameter {
            name: "sigma",
            reason: format!("noise scale must be finite and nonnegative, got {sigma}"),
        });
    }
    if let Some(k) = kappa {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::BadParameter {
                name: "kappa",
                reason: format!("must be finite and positive, got {k}"),
            });
        }
    }
    if let Some(entries) = gamma_star {
        for &(r, v) in entries {
            if r >= m {
                return Err(Error::SupportOutOfRange { index: r, m });
            }
            if !v.is_finite() {
                return Err(Error::BadParameter {
                    name: "gamma_star",
                    reason: format!("non-finite value at row {r}"),
                });
            }
        }
    }

    let proj = CyclicProjection::new(op, DEFAULT_CG_TOL)?;
    let l = proj.cyclic_dim();
    let gamma_min = gamma_star.map(|entries| {
        let map = collect_sparse(entries);
        support
            .iter()
            .map(|r| map.get(r).map_or(0.0, |v| v.abs()))
            .fold(f64::INFINITY, f64::min)
    });

    if l == 0 {
        // No cyclic space: the projection is zero and nothing on this
        // graph can distinguish an outlier from a score shift.
        return Ok(ConsistencyReport {
            support,
            l,
            c_min: 0.0,
            support_gram_norm: 0.0,
            irrep_value: None,
            eta: None,
            mu_psi: 0.0,
            gamma_min,
            sigma,
            kappa,
            lambda_bound: None,
            b_plugin: None,
            tau_bar: None,
            c1_holds: false,
            c2_holds: false,
            c3_holds: false,
            intercept_projected: proj.intercept_projected(),
        });
    }
    let lf = l as f64;

    // Dense projection columns for the support: column r of P is the
    // projection of the r-th unit vector. Independent solves, run in
    // parallel.
    let columns: Vec<Vec<f64>> = support
        .par_iter()
        .map_init(
            || proj.scratch(),
            |scratch, &r| {
                let mut unit = vec![0.0; m];
                unit[r] = 1.0;
                let mut col = vec![0.0; m];
                proj.project_with(&unit, &mut col, scratch)?;
                Ok(col)
            },
        )
        .collect::<Result<_>>()?;

    let s = support.len();
    // P is symmetric; average the two reads of each entry to keep the
    // eigensolver's input exactly symmetric despite solver noise.
    let gram = DMatrix::from_fn(s, s, |r, c| {
        0.5 * (columns[c][support[r]] + columns[r][support[c]])
    });
    let eigen = gram.symmetric_eigen();
    let lambda_min = eigen.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let lambda_max = eigen.eigenvalues.iter().copied().fold(0.0, f64::max);
    let singular = lambda_min <= RANK_TOL;
    let c_min = if singular { 0.0 } else { lambda_min / lf };

    let complement: Vec<usize> = {
        let in_support: BTreeSet<usize> = support.iter().copied().collect();
        (0..m).filter(|j| !in_support.contains(j)).collect()
    };

    // Inverse of the support Gram matrix through its eigensystem, shared
    // by the irrepresentability value and the recovery threshold.
    let (irrep_value, inv_inf_norm) = if complement.is_empty() {
        (Some(0.0), None)
    } else if singular {
        (None, None)
    } else {
        let inv = &eigen.eigenvectors
            * DMatrix::from_diagonal(&eigen.eigenvalues.map(|v| 1.0 / v))
            * eigen.eigenvectors.transpose();
        let value = complement
            .par_iter()
            .map(|&j| {
                (0..s)
                    .map(|k| {
                        let row_dot: f64 =
                            (0..s).map(|c| columns[c][j] * inv[(c, k)]).sum();
                        row_dot.abs()
                    })
                    .sum::<f64>()
            })
            .reduce(|| 0.0, f64::max);
        let inf_norm = (0..s)
            .map(|r| (0..s).map(|c| inv[(r, c)].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        (Some(value), Some(inf_norm))
    };
    let eta = irrep_value.map(|v| (1.0 - v).max(0.0));

    let mu_psi = if complement.is_empty() {
        0.0
    } else {
        complement_diagonal(&proj, &complement)?
            .into_iter()
            .fold(0.0, f64::max)
            / lf
    };

    let log_m = (m as f64).ln();
    let lambda_bound = match eta {
        Some(e) if e > 0.0 => Some(2.0 * sigma * mu_psi.sqrt() / e * (lf * log_m).sqrt()),
        _ => None,
    };

    let b_plugin = match (gamma_star, c_min > 0.0) {
        (Some(entries), true) => {
            let map = collect_sparse(entries);
            let gamma_max = map.values().fold(0.0, |acc: f64, v| acc.max(v.abs()));
            let mut dense = vec![0.0; m];
            for (&r, &v) in &map {
                dense[r] = v;
            }
            let projected = proj.project(&dense)?;
            let psi_gamma_norm = projected.iter().map(|v| v * v).sum::<f64>().sqrt();
            let sf = s as f64;
            Some(
                gamma_max
                    + 2.0 * sigma * (log_m / (c_min * lf)).sqrt()
                    + (psi_gamma_norm + 2.0 * sf * lf.ln().sqrt()) / (lf * c_min.sqrt()),
            )
        }
        _ => None,
    };

    let tau_bar = match (b_plugin, kappa, eta, sigma > 0.0 && mu_psi > 0.0) {
        (Some(b), Some(k), Some(e), true) if e > 0.0 => {
            Some((1.0 - b / (k * e)) * e / (2.0 * sigma * mu_psi.sqrt())
                * (1.0 / (lf * log_m)).sqrt())
        }
        _ => None,
    };

    let c1_holds = c_min > 0.0;
    let c2_holds = matches!(eta, Some(e) if e > RANK_TOL);
    let c3_holds = match (gamma_min, lambda_bound) {
        (Some(gm), Some(lb)) if c_min > 0.0 => {
            let threshold = if lb == 0.0 {
                0.0
            } else {
                // Recovery threshold (lambda/l) * (eta/sqrt(c_min mu_psi)
                // + inf-norm of the inverse *scaled* Gram matrix).
                let e = eta.unwrap_or(0.0);
                let inv_scaled = lf * inv_inf_norm.unwrap_or(f64::INFINITY);
                lb / lf * (e / (c_min * mu_psi).sqrt() + inv_scaled)
            };
            gm > threshold
        }
        _ => false,
    };

    Ok(ConsistencyReport {
        support,
        l,
        c_min,
        support_gram_norm: lambda_max,
        irrep_value,
        eta,
        mu_psi,
        gamma_min,
        sigma,
        kappa,
        lambda_bound,
        b_plugin,
        tau_bar,
        c1_holds,
        c2_holds,
        c3_holds,
        intercept_projected: proj.intercept_projected(),
    })
}

fn validate_support(support: &[usize], m: usize) -> Result<Vec<usize>> {
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    for &r in support {
        if r >= m {
            return Err(Error::SupportOutOfRange { index: r, m });
        }
    }
    let mut sorted = support.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() > MAX_DIAGNOSTIC_SUPPORT {
        return Err(Error::SupportTooLarge {
            size: sorted.len(),
            cap: MAX_DIAGNOSTIC_SUPPORT,
        });
    }
    Ok(sorted)
}

/// Diagonal entries of the projection restricted to `rows`, through
/// effective resistances: the gradient part of a unit row vector has
/// squared norm equal to the effective resistance between its endpoints,
/// so `P_jj = 1 - R(i, i')` minus the intercept component when present.
/// One Laplacian solve per participating node.
fn complement_diagonal(proj: &CyclicProjection, rows: &[usize]) -> Result<Vec<f64>> {
    let op = proj.op();
    let n = op.n_items();

    let mut partners: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for &j in rows {
        let (a, b) = op.endpoints(j);
        partners.entry(a).or_default().insert(b);
        partners.entry(b).or_default().insert(a);
    }

    // Per node: the Green's-function diagonal plus the cross terms to the
    // node's larger-numbered partners (each unordered pair read once).
    let solved: Vec<(usize, f64, Vec<(usize, f64)>)> = partners
        .par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; n], CgScratch::new(n, op.n_rows())),
            |(rhs, x, scratch), (&v, adj)| {
                rhs.fill(0.0);
                rhs[v] = 1.0;
                cg_laplacian(op, rhs, DEFAULT_CG_TOL, 10 * n.max(1), x, scratch)?;
                let crosses = adj
                    .iter()
                    .filter(|&&u| u > v)
                    .map(|&u| (u, x[u]))
                    .collect();
                Ok((v, x[v], crosses))
            },
        )
        .collect::<Result<_>>()?;

    let mut green_diag: BTreeMap<usize, f64> = BTreeMap::new();
    let mut green_cross: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (v, diag, crosses) in solved {
        green_diag.insert(v, diag);
        for (u, g) in crosses {
            green_cross.insert((v, u), g);
        }
    }

    let intercept = proj.intercept_component();
    Ok(rows
        .iter()
        .map(|&j| {
            let (a, b) = op.endpoints(j);
            let key = (a.min(b), a.max(b));
            let resistance = green_diag[&a] + green_diag[&b] - 2.0 * green_cross[&key];
            let mut p = 1.0 - resistance;
            if let Some((h, norm2)) = intercept {
                p -= h[j] * h[j] / norm2;
            }
            p.clamp(0.0, 1.0)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::mixed_unit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn triangle() -> DesignOperator {
        DesignOperator::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    /// Two triangles sharing edge 2: rows (0,1),(1,2),(2,0),(0,3),(3,2).
    /// The projection is known in closed form: diagonal (3/8, 3/8, 1/2,
    /// 3/8, 3/8) and shared-edge column (1/4, 1/4, 1/2, 1/4, 1/4).
    fn two_triangles() -> DesignOperator {
        DesignOperator::from_edges(4, &[(0, 1), (1, 2), (2, 0), (0, 3), (3, 2)]).unwrap()
    }

    #[test]
    fn symmetric_cycle_coordinates_are_indistinguishable() {
        let report = consistency_report(&triangle(), &[0], 1.0, None, None).unwrap();
        assert_eq!(report.l, 1);
        assert!((report.c_min - 1.0 / 3.0).abs() < 1e-8);
        assert!((report.irrep_value.unwrap() - 1.0).abs() < 1e-8);
        assert!(report.eta.unwrap().abs() < 1e-8);
        assert!((report.mu_psi - 1.0 / 3.0).abs() < 1e-8);
        assert!(report.c1_holds);
        assert!(!report.c2_holds);
        assert!(!report.c3_holds);
        // eta is (numerically) zero, so no usable strength bound exists.
        assert!(report.lambda_bound.is_none() || report.lambda_bound.unwrap() > 1e6);
    }

    #[test]
    fn full_support_of_a_one_dimensional_cycle() {
        // A 5-cycle has a single cyclic dimension; taking every row as the
        // support leaves an empty complement: representability is vacuous
        // while the Gram matrix (rank 1, size 5) is necessarily singular.
        let op =
            DesignOperator::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        let report = consistency_report(&op, &[0, 1, 2, 3, 4], 1.0, None, None).unwrap();
        assert_eq!(report.l, 1);
        assert_eq!(report.c_min, 0.0);
        assert_eq!(report.irrep_value, Some(0.0));
        assert_eq!(report.eta, Some(1.0));
        assert_eq!(report.mu_psi, 0.0);
        assert!(!report.c1_holds);
        assert!(report.c2_holds);
        assert_eq!(report.lambda_bound, Some(0.0));
    }

    #[test]
    fn shared_edge_report_matches_closed_forms() {
        let op = two_triangles();
        let report = consistency_report(&op, &[2], 1.0, None, None).unwrap();
        assert_eq!(report.l, 2);
        assert_eq!(report.support, vec![2]);
        // Gram matrix is the scalar P_22 = 1/2.
        assert!((report.c_min - 0.25).abs() < 1e-8);
        assert!((report.support_gram_norm - 0.5).abs() < 1e-8);
        // Off-support column entries are 1/4, each scaled by 1/P_22 = 2.
        assert!((report.irrep_value.unwrap() - 0.5).abs() < 1e-8);
        assert!((report.eta.unwrap() - 0.5).abs() < 1e-8);
        // Largest complement diagonal is 3/8, scaled by 1/l.
        assert!((report.mu_psi - 3.0 / 16.0).abs() < 1e-8);
        let expect_bound =
            2.0 * (3.0f64 / 16.0).sqrt() / 0.5 * (2.0 * (5.0f64).ln()).sqrt();
        assert!((report.lambda_bound.unwrap() - expect_bound).abs() < 1e-8);
        assert!(report.c1_holds && report.c2_holds);
        assert!(!report.c3_holds, "no reference vector supplied");
        assert!(!report.intercept_projected);
    }

    #[test]
    fn large_outlier_check_uses_the_recovery_threshold() {
        let op = two_triangles();
        // Threshold at lambda_bound: (lambda/l) * (eta/sqrt(c_min mu_psi)
        // + l * inf-norm of the inverse Gram matrix) ~ 9.80 here.
        let weak = consistency_report(&op, &[2], 1.0, Some(&[(2, 5.0)]), None).unwrap();
        assert_eq!(weak.gamma_min, Some(5.0));
        assert!(!weak.c3_holds);

        let strong = consistency_report(&op, &[2], 1.0, Some(&[(2, 20.0)]), None).unwrap();
        assert_eq!(strong.gamma_min, Some(20.0));
        assert!(strong.c3_holds);

        // A support coordinate with no reference entry forces gamma_min
        // (and with it the certification) to zero.
        let padded = consistency_report(&op, &[0, 2], 1.0, Some(&[(2, 20.0)]), None).unwrap();
        assert_eq!(padded.gamma_min, Some(0.0));
        assert!(!padded.c3_holds);
    }

    #[test]
    fn plug_in_horizon_matches_hand_arithmetic() {
        let op = two_triangles();
        let g = 20.0;
        let kappa = 400.0;
        let report =
            consistency_report(&op, &[2], 1.0, Some(&[(2, g)]), Some(kappa)).unwrap();
        let l = 2.0f64;
        let log_m = (5.0f64).ln();
        let c_min = 0.25;
        // Projected reference vector has norm g * sqrt(1/2).
        let psi_norm = g * 0.5f64.sqrt();
        let expect_b = g
            + 2.0 * (log_m / (c_min * l)).sqrt()
            + (psi_norm + 2.0 * 1.0 * l.ln().sqrt()) / (l * c_min.sqrt());
        let b = report.b_plugin.unwrap();
        assert!((b - expect_b).abs() < 1e-8, "b = {b}, expected {expect_b}");
        let eta = 0.5;
        let mu: f64 = 3.0 / 16.0;
        let expect_tau = (1.0 - expect_b / (kappa * eta)) * eta / (2.0 * mu.sqrt())
            * (1.0 / (l * log_m)).sqrt();
        let tau = report.tau_bar.unwrap();
        assert!((tau - expect_tau).abs() < 1e-8);
        assert!(tau > 0.0, "kappa chosen large enough for a usable horizon");

        // Too-small kappa yields a negative (useless but honest) horizon.
        let cramped =
            consistency_report(&op, &[2], 1.0, Some(&[(2, g)]), Some(10.0)).unwrap();
        assert!(cramped.tau_bar.unwrap() < 0.0);
    }

    #[test]
    fn random_dense_graphs_satisfy_the_conditions() {
        // Uniformly sampled repeated comparisons on 16 items: the support
        // Gram matrix should be well conditioned and the complement
        // representable on nearly every draw.
        let mut ok = 0;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(7000 + seed);
            let edges: Vec<(usize, usize)> = (0..1000)
                .map(|_| {
                    let i = rng.random_range(0..16usize);
                    let mut j = rng.random_range(0..15usize);
                    if j >= i {
                        j += 1;
                    }
                    (i, j)
                })
                .collect();
            let op = DesignOperator::from_edges(16, &edges).unwrap();
            let mut support: Vec<usize> = Vec::new();
            while support.len() < 50 {
                let r = rng.random_range(0..1000usize);
                if !support.contains(&r) {
                    support.push(r);
                }
            }
            let report = consistency_report(&op, &support, 1.0, None, None).unwrap();
            if report.c1_holds && report.c2_holds {
                ok += 1;
            }
        }
        assert!(ok >= 18, "only {ok}/20 draws satisfied both conditions");
    }

    #[test]
    fn support_validation_errors() {
        let op = triangle();
        assert!(matches!(
            consistency_report(&op, &[], 1.0, None, None),
            Err(Error::EmptySupport)
        ));
        assert!(matches!(
            consistency_report(&op, &[3], 1.0, None, None),
            Err(Error::SupportOutOfRange { index: 3, m: 3 })
        ));
        assert!(matches!(
            consistency_report(&op, &[0], -1.0, None, None),
            Err(Error::BadParameter { name: "sigma", .. })
        ));
        assert!(matches!(
            consistency_report(&op, &[0], 1.0, None, Some(0.0)),
            Err(Error::BadParameter { name: "kappa", .. })
        ));
        assert!(matches!(
            consistency_report(&op, &[0], 1.0, Some(&[(9, 1.0)][..]), None),
            Err(Error::SupportOutOfRange { index: 9, m: 3 })
        ));

        let big: Vec<(usize, usize)> = (0..2001).map(|i| (i, (i + 1) % 2001)).collect();
        let ring = DesignOperator::from_edges(2001, &big).unwrap();
        let all: Vec<usize> = (0..2001).collect();
        assert!(matches!(
            consistency_report(&ring, &all, 1.0, None, None),
            Err(Error::SupportTooLarge { size: 2001, cap: MAX_DIAGNOSTIC_SUPPORT })
        ));
    }

    #[test]
    fn duplicate_support_indices_collapse() {
        let op = two_triangles();
        let a = consistency_report(&op, &[2, 2, 2], 1.0, None, None).unwrap();
        let b = consistency_report(&op, &[2], 1.0, None, None).unwrap();
        assert_eq!(a.support, b.support);
        assert_eq!(a.c_min, b.c_min);
    }

    #[test]
    fn tree_graph_reports_degenerate_everything() {
        let op = DesignOperator::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let report = consistency_report(&op, &[1], 2.0, Some(&[(1, 3.0)]), Some(5.0)).unwrap();
        assert_eq!(report.l, 0);
        assert_eq!(report.c_min, 0.0);
        assert_eq!(report.irrep_value, None);
        assert_eq!(report.mu_psi, 0.0);
        assert_eq!(report.gamma_min, Some(3.0));
        assert!(!report.c1_holds && !report.c2_holds && !report.c3_holds);
        assert!(report.lambda_bound.is_none() && report.tau_bar.is_none());
    }

    #[test]
    fn effective_resistance_diagonal_matches_projected_units() {
        // Same quantity two ways: per-node resistance solves vs a full
        // projection of each unit vector.
        let op =
            DesignOperator::from_edges(5, &[(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 2), (1, 3)])
                .unwrap();
        let proj = CyclicProjection::new(&op, DEFAULT_CG_TOL).unwrap();
        let rows: Vec<usize> = (0..op.n_rows()).collect();
        let fast = complement_diagonal(&proj, &rows).unwrap();
        for (j, &d) in rows.iter().zip(&fast) {
            let mut unit = vec![0.0; op.n_rows()];
            unit[*j] = 1.0;
            let col = proj.project(&unit).unwrap();
            assert!(
                (col[*j] - d).abs() < 1e-8,
                "row {j}: projection gives {}, resistances give {d}",
                col[*j]
            );
        }
    }

    #[test]
    fn sign_check_trivial_cases() {
        let zero: Vec<(usize, f64)> = Vec::new();
        let truth = vec![(3, 1.5), (7, -2.0)];

        let empty_vs_truth = sign_consistency_check(&zero, &truth);
        assert!(empty_vs_truth.no_false_positive);
        assert!(!empty_vs_truth.sign_consistent);
        assert_eq!(empty_vs_truth.jaccard, 0.0);

        let empty_vs_empty = sign_consistency_check(&zero, &zero);
        assert!(empty_vs_empty.no_false_positive);
        assert!(empty_vs_empty.sign_consistent);
        assert_eq!(empty_vs_empty.jaccard, 1.0);

        let exact = sign_consistency_check(&truth, &truth);
        assert!(exact.no_false_positive);
        assert!(exact.sign_consistent);
        assert_eq!(exact.jaccard, 1.0);

        let extra = vec![(3, 1.5), (7, -2.0), (9, 0.1)];
        let with_extra = sign_consistency_check(&extra, &truth);
        assert!(!with_extra.no_false_positive);
        assert!(!with_extra.sign_consistent);
        assert!((with_extra.jaccard - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn sign_check_sign_flips_and_zeros() {
        let truth = vec![(3, 1.5), (7, -2.0)];
        let flipped = vec![(3, 1.5), (7, 2.0)];
        let check = sign_consistency_check(&flipped, &truth);
        assert!(check.no_false_positive);
        assert!(!check.sign_consistent, "same support but a flipped sign");
        assert_eq!(check.jaccard, 1.0);

        // Explicit zeros and cancelling duplicates are not support.
        let zeros = vec![(3, 1.5), (7, -2.0), (9, 0.0), (11, 1.0), (11, -1.0)];
        let cleaned = sign_consistency_check(&zeros, &truth);
        assert!(cleaned.no_false_positive);
        assert!(cleaned.sign_consistent);
        assert_eq!(cleaned.jaccard, 1.0);
    }

    #[test]
    fn subset_support_is_no_false_positive_only() {
        let truth = vec![(3, 1.5), (7, -2.0), (9, 4.0)];
        let subset = vec![(3, 1.0)];
        let check = sign_consistency_check(&subset, &truth);
        assert!(check.no_false_positive);
        assert!(!check.sign_consistent);
        assert!((check.jaccard - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn intercept_column_is_projected_and_flagged() {
        // Same two-triangle graph, with every row carrying host info: the
        // intercept column is projected out alongside the gradients and
        // the cyclic dimension drops by one.
        use crate::dataset::{Comparison, ComparisonDataset, Host};
        use crate::design::build_design;
        let items = vec!["a".into(), "b".into(), "c".into(), "d".into()];
        let pairs = [(0usize, 1usize), (1, 2), (2, 0), (0, 3), (3, 2)];
        let comparisons = pairs
            .iter()
            .enumerate()
            .map(|(k, &(i, j))| {
                let mut c = Comparison::new(i, j, 0.3 * mixed_unit(50 + k as u64));
                c.host = Some(Host::First);
                c
            })
            .collect();
        let dataset = ComparisonDataset::new(items, comparisons).unwrap();
        let op = build_design(&dataset, true).unwrap();
        let report = consistency_report(&op, &[2], 1.0, None, None).unwrap();
        assert!(report.intercept_projected);
        assert_eq!(report.l, 1);

        // And the resistance-based diagonal still agrees with projection.
        let proj = CyclicProjection::new(&op, DEFAULT_CG_TOL).unwrap();
        let rows: Vec<usize> = (0..op.n_rows()).collect();
        let fast = complement_diagonal(&proj, &rows).unwrap();
        for (j, &d) in rows.iter().zip(&fast) {
            let mut unit = vec![0.0; op.n_rows()];
            unit[*j] = 1.0;
            let col = proj.project(&unit).unwrap();
            assert!((col[*j] - d).abs() < 1e-8);
        }
    }
}
