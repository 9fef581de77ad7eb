//! Evaluation metrics: ROC/AUC for outlier detection, Kendall rank
//! correlation, and gauge-aligned score error.

use crate::error::{Error, Result};

/// One operating point of a ROC curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub false_positive_rate: f64,
    pub true_positive_rate: f64,
}

/// A ROC curve with its area. Points run from (0, 0) to (1, 1); tied
/// scores form a single sweep step, so ties contribute trapezoids rather
/// than an arbitrary within-tie order.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// ROC curve of `scores` against boolean outlier `labels`. Higher score =
/// more suspicious. `-inf` scores are fine (one shared tie group for
/// "never flagged"); NaN is rejected. Needs at least one positive and one
/// negative label.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    if scores.iter().any(|v| v.is_nan()) {
        return Err(Error::BadParameter {
            name: "scores",
            reason: "NaN suspicion score".into(),
        });
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::BadParameter {
            name: "labels",
            reason: format!("need both classes, got {pos} positive / {neg} negative"),
        });
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("NaN screened"));

    let mut points = vec![RocPoint {
        false_positive_rate: 0.0,
        true_positive_rate: 0.0,
    }];
    let mut auc = 0.0;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut k = 0;
    while k < order.len() {
        // Consume one whole tie group.
        let score = scores[order[k]];
        let (mut d_tp, mut d_fp) = (0usize, 0usize);
        while k < order.len() && scores[order[k]] == score {
            if labels[order[k]] {
                d_tp += 1;
            } else {
                d_fp += 1;
            }
            k += 1;
        }
        let tpr_prev = tp as f64 / pos as f64;
        tp += d_tp;
        fp += d_fp;
        let tpr = tp as f64 / pos as f64;
        let fpr = fp as f64 / neg as f64;
        auc += (d_fp as f64 / neg as f64) * 0.5 * (tpr_prev + tpr);
        points.push(RocPoint {
            false_positive_rate: fpr,
            true_positive_rate: tpr,
        });
    }
    Ok(RocCurve { points, auc })
}

/// Area under the ROC curve (see [`roc_curve`]).
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    Ok(roc_curve(scores, labels)?.auc)
}

/// Kendall rank correlation with tie correction (the tau-b variant):
/// `(concordant - discordant) / sqrt((n0 - ties_a)(n0 - ties_b))` over all
/// item pairs. Returns an error when either input is entirely tied.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: b.len(),
            got: a.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::BadParameter {
            name: "scores",
            reason: format!("rank correlation needs at least 2 items, got {}", a.len()),
        });
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::BadParameter {
            name: "scores",
            reason: "non-finite score".into(),
        });
    }
    let n = a.len();
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    let mut ties_a = 0i64;
    let mut ties_b = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let da = a[i] - a[j];
            let db = b[i] - b[j];
            if da == 0.0 {
                ties_a += 1;
            }
            if db == 0.0 {
                ties_b += 1;
            }
            let s = da * db;
            if s > 0.0 {
                concordant += 1;
            } else if s < 0.0 {
                discordant += 1;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    if ties_a == n0 || ties_b == n0 {
        return Err(Error::BadParameter {
            name: "scores",
            reason: "all values tied; rank correlation undefined".into(),
        });
    }
    let denom = (((n0 - ties_a) as f64) * ((n0 - ties_b) as f64)).sqrt();
    Ok((concordant - discordant) as f64 / denom)
}

/// Mean squared error between two score vectors after removing their mean
/// difference — the natural comparison for scores identified only up to an
/// additive constant.
pub fn aligned_mse(est: &[f64], truth: &[f64]) -> Result<f64> {
    if est.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: est.len(),
        });
    }
    if est.is_empty() {
        return Err(Error::EmptyInput);
    }
    if est.iter().chain(truth).any(|v| !v.is_finite()) {
        return Err(Error::BadParameter {
            name: "scores",
            reason: "non-finite score".into(),
        });
    }
    let n = est.len() as f64;
    let shift = est
        .iter()
        .zip(truth)
        .map(|(e, t)| e - t)
        .sum::<f64>()
        / n;
    Ok(est
        .iter()
        .zip(truth)
        .map(|(e, t)| {
            let d = e - t - shift;
            d * d
        })
        .sum::<f64>()
        / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_perfect_and_reversed() {
        let labels = [true, true, false, false];
        assert_eq!(roc_auc(&[4.0, 3.0, 2.0, 1.0], &labels).unwrap(), 1.0);
        assert_eq!(roc_auc(&[1.0, 2.0, 3.0, 4.0], &labels).unwrap(), 0.0);
    }

    #[test]
    fn auc_hand_case_with_tie() {
        // Groups: {3: pos}, {2: pos, neg}, {1: neg}.
        // Curve (0,0) -> (0,.5) -> (.5,1) -> (1,1); area = .375 + .5.
        let auc = roc_auc(&[3.0, 2.0, 2.0, 1.0], &[true, true, false, false]).unwrap();
        assert!((auc - 0.875).abs() < 1e-15);
    }

    #[test]
    fn auc_all_tied_is_half() {
        let auc = roc_auc(&[7.0; 6], &[true, false, true, false, false, true]).unwrap();
        assert!((auc - 0.5).abs() < 1e-15);
    }

    #[test]
    fn auc_accepts_negative_infinity_group() {
        // "Never flagged" scores share one -inf tie group.
        let scores = [2.0, f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        let labels = [true, true, false, false];
        // (0,0) -> (0,.5) -> (1,1): area = 1 * (0.5 + 1)/2.
        let auc = roc_auc(&scores, &labels).unwrap();
        assert!((auc - 0.75).abs() < 1e-15);
    }

    #[test]
    fn auc_curve_endpoints() {
        let curve = roc_curve(&[3.0, 1.0, 2.0], &[true, false, true]).unwrap();
        let first = curve.points.first().unwrap();
        let last = curve.points.last().unwrap();
        assert_eq!(
            (first.false_positive_rate, first.true_positive_rate),
            (0.0, 0.0)
        );
        assert_eq!(
            (last.false_positive_rate, last.true_positive_rate),
            (1.0, 1.0)
        );
    }

    #[test]
    fn auc_rejects_degenerate_labels_and_nan() {
        assert!(roc_auc(&[1.0, 2.0], &[true, true]).is_err());
        assert!(roc_auc(&[1.0, 2.0], &[false, false]).is_err());
        assert!(roc_auc(&[f64::NAN, 2.0], &[true, false]).is_err());
        assert!(roc_auc(&[], &[]).is_err());
        assert!(roc_auc(&[1.0], &[true, false]).is_err());
    }

    #[test]
    fn tau_perfect_and_reversed() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [10.0, 20.0, 30.0, 40.0];
        let r: Vec<f64> = b.iter().rev().copied().collect();
        assert_eq!(kendall_tau(&a, &b).unwrap(), 1.0);
        assert_eq!(kendall_tau(&a, &r).unwrap(), -1.0);
    }

    #[test]
    fn tau_hand_case() {
        // One discordant pair out of six: tau = (5 - 1) / 6.
        let tau = kendall_tau(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((tau - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn tau_tie_correction() {
        // a has one tied pair: C - D = 2, denom = sqrt(2 * 3).
        let tau = kendall_tau(&[1.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((tau - 2.0 / 6.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn tau_rejects_degenerate_input() {
        assert!(kendall_tau(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(kendall_tau(&[1.0], &[2.0]).is_err());
        assert!(kendall_tau(&[1.0, 2.0], &[1.0]).is_err());
        assert!(kendall_tau(&[f64::INFINITY, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn aligned_mse_ignores_constant_shift() {
        let truth = [1.0, 0.0, -1.0];
        let est = [6.0, 5.0, 4.0];
        assert_eq!(aligned_mse(&est, &truth).unwrap(), 0.0);
    }

    #[test]
    fn aligned_mse_hand_case() {
        // diff = (1, 0, -1) after no shift (mean already 0): mse = 2/3.
        let truth = [0.0, 0.0, 0.0];
        let est = [1.0, 0.0, -1.0];
        let got = aligned_mse(&est, &truth).unwrap();
        assert!((got - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn aligned_mse_rejects_bad_input() {
        assert!(aligned_mse(&[], &[]).is_err());
        assert!(aligned_mse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(aligned_mse(&[f64::NAN], &[1.0]).is_err());
    }
}
