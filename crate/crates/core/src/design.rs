//! The design operator of a comparison dataset: the signed incidence matrix
//! of the comparison multigraph, applied matrix-free.
//!
//! For a dataset with `n` items and `m` comparisons, the operator is the
//! `m x n` matrix with `+1` at `(r, i_r)` and `-1` at `(r, j_r)` for row
//! `r = (i_r, j_r)`, each row scaled by the square root of its weight so
//! that least squares on the operator is weighted least squares on the raw
//! data. With home-advantage information an extra column holds `+1` when
//! the first-listed item was the host and `-1` when the second-listed item
//! was; rows without a host contribute `0`.
//!
//! `forward` maps item scores (plus the optional home-advantage coefficient
//! as a trailing entry) to predicted comparison values; `adjoint` is its
//! transpose, the graph divergence.

use std::sync::OnceLock;

use crate::dataset::{connectivity_of, ComparisonDataset, Connectivity, Host};
use crate::error::{Error, Result};
use crate::util::mixed_unit;

#[derive(Debug, Clone, Copy, PartialEq)]
struct DesignRow {
    i: usize,
    j: usize,
    sqrt_weight: f64,
    host_sign: f64,
}

/// Matrix-free design operator (see the module docs).
#[derive(Debug, Clone)]
pub struct DesignOperator {
    n: usize,
    rows: Vec<DesignRow>,
    intercept: bool,
    norm_cache: OnceLock<f64>,
}

/// Build the design operator for a dataset.
///
/// With `with_intercept` the operator gains the home-advantage column; this
/// fails with [`Error::MissingHostInfo`] when no row records a host.
pub fn build_design(dataset: &ComparisonDataset, with_intercept: bool) -> Result<DesignOperator> {
    if with_intercept && !dataset.has_host_info() {
        return Err(Error::MissingHostInfo);
    }
    let rows = dataset
        .comparisons()
        .iter()
        .map(|c| DesignRow {
            i: c.item_i,
            j: c.item_j,
            sqrt_weight: c.weight.sqrt(),
            host_sign: match c.host {
                Some(Host::First) => 1.0,
                Some(Host::Second) => -1.0,
                None => 0.0,
            },
        })
        .collect();
    Ok(DesignOperator {
        n: dataset.n_items(),
        rows,
        intercept: with_intercept,
        norm_cache: OnceLock::new(),
    })
}

impl DesignOperator {
    /// Unit-weight operator straight from an edge list; test and benchmark
    /// convenience.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::EmptyInput);
        }
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: i.max(j),
                });
            }
            if i == j {
                return Err(Error::SelfComparison {
                    line: 0,
                    label: i.to_string(),
                });
            }
        }
        Ok(DesignOperator {
            n,
            rows: edges
                .iter()
                .map(|&(i, j)| DesignRow {
                    i,
                    j,
                    sqrt_weight: 1.0,
                    host_sign: 0.0,
                })
                .collect(),
            intercept: false,
            norm_cache: OnceLock::new(),
        })
    }

    /// Number of items (score entries).
    pub fn n_items(&self) -> usize {
        self.n
    }

    /// Number of comparison rows.
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn has_intercept(&self) -> bool {
        self.intercept
    }

    /// Length of the score-side vectors: `n`, plus one when the operator
    /// carries the home-advantage column.
    pub fn input_dim(&self) -> usize {
        self.n + usize::from(self.intercept)
    }

    /// `(item_i, item_j)` endpoints of one row.
    pub fn endpoints(&self, row: usize) -> (usize, usize) {
        (self.rows[row].i, self.rows[row].j)
    }

    /// Scale a raw per-comparison data vector into the operator's weighted
    /// row space (multiply each entry by the square root of its row weight).
    /// Identity for unit-weight datasets.
    pub fn scale_data(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() != self.rows.len() {
            return Err(Error::DimensionMismatch {
                expected: self.rows.len(),
                got: raw.len(),
            });
        }
        Ok(raw
            .iter()
            .zip(&self.rows)
            .map(|(y, row)| y * row.sqrt_weight)
            .collect())
    }

    /// Predicted comparison values for a score vector (`forward` map).
    pub fn forward(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: v.len(),
            });
        }
        let mut out = vec![0.0; self.rows.len()];
        let c = if self.intercept { v[self.n] } else { 0.0 };
        self.apply_into(&v[..self.n], c, &mut out);
        Ok(out)
    }

    /// Transpose map (graph divergence); the trailing entry of the result is
    /// the intercept component when the operator has one.
    pub fn adjoint(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.rows.len() {
            return Err(Error::DimensionMismatch {
                expected: self.rows.len(),
                got: u.len(),
            });
        }
        let mut out = vec![0.0; self.input_dim()];
        let c = self.adjoint_into(u, &mut out[..self.n]);
        if self.intercept {
            out[self.n] = c;
        }
        Ok(out)
    }

    /// Hot-path forward apply into a preallocated buffer. `scores` has
    /// length `n`; `intercept_coef` is ignored unless the operator has the
    /// intercept column.
    pub(crate) fn apply_into(&self, scores: &[f64], intercept_coef: f64, out: &mut [f64]) {
        debug_assert_eq!(scores.len(), self.n);
        debug_assert_eq!(out.len(), self.rows.len());
        let c = if self.intercept { intercept_coef } else { 0.0 };
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.sqrt_weight * (scores[row.i] - scores[row.j] + c * row.host_sign);
        }
    }

    /// Hot-path adjoint into a preallocated score buffer; returns the
    /// intercept component (meaningful only with the intercept column).
    pub(crate) fn adjoint_into(&self, u: &[f64], scores_out: &mut [f64]) -> f64 {
        debug_assert_eq!(u.len(), self.rows.len());
        debug_assert_eq!(scores_out.len(), self.n);
        scores_out.fill(0.0);
        let mut c = 0.0;
        for (ur, row) in u.iter().zip(&self.rows) {
            let s = row.sqrt_weight * ur;
            scores_out[row.i] += s;
            scores_out[row.j] -= s;
            c += s * row.host_sign;
        }
        c
    }

    /// Graph Laplacian apply `v -> X^T X v` on the score block (the
    /// intercept column plays no part). `tmp` must have length `m`.
    pub(crate) fn laplacian_into(&self, v: &[f64], tmp: &mut [f64], out: &mut [f64]) {
        self.apply_into(v, 0.0, tmp);
        self.adjoint_into(tmp, out);
    }

    /// The scaled home-advantage column, when present.
    pub fn intercept_column(&self) -> Option<Vec<f64>> {
        self.intercept.then(|| {
            self.rows
                .iter()
                .map(|row| row.sqrt_weight * row.host_sign)
                .collect()
        })
    }

    /// Connected components of the item graph underlying the rows.
    pub fn connectivity(&self) -> Connectivity {
        connectivity_of(self.n, self.rows.iter().map(|r| (r.i, r.j)))
    }

    /// Fail with [`Error::Disconnected`] unless the graph is connected.
    pub fn require_connected(&self) -> Result<()> {
        let conn = self.connectivity();
        if conn.is_connected() {
            Ok(())
        } else {
            Err(Error::Disconnected {
                components: conn.summaries(),
            })
        }
    }

    /// New operator with the given rows removed (sorted unique indices are
    /// not required; duplicates are tolerated). Returns the operator and the
    /// kept original row indices, in order. Connectivity of the result is
    /// the caller's concern.
    pub fn drop_rows(&self, drop: &[usize]) -> Result<(DesignOperator, Vec<usize>)> {
        let mut dropped = vec![false; self.rows.len()];
        for &r in drop {
            if r >= self.rows.len() {
                return Err(Error::SupportOutOfRange {
                    index: r,
                    m: self.rows.len(),
                });
            }
            dropped[r] = true;
        }
        let kept: Vec<usize> = (0..self.rows.len()).filter(|&r| !dropped[r]).collect();
        if kept.is_empty() {
            return Err(Error::EmptyInput);
        }
        let rows = kept.iter().map(|&r| self.rows[r]).collect();
        Ok((
            DesignOperator {
                n: self.n,
                rows,
                intercept: self.intercept,
                norm_cache: OnceLock::new(),
            },
            kept,
        ))
    }

    /// Largest eigenvalue of `X^T X` (the squared operator norm of the
    /// design, intercept column included), estimated by power iteration to
    /// relative tolerance `1e-6` and cached.
    pub fn operator_norm(&self) -> f64 {
        *self.norm_cache.get_or_init(|| self.power_iteration(1e-6))
    }

    fn power_iteration(&self, rtol: f64) -> f64 {
        let dim = self.input_dim();
        let mut v: Vec<f64> = (0..dim).map(|k| mixed_unit(0x9e1b_53f7 ^ k as u64)).collect();
        let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);

        let mut tmp = vec![0.0; self.rows.len()];
        let mut w = vec![0.0; dim];
        let mut lambda = 0.0;
        for _ in 0..10_000 {
            // w = X^T X v, including the intercept column when present.
            let c = if self.intercept { v[dim - 1] } else { 0.0 };
            self.apply_into(&v[..self.n], c, &mut tmp);
            let ci = self.adjoint_into(&tmp, &mut w[..self.n]);
            if self.intercept {
                w[self.n] = ci;
            }
            let new_lambda: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
            let nw = norm(&w);
            if nw == 0.0 {
                return 0.0;
            }
            v.iter_mut().zip(&w).for_each(|(x, y)| *x = y / nw);
            if (new_lambda - lambda).abs() <= rtol * new_lambda.abs() {
                return new_lambda;
            }
            lambda = new_lambda;
        }
        lambda
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Comparison;

    fn triangle() -> DesignOperator {
        DesignOperator::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    #[test]
    fn forward_matches_hand_computation() {
        let op = triangle();
        let out = op.forward(&[3.0, 1.0, -2.0]).unwrap();
        assert_eq!(out, vec![2.0, 3.0, -5.0]);
    }

    #[test]
    fn duplicated_edge_doubles_the_laplacian() {
        let op = DesignOperator::from_edges(2, &[(0, 1), (0, 1)]).unwrap();
        let mut tmp = vec![0.0; 2];
        let mut out = vec![0.0; 2];
        op.laplacian_into(&[1.0, 0.0], &mut tmp, &mut out);
        assert_eq!(out, vec![2.0, -2.0]);
        op.laplacian_into(&[0.0, 1.0], &mut tmp, &mut out);
        assert_eq!(out, vec![-2.0, 2.0]);
    }

    #[test]
    fn adjoint_is_the_transpose() {
        // <X v, u> == <v, X^T u> on random-ish vectors, to near machine
        // precision, for a weighted design with intercept.
        let ds = ComparisonDataset::new(
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![
                Comparison {
                    item_i: 0,
                    item_j: 1,
                    value: 1.0,
                    rater: None,
                    weight: 2.0,
                    host: Some(Host::First),
                },
                Comparison {
                    item_i: 2,
                    item_j: 3,
                    value: -1.0,
                    rater: None,
                    weight: 0.5,
                    host: Some(Host::Second),
                },
                Comparison::new(1, 2, 0.25),
            ],
        )
        .unwrap();
        let op = build_design(&ds, true).unwrap();
        let v: Vec<f64> = (0..op.input_dim()).map(|k| mixed_unit(k as u64)).collect();
        let u: Vec<f64> = (0..op.n_rows()).map(|k| mixed_unit(100 + k as u64)).collect();
        let xv = op.forward(&v).unwrap();
        let xtu = op.adjoint(&u).unwrap();
        let lhs: f64 = xv.iter().zip(&u).map(|(a, b)| a * b).sum();
        let rhs: f64 = v.iter().zip(&xtu).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn all_ones_scores_map_to_intercept_column() {
        let ds = ComparisonDataset::load_csv(
            "item_i,item_j,value,host\na,b,1,i\nb,c,-1,j\nc,a,0,none\n".as_bytes(),
            &crate::dataset::CsvSchema::default(),
        )
        .unwrap();
        let op = build_design(&ds, true).unwrap();
        let ones = vec![1.0; op.input_dim()];
        let out = op.forward(&ones).unwrap();
        assert_eq!(out, op.intercept_column().unwrap());

        let plain = build_design(&ds, false).unwrap();
        let out = plain.forward(&vec![1.0; 3]).unwrap();
        assert_eq!(out, vec![0.0; 3]);
    }

    #[test]
    fn intercept_without_host_info_fails() {
        let ds = ComparisonDataset::from_values(2, &[(0, 1, 1.0)]).unwrap();
        assert!(matches!(
            build_design(&ds, true),
            Err(Error::MissingHostInfo)
        ));
    }

    #[test]
    fn operator_norm_matches_known_spectra() {
        // Triangle Laplacian: eigenvalues {0, 3, 3}.
        assert!((triangle().operator_norm() - 3.0).abs() < 1e-4);
        // Two-edge path: eigenvalues {0, 1, 3}.
        let path = DesignOperator::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert!((path.operator_norm() - 3.0).abs() < 1e-4);
        // Star with k leaves: largest eigenvalue k + 1.
        for k in [2usize, 5, 9] {
            let edges: Vec<(usize, usize)> = (1..=k).map(|l| (0, l)).collect();
            let star = DesignOperator::from_edges(k + 1, &edges).unwrap();
            assert!(
                (star.operator_norm() - (k as f64 + 1.0)).abs() < 1e-4,
                "star with {k} leaves"
            );
        }
    }

    #[test]
    fn drop_rows_keeps_order_and_validates() {
        let op = triangle();
        let (sub, kept) = op.drop_rows(&[1]).unwrap();
        assert_eq!(kept, vec![0, 2]);
        assert_eq!(sub.n_rows(), 2);
        assert_eq!(sub.endpoints(1), (2, 0));
        assert!(matches!(
            op.drop_rows(&[7]),
            Err(Error::SupportOutOfRange { index: 7, m: 3 })
        ));
    }

    #[test]
    fn scale_data_applies_sqrt_weights() {
        let ds = ComparisonDataset::new(
            vec!["a".into(), "b".into()],
            vec![Comparison {
                item_i: 0,
                item_j: 1,
                value: 3.0,
                rater: None,
                weight: 4.0,
                host: None,
            }],
        )
        .unwrap();
        let op = build_design(&ds, false).unwrap();
        assert_eq!(op.scale_data(&[3.0]).unwrap(), vec![6.0]);
    }
}
