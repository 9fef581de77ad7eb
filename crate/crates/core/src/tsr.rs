//! Triangle transitivity of a complete majority-vote tournament.
//!
//! Every unordered item pair must have a strict weighted-majority direction:
//! rows with positive value vote for the first-listed item, negative for the
//! second, and exact ties (value 0) vote for neither. The statistic is the
//! fraction of item triples whose majority directions are acyclic, computed
//! with the out-degree identity: a tournament on `n` nodes with out-degrees
//! `d_i` has exactly `C(n,3) - sum_i C(d_i,2)` cyclic triangles.

use crate::dataset::ComparisonDataset;
use crate::error::{Error, Result};

/// Fraction of acyclic triples in `[0, 1]`; 1 means a fully transitive
/// tournament. Fails when fewer than three items are present, when some
/// pair was never compared, or when some pair's votes tie exactly.
pub fn tsr(dataset: &ComparisonDataset) -> Result<f64> {
    let n = dataset.n_items();
    if n < 3 {
        return Err(Error::BadParameter {
            name: "dataset",
            reason: format!("transitivity needs at least 3 items, got {n}"),
        });
    }

    // net[i][j] > 0 means i collected more vote weight than j.
    let mut net = vec![0.0f64; n * n];
    let mut covered = vec![false; n * n];
    for c in dataset.comparisons() {
        let (i, j) = (c.item_i, c.item_j);
        covered[i * n + j] = true;
        covered[j * n + i] = true;
        if c.value > 0.0 {
            net[i * n + j] += c.weight;
        } else if c.value < 0.0 {
            net[j * n + i] += c.weight;
        }
    }

    let mut out_degree = vec![0u64; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if !covered[i * n + j] {
                return Err(Error::IncompleteTournament { i, j });
            }
            let forward = net[i * n + j];
            let backward = net[j * n + i];
            if forward == backward {
                return Err(Error::TiedPair { i, j });
            }
            if forward > backward {
                out_degree[i] += 1;
            } else {
                out_degree[j] += 1;
            }
        }
    }

    let choose3 = |x: u64| x * x.saturating_sub(1) * x.saturating_sub(2) / 6;
    let choose2 = |x: u64| x * x.saturating_sub(1) / 2;
    let total = choose3(n as u64);
    let transitive: u64 = out_degree.iter().map(|&d| choose2(d)).sum();
    let cyclic = total - transitive;
    Ok(1.0 - cyclic as f64 / total as f64)
}
