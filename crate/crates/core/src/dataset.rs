//! Pairwise-comparison data: the item table, the comparison list, CSV
//! loading/serialization, and graph connectivity.
//!
//! A dataset is a multigraph over items. Every row states "item `i` beats
//! item `j` by `value`" (negative values mean `j` was preferred, zero is an
//! exact tie). Duplicate pairs, opposite orientations and per-rater rows are
//! all kept verbatim; nothing is aggregated.

use std::collections::HashMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::report::fmt_float;

/// Which of the two listed items was the host (home team), for datasets
/// that carry a home-advantage column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Host {
    /// The first-listed item (`item_i`) was the host.
    First,
    /// The second-listed item (`item_j`) was the host.
    Second,
}

/// One pairwise comparison row.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Index of the first-listed item.
    pub item_i: usize,
    /// Index of the second-listed item.
    pub item_j: usize,
    /// Degree of preference for `item_i` over `item_j` (0 = tie).
    pub value: f64,
    /// Optional rater / voter identifier (kept verbatim, never aggregated).
    pub rater: Option<String>,
    /// Positive multiplicity weight; 1 means an ordinary single comparison.
    pub weight: f64,
    /// Host side, when the dataset has home-advantage information.
    pub host: Option<Host>,
}

impl Comparison {
    /// Plain comparison with default weight and no rater/host metadata.
    pub fn new(item_i: usize, item_j: usize, value: f64) -> Self {
        Comparison {
            item_i,
            item_j,
            value,
            rater: None,
            weight: 1.0,
            host: None,
        }
    }
}

/// Column names used when reading a comparison CSV.
///
/// The defaults match the canonical header
/// `item_i,item_j,value[,rater][,weight][,host]`; set the fields to adapt
/// to files that use different column names. Optional columns set to `None`
/// are looked up under their default name and silently skipped when absent.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub item_i: String,
    pub item_j: String,
    pub value: String,
    pub rater: String,
    pub weight: String,
    pub host: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            item_i: "item_i".into(),
            item_j: "item_j".into(),
            value: "value".into(),
            rater: "rater".into(),
            weight: "weight".into(),
            host: "host".into(),
        }
    }
}

/// An immutable set of items plus the comparisons among them.
///
/// Items are indexed densely in order of first appearance in the input.
/// Invariants enforced at construction: at least one comparison, all item
/// indices in range, no self-comparisons, finite values, positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonDataset {
    items: Vec<String>,
    comparisons: Vec<Comparison>,
}

impl ComparisonDataset {
    /// Build a dataset from parts, checking every invariant.
    pub fn new(items: Vec<String>, comparisons: Vec<Comparison>) -> Result<Self> {
        if comparisons.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = items.len();
        for (row, c) in comparisons.iter().enumerate() {
            if c.item_i >= n || c.item_j >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: c.item_i.max(c.item_j),
                });
            }
            if c.item_i == c.item_j {
                return Err(Error::SelfComparison {
                    line: row + 2,
                    label: items[c.item_i].clone(),
                });
            }
            if !c.value.is_finite() {
                return Err(Error::NonFiniteValue {
                    line: row + 2,
                    field: "value",
                });
            }
            if !c.weight.is_finite() {
                return Err(Error::NonFiniteValue {
                    line: row + 2,
                    field: "weight",
                });
            }
            if c.weight <= 0.0 {
                return Err(Error::MalformedRow {
                    line: row + 2,
                    reason: format!("weight must be positive, got {}", c.weight),
                });
            }
        }
        Ok(ComparisonDataset { items, comparisons })
    }

    /// Convenience constructor for synthetic data: items are labeled by
    /// their index and every comparison uses default weight/metadata.
    pub fn from_values(n_items: usize, values: &[(usize, usize, f64)]) -> Result<Self> {
        let items = (0..n_items).map(|i| i.to_string()).collect();
        let comparisons = values
            .iter()
            .map(|&(i, j, v)| Comparison::new(i, j, v))
            .collect();
        ComparisonDataset::new(items, comparisons)
    }

    /// Read a comparison CSV. Items are indexed by first appearance;
    /// duplicate rows are kept. Fails on the first malformed row, with its
    /// 1-based line number.
    pub fn load_csv<R: Read>(source: R, schema: &CsvSchema) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_reader(source);

        let headers = match reader.headers() {
            Ok(h) if !h.is_empty() => h.clone(),
            _ => return Err(Error::EmptyInput),
        };
        let col = |name: &str| headers.iter().position(|h| h == name);
        let required = |name: &str| {
            col(name).ok_or_else(|| Error::MalformedRow {
                line: 1,
                reason: format!("missing required column {name:?}"),
            })
        };
        let idx_i = required(&schema.item_i)?;
        let idx_j = required(&schema.item_j)?;
        let idx_v = required(&schema.value)?;
        let idx_rater = col(&schema.rater);
        let idx_weight = col(&schema.weight);
        let idx_host = col(&schema.host);

        let mut items: Vec<String> = Vec::new();
        let mut index_of: HashMap<String, usize> = HashMap::new();
        let mut intern = |label: &str, items: &mut Vec<String>| -> usize {
            if let Some(&k) = index_of.get(label) {
                return k;
            }
            let k = items.len();
            items.push(label.to_string());
            index_of.insert(label.to_string(), k);
            k
        };

        let mut comparisons = Vec::new();
        for record in reader.records() {
            let record = record?;
            let line = record
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or(comparisons.len() + 2);
            let field = |idx: usize| -> Result<&str> {
                record.get(idx).ok_or_else(|| Error::MalformedRow {
                    line,
                    reason: format!("missing field in column {idx}"),
                })
            };

            let label_i = field(idx_i)?.trim().to_string();
            let label_j = field(idx_j)?.trim().to_string();
            if label_i.is_empty() || label_j.is_empty() {
                return Err(Error::MalformedRow {
                    line,
                    reason: "empty item label".into(),
                });
            }
            if label_i == label_j {
                return Err(Error::SelfComparison {
                    line,
                    label: label_i,
                });
            }

            let raw_v = field(idx_v)?.trim();
            let value: f64 = raw_v.parse().map_err(|_| Error::MalformedRow {
                line,
                reason: format!("cannot parse value {raw_v:?}"),
            })?;
            if !value.is_finite() {
                return Err(Error::NonFiniteValue {
                    line,
                    field: "value",
                });
            }

            let rater = match idx_rater {
                Some(idx) => {
                    let r = field(idx)?.trim();
                    (!r.is_empty()).then(|| r.to_string())
                }
                None => None,
            };

            let weight = match idx_weight {
                Some(idx) => {
                    let raw = field(idx)?.trim();
                    if raw.is_empty() {
                        1.0
                    } else {
                        let w: f64 = raw.parse().map_err(|_| Error::MalformedRow {
                            line,
                            reason: format!("cannot parse weight {raw:?}"),
                        })?;
                        if !w.is_finite() {
                            return Err(Error::NonFiniteValue {
                                line,
                                field: "weight",
                            });
                        }
                        if w <= 0.0 {
                            return Err(Error::MalformedRow {
                                line,
                                reason: format!("weight must be positive, got {raw}"),
                            });
                        }
                        w
                    }
                }
                None => 1.0,
            };

            let host = match idx_host {
                Some(idx) => match field(idx)?.trim() {
                    "" | "none" => None,
                    "i" => Some(Host::First),
                    "j" => Some(Host::Second),
                    other => {
                        return Err(Error::MalformedRow {
                            line,
                            reason: format!("host must be one of i/j/none, got {other:?}"),
                        })
                    }
                },
                None => None,
            };

            let item_i = intern(&label_i, &mut items);
            let item_j = intern(&label_j, &mut items);
            comparisons.push(Comparison {
                item_i,
                item_j,
                value,
                rater,
                weight,
                host,
            });
        }

        ComparisonDataset::new(items, comparisons)
    }

    /// Serialize back to CSV. Optional columns are emitted only when some
    /// row actually uses them, so `load -> write -> load` reproduces the
    /// dataset exactly.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let with_rater = self.comparisons.iter().any(|c| c.rater.is_some());
        let with_weight = self.comparisons.iter().any(|c| c.weight != 1.0);
        let with_host = self.comparisons.iter().any(|c| c.host.is_some());

        let mut writer = csv::Writer::from_writer(sink);
        let mut header = vec!["item_i", "item_j", "value"];
        if with_rater {
            header.push("rater");
        }
        if with_weight {
            header.push("weight");
        }
        if with_host {
            header.push("host");
        }
        writer.write_record(&header)?;

        for c in &self.comparisons {
            let mut row = vec![
                self.items[c.item_i].clone(),
                self.items[c.item_j].clone(),
                fmt_float(c.value),
            ];
            if with_rater {
                row.push(c.rater.clone().unwrap_or_default());
            }
            if with_weight {
                row.push(fmt_float(c.weight));
            }
            if with_host {
                row.push(
                    match c.host {
                        None => "none",
                        Some(Host::First) => "i",
                        Some(Host::Second) => "j",
                    }
                    .to_string(),
                );
            }
            writer.write_record(&row)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn comparisons(&self) -> &[Comparison] {
        &self.comparisons
    }

    /// Number of items (graph nodes), including items that only ever appear
    /// in dropped rows.
    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    /// Number of comparison rows (graph edges, with multiplicity).
    pub fn n_comparisons(&self) -> usize {
        self.comparisons.len()
    }

    /// True when at least one row records a host side.
    pub fn has_host_info(&self) -> bool {
        self.comparisons.iter().any(|c| c.host.is_some())
    }

    /// The raw per-comparison value vector, in row order.
    pub fn values(&self) -> Vec<f64> {
        self.comparisons.iter().map(|c| c.value).collect()
    }

    /// True when the comparison values are pure win/loss outcomes: every
    /// non-tie value is exactly +1 or -1 and at least one such row exists.
    /// Tie rows (value 0) are permitted and do not affect the answer.
    pub fn is_dichotomous(&self) -> bool {
        let mut saw_nonzero = false;
        for c in &self.comparisons {
            if c.value == 0.0 {
                continue;
            }
            if c.value.abs() != 1.0 {
                return false;
            }
            saw_nonzero = true;
        }
        saw_nonzero
    }

    /// Connected components of the comparison graph, as sorted lists of item
    /// indices. Items without any comparison form singleton components.
    pub fn connectivity(&self) -> Connectivity {
        connectivity_of(
            self.items.len(),
            self.comparisons.iter().map(|c| (c.item_i, c.item_j)),
        )
    }
}

/// Connected-component decomposition of an item graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connectivity {
    /// Components as sorted item-index lists, ordered by smallest member.
    pub components: Vec<Vec<usize>>,
}

impl Connectivity {
    pub fn is_connected(&self) -> bool {
        self.components.len() == 1
    }

    /// `(size, representative)` pairs used in error messages.
    pub fn summaries(&self) -> Vec<(usize, usize)> {
        self.components.iter().map(|c| (c.len(), c[0])).collect()
    }
}

/// Union-find component computation shared by datasets and design operators.
pub(crate) fn connectivity_of<I>(n: usize, edges: I) -> Connectivity
where
    I: IntoIterator<Item = (usize, usize)>,
{
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (i, j) in edges {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri.max(rj)] = ri.min(rj);
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for x in 0..n {
        let r = find(&mut parent, x);
        groups.entry(r).or_default().push(x);
    }
    let mut components: Vec<Vec<usize>> = groups.into_values().collect();
    for c in &mut components {
        c.sort_unstable();
    }
    components.sort_by_key(|c| c[0]);
    Connectivity { components }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "item_i,item_j,value\na,b,1\nb,c,-0.5\na,c,0\n";

    #[test]
    fn loads_basic_file_with_first_appearance_indexing() {
        let ds = ComparisonDataset::load_csv(BASIC.as_bytes(), &CsvSchema::default()).unwrap();
        assert_eq!(ds.items(), &["a", "b", "c"]);
        assert_eq!(ds.n_comparisons(), 3);
        assert_eq!(ds.comparisons()[1].item_i, 1);
        assert_eq!(ds.comparisons()[1].item_j, 2);
        assert_eq!(ds.comparisons()[1].value, -0.5);
        assert_eq!(ds.comparisons()[0].weight, 1.0);
        assert!(!ds.has_host_info());
    }

    #[test]
    fn keeps_duplicates_and_ties() {
        let text = "item_i,item_j,value\na,b,1\na,b,1\nb,a,0\n";
        let ds = ComparisonDataset::load_csv(text.as_bytes(), &CsvSchema::default()).unwrap();
        assert_eq!(ds.n_comparisons(), 3);
        assert_eq!(ds.comparisons()[2].value, 0.0);
        assert!(ds.is_dichotomous());
    }

    #[test]
    fn self_comparison_reports_line() {
        let text = "item_i,item_j,value\na,b,1\nc,c,2\n";
        let err = ComparisonDataset::load_csv(text.as_bytes(), &CsvSchema::default()).unwrap_err();
        match err {
            Error::SelfComparison { line, label } => {
                assert_eq!(line, 3);
                assert_eq!(label, "c");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn malformed_value_reports_line() {
        let text = "item_i,item_j,value\na,b,1\nb,c,oops\n";
        let err = ComparisonDataset::load_csv(text.as_bytes(), &CsvSchema::default()).unwrap_err();
        match err {
            Error::MalformedRow { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_finite_value_rejected() {
        let text = "item_i,item_j,value\na,b,NaN\n";
        let err = ComparisonDataset::load_csv(text.as_bytes(), &CsvSchema::default()).unwrap_err();
        assert!(matches!(err, Error::NonFiniteValue { line: 2, .. }));
    }

    #[test]
    fn empty_and_header_only_inputs_rejected() {
        for text in ["", "item_i,item_j,value\n"] {
            let err =
                ComparisonDataset::load_csv(text.as_bytes(), &CsvSchema::default()).unwrap_err();
            assert!(matches!(err, Error::EmptyInput), "input {text:?}");
        }
    }

    #[test]
    fn optional_columns_parse() {
        let text = "item_i,item_j,value,rater,weight,host\n\
                    LAL,BOS,3,r1,1,i\n\
                    BOS,NYK,-2,,2.5,j\n\
                    NYK,LAL,1,r2,,none\n";
        let ds = ComparisonDataset::load_csv(text.as_bytes(), &CsvSchema::default()).unwrap();
        assert_eq!(ds.comparisons()[0].host, Some(Host::First));
        assert_eq!(ds.comparisons()[1].host, Some(Host::Second));
        assert_eq!(ds.comparisons()[2].host, None);
        assert_eq!(ds.comparisons()[1].weight, 2.5);
        assert_eq!(ds.comparisons()[2].weight, 1.0);
        assert_eq!(ds.comparisons()[0].rater.as_deref(), Some("r1"));
        assert_eq!(ds.comparisons()[1].rater, None);
        assert!(ds.has_host_info());
    }

    #[test]
    fn bad_host_and_bad_weight_rejected() {
        let bad_host = "item_i,item_j,value,host\na,b,1,x\n";
        assert!(matches!(
            ComparisonDataset::load_csv(bad_host.as_bytes(), &CsvSchema::default()),
            Err(Error::MalformedRow { line: 2, .. })
        ));
        let bad_weight = "item_i,item_j,value,weight\na,b,1,-2\n";
        assert!(matches!(
            ComparisonDataset::load_csv(bad_weight.as_bytes(), &CsvSchema::default()),
            Err(Error::MalformedRow { line: 2, .. })
        ));
    }

    #[test]
    fn csv_round_trip_is_identity() {
        let text = "item_i,item_j,value,rater,weight,host\n\
                    \"x, y\",b,0.125,r 1,2,i\n\
                    b,\"qu\"\"ote\",-3.5,,1,none\n";
        let ds = ComparisonDataset::load_csv(text.as_bytes(), &CsvSchema::default()).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let reloaded = ComparisonDataset::load_csv(buf.as_slice(), &CsvSchema::default()).unwrap();
        assert_eq!(ds, reloaded);
    }

    #[test]
    fn custom_schema_maps_columns() {
        let text = "winner,loser,margin\nx,y,2\n";
        let schema = CsvSchema {
            item_i: "winner".into(),
            item_j: "loser".into(),
            value: "margin".into(),
            ..CsvSchema::default()
        };
        let ds = ComparisonDataset::load_csv(text.as_bytes(), &schema).unwrap();
        assert_eq!(ds.items(), &["x", "y"]);
        assert_eq!(ds.comparisons()[0].value, 2.0);
    }

    #[test]
    fn connectivity_counts_declared_singletons() {
        let ds = ComparisonDataset::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![Comparison::new(0, 1, 1.0)],
        )
        .unwrap();
        let conn = ds.connectivity();
        assert_eq!(conn.components, vec![vec![0, 1], vec![2]]);
        assert!(!conn.is_connected());
    }

    #[test]
    fn dichotomous_detection_ignores_ties() {
        let ds = ComparisonDataset::from_values(3, &[(0, 1, 1.0), (1, 2, 0.0)]).unwrap();
        assert!(ds.is_dichotomous());
        let ds = ComparisonDataset::from_values(3, &[(0, 1, 1.0), (1, 2, 0.25)]).unwrap();
        assert!(!ds.is_dichotomous());
        let all_ties = ComparisonDataset::from_values(2, &[(0, 1, 0.0)]).unwrap();
        assert!(!all_ties.is_dichotomous());
    }
}
