//! Deterministic output formatting: 17-significant-digit floats, canonical
//! JSON, and the CSV file formats shared by the library and the CLI.
//!
//! Everything here is byte-deterministic for identical inputs, so fixed-seed
//! runs can be compared with `diff`.

use std::io;

use serde::Serialize;

use crate::dataset::ComparisonDataset;
use crate::error::{Error, Result};
use crate::hodge::RankingResult;
use crate::lasso::RegularizationPath;
use crate::sim::GridCell;

/// Format a float with 17 significant digits in scientific notation.
/// Parsing the result reproduces the original bits (17 digits round-trip
/// exactly for IEEE doubles).
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

struct SigFigFormatter;

impl serde_json::ser::Formatter for SigFigFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{}", fmt_float(value))
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.write_f64(writer, value as f64)
    }
}

/// Serialize to canonical JSON: struct fields in declaration order, floats
/// with 17 significant digits, non-finite floats as `null`, trailing
/// newline. Emitting, parsing, and emitting again is byte-identical.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFigFormatter);
    value
        .serialize(&mut ser)
        .expect("in-memory JSON serialization cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

/// Finish an in-memory CSV writer. Writing to a `Vec<u8>` cannot fail.
fn into_csv_string(writer: csv::Writer<Vec<u8>>) -> String {
    let bytes = writer
        .into_inner()
        .expect("in-memory CSV serialization cannot fail");
    String::from_utf8(bytes).expect("CSV emitters write UTF-8")
}

/// Ranking CSV `label,rank_position,score`: rows ordered best-first
/// (descending score, original index on exact ties), positions 1-based.
pub fn ranking_csv(result: &RankingResult, labels: &[String]) -> Result<String> {
    if labels.len() != result.theta.len() {
        return Err(Error::DimensionMismatch {
            expected: result.theta.len(),
            got: labels.len(),
        });
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["label", "rank_position", "score"])
        .expect("in-memory CSV serialization cannot fail");
    for (position, item) in result.order().into_iter().enumerate() {
        writer
            .write_record([
                labels[item].as_str(),
                &(position + 1).to_string(),
                &fmt_float(result.theta[item]),
            ])
            .expect("in-memory CSV serialization cannot fail");
    }
    Ok(into_csv_string(writer))
}

/// Item-mapping CSV `label,index`: the dense index each label was assigned.
pub fn mapping_csv(labels: &[String]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["label", "index"])
        .expect("in-memory CSV serialization cannot fail");
    for (index, label) in labels.iter().enumerate() {
        writer
            .write_record([label.as_str(), &index.to_string()])
            .expect("in-memory CSV serialization cannot fail");
    }
    into_csv_string(writer)
}

/// Path CSV `lambda,comparison_index,gamma`: one row per nonzero coordinate
/// per path point, in path order. Iteration paths name the first column `t`
/// and carry the algorithm time there.
pub fn path_csv(path: &RegularizationPath) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let param = match path.param {
        crate::lasso::PathParam::Lambda => "lambda",
        crate::lasso::PathParam::Time => "t",
    };
    writer
        .write_record([param, "comparison_index", "gamma"])
        .expect("in-memory CSV serialization cannot fail");
    for point in &path.points {
        for &(r, g) in &point.gamma {
            writer
                .write_record([&fmt_float(point.lambda), &r.to_string(), &fmt_float(g)])
                .expect("in-memory CSV serialization cannot fail");
        }
    }
    into_csv_string(writer)
}

/// Entry-order CSV `comparison_index,entry_rank`: comparisons that entered
/// the path, most suspicious first, ranks 1-based.
pub fn entry_order_csv(path: &RegularizationPath) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["comparison_index", "entry_rank"])
        .expect("in-memory CSV serialization cannot fail");
    for (position, r) in path.ranked_entries().into_iter().enumerate() {
        writer
            .write_record([&r.to_string(), &(position + 1).to_string()])
            .expect("in-memory CSV serialization cannot fail");
    }
    into_csv_string(writer)
}

/// Grid CSV `SN,OP,mean_auc,sd_auc,repeats,method` (OP as a fraction).
pub fn grid_csv(cells: &[GridCell]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["SN", "OP", "mean_auc", "sd_auc", "repeats", "method"])
        .expect("in-memory CSV serialization cannot fail");
    for cell in cells {
        writer
            .write_record([
                &cell.sn.to_string(),
                &fmt_float(cell.op_frac),
                &fmt_float(cell.mean_auc),
                &fmt_float(cell.sd_auc),
                &cell.repeats.to_string(),
                &cell.method,
            ])
            .expect("in-memory CSV serialization cannot fail");
    }
    into_csv_string(writer)
}

/// Planted-corruption sidecar CSV `comparison_index,gamma_star`.
pub fn truth_csv(truth_gamma: &[(usize, f64)]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["comparison_index", "gamma_star"])
        .expect("in-memory CSV serialization cannot fail");
    for &(r, g) in truth_gamma {
        writer
            .write_record([&r.to_string(), &fmt_float(g)])
            .expect("in-memory CSV serialization cannot fail");
    }
    into_csv_string(writer)
}

/// One detected outlier, dressed with the original comparison's context.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct OutlierRow {
    pub comparison_index: usize,
    pub item_i: String,
    pub item_j: String,
    pub rater: Option<String>,
    pub value: f64,
    pub gamma: f64,
    /// 1-based position in the path's entry order.
    pub entry_rank: usize,
}

/// Dress a sparse outlier estimate with item labels, raters, and entry
/// ranks, sorted by entry rank. Estimate coordinates the path never saw
/// enter (possible only for hand-built inputs) sort last, ranked after all
/// entered coordinates.
pub fn outlier_rows(
    dataset: &ComparisonDataset,
    gamma: &[(usize, f64)],
    path: &RegularizationPath,
) -> Result<Vec<OutlierRow>> {
    let m = dataset.n_comparisons();
    let mut rank_of = vec![usize::MAX; m];
    for (position, r) in path.ranked_entries().into_iter().enumerate() {
        rank_of[r] = position + 1;
    }
    let mut fallback = path.entry.iter().flatten().count();
    let mut rows = Vec::with_capacity(gamma.len());
    for &(r, g) in gamma {
        if r >= m {
            return Err(Error::SupportOutOfRange { index: r, m });
        }
        let c = &dataset.comparisons()[r];
        let entry_rank = if rank_of[r] != usize::MAX {
            rank_of[r]
        } else {
            fallback += 1;
            fallback
        };
        rows.push(OutlierRow {
            comparison_index: r,
            item_i: dataset.items()[c.item_i].clone(),
            item_j: dataset.items()[c.item_j].clone(),
            rater: c.rater.clone(),
            value: c.value,
            gamma: g,
            entry_rank,
        });
    }
    rows.sort_by_key(|row| (row.entry_rank, row.comparison_index));
    Ok(rows)
}
