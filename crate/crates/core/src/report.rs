//! CSV, JSON and columnar plot data for norm tables and verification runs.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::norms::NormValue;
use crate::quadrature::QualityFlag;
use crate::suite::SuiteReport;
use crate::verifier::{EquivalenceEstimate, InequalityRecord};

/// One row of a norm table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormRow {
    pub function_id: String,
    #[serde(flatten)]
    pub norm: NormValue,
}

/// A norm that could not be evaluated, reported in place of a value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormFailure {
    pub function_id: String,
    pub norm: String,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct NormTable {
    pub rows: Vec<NormRow>,
    pub failures: Vec<NormFailure>,
}

pub const RECORD_COLUMNS: [&str; 12] = [
    "theorem",
    "relation",
    "function_id",
    "lhs",
    "rhs",
    "constant",
    "provenance",
    "slack",
    "scale",
    "allowance",
    "passed",
    "flags",
];

pub const EQUIVALENCE_COLUMNS: [&str; 6] = ["theorem", "norm_a", "norm_b", "family", "function_id", "ratio"];

pub const NORM_COLUMNS: [&str; 11] = [
    "function_id",
    "id",
    "kind",
    "value",
    "k",
    "p",
    "m",
    "domain",
    "error_estimate",
    "flags",
    "error",
];

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

fn flags(f: &[QualityFlag]) -> String {
    f.iter()
        .map(|f| match f {
            QualityFlag::NonMonotoneIncrements => "non_monotone_increments",
            QualityFlag::SingleLevel => "single_level",
        })
        .collect::<Vec<_>>()
        .join(";")
}

pub fn records_csv(records: &[InequalityRecord]) -> Result<String> {
    let mut w = writer();
    w.write_record(RECORD_COLUMNS).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.theorem.clone(),
            r.relation.clone(),
            r.function_id.clone(),
            num(r.lhs),
            num(r.rhs),
            num(r.constant),
            r.provenance.as_str().into(),
            num(r.slack),
            num(r.scale),
            num(r.allowance),
            r.passed.to_string(),
            flags(&r.flags),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

fn family_label(e: &EquivalenceEstimate) -> String {
    e.family.as_ref().map_or(String::new(), |f| {
        format!("{}:deg{}:n{}:seed{}", f.kind.as_str(), f.degree, f.count, f.seed)
    })
}

pub fn equivalences_csv(estimates: &[EquivalenceEstimate]) -> Result<String> {
    let mut w = writer();
    w.write_record(EQUIVALENCE_COLUMNS).map_err(csv_err)?;
    for e in estimates {
        let fam = family_label(e);
        for (id, r) in &e.ratios {
            w.write_record([&e.theorem, &e.norm_a, &e.norm_b, &fam, id, &num(*r)])
                .map_err(csv_err)?;
        }
    }
    finish(w)
}

pub fn norms_csv(table: &NormTable) -> Result<String> {
    let mut w = writer();
    w.write_record(NORM_COLUMNS).map_err(csv_err)?;
    for row in &table.rows {
        let n = &row.norm;
        w.write_record([
            row.function_id.clone(),
            n.id.clone(),
            n.kind.clone(),
            num(n.value),
            opt(n.k),
            n.p.map_or("inf".into(), num),
            opt(n.m),
            n.domain.clone(),
            n.error_estimate.map_or(String::new(), num),
            flags(&n.flags),
            String::new(),
        ])
        .map_err(csv_err)?;
    }
    for f in &table.failures {
        let mut fields = vec![f.function_id.clone(), f.norm.clone()];
        fields.extend(std::iter::repeat_n(String::new(), 8));
        fields.push(f.error.clone());
        w.write_record(fields).map_err(csv_err)?;
    }
    finish(w)
}

/// Pretty JSON with keys in declaration order.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Columnar text files: `(file name, contents)`.
pub type PlotFiles = Vec<(String, String)>;

/// Scatter data `constant * rhs` against `lhs` per theorem and relation.
/// With no records a single header-only file is produced.
pub fn record_plotdata(records: &[InequalityRecord]) -> PlotFiles {
    const HEADER: &str = "# bound lhs function_id\n";
    if records.is_empty() {
        return vec![("records.dat".into(), HEADER.into())];
    }
    let mut groups: BTreeMap<String, String> = BTreeMap::new();
    for r in records {
        let name = format!("{}_{}.dat", r.theorem, r.relation.replace('.', "_"));
        let body = groups.entry(name).or_insert_with(|| HEADER.to_string());
        body.push_str(&format!("{:e} {:e} {}\n", r.constant * r.rhs, r.lhs, r.function_id));
    }
    groups.into_iter().collect()
}

/// Ratio column with a min/max footer per equivalence estimate.
pub fn equivalence_plotdata(estimates: &[EquivalenceEstimate]) -> PlotFiles {
    estimates
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let mut body = format!("# ratio {} / {} {}\n", e.norm_a, e.norm_b, family_label(e));
            for (_, r) in &e.ratios {
                body.push_str(&format!("{r:e}\n"));
            }
            body.push_str(&format!(
                "# min {:e} {}\n# max {:e} {}\n",
                e.min_ratio, e.argmin, e.max_ratio, e.argmax
            ));
            (format!("{}_ratio_{i:02}.dat", e.theorem), body)
        })
        .collect()
}

pub fn suite_plotdata(report: &SuiteReport) -> PlotFiles {
    let mut files = record_plotdata(&report.records);
    files.extend(equivalence_plotdata(&report.equivalences));
    files
}
