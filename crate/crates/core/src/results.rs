//! Result rows and their CSV / JSON serialization.
//!
//! Both formats carry the columns `experiment,n,C,t,metric,value,bound,decision`
//! in that order. Reals are written in scientific notation with 17 significant
//! digits, so every value round-trips exactly.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{Decision, StatReport};

pub const CSV_HEADER: &str = "experiment,n,C,t,metric,value,bound,decision";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowDecision {
    Consistent,
    Rejected,
    /// Informational rows carry no bound.
    Info,
}

impl RowDecision {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Consistent => "consistent",
            Self::Rejected => "rejected",
            Self::Info => "info",
        }
    }
}

impl From<Decision> for RowDecision {
    fn from(d: Decision) -> Self {
        match d {
            Decision::Consistent => Self::Consistent,
            Decision::Rejected => Self::Rejected,
        }
    }
}

impl FromStr for RowDecision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consistent" => Ok(Self::Consistent),
            "rejected" => Ok(Self::Rejected),
            "info" => Ok(Self::Info),
            other => Err(Error::IoFailure(format!("unknown decision {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub n: Option<usize>,
    pub c: Option<f64>,
    pub t: Option<f64>,
    pub metric: String,
    pub value: f64,
    pub bound: Option<f64>,
    pub decision: RowDecision,
}

impl ResultRow {
    pub fn info(experiment: &str, metric: &str, value: f64) -> Self {
        Self {
            experiment: experiment.to_owned(),
            n: None,
            c: None,
            t: None,
            metric: metric.to_owned(),
            value,
            bound: None,
            decision: RowDecision::Info,
        }
    }

    /// Row whose decision is `value <= bound`.
    pub fn checked(experiment: &str, metric: &str, value: f64, bound: f64) -> Self {
        Self {
            bound: Some(bound),
            decision: Decision::from_bound(value, bound).into(),
            ..Self::info(experiment, metric, value)
        }
    }

    /// Row built from a statistical report: value is the statistic and
    /// bound the threshold.
    pub fn from_report(experiment: &str, metric: &str, report: &StatReport) -> Self {
        Self {
            bound: Some(report.threshold),
            decision: report.decision.into(),
            ..Self::info(experiment, metric, report.statistic)
        }
    }

    /// Row with an explicitly supplied pass/fail outcome.
    pub fn with_outcome(
        experiment: &str,
        metric: &str,
        value: f64,
        bound: Option<f64>,
        ok: bool,
    ) -> Self {
        Self {
            bound,
            decision: if ok {
                RowDecision::Consistent
            } else {
                RowDecision::Rejected
            },
            ..Self::info(experiment, metric, value)
        }
    }

    pub fn n(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    pub fn c(mut self, c: f64) -> Self {
        self.c = Some(c);
        self
    }

    pub fn t(mut self, t: f64) -> Self {
        self.t = Some(t);
        self
    }

    pub fn rejected(&self) -> bool {
        self.decision == RowDecision::Rejected
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    /// `json` for a `.json` extension, CSV otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Self::Json,
            _ => Self::Csv,
        }
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::ConfigInvalid(format!(
                "unknown output format {other:?}"
            ))),
        }
    }
}

fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn check_rows(rows: &[ResultRow]) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::IoFailure("no result rows to write".into()));
    }
    for (i, row) in rows.iter().enumerate() {
        let reals = [Some(row.value), row.bound, row.c, row.t];
        if reals.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::IoFailure(format!(
                "row {i} ({} / {}) holds a non-finite number",
                row.experiment, row.metric
            )));
        }
    }
    Ok(())
}

/// A row with every field already formatted for output.
#[derive(Serialize)]
struct CsvRecord<'a> {
    experiment: &'a str,
    n: Option<usize>,
    #[serde(rename = "C")]
    c: Option<String>,
    t: Option<String>,
    metric: &'a str,
    value: String,
    bound: Option<String>,
    decision: &'static str,
}

/// Parsed form shared by both formats.
#[derive(Deserialize)]
struct RawRow {
    experiment: String,
    n: Option<usize>,
    #[serde(rename = "C")]
    c: Option<f64>,
    t: Option<f64>,
    metric: String,
    value: f64,
    bound: Option<f64>,
    decision: String,
}

impl RawRow {
    fn into_row(self) -> Result<ResultRow> {
        Ok(ResultRow {
            experiment: self.experiment,
            n: self.n,
            c: self.c,
            t: self.t,
            metric: self.metric,
            value: self.value,
            bound: self.bound,
            decision: self.decision.parse()?,
        })
    }
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::IoFailure(e.to_string())
}

pub fn render_csv(rows: &[ResultRow]) -> Result<String> {
    check_rows(rows)?;
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in rows {
        writer
            .serialize(CsvRecord {
                experiment: &r.experiment,
                n: r.n,
                c: r.c.map(fmt_real),
                t: r.t.map(fmt_real),
                metric: &r.metric,
                value: fmt_real(r.value),
                bound: r.bound.map(fmt_real),
                decision: r.decision.as_str(),
            })
            .map_err(io_err)?;
    }
    let bytes = writer.into_inner().map_err(io_err)?;
    String::from_utf8(bytes).map_err(io_err)
}

pub fn render_json(rows: &[ResultRow]) -> Result<String> {
    check_rows(rows)?;
    let opt = |x: Option<f64>| x.map(fmt_real).unwrap_or_else(|| "null".into());
    let text = |s: &str| serde_json::to_string(s).map_err(io_err);
    let mut out = String::from("[\n");
    for (i, r) in rows.iter().enumerate() {
        let _ = write!(
            out,
            "  {{\"experiment\": {}, \"n\": {}, \"C\": {}, \"t\": {}, \"metric\": {}, \"value\": {}, \"bound\": {}, \"decision\": \"{}\"}}",
            text(&r.experiment)?,
            r.n.map(|n| n.to_string()).unwrap_or_else(|| "null".into()),
            opt(r.c),
            opt(r.t),
            text(&r.metric)?,
            fmt_real(r.value),
            opt(r.bound),
            r.decision.as_str()
        );
        out.push_str(if i + 1 < rows.len() { ",\n" } else { "\n" });
    }
    out.push_str("]\n");
    Ok(out)
}

pub fn render(rows: &[ResultRow], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => render_csv(rows),
        OutputFormat::Json => render_json(rows),
    }
}

pub fn write_results(rows: &[ResultRow], path: &Path, format: OutputFormat) -> Result<()> {
    let text = render(rows, format)?;
    std::fs::write(path, text).map_err(|e| Error::IoFailure(format!("{}: {e}", path.display())))
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    if text.lines().next() != Some(CSV_HEADER) {
        return Err(Error::IoFailure("missing or unexpected CSV header".into()));
    }
    csv::Reader::from_reader(text.as_bytes())
        .deserialize::<RawRow>()
        .map(|r| r.map_err(io_err)?.into_row())
        .collect()
}

pub fn parse_json(text: &str) -> Result<Vec<ResultRow>> {
    let raw: Vec<RawRow> = serde_json::from_str(text).map_err(io_err)?;
    raw.into_iter().map(RawRow::into_row).collect()
}
