//! Rendering of campaign results.
//!
//! Text output follows the usual simulation-table layout: one column per
//! estimator, a "mean" row and a "5th, 95th percentile" row. CSV and JSON
//! print floats in shortest round-trip form, so parsing them back gives the
//! same summary values bit for bit.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::campaign::{CampaignResult, SummaryRow};
use crate::config::Quantity;
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Format::Text),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(HarnessError::Config(format!("unknown format '{other}'"))),
        }
    }
}

pub const CSV_HEADER: [&str; 5] = ["estimator", "mean", "p5", "p95", "runs_used"];

const ROW_LABEL_WIDTH: usize = 22;
const COLUMN_WIDTH: usize = 18;

fn fixed(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v:.4}"))
}

fn exact(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// Renders the summary table in the requested format.
pub fn emit_table(result: &CampaignResult, format: Format) -> Result<String> {
    match format {
        Format::Text => Ok(text_table(&result.summary)),
        Format::Csv => csv_table(&result.summary),
        Format::Json => Ok(serde_json::to_string_pretty(result)? + "\n"),
    }
}

pub fn text_table(summary: &[SummaryRow]) -> String {
    let mut out = format!("{:ROW_LABEL_WIDTH$}", "");
    for row in summary {
        write!(out, "{:>COLUMN_WIDTH$}", row.estimator.label()).unwrap();
    }
    let mut out = out.trim_end().to_string();
    out.push('\n');
    if summary.is_empty() {
        return out;
    }
    write!(out, "{:ROW_LABEL_WIDTH$}", "mean").unwrap();
    for row in summary {
        write!(out, "{:>COLUMN_WIDTH$}", fixed(row.mean)).unwrap();
    }
    write!(out, "\n{:ROW_LABEL_WIDTH$}", "5th, 95th percentile").unwrap();
    for row in summary {
        let band = format!("[{},{}]", fixed(row.p5), fixed(row.p95));
        write!(out, "{band:>COLUMN_WIDTH$}").unwrap();
    }
    write!(out, "\n{:ROW_LABEL_WIDTH$}", "runs used").unwrap();
    for row in summary {
        write!(out, "{:>COLUMN_WIDTH$}", row.runs_used).unwrap();
    }
    out.push('\n');
    out
}

pub fn csv_table(summary: &[SummaryRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for row in summary {
        w.write_record([
            row.estimator.label().to_string(),
            exact(row.mean),
            exact(row.p5),
            exact(row.p95),
            row.runs_used.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Parses the output of [`csv_table`].
pub fn parse_summary_csv(text: &str) -> Result<Vec<SummaryRow>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    if rdr.headers()?.iter().ne(CSV_HEADER) {
        return Err(HarnessError::Config(format!("summary header must be {}", CSV_HEADER.join(","))));
    }
    let opt = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| HarnessError::Config(format!("'{s}' is not a number")))
        }
    };
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            Ok(SummaryRow {
                estimator: rec[0].parse::<Quantity>()?,
                mean: opt(&rec[1])?,
                p5: opt(&rec[2])?,
                p95: opt(&rec[3])?,
                runs_used: rec[4].parse().map_err(|_| HarnessError::Config(format!("bad run count '{}'", &rec[4])))?,
            })
        })
        .collect()
}

pub fn parse_result_json(text: &str) -> Result<CampaignResult> {
    Ok(serde_json::from_str(text)?)
}

/// Per-run records as CSV: one row per run, one column per estimator.
pub fn records_csv(result: &CampaignResult) -> Result<String> {
    let estimators = &result.config.estimators;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["run", "seed", "h_x", "h_y", "risk1_share"].map(String::from).to_vec();
    header.extend(estimators.iter().map(|q| q.label().to_string()));
    header.push("errors".into());
    w.write_record(&header)?;
    for r in &result.records {
        let mut row = vec![
            r.run.to_string(),
            r.seed.to_string(),
            exact(r.bandwidth.map(|k| k.h_x)),
            exact(r.bandwidth.map(|k| k.h_y)),
            exact(r.risk1_share),
        ];
        row.extend(estimators.iter().map(|&q| exact(r.value(q))));
        row.push(r.errors.join("; "));
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
