//! Rendering of report sets: one table per dataset and measure, with a
//! column per configuration plus support.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::metrics::{round2, Averages, EvalReport};
use crate::snippet::Origin;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
    Json,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unknown report format {0:?} (expected csv, md or json)")]
    UnknownFormat(String),
    #[error("malformed report set: {0}")]
    Parse(#[from] serde_json::Error),
}

impl FromStr for ReportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            "json" => Ok(ReportFormat::Json),
            _ => Err(ReportError::UnknownFormat(s.to_string())),
        }
    }
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "md",
            ReportFormat::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Measure {
    Precision,
    Recall,
    F1,
}

const MEASURES: [Measure; 3] = [Measure::Precision, Measure::Recall, Measure::F1];
const ROWS: [&str; 5] = ["human", "chatgpt", "accuracy", "macro avg", "weighted avg"];

impl Measure {
    fn title(self) -> &'static str {
        match self {
            Measure::Precision => "Precision",
            Measure::Recall => "Recall",
            Measure::F1 => "F1-score",
        }
    }

    fn of(self, a: &Averages) -> f64 {
        match self {
            Measure::Precision => a.precision,
            Measure::Recall => a.recall,
            Measure::F1 => a.f1,
        }
    }

    fn cell(self, report: &EvalReport, row: &str) -> f64 {
        let class = |o: Origin| {
            let m = report.per_class.get(o);
            Averages { precision: m.precision, recall: m.recall, f1: m.f1 }
        };
        match row {
            "human" => self.of(&class(Origin::Human)),
            "chatgpt" => self.of(&class(Origin::Chatgpt)),
            "accuracy" => report.accuracy,
            "macro avg" => self.of(&report.macro_avg),
            _ => self.of(&report.weighted_avg),
        }
    }
}

fn support(report: &EvalReport, row: &str) -> usize {
    match row {
        "human" => report.per_class.human.support,
        "chatgpt" => report.per_class.chatgpt.support,
        _ => report.total_support,
    }
}

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for item in items {
        if !out.contains(&item) {
            out.push(item);
        }
    }
    out
}

struct Table<'a> {
    dataset: &'a str,
    measure: Measure,
    configs: Vec<&'a str>,
    /// Per row: one optional value per config, then support.
    rows: Vec<(&'static str, Vec<Option<f64>>, usize)>,
}

fn tables(reports: &[EvalReport]) -> Vec<Table<'_>> {
    let mut out = Vec::new();
    for dataset in first_seen(reports.iter().map(|r| r.dataset.as_str())) {
        let cells: Vec<&EvalReport> = reports.iter().filter(|r| r.dataset == dataset).collect();
        let configs = first_seen(cells.iter().map(|r| r.config.as_str()));
        for measure in MEASURES {
            let rows = ROWS
                .iter()
                .map(|&row| {
                    let values = configs.iter().map(|c| cells.iter().find(|r| r.config == *c).map(|r| measure.cell(r, row))).collect();
                    (row, values, support(cells[0], row))
                })
                .collect();
            out.push(Table { dataset, measure, configs: configs.clone(), rows });
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Renders `reports` in `format`. Tables show two decimals; JSON keeps
/// full precision.
pub fn render_report(reports: &[EvalReport], format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(reports).expect("reports serialize");
            s.push('\n');
            s
        }
        ReportFormat::Markdown => {
            let tables = tables(reports);
            if tables.is_empty() {
                return "| | support |\n| --- | ---: |\n".to_string();
            }
            let mut s = String::new();
            for t in tables {
                let _ = writeln!(s, "### {}: {}\n", t.dataset, t.measure.title());
                let _ = writeln!(s, "| | {} | support |", t.configs.join(" | "));
                let _ = writeln!(s, "| --- |{} ---: |", " ---: |".repeat(t.configs.len()));
                for (row, values, support) in t.rows {
                    let cells: Vec<String> = values.iter().map(|v| v.map(round2).unwrap_or_default()).collect();
                    let _ = writeln!(s, "| {row} | {} | {support} |", cells.join(" | "));
                }
                s.push('\n');
            }
            s
        }
        ReportFormat::Csv => {
            let tables = tables(reports);
            let configs = first_seen(tables.iter().flat_map(|t| t.configs.iter().copied()));
            let mut s = String::from("dataset,measure,row");
            for c in &configs {
                s.push(',');
                s.push_str(&csv_field(c));
            }
            s.push_str(",support\n");
            for t in &tables {
                for (row, values, support) in &t.rows {
                    let _ = write!(s, "{},{},{}", csv_field(t.dataset), t.measure.title(), row);
                    for c in &configs {
                        let v = t.configs.iter().position(|x| x == c).and_then(|i| values[i]);
                        s.push(',');
                        s.push_str(&v.map(round2).unwrap_or_default());
                    }
                    let _ = writeln!(s, ",{support}");
                }
            }
            s
        }
    }
}

pub fn parse_reports(json: &str) -> Result<Vec<EvalReport>, ReportError> {
    Ok(serde_json::from_str(json)?)
}
