//! Ranked tables of reports for one corpus and their text, CSV and JSON forms.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::corpus::Completeness;
use crate::metrics::EvalReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingKey {
    FScore,
    Accuracy,
}

impl OrderingKey {
    pub fn for_completeness(completeness: Completeness) -> Self {
        match completeness {
            Completeness::Complete => OrderingKey::FScore,
            Completeness::Partial => OrderingKey::Accuracy,
        }
    }

    pub fn value(self, report: &EvalReport) -> Option<f64> {
        match self {
            OrderingKey::FScore => report.f_score,
            OrderingKey::Accuracy => report.accuracy,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeaderboardRow {
    pub geoparser: String,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leaderboard {
    pub corpus: String,
    pub ordering_key: OrderingKey,
    pub rows: Vec<LeaderboardRow>,
}

/// Descending by key with absent values last; equal keys by id ascending.
fn row_order(key: OrderingKey, a: &LeaderboardRow, b: &LeaderboardRow) -> Ordering {
    let score = match (key.value(&a.report), key.value(&b.report)) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    };
    score.then_with(|| a.geoparser.cmp(&b.geoparser))
}

/// Ranks reports that all belong to one corpus. Complete corpora are
/// ranked by F1, partial ones by accuracy.
pub fn compare(
    reports: Vec<(String, EvalReport)>,
    completeness: Completeness,
) -> Result<Leaderboard, HarnessError> {
    let corpus = reports
        .first()
        .map(|(_, r)| r.corpus.clone())
        .unwrap_or_default();
    if let Some((_, other)) = reports.iter().find(|(_, r)| r.corpus != corpus) {
        return Err(HarnessError::MixedCorpora(corpus, other.corpus.clone()));
    }
    let ordering_key = OrderingKey::for_completeness(completeness);
    let mut rows: Vec<LeaderboardRow> = reports
        .into_iter()
        .map(|(geoparser, report)| LeaderboardRow { geoparser, report })
        .collect();
    rows.sort_by(|a, b| row_order(ordering_key, a, b));
    Ok(Leaderboard {
        corpus,
        ordering_key,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!(
                "unknown format {other:?}; expected text, csv or json"
            )),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Text => "text",
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        })
    }
}

pub const COLUMNS: [&str; 8] = [
    "precision",
    "recall",
    "f_score",
    "accuracy",
    "mean",
    "median",
    "auc",
    "acc_at_161",
];

fn metric_values(r: &EvalReport) -> [Option<f64>; 8] {
    [
        r.precision,
        r.recall,
        r.f_score,
        r.accuracy,
        r.mean,
        r.median,
        r.auc,
        r.acc_at_161,
    ]
}

fn cell(value: Option<f64>, absent: &str) -> String {
    value.map_or_else(|| absent.to_string(), |v| format!("{v:.3}"))
}

#[derive(Serialize)]
struct JsonRow<'a> {
    geoparser: &'a str,
    precision: Option<f64>,
    recall: Option<f64>,
    f_score: Option<f64>,
    accuracy: Option<f64>,
    mean: Option<f64>,
    median: Option<f64>,
    auc: Option<f64>,
    acc_at_161: Option<f64>,
}

fn round3(v: Option<f64>) -> Option<f64> {
    v.map(|x| format!("{x:.3}").parse().expect("formatted floats parse"))
}

/// Renders the board. Numbers carry three decimals; absent metrics are
/// `-` in text, empty in CSV and `null` in JSON.
pub fn render_report(board: &Leaderboard, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => render_text(board),
        ReportFormat::Csv => render_csv(board),
        ReportFormat::Json => {
            let mut out = serde_json::to_string_pretty(&json_rows(board)).expect("rows serialize");
            out.push('\n');
            out
        }
    }
}

fn json_rows(board: &Leaderboard) -> Vec<JsonRow<'_>> {
    board
        .rows
        .iter()
        .map(|row| {
            let [p, r, f, a, mean, median, auc, acc] = metric_values(&row.report).map(round3);
            JsonRow {
                geoparser: &row.geoparser,
                precision: p,
                recall: r,
                f_score: f,
                accuracy: a,
                mean,
                median,
                auc,
                acc_at_161: acc,
            }
        })
        .collect()
}

fn render_text(board: &Leaderboard) -> String {
    let mut table: Vec<Vec<String>> = vec![std::iter::once("geoparser")
        .chain(COLUMNS)
        .map(String::from)
        .collect()];
    for row in &board.rows {
        let mut line = vec![row.geoparser.clone()];
        line.extend(metric_values(&row.report).map(|v| cell(v, "-")));
        table.push(line);
    }
    let widths: Vec<usize> = (0..table[0].len())
        .map(|c| {
            table
                .iter()
                .map(|l| l[c].chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for line in &table {
        let mut text = format!("{:<w$}", line[0], w = widths[0]);
        for (c, value) in line.iter().enumerate().skip(1) {
            text.push_str(&format!("  {:>w$}", value, w = widths[c]));
        }
        out.push_str(text.trim_end());
        out.push('\n');
    }
    out
}

fn render_csv(board: &Leaderboard) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let header = std::iter::once("geoparser").chain(COLUMNS);
    writer.write_record(header).expect("in-memory write");
    for row in &board.rows {
        let mut record = vec![row.geoparser.clone()];
        record.extend(metric_values(&row.report).map(|v| cell(v, "")));
        writer.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

#[derive(Serialize)]
struct JsonBoard<'a> {
    corpus: &'a str,
    ordering_key: OrderingKey,
    rows: Vec<JsonRow<'a>>,
}

/// Renders several boards at once: titled sections in text, a leading
/// `corpus` column in CSV, and an array of `{corpus, ordering_key, rows}`
/// objects in JSON.
pub fn render_boards(boards: &[Leaderboard], format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => boards
            .iter()
            .map(|b| {
                let key = match b.ordering_key {
                    OrderingKey::FScore => "f_score",
                    OrderingKey::Accuracy => "accuracy",
                };
                format!("{} (ranked by {key})\n{}", b.corpus, render_text(b))
            })
            .collect::<Vec<_>>()
            .join("\n"),
        ReportFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            let header = ["corpus", "geoparser"].into_iter().chain(COLUMNS);
            writer.write_record(header).expect("in-memory write");
            for board in boards {
                for row in &board.rows {
                    let mut record = vec![board.corpus.clone(), row.geoparser.clone()];
                    record.extend(metric_values(&row.report).map(|v| cell(v, "")));
                    writer.write_record(&record).expect("in-memory write");
                }
            }
            String::from_utf8(writer.into_inner().expect("in-memory flush"))
                .expect("csv output is utf-8")
        }
        ReportFormat::Json => {
            let out: Vec<JsonBoard> = boards
                .iter()
                .map(|b| JsonBoard {
                    corpus: &b.corpus,
                    ordering_key: b.ordering_key,
                    rows: json_rows(b),
                })
                .collect();
            let mut text = serde_json::to_string_pretty(&out).expect("boards serialize");
            text.push('\n');
            text
        }
    }
}
