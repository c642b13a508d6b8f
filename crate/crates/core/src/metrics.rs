//! Usability evaluation arithmetic: SUS scoring, task completion rates and
//! time efficiency, plus the per-case result tables built from them.
//!
//! All reported figures use round-half-up at two decimals.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

/// SUS scores strictly above this are read as above average.
pub const SUS_AVERAGE_BENCHMARK: f64 = 68.0;

pub const RECORD_HEADER: [&str; 8] =
    ["participant", "case", "time", "assists", "errors", "tasks_total", "completed_without", "completed_with"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("expected 10 SUS items, found {0}")]
    Length(usize),
    #[error("SUS item {position} is {value}, expected 1..=5")]
    Range { position: usize, value: i64 },
    #[error("no input values")]
    EmptyInput,
    #[error("tasks_total is zero")]
    ZeroTotal,
    #[error("time must be positive")]
    NonPositiveTime,
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("no target time for case {0}")]
    MissingTarget(u8),
    #[error("row {row}: {source}")]
    Row {
        row: usize,
        #[source]
        source: Box<MetricsError>,
    },
    #[error("{0}")]
    Parse(String),
}

impl MetricsError {
    fn at_row(self, row: usize) -> MetricsError {
        MetricsError::Row { row, source: Box::new(self) }
    }
}

pub fn round_half_up(value: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    // the nudge absorbs representation error on exact halves such as 80.3125 * 100
    let scaled = value * scale;
    (scaled + 0.5 + 1e-9 * scaled.abs().max(1.0)).floor() / scale
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SusResponse {
    items: [u8; 10],
}

impl SusResponse {
    pub fn new(items: &[i64]) -> Result<Self, MetricsError> {
        if items.len() != 10 {
            return Err(MetricsError::Length(items.len()));
        }
        let mut out = [0u8; 10];
        for (i, &v) in items.iter().enumerate() {
            if !(1..=5).contains(&v) {
                return Err(MetricsError::Range { position: i + 1, value: v });
            }
            out[i] = v as u8;
        }
        Ok(SusResponse { items: out })
    }

    pub fn items(&self) -> [u8; 10] {
        self.items
    }
}

/// 2.5 × (Σ odd items (x − 1) + Σ even items (5 − x)); positions are 1-based.
pub fn sus_score(response: &SusResponse) -> f64 {
    let raw: u32 = response
        .items
        .iter()
        .enumerate()
        .map(|(i, &x)| if i % 2 == 0 { u32::from(x) - 1 } else { 5 - u32::from(x) })
        .sum();
    f64::from(raw) * 2.5
}

pub fn sus_mean(scores: &[f64]) -> Result<f64, MetricsError> {
    mean(scores).map(|m| round_half_up(m, 2))
}

pub fn is_above_average(score: f64) -> bool {
    score > SUS_AVERAGE_BENCHMARK
}

fn mean(values: &[f64]) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParticipantRecord {
    pub participant_id: String,
    pub case_id: u8,
    pub time_seconds: u32,
    pub assists: u32,
    pub errors: u32,
    pub tasks_total: u32,
    pub completed_without_assist: u32,
    pub completed_with_assist: u32,
}

impl ParticipantRecord {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if !matches!(self.case_id, 1 | 2) {
            return Err(MetricsError::InvalidRecord(format!("case must be 1 or 2, got {}", self.case_id)));
        }
        if self.time_seconds == 0 {
            return Err(MetricsError::NonPositiveTime);
        }
        if self.completed_without_assist + self.completed_with_assist > self.tasks_total {
            return Err(MetricsError::InvalidRecord(format!(
                "completed tasks ({} + {}) exceed tasks_total {}",
                self.completed_without_assist, self.completed_with_assist, self.tasks_total
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CaseTarget {
    pub case_id: u8,
    pub target_seconds: u32,
}

/// Percentages of tasks completed without and with assistance.
pub fn completion_rates(record: &ParticipantRecord) -> Result<(f64, f64), MetricsError> {
    record.validate()?;
    if record.tasks_total == 0 {
        return Err(MetricsError::ZeroTotal);
    }
    let pct = |n: u32| round_half_up(100.0 * f64::from(n) / f64::from(record.tasks_total), 2);
    Ok((pct(record.completed_without_assist), pct(record.completed_with_assist)))
}

/// Expert target time over the participant's time.
pub fn time_efficiency(target: CaseTarget, actual_seconds: u32) -> Result<f64, MetricsError> {
    raw_efficiency(target, actual_seconds).map(|r| round_half_up(r, 2))
}

fn raw_efficiency(target: CaseTarget, actual_seconds: u32) -> Result<f64, MetricsError> {
    if actual_seconds == 0 || target.target_seconds == 0 {
        return Err(MetricsError::NonPositiveTime);
    }
    Ok(f64::from(target.target_seconds) / f64::from(actual_seconds))
}

/// Parses "mm:ss" (also accepts the table form m'ss").
pub fn parse_duration(raw: &str) -> Result<u32, MetricsError> {
    let raw = raw.trim();
    let bad = || MetricsError::Parse(format!("invalid duration {raw:?}, expected mm:ss"));
    let (m, s) = raw
        .split_once(':')
        .or_else(|| raw.strip_suffix('"').and_then(|r| r.split_once(['\'', '’'])))
        .ok_or_else(bad)?;
    let minutes: u32 = m.trim().parse().map_err(|_| bad())?;
    let seconds: u32 = s.trim().parse().map_err(|_| bad())?;
    if seconds >= 60 {
        return Err(bad());
    }
    Ok(minutes * 60 + seconds)
}

/// m'ss" as printed in result tables.
pub fn format_duration(seconds: u32) -> String {
    format!("{}'{:02}\"", seconds / 60, seconds % 60)
}

/// Reads participant records; row numbers in errors are 1-based data rows.
pub fn parse_records(raw: &str) -> Result<Vec<ParticipantRecord>, MetricsError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(raw.as_bytes());
    let header = reader.headers().map_err(|e| MetricsError::Parse(e.to_string()))?;
    if header.iter().ne(RECORD_HEADER.iter().copied()) {
        return Err(MetricsError::Parse(format!("expected header {:?}", RECORD_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| MetricsError::Parse(e.to_string()).at_row(row_no))?;
        let int = |idx: usize| -> Result<u32, MetricsError> {
            row[idx]
                .parse()
                .map_err(|_| MetricsError::Parse(format!("{} is not a count: {:?}", RECORD_HEADER[idx], &row[idx])))
        };
        let record = (|| {
            let case_id = row[1]
                .parse::<u8>()
                .map_err(|_| MetricsError::Parse(format!("case is not a number: {:?}", &row[1])))?;
            let rec = ParticipantRecord {
                participant_id: row[0].to_owned(),
                case_id,
                time_seconds: parse_duration(&row[2])?,
                assists: int(3)?,
                errors: int(4)?,
                tasks_total: int(5)?,
                completed_without_assist: int(6)?,
                completed_with_assist: int(7)?,
            };
            rec.validate()?;
            Ok(rec)
        })()
        .map_err(|e: MetricsError| e.at_row(row_no))?;
        out.push(record);
    }
    if out.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    Ok(out)
}

/// One questionnaire per non-blank line, ten comma-separated answers.
pub fn parse_sus_responses(raw: &str) -> Result<Vec<SusResponse>, MetricsError> {
    non_blank_lines(raw)
        .map(|(row, line)| {
            let items = line
                .split(',')
                .map(|v| v.trim().parse::<i64>().map_err(|_| MetricsError::Parse(format!("not an integer: {v:?}"))))
                .collect::<Result<Vec<_>, _>>()
                .and_then(|items| SusResponse::new(&items));
            items.map_err(|e| e.at_row(row))
        })
        .collect()
}

/// One precomputed SUS score per non-blank line.
pub fn parse_sus_scores(raw: &str) -> Result<Vec<f64>, MetricsError> {
    non_blank_lines(raw)
        .map(|(row, line)| {
            let v: f64 = line
                .parse()
                .map_err(|_| MetricsError::Parse(format!("not a number: {line:?}")).at_row(row))?;
            if !(0.0..=100.0).contains(&v) {
                return Err(MetricsError::Parse(format!("score {v} outside 0..=100")).at_row(row));
            }
            Ok(v)
        })
        .collect()
}

fn non_blank_lines(raw: &str) -> impl Iterator<Item = (usize, &str)> {
    raw.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub participant: String,
    pub time_seconds: u32,
    pub assists: f64,
    pub errors: f64,
    pub efficiency: f64,
    pub without_assist_pct: f64,
    pub with_assist_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseTable {
    pub case_id: u8,
    pub target_seconds: u32,
    pub rows: Vec<ReportRow>,
    pub average: ReportRow,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SusSummary {
    pub scores: Vec<f64>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub above_average: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub cases: Vec<CaseTable>,
    pub sus: Option<SusSummary>,
}

pub fn sus_summary(scores: &[f64]) -> Result<SusSummary, MetricsError> {
    let mean = sus_mean(scores)?;
    Ok(SusSummary {
        scores: scores.to_vec(),
        mean,
        min: scores.iter().copied().fold(f64::INFINITY, f64::min),
        max: scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        above_average: is_above_average(mean),
    })
}

/// Builds one table per case present in `records`, in case order.
pub fn report(records: &[ParticipantRecord], targets: &[CaseTarget], sus: &[f64]) -> Result<Report, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut case_ids: Vec<u8> = records.iter().map(|r| r.case_id).collect();
    case_ids.sort_unstable();
    case_ids.dedup();

    let mut cases = Vec::new();
    for case_id in case_ids {
        let target = *targets
            .iter()
            .find(|t| t.case_id == case_id)
            .ok_or(MetricsError::MissingTarget(case_id))?;
        let mut rows = Vec::new();
        let mut raw_eff = Vec::new();
        for (i, rec) in records.iter().enumerate().filter(|(_, r)| r.case_id == case_id) {
            let (without, with) = completion_rates(rec).map_err(|e| e.at_row(i + 1))?;
            raw_eff.push(raw_efficiency(target, rec.time_seconds).map_err(|e| e.at_row(i + 1))?);
            rows.push(ReportRow {
                participant: rec.participant_id.clone(),
                time_seconds: rec.time_seconds,
                assists: f64::from(rec.assists),
                errors: f64::from(rec.errors),
                efficiency: time_efficiency(target, rec.time_seconds).map_err(|e| e.at_row(i + 1))?,
                without_assist_pct: without,
                with_assist_pct: with,
            });
        }
        let col = |f: fn(&ReportRow) -> f64| -> Result<f64, MetricsError> {
            mean(&rows.iter().map(f).collect::<Vec<_>>()).map(|m| round_half_up(m, 2))
        };
        let mean_time = mean(&rows.iter().map(|r| f64::from(r.time_seconds)).collect::<Vec<_>>())?;
        let average = ReportRow {
            participant: "Average".into(),
            time_seconds: mean_time.floor() as u32,
            assists: col(|r| r.assists)?,
            errors: col(|r| r.errors)?,
            efficiency: round_half_up(mean(&raw_eff)?, 2),
            without_assist_pct: col(|r| r.without_assist_pct)?,
            with_assist_pct: col(|r| r.with_assist_pct)?,
        };
        cases.push(CaseTable { case_id, target_seconds: target.target_seconds, rows, average });
    }

    let sus = if sus.is_empty() { None } else { Some(sus_summary(sus)?) };
    Ok(Report { cases, sus })
}

impl Report {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for case in &self.cases {
            writeln!(out, "Case {} (target {})", case.case_id, format_duration(case.target_seconds)).unwrap();
            writeln!(
                out,
                "{:<12} {:>8} {:>8} {:>7} {:>10} {:>16} {:>13}",
                "Participant", "Time", "Assist.", "Errors", "Efficiency", "Without assist.%", "With assist.%"
            )
            .unwrap();
            let line = |out: &mut String, r: &ReportRow, counts_as_int: bool| {
                let count = |v: f64| if counts_as_int { format!("{v:.0}") } else { format!("{v:.2}") };
                writeln!(
                    out,
                    "{:<12} {:>8} {:>8} {:>7} {:>10.2} {:>16.2} {:>13.2}",
                    r.participant,
                    format_duration(r.time_seconds),
                    count(r.assists),
                    count(r.errors),
                    r.efficiency,
                    r.without_assist_pct,
                    r.with_assist_pct
                )
                .unwrap();
            };
            for r in &case.rows {
                line(&mut out, r, true);
            }
            line(&mut out, &case.average, false);
            out.push('\n');
        }
        if let Some(sus) = &self.sus {
            let scores: Vec<String> = sus.scores.iter().map(|s| format!("{s}")).collect();
            writeln!(out, "SUS scores: {}", scores.join(" ")).unwrap();
            writeln!(
                out,
                "SUS mean {:.2} (min {}, max {}): {}",
                sus.mean,
                sus.min,
                sus.max,
                if sus.above_average { "above average" } else { "not above average" }
            )
            .unwrap();
        }
        out
    }

    /// Comma-delimited rows, one per participant plus an average row per case.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("case,participant,time,time_seconds,assists,errors,efficiency,without_assist_pct,with_assist_pct\n");
        for case in &self.cases {
            for r in case.rows.iter().chain(std::iter::once(&case.average)) {
                writeln!(
                    out,
                    "{},{},\"{}\",{},{},{},{:.2},{:.2},{:.2}",
                    case.case_id,
                    r.participant,
                    format_duration(r.time_seconds).replace('"', "\"\""),
                    r.time_seconds,
                    r.assists,
                    r.errors,
                    r.efficiency,
                    r.without_assist_pct,
                    r.with_assist_pct
                )
                .unwrap();
            }
        }
        out
    }
}
