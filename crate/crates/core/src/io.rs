//! CSV formats shared by the library, the CLI, and the test fixtures.
//!
//! Subject-level data: header `time,event,score`, event coded 0/1.
//! Study summaries: header `study_id,tau,c_hat,var_hat,n` with `n`
//! optional (the column or individual values may be absent). Numbers use
//! `.` as the decimal point regardless of locale.

use crate::meta::StudySummary;
use crate::survival::SurvivalSample;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CsvError {
    #[error("CsvEmpty: no rows found")]
    Empty,
    #[error("CsvHeader: missing required column {0:?}")]
    MissingColumn(&'static str),
    #[error("CsvValue: line {line}, column {column}: cannot parse {value:?}")]
    BadValue { line: usize, column: &'static str, value: String },
    #[error("CsvShape: line {line} has {got} fields, expected {expected}")]
    Shape { line: usize, got: usize, expected: usize },
    #[error("CsvData: {0}")]
    Data(String),
}

fn split_header(line: &str) -> Vec<String> {
    line.split(',').map(|c| c.trim().to_ascii_lowercase()).collect()
}

fn parse_f64(field: &str, line: usize, column: &'static str) -> Result<f64, CsvError> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| CsvError::BadValue { line, column, value: field.trim().to_string() })
}

/// Parse subject-level CSV text into a validated sample.
pub fn parse_subject_csv(text: &str) -> Result<SurvivalSample, CsvError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(CsvError::Empty)?;
    let columns = split_header(header);
    let col = |name: &'static str| columns.iter().position(|c| c == name).ok_or(CsvError::MissingColumn(name));
    let time_idx = col("time")?;
    let event_idx = col("event")?;
    let score_idx = col("score")?;

    let mut times = Vec::new();
    let mut events = Vec::new();
    let mut scores = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < columns.len() {
            return Err(CsvError::Shape { line: lineno, got: fields.len(), expected: columns.len() });
        }
        times.push(parse_f64(fields[time_idx], lineno, "time")?);
        events.push(match fields[event_idx].trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(CsvError::BadValue { line: lineno, column: "event", value: other.to_string() })
            }
        });
        scores.push(parse_f64(fields[score_idx], lineno, "score")?);
    }
    if times.is_empty() {
        return Err(CsvError::Empty);
    }
    SurvivalSample::new(times, events, scores).map_err(|e| CsvError::Data(e.to_string()))
}

/// Parse study-summary CSV text.
pub fn parse_summary_csv(text: &str) -> Result<Vec<StudySummary>, CsvError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(CsvError::Empty)?;
    let columns = split_header(header);
    let col = |name: &'static str| columns.iter().position(|c| c == name).ok_or(CsvError::MissingColumn(name));
    let id_idx = col("study_id")?;
    let tau_idx = col("tau")?;
    let c_idx = col("c_hat")?;
    let var_idx = col("var_hat")?;
    let n_idx = columns.iter().position(|c| c == "n");

    let mut studies = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        let required = columns.len() - usize::from(n_idx == Some(columns.len() - 1));
        if fields.len() < required {
            return Err(CsvError::Shape { line: lineno, got: fields.len(), expected: columns.len() });
        }
        let n = match n_idx {
            Some(i) => match fields.get(i).map(|f| f.trim()) {
                None | Some("") => None,
                Some(raw) => Some(raw.parse::<u64>().map_err(|_| CsvError::BadValue {
                    line: lineno,
                    column: "n",
                    value: raw.to_string(),
                })?),
            },
            None => None,
        };
        let study = StudySummary::new(
            fields[id_idx].trim(),
            parse_f64(fields[tau_idx], lineno, "tau")?,
            parse_f64(fields[c_idx], lineno, "c_hat")?,
            parse_f64(fields[var_idx], lineno, "var_hat")?,
            n,
        )
        .map_err(|e| CsvError::Data(e.to_string()))?;
        studies.push(study);
    }
    if studies.is_empty() {
        return Err(CsvError::Empty);
    }
    Ok(studies)
}

pub const SUMMARY_HEADER: &str = "study_id,tau,c_hat,var_hat,n";

/// One summary row in the shared format. Floats print in shortest
/// round-trip form, so writing and re-reading is lossless.
pub fn format_summary_row(study: &StudySummary) -> String {
    let n = study.n.map(|n| n.to_string()).unwrap_or_default();
    format!("{},{},{},{},{}", study.study_id, study.tau, study.c_hat, study.var_hat, n)
}

pub fn format_summary_csv(studies: &[StudySummary]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for study in studies {
        out.push_str(&format_summary_row(study));
        out.push('\n');
    }
    out
}
