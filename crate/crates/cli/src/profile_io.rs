//! Profile files: a JSON array of numbers, or one number per line.

use std::fs;
use std::path::Path;

use nashfl_core::LocationProfile;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProfileError {
    #[error("{path}: {reason}")]
    Read { path: String, reason: String },
    #[error("invalid JSON profile: {0}")]
    Json(String),
    #[error("unreadable CSV profile: {0}")]
    Csv(String),
    #[error("index {index}: `{text}` is not a number")]
    JsonEntry { index: usize, text: String },
    #[error("line {line}: `{text}` is not a number")]
    CsvEntry { line: usize, text: String },
    #[error("{position}: location {value} outside [0, 1]")]
    OutOfRange { position: String, value: f64 },
    #[error("profile has no agents")]
    Empty,
}

/// Parses profile text. Input starting with `[` is JSON; anything else is
/// read as one number per line, ignoring blank lines.
pub fn parse_profile(text: &str) -> Result<Vec<f64>, ProfileError> {
    let trimmed = text.trim_start();
    let values: Vec<(String, f64)> = if trimmed.starts_with('[') {
        let items: Vec<serde_json::Value> =
            serde_json::from_str(trimmed).map_err(|e| ProfileError::Json(e.to_string()))?;
        items
            .into_iter()
            .enumerate()
            .map(|(index, v)| {
                v.as_f64()
                    .map(|x| (format!("index {index}"), x))
                    .ok_or(ProfileError::JsonEntry {
                        index,
                        text: v.to_string(),
                    })
            })
            .collect::<Result<_, _>>()?
    } else {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut out = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| ProfileError::Csv(e.to_string()))?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let field = record.get(0).unwrap_or("").trim();
            if field.is_empty() && record.len() <= 1 {
                continue;
            }
            let x = field.parse::<f64>().map_err(|_| ProfileError::CsvEntry {
                line,
                text: field.to_string(),
            })?;
            out.push((format!("line {line}"), x));
        }
        out
    };
    if values.is_empty() {
        return Err(ProfileError::Empty);
    }
    values
        .into_iter()
        .map(|(position, x)| {
            if (0.0..=1.0).contains(&x) {
                Ok(x)
            } else {
                Err(ProfileError::OutOfRange { position, value: x })
            }
        })
        .collect()
}

pub fn read_profile(path: &Path) -> Result<(Vec<f64>, LocationProfile), ProfileError> {
    let text = fs::read_to_string(path).map_err(|e| ProfileError::Read {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let raw = parse_profile(&text)?;
    let profile = LocationProfile::new(raw.clone()).map_err(|_| ProfileError::Empty)?;
    Ok((raw, profile))
}
