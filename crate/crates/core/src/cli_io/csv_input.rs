//! Study table ingestion.
//!
//! Header: `label,scale,estimate,lower,upper,se,n`. `scale` is `ratio`
//! (estimate with confidence limits, converted to the log scale) or `linear`
//! (estimate and standard error used as given). `n` is optional.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::convert::parse_ratio_ci;
use crate::error::{Error, Result};
use crate::map_core::StudyEstimate;

pub const CSV_HEADER: [&str; 7] = ["label", "scale", "estimate", "lower", "upper", "se", "n"];

/// Measurement scale of an input row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EffectScale {
    /// Ratio measure analysed on the log scale.
    LogRatio,
    Linear,
}

/// A parsed study together with the scale its row was given on.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub study: StudyEstimate<f64>,
    pub scale: EffectScale,
}

#[derive(Debug, Deserialize)]
struct RawRow {
    label: String,
    scale: String,
    estimate: Option<f64>,
    lower: Option<f64>,
    upper: Option<f64>,
    se: Option<f64>,
    n: Option<u64>,
}

/// Reads studies from a CSV file, converting ratio rows to the log scale.
pub fn load_studies_csv(path: impl AsRef<Path>) -> Result<Vec<StudyRow>> {
    let file = std::fs::File::open(path.as_ref())?;
    read_studies_csv(file, 0.95)
}

/// Reads studies from any reader; `level` is the confidence level of the
/// intervals on ratio rows.
pub fn read_studies_csv<R: Read>(reader: R, level: f64) -> Result<Vec<StudyRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if headers.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "empty file".into(),
        });
    }
    for name in CSV_HEADER {
        if !headers.iter().any(|h| h == name) {
            return Err(Error::Parse {
                line: 1,
                message: format!("missing column '{name}'"),
            });
        }
    }
    let headers = headers.clone();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let parse_err = |message: String| Error::Parse { line, message };
        let raw: RawRow = record
            .deserialize(Some(&headers))
            .map_err(|e| parse_err(e.to_string()))?;
        rows.push(convert_row(raw, level).map_err(|e| parse_err(e.to_string()))?);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "no study rows".into(),
        });
    }
    Ok(rows)
}

fn convert_row(raw: RawRow, level: f64) -> Result<StudyRow> {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| Error::invalid(format!("row '{}' needs '{name}'", raw.label)))
    };
    match raw.scale.to_ascii_lowercase().as_str() {
        "ratio" => {
            let (y, se) = parse_ratio_ci(
                need(raw.estimate, "estimate")?,
                need(raw.lower, "lower")?,
                need(raw.upper, "upper")?,
                level,
            )
            .map_err(|e| Error::invalid(format!("row '{}': {e}", raw.label)))?;
            Ok(StudyRow {
                study: StudyEstimate::new(raw.label.clone(), y, se, raw.n)?,
                scale: EffectScale::LogRatio,
            })
        }
        "linear" => Ok(StudyRow {
            study: StudyEstimate::new(
                raw.label.clone(),
                need(raw.estimate, "estimate")?,
                need(raw.se, "se")?,
                raw.n,
            )?,
            scale: EffectScale::Linear,
        }),
        other => Err(Error::invalid(format!(
            "row '{}': scale must be 'ratio' or 'linear', got '{other}'",
            raw.label
        ))),
    }
}
