//! CSV ingestion of `date,value` exports.

use std::path::Path;

use chrono::NaiveDate;
use log::warn;

use crate::error::{Error, Result};
use crate::pipeline::config::{PipelineConfig, SeriesSpec};
use crate::timeseries::TimeSeries;

/// Cells treated as missing observations and skipped.
const MISSING: [&str; 5] = ["", ".", "NA", "N/A", "#N/A"];

const DATE_FORMATS: [&str; 5] = ["%Y-%m-%d", "%Y/%m/%d", "%d %b %Y", "%d/%m/%Y", "%Y%m%d"];

pub fn parse_date(text: &str) -> Option<NaiveDate> {
    let text = text.trim();
    DATE_FORMATS
        .iter()
        .find_map(|f| NaiveDate::parse_from_str(text, f).ok())
        .or_else(|| {
            // Timestamps such as `2020-01-31 00:00:00` or `2020-01-31T00:00Z`.
            text.get(..10)
                .and_then(|d| NaiveDate::parse_from_str(d, "%Y-%m-%d").ok())
        })
}

/// Reads one series. Rows are sorted by date; on duplicate dates the row
/// appearing last in the file wins.
pub fn read_series(path: &Path, spec: &SeriesSpec) -> Result<TimeSeries> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: u64, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line: line as usize,
        msg,
    };
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let find = |name: &Option<String>, default: usize, what: &str| -> Result<usize> {
        match name {
            None if headers.len() > default => Ok(default),
            None => Err(parse_err(1, format!("header has no {what} column"))),
            Some(n) => headers
                .iter()
                .position(|h| h == n)
                .ok_or_else(|| parse_err(1, format!("no column named `{n}`"))),
        }
    };
    let date_idx = find(&spec.date_column, 0, "date")?;
    let value_idx = find(&spec.value_column, 1, "value")?;

    let mut points: Vec<(NaiveDate, f64)> = Vec::new();
    let mut skipped = 0usize;
    for row in reader.records() {
        let row = row.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line());
        if row.iter().all(str::is_empty) {
            continue;
        }
        let date_text = row.get(date_idx).unwrap_or("");
        let date = parse_date(date_text)
            .ok_or_else(|| parse_err(line, format!("unparseable date `{date_text}`")))?;
        let value_text = row.get(value_idx).unwrap_or("");
        if MISSING.contains(&value_text) {
            skipped += 1;
            continue;
        }
        let value: f64 = value_text
            .parse()
            .map_err(|_| parse_err(line, format!("unparseable value `{value_text}`")))?;
        if !value.is_finite() {
            skipped += 1;
            continue;
        }
        points.push((date, value));
    }
    if skipped > 0 {
        warn!("{}: skipped {skipped} rows with missing values", path.display());
    }

    points.sort_by_key(|p| p.0);
    let mut deduped: Vec<(NaiveDate, f64)> = Vec::with_capacity(points.len());
    let mut duplicates = 0usize;
    for p in points {
        match deduped.last_mut() {
            Some(last) if last.0 == p.0 => {
                *last = p;
                duplicates += 1;
            }
            _ => deduped.push(p),
        }
    }
    if duplicates > 0 {
        warn!(
            "{}: {duplicates} duplicate dates, keeping the last row for each",
            path.display()
        );
    }
    if deduped.is_empty() {
        return Err(Error::InvalidSeries {
            label: spec.label.clone(),
            reason: format!("{} contains no observations", path.display()),
        });
    }
    TimeSeries::new(spec.label.clone(), spec.frequency, deduped)
}

/// Every configured series, features first, in configuration order.
pub struct Ingested {
    pub features: Vec<TimeSeries>,
    pub buckets: Vec<TimeSeries>,
}

pub fn ingest(cfg: &PipelineConfig) -> Result<Ingested> {
    let load = |specs: &[SeriesSpec]| -> Result<Vec<TimeSeries>> {
        specs
            .iter()
            .map(|s| read_series(&cfg.resolve(&s.path), s))
            .collect()
    };
    Ok(Ingested {
        features: load(&cfg.features)?,
        buckets: load(&cfg.buckets)?,
    })
}
