//! Time-series foundation: dated level series, return transforms, day counts,
//! and CSV ingestion/emission.
//!
//! All types here are immutable after construction and all operations are pure,
//! so everything is safe to share across threads.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Day-count convention for accrual year fractions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DayCount {
    /// Actual/360 (money-market convention).
    Act360,
    /// Actual/365 Fixed.
    Act365,
}

impl DayCount {
    pub fn denominator(self) -> f64 {
        match self {
            DayCount::Act360 => 360.0,
            DayCount::Act365 => 365.0,
        }
    }

    /// Year fraction between two dates. `end` must not precede `start`.
    pub fn year_fraction(self, start: NaiveDate, end: NaiveDate) -> Result<f64> {
        if end < start {
            return Err(Error::NegativeInterval { start, end });
        }
        let days = (end - start).num_days() as f64;
        Ok(days / self.denominator())
    }
}

/// Kind of return held by a [`ReturnSeries`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReturnKind {
    Simple,
    Log,
}

/// A dated sequence of strictly positive levels (index points or currency).
///
/// Invariants: dates strictly increasing, every level > 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSeries {
    dates: Vec<NaiveDate>,
    levels: Vec<f64>,
    label: String,
}

impl LevelSeries {
    /// Build a validated series. Rows are sorted by date before validation,
    /// so unsorted input canonicalizes to the same series as sorted input.
    pub fn new(
        dates: Vec<NaiveDate>,
        levels: Vec<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if dates.len() != levels.len() {
            return Err(Error::LengthMismatch {
                left: dates.len(),
                right: levels.len(),
            });
        }
        let mut rows: Vec<(NaiveDate, f64)> = dates.into_iter().zip(levels).collect();
        rows.sort_by_key(|(d, _)| *d);
        for (row, (date, level)) in rows.iter().enumerate() {
            if !level.is_finite() || *level <= 0.0 {
                return Err(Error::NonPositiveLevel {
                    row: row + 1,
                    value: *level,
                });
            }
            if row > 0 && rows[row - 1].0 == *date {
                return Err(Error::DuplicateDate(*date));
            }
        }
        let (dates, levels) = rows.into_iter().unzip();
        Ok(Self {
            dates,
            levels,
            label: label.into(),
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.dates.first().copied()
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.dates.last().copied()
    }

    /// Rebase to `base` at the first observation, preserving return ratios.
    pub fn rebased(&self, base: f64) -> Result<Self> {
        if self.is_empty() {
            return Err(Error::EmptyInput);
        }
        let scale = base / self.levels[0];
        Self::new(
            self.dates.clone(),
            self.levels.iter().map(|l| l * scale).collect(),
            self.label.clone(),
        )
    }

    /// n-period returns: `B_t / B_{t-n} - 1` (simple) or `ln(B_t / B_{t-n})` (log).
    pub fn to_returns(&self, kind: ReturnKind, n: usize) -> Result<ReturnSeries> {
        if n == 0 || n >= self.len() {
            return Err(Error::BadHorizon {
                n,
                len: self.len(),
            });
        }
        let values: Vec<f64> = (n..self.len())
            .map(|t| {
                let ratio = self.levels[t] / self.levels[t - n];
                match kind {
                    ReturnKind::Simple => ratio - 1.0,
                    ReturnKind::Log => ratio.ln(),
                }
            })
            .collect();
        Ok(ReturnSeries {
            dates: self.dates[n..].to_vec(),
            values,
            kind,
            horizon: n,
        })
    }
}

/// Dimensionless returns derived from a [`LevelSeries`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
    kind: ReturnKind,
    horizon: usize,
}

impl ReturnSeries {
    /// Build a return series directly. Simple returns must exceed -100%.
    pub fn new(
        dates: Vec<NaiveDate>,
        values: Vec<f64>,
        kind: ReturnKind,
        horizon: usize,
    ) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: dates.len(),
                right: values.len(),
            });
        }
        if kind == ReturnKind::Simple {
            if let Some(bad) = values.iter().find(|v| **v <= -1.0) {
                return Err(Error::ReturnBelowFloor(*bad));
            }
        }
        Ok(Self {
            dates,
            values,
            kind,
            horizon,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> ReturnKind {
        self.kind
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A dated interest-rate series (decimal per annum). Rates may be negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSeries {
    dates: Vec<NaiveDate>,
    rates: Vec<f64>,
}

impl RateSeries {
    pub fn new(dates: Vec<NaiveDate>, rates: Vec<f64>) -> Result<Self> {
        if dates.len() != rates.len() {
            return Err(Error::LengthMismatch {
                left: dates.len(),
                right: rates.len(),
            });
        }
        let mut rows: Vec<(NaiveDate, f64)> = dates.into_iter().zip(rates).collect();
        rows.sort_by_key(|(d, _)| *d);
        for w in rows.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::DuplicateDate(w[0].0));
            }
        }
        let (dates, rates) = rows.into_iter().unzip();
        Ok(Self { dates, rates })
    }

    /// Flat rate on every date of `template`.
    pub fn flat(template: &LevelSeries, rate: f64) -> Self {
        Self {
            dates: template.dates().to_vec(),
            rates: vec![rate; template.len()],
        }
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Rate on exactly `date`, or an error naming the missing date.
    pub fn rate_on(&self, date: NaiveDate) -> Result<f64> {
        match self.dates.binary_search(&date) {
            Ok(i) => Ok(self.rates[i]),
            Err(_) => Err(Error::MissingRate(date)),
        }
    }
}

/// Column names expected in an input CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub date: String,
    pub value: String,
}

impl ColumnSpec {
    pub fn new(date: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            date: date.into(),
            value: value.into(),
        }
    }
}

impl Default for ColumnSpec {
    fn default() -> Self {
        Self::new("date", "level")
    }
}

fn read_dated_column(path: &Path, spec: &ColumnSpec) -> Result<Vec<(NaiveDate, f64, usize)>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let headers = reader.headers()?.clone();
    let date_idx = headers
        .iter()
        .position(|h| h.trim() == spec.date)
        .ok_or_else(|| Error::MissingColumn(spec.date.clone()))?;
    let value_idx = headers
        .iter()
        .position(|h| h.trim() == spec.value)
        .ok_or_else(|| Error::MissingColumn(spec.value.clone()))?;

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1; // 1-based data row number, matching error messages
        let record = record?;
        let date_raw = record.get(date_idx).unwrap_or("").trim();
        let value_raw = record.get(value_idx).unwrap_or("").trim();
        let date = NaiveDate::parse_from_str(date_raw, "%Y-%m-%d").map_err(|_| Error::BadDate {
            row,
            value: date_raw.to_string(),
        })?;
        let value: f64 = value_raw.parse().map_err(|_| Error::BadNumber {
            row,
            value: value_raw.to_string(),
        })?;
        rows.push((date, value, row));
    }
    Ok(rows)
}

/// Read a validated [`LevelSeries`] from a CSV file with a header row.
///
/// Rows are sorted by date; non-positive levels, unparseable fields and
/// duplicate dates are rejected with the offending row number or date.
pub fn ingest_csv(path: impl AsRef<Path>, spec: &ColumnSpec) -> Result<LevelSeries> {
    let path = path.as_ref();
    let rows = read_dated_column(path, spec)?;
    // Validate positivity against the *file* row number before sorting.
    for (_, value, row) in &rows {
        if !value.is_finite() || *value <= 0.0 {
            return Err(Error::NonPositiveLevel {
                row: *row,
                value: *value,
            });
        }
    }
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    LevelSeries::new(
        rows.iter().map(|r| r.0).collect(),
        rows.iter().map(|r| r.1).collect(),
        label,
    )
}

/// Read a [`RateSeries`] from the same CSV layout (`date,rate` by default).
pub fn ingest_rates_csv(path: impl AsRef<Path>, spec: &ColumnSpec) -> Result<RateSeries> {
    let rows = read_dated_column(path.as_ref(), spec)?;
    RateSeries::new(
        rows.iter().map(|r| r.0).collect(),
        rows.iter().map(|r| r.1).collect(),
    )
}

/// Write a series back out in the ingestion format (ISO dates, shortest
/// round-trip decimals). `ingest_csv(emit_csv(s))` reproduces `s` exactly.
pub fn emit_csv(series: &LevelSeries, path: impl AsRef<Path>, spec: &ColumnSpec) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>, line: String| -> Result<()> {
        out.write_all(line.as_bytes()).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    };
    write(&mut out, format!("{},{}\n", spec.date, spec.value))?;
    for (date, level) in series.dates().iter().zip(series.levels()) {
        write(&mut out, format!("{},{}\n", date.format("%Y-%m-%d"), level))?;
    }
    out.flush().map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}
