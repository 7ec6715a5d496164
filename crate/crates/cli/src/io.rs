//! CSV ingestion and atomic table output.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use trendband::{Band, ObservedSeries};

use crate::error::{CliError, CliResult};

/// Column selected by header name or zero-based position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

impl ColumnRef {
    pub fn parse(s: &str) -> Self {
        s.parse().map(ColumnRef::Index).unwrap_or_else(|_| ColumnRef::Name(s.to_string()))
    }

    fn resolve(&self, headers: Option<&csv::StringRecord>) -> CliResult<usize> {
        match (self, headers) {
            (ColumnRef::Index(i), _) => Ok(*i),
            (ColumnRef::Name(name), Some(h)) => h
                .iter()
                .position(|c| c.trim() == name)
                .ok_or_else(|| CliError::Data(format!("column '{name}' not found in header"))),
            (ColumnRef::Name(name), None) => {
                Err(CliError::Usage(format!("column '{name}' given by name but the file has no header")))
            }
        }
    }
}

impl std::fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ColumnRef::Index(i) => write!(f, "{i}"),
            ColumnRef::Name(n) => f.write_str(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvSpec {
    pub delimiter: u8,
    pub has_header: bool,
    /// Row order is used when absent.
    pub time_column: Option<ColumnRef>,
    pub value_column: ColumnRef,
    pub missing_tokens: Vec<String>,
    /// chrono pattern for date time columns, e.g. `%Y-%m-%d`.
    pub date_format: Option<String>,
    /// Periods per year for integer time columns (fractional-year axis).
    pub periods_per_year: f64,
}

pub const DEFAULT_MISSING_TOKENS: [&str; 3] = ["", "NA", "NaN"];
const FALLBACK_DATE_FORMAT: &str = "%Y-%m-%d";

impl Default for CsvSpec {
    fn default() -> Self {
        Self {
            delimiter: b',',
            has_header: true,
            time_column: None,
            value_column: ColumnRef::Index(1),
            missing_tokens: DEFAULT_MISSING_TOKENS.iter().map(|s| s.to_string()).collect(),
            date_format: None,
            periods_per_year: 365.25,
        }
    }
}

impl CsvSpec {
    pub fn validate(&self) -> CliResult<()> {
        if Some(&self.value_column) == self.time_column.as_ref() {
            return Err(CliError::Usage("time and value columns must differ".into()));
        }
        if !(self.periods_per_year > 0.0 && self.periods_per_year.is_finite()) {
            return Err(CliError::Usage("periods per year must be positive".into()));
        }
        Ok(())
    }
}

/// Parses a one-byte delimiter; `\t` and `tab` select a tab.
pub fn parse_delimiter(s: &str) -> CliResult<u8> {
    match s {
        "\\t" | "tab" => Ok(b'\t'),
        _ if s.len() == 1 => Ok(s.as_bytes()[0]),
        _ => Err(CliError::Usage(format!("delimiter '{s}' is not a single byte"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum TimeKey {
    Period(i64),
    Day(NaiveDate),
}

impl TimeKey {
    fn ordinal(self) -> i64 {
        match self {
            TimeKey::Period(p) => p,
            TimeKey::Day(d) => d.signed_duration_since(epoch()).num_days(),
        }
    }
}

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date")
}

/// Fractional year of a calendar date: days since 2000-01-01 over 365.25, plus 2000.
pub fn fractional_year(date: NaiveDate) -> f64 {
    2000.0 + date.signed_duration_since(epoch()).num_days() as f64 / 365.25
}

/// A series on a regular time axis together with per-row labels and the
/// fractional-year coordinate of each row.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSeries {
    pub series: ObservedSeries,
    pub labels: Vec<String>,
    pub years: Vec<f64>,
}

fn parse_time(raw: &str, spec: &CsvSpec, line: u64) -> CliResult<TimeKey> {
    let raw = raw.trim();
    if let Some(fmt) = &spec.date_format {
        return NaiveDate::parse_from_str(raw, fmt)
            .map(TimeKey::Day)
            .map_err(|e| CliError::Data(format!("line {line}: cannot parse date '{raw}' with '{fmt}': {e}")));
    }
    if let Ok(p) = raw.parse::<i64>() {
        return Ok(TimeKey::Period(p));
    }
    NaiveDate::parse_from_str(raw, FALLBACK_DATE_FORMAT)
        .map(TimeKey::Day)
        .map_err(|_| CliError::Data(format!("line {line}: time '{raw}' is neither an integer nor a YYYY-MM-DD date")))
}

/// Reads one value per row; gaps in the time column become missing rows.
pub fn load_series(path: &Path, spec: &CsvSpec) -> CliResult<LoadedSeries> {
    spec.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(spec.delimiter)
        .has_headers(spec.has_header)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let headers = if spec.has_header {
        Some(reader.headers().map_err(|e| CliError::Data(e.to_string()))?.clone())
    } else {
        None
    };
    let value_col = spec.value_column.resolve(headers.as_ref())?;
    let time_col = spec.time_column.as_ref().map(|c| c.resolve(headers.as_ref())).transpose()?;

    let mut rows: Vec<(Option<TimeKey>, Option<f64>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        let cell = |c: usize| {
            record
                .get(c)
                .ok_or_else(|| CliError::Data(format!("line {line}: missing column {c}")))
        };
        let raw = cell(value_col)?.trim();
        let value = if spec.missing_tokens.iter().any(|t| t == raw) {
            None
        } else {
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Some(v),
                _ => return Err(CliError::Data(format!("line {line}: cannot parse value '{raw}'"))),
            }
        };
        let key = time_col.map(|c| parse_time(cell(c)?, spec, line)).transpose()?;
        if let (Some(k), Some((Some(prev), _))) = (key, rows.last()) {
            let same_kind = matches!((k, prev), (TimeKey::Period(_), TimeKey::Period(_)) | (TimeKey::Day(_), TimeKey::Day(_)));
            if !same_kind {
                return Err(CliError::Data(format!("line {line}: time column mixes integers and dates")));
            }
            if k.ordinal() <= prev.ordinal() {
                return Err(CliError::Data(format!("line {line}: time is not strictly increasing")));
            }
        }
        rows.push((key, value));
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }

    let mut values = Vec::new();
    let mut observed = Vec::new();
    let mut labels = Vec::new();
    let mut years = Vec::new();
    let start = rows[0].0.map(TimeKey::ordinal);
    for (r, (key, value)) in rows.iter().enumerate() {
        if let (Some(k), Some(s)) = (key, start) {
            // fill the gap up to this row
            let target = k.ordinal() - s;
            while (values.len() as i64) < target {
                let fill = s + values.len() as i64;
                push_row(&mut labels, &mut years, *k, fill, spec);
                values.push(0.0);
                observed.push(false);
            }
            push_row(&mut labels, &mut years, *k, k.ordinal(), spec);
        } else {
            labels.push((r + 1).to_string());
            years.push(r as f64 / spec.periods_per_year);
        }
        values.push(value.unwrap_or(0.0));
        observed.push(value.is_some());
    }
    let series = ObservedSeries::new(values, observed).map_err(|e| CliError::Data(e.to_string()))?;
    Ok(LoadedSeries { series, labels, years })
}

fn push_row(labels: &mut Vec<String>, years: &mut Vec<f64>, kind: TimeKey, ordinal: i64, spec: &CsvSpec) {
    match kind {
        TimeKey::Period(_) => {
            labels.push(ordinal.to_string());
            years.push(ordinal as f64 / spec.periods_per_year);
        }
        TimeKey::Day(_) => {
            let d = epoch() + chrono::Duration::days(ordinal);
            labels.push(d.format(FALLBACK_DATE_FORMAT).to_string());
            years.push(fractional_year(d));
        }
    }
}

/// Shortest round-trip decimal; non-finite values become blank cells.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

/// Delimited table with a one-line header, built in memory.
#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self, delimiter: u8) -> CliResult<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(Vec::new());
        w.write_record(&self.header).map_err(|e| CliError::Data(e.to_string()))?;
        for r in &self.rows {
            w.write_record(r).map_err(|e| CliError::Data(e.to_string()))?;
        }
        w.into_inner().map_err(|e| CliError::Data(e.to_string()))
    }
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let res = fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = res {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::Data(format!("cannot write {}: {e}", path.display())));
    }
    Ok(())
}

/// Writes all files or none: on failure, files already written are removed.
pub fn write_all(files: &[(PathBuf, Vec<u8>)]) -> CliResult<()> {
    for (k, (path, bytes)) in files.iter().enumerate() {
        if let Err(e) = write_atomic(path, bytes) {
            for (done, _) in &files[..k] {
                let _ = fs::remove_file(done);
            }
            return Err(e);
        }
    }
    Ok(())
}

pub fn plot_table(band: &Band) -> Table {
    let mut t = Table::new(&["tau", "center", "lower", "upper", "valid"]);
    for i in 0..band.len() {
        let ok = band.valid[i];
        let num = |x: f64| if ok { fmt_num(x) } else { String::new() };
        t.push(vec![
            fmt_num(band.grid.points()[i]),
            num(band.center[i]),
            num(band.lower[i]),
            num(band.upper[i]),
            ok.to_string(),
        ]);
    }
    t
}

/// Long-format `tau,center,lower,upper,valid` table of a band.
pub fn emit_plot_data(band: &Band, path: &Path) -> CliResult<()> {
    write_atomic(path, &plot_table(band).to_bytes(b',')?)
}

/// One row of a plot-data file.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub tau: f64,
    pub center: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub valid: bool,
}

/// Reads a file written by [`emit_plot_data`].
pub fn read_plot_data(path: &Path) -> CliResult<Vec<PlotRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Data(e.to_string()))?;
    let opt = |s: &str| -> CliResult<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| CliError::Data(format!("bad number '{s}'")))
        }
    };
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| CliError::Data(e.to_string()))?;
            Ok(PlotRow {
                tau: opt(&rec[0])?.ok_or_else(|| CliError::Data("blank tau".into()))?,
                center: opt(&rec[1])?,
                lower: opt(&rec[2])?,
                upper: opt(&rec[3])?,
                valid: rec[4].parse().map_err(|_| CliError::Data(format!("bad flag '{}'", &rec[4])))?,
            })
        })
        .collect()
}
