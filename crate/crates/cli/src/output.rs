use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate};
use serde::Serialize;

use urbmag::ingest::{load_station_range, DatasetCatalog};
use urbmag::{scalar_field, Channel, DayNightSchedule, FilterSpec, TimeSeries};

use crate::args::{RangeArgs, Signal};
use crate::CliError;

/// Output directory plus the files written into it, in order.
pub struct Outputs {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| urbmag::Error::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    /// Registers and returns the path of a new output file.
    pub fn file(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    pub fn csv(&mut self, name: &str) -> Result<Csv, CliError> {
        Csv::create(&self.file(name))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        write_json(&self.file(name), value)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| urbmag::Error::format(path, e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| urbmag::Error::io(path, e).into())
}

/// CSV writer with shortest round-trip float formatting and empty gap fields.
pub struct Csv {
    path: PathBuf,
    inner: csv::Writer<BufWriter<File>>,
    row: Vec<String>,
}

impl Csv {
    fn create(path: &Path) -> Result<Self, CliError> {
        let f = File::create(path).map_err(|e| urbmag::Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            inner: csv::Writer::from_writer(BufWriter::with_capacity(1 << 20, f)),
            row: Vec::new(),
        })
    }

    pub fn header(&mut self, cols: &[&str]) -> Result<(), CliError> {
        self.inner.write_record(cols).map_err(|e| self.err(e))
    }

    pub fn num(&mut self, x: f64) -> &mut Self {
        self.row.push(if x.is_nan() { String::new() } else { x.to_string() });
        self
    }

    pub fn opt(&mut self, x: Option<f64>) -> &mut Self {
        self.num(x.unwrap_or(f64::NAN))
    }

    pub fn text(&mut self, s: impl ToString) -> &mut Self {
        self.row.push(s.to_string());
        self
    }

    pub fn end(&mut self) -> Result<(), CliError> {
        let r = self.inner.write_record(&self.row);
        self.row.clear();
        r.map_err(|e| self.err(e))
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.inner.flush().map_err(|e| urbmag::Error::io(&self.path, e))?;
        Ok(())
    }

    fn err(&self, e: csv::Error) -> CliError {
        urbmag::Error::format(&self.path, e.to_string()).into()
    }
}

/// Epoch seconds, `YYYY-MM-DD` (UTC midnight) or RFC 3339.
pub fn parse_time(s: &str) -> Result<f64, CliError> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        if v.is_finite() {
            return Ok(v);
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp() as f64);
    }
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.timestamp() as f64 + t.timestamp_subsec_nanos() as f64 * 1e-9);
    }
    Err(CliError::Usage(format!("cannot parse time '{s}'")))
}

pub fn parse_date(s: &str) -> Result<NaiveDate, CliError> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|_| CliError::Usage(format!("cannot parse date '{s}' (want YYYY-MM-DD)")))
}

/// `berkeley`, `brooklyn` or `HH:MM-HH:MM`.
pub fn parse_schedule(s: &str) -> Result<DayNightSchedule, CliError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "berkeley" => Ok(DayNightSchedule::berkeley()),
        "brooklyn" => Ok(DayNightSchedule::brooklyn()),
        other => {
            let (a, b) = other
                .split_once('-')
                .ok_or_else(|| CliError::Usage(format!("schedule '{s}' is not a city or HH:MM-HH:MM")))?;
            Ok(DayNightSchedule::parse(a, b)?)
        }
    }
}

pub fn require_schedule(s: &Option<String>) -> Result<DayNightSchedule, CliError> {
    parse_schedule(
        s.as_deref()
            .ok_or_else(|| CliError::Usage("a day/night --schedule is required".into()))?,
    )
}

/// `lowpass:<Hz>`, `highpass:<Hz>` or `none`.
pub fn parse_filter(s: &str) -> Result<Option<FilterSpec>, CliError> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("none") || s.is_empty() {
        return Ok(None);
    }
    let (kind, hz) = s
        .split_once(':')
        .ok_or_else(|| CliError::Usage(format!("filter '{s}' is not kind:cutoff")))?;
    let hz: f64 = hz
        .parse()
        .map_err(|_| CliError::Usage(format!("filter cutoff '{hz}' is not a number")))?;
    let spec = match kind.parse::<urbmag::FilterKind>()? {
        urbmag::FilterKind::Lowpass => FilterSpec::lowpass(hz),
        urbmag::FilterKind::Highpass => FilterSpec::highpass(hz),
    };
    Ok(Some(spec))
}

pub fn require<'a>(v: &'a Option<String>, flag: &str) -> Result<&'a str, CliError> {
    v.as_deref()
        .ok_or_else(|| CliError::Usage(format!("--{flag} is required")))
}

pub fn open_catalog(data: &Option<PathBuf>, pattern: &str) -> Result<DatasetCatalog, CliError> {
    let root = data
        .as_deref()
        .ok_or_else(|| CliError::Usage("--data is required".into()))?;
    Ok(urbmag::ingest::scan_catalog(root, pattern)?)
}

pub fn check_station(cat: &DatasetCatalog, station: &str) -> Result<(), CliError> {
    let known = cat.meta(station).is_some()
        || Channel::ALL.iter().any(|&c| !cat.entries_for(station, c).is_empty());
    if known {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "station '{station}' is not in the catalog (known: {})",
            cat.station_ids().join(", ")
        )))
    }
}

/// Requested range, or the station's coverage bounds where unset.
pub fn resolve_range(cat: &DatasetCatalog, station: &str, r: &RangeArgs) -> Result<(f64, f64), CliError> {
    let spans: Vec<(i64, i64)> = Channel::ALL
        .iter()
        .filter_map(|&c| cat.coverage_for(station, c))
        .flat_map(|c| c.spans.iter().copied())
        .collect();
    let lo = spans.iter().map(|s| s.0).min();
    let hi = spans.iter().map(|s| s.1).max();
    let pick = |given: &Option<String>, fallback: Option<i64>| -> Result<f64, CliError> {
        match given {
            Some(s) => parse_time(s),
            None => fallback.map(|v| v as f64).ok_or_else(|| {
                urbmag::Error::Empty(format!("station '{station}' has no coverage")).into()
            }),
        }
    };
    let (t0, t1) = (pick(&r.start, lo)?, pick(&r.end, hi)?);
    if !(t0 < t1) {
        return Err(CliError::Usage(format!("range start {t0} must precede end {t1}")));
    }
    Ok((t0, t1))
}

/// Loads one station quantity, decimated to `rate` when below native.
pub fn load_signal(
    cat: &DatasetCatalog,
    station: &str,
    t0: f64,
    t1: f64,
    rate: Option<f64>,
    signal: Signal,
) -> Result<TimeSeries, CliError> {
    let v = load_station_range(cat, station, t0, t1, rate).map_err(|e| station_context(station, e))?;
    Ok(match signal {
        Signal::Scalar => scalar_field(&v)?,
        Signal::X => v.x,
        Signal::Y => v.y,
        Signal::Z => v.z,
    })
}

pub fn station_context(station: &str, e: urbmag::Error) -> urbmag::Error {
    match e {
        urbmag::Error::Empty(m) => urbmag::Error::Empty(format!("station '{station}': {m}")),
        urbmag::Error::Insufficient(m) => urbmag::Error::Insufficient(format!("station '{station}': {m}")),
        other => other,
    }
}

/// Catalog files for `station` in `[t0, t1)` plus its sidecar.
pub fn station_inputs(cat: &DatasetCatalog, station: &str, t0: f64, t1: f64) -> Vec<PathBuf> {
    let h0 = (t0 / 3600.0).floor() as i64 * 3600;
    let mut v: Vec<PathBuf> = Channel::ALL
        .iter()
        .flat_map(|&c| cat.entries_for(station, c))
        .filter(|e| e.start_epoch >= h0 && (e.start_epoch as f64) < t1)
        .map(|e| e.path.clone())
        .collect();
    let meta = urbmag::ingest::meta_path(&cat.root_path, station);
    if meta.is_file() {
        v.push(meta);
    }
    v
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut f = File::create(path).map_err(|e| urbmag::Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| urbmag::Error::io(path, e).into())
}
