use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDateTime;

use crate::error::{Error, Result};
use crate::model::{GapMap, TimeSeries};

const MANDATORY_KEYS: [&str; 3] = ["Format", "IAGA CODE", "Reported"];
/// Values at or above this mark missing (99999) or unrecorded (88888) data.
const MISSING_THRESHOLD: f64 = 88_888.0;
const NT_PER_UT: f64 = 1000.0;

/// Component to extract from an IAGA-2002 file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IagaComponent {
    /// Total field: the `F` column when reported, else computed from
    /// `XYZ` or `HZ`.
    #[default]
    Total,
    /// A reported column by its letter, e.g. `Z` or `H`.
    Named(char),
}

impl FromStr for IagaComponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("total") || s.eq_ignore_ascii_case("f") {
            return Ok(IagaComponent::Total);
        }
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) if c.is_ascii_alphabetic() => Ok(IagaComponent::Named(c.to_ascii_uppercase())),
            _ => Err(Error::InvalidParameter(format!("unknown IAGA component '{s}'"))),
        }
    }
}

/// Header of an IAGA-2002 file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IagaHeader {
    pub fields: BTreeMap<String, String>,
    pub columns: Vec<char>,
}

impl IagaHeader {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.get(key).map(String::as_str)
    }

    pub fn code(&self) -> &str {
        self.get("IAGA CODE").unwrap_or("")
    }
}

/// Reads one IAGA-2002 file into µT at the cadence of its rows.
pub fn read_iaga2002(path: &Path, component: IagaComponent) -> Result<TimeSeries> {
    read_iaga2002_with_header(path, component).map(|(_, s)| s)
}

pub fn read_iaga2002_with_header(path: &Path, component: IagaComponent) -> Result<(IagaHeader, TimeSeries)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut header = IagaHeader::default();
    let mut lines = text.lines().enumerate();
    let mut found_columns = false;
    for (_, line) in lines.by_ref() {
        let body = line.trim_end().trim_end_matches('|').trim_end();
        let trimmed = body.trim_start();
        if trimmed.starts_with('#') || trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with("DATE") {
            header.columns = trimmed
                .split_whitespace()
                .skip(3)
                .map(|c| c.chars().last().unwrap_or('?').to_ascii_uppercase())
                .collect();
            found_columns = true;
            break;
        }
        // keys may hold single spaces; the value follows a run of two or more
        match trimmed.find("  ") {
            Some(i) => header
                .fields
                .insert(trimmed[..i].to_string(), trimmed[i..].trim().to_string()),
            None => header.fields.insert(trimmed.to_string(), String::new()),
        };
    }
    for key in MANDATORY_KEYS {
        if header.get(key).is_none_or(str::is_empty) {
            return Err(Error::format(path, format!("missing mandatory header key '{key}'")));
        }
    }
    if !found_columns {
        return Err(Error::format(path, "no DATE/TIME column header line"));
    }
    let col = |c: char| header.columns.iter().position(|&x| x == c);
    let picker: Box<dyn Fn(&[f64]) -> f64> = match component {
        IagaComponent::Named(c) => {
            let i = col(c).ok_or_else(|| Error::format(path, format!("component '{c}' not reported")))?;
            Box::new(move |v| v[i])
        }
        IagaComponent::Total => {
            if let Some(i) = col('F') {
                Box::new(move |v| v[i])
            } else if let (Some(x), Some(y), Some(z)) = (col('X'), col('Y'), col('Z')) {
                Box::new(move |v| norm(&[v[x], v[y], v[z]]))
            } else if let (Some(h), Some(z)) = (col('H'), col('Z')) {
                Box::new(move |v| norm(&[v[h], v[z]]))
            } else {
                return Err(Error::format(path, "total field neither reported nor derivable"));
            }
        }
    };

    let mut times: Vec<(usize, f64, Option<f64>)> = Vec::new();
    for (n, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = n + 1;
        let mut parts = line.split_whitespace();
        let (Some(d), Some(t)) = (parts.next(), parts.next()) else {
            return Err(Error::Row { path: path.into(), row, msg: "missing date/time".into() });
        };
        let stamp = NaiveDateTime::parse_from_str(&format!("{d} {t}"), "%Y-%m-%d %H:%M:%S%.f")
            .map_err(|e| Error::Row { path: path.into(), row, msg: format!("bad timestamp: {e}") })?;
        let epoch = stamp.and_utc().timestamp_millis() as f64 / 1000.0;
        let vals: Vec<f64> = parts
            .skip(1)
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Row { path: path.into(), row, msg: "bad value".into() })?;
        if vals.len() < header.columns.len() {
            return Err(Error::Row { path: path.into(), row, msg: "too few value columns".into() });
        }
        let v = picker(&vals);
        let value = (v.is_finite() && v.abs() < MISSING_THRESHOLD).then_some(v);
        times.push((row, epoch, value.map(|v| v / NT_PER_UT)));
    }
    if times.is_empty() {
        return Err(Error::format(path, "no data rows"));
    }
    let dt = if times.len() >= 2 {
        let mut d: Vec<f64> = times.windows(2).map(|w| w[1].1 - w[0].1).collect();
        d.sort_unstable_by(f64::total_cmp);
        d[d.len() / 2]
    } else {
        60.0
    };
    if !(dt > 0.0) {
        return Err(Error::format(path, "timestamps do not advance"));
    }
    let t0 = times[0].1;
    let mut values = Vec::with_capacity(times.len());
    let mut gaps = GapMap::new();
    let mut last = 0.0;
    for &(row, t, v) in &times {
        let pos = ((t - t0) / dt).round();
        if pos < values.len() as f64 {
            return Err(Error::Row { path: path.into(), row, msg: "timestamp out of order".into() });
        }
        let pos = pos as usize;
        if pos > values.len() {
            gaps.insert(values.len()..pos);
            values.resize(pos, last);
        }
        match v {
            Some(x) => {
                last = x;
                values.push(x);
            }
            None => {
                gaps.insert(pos..pos + 1);
                values.push(last);
            }
        }
    }
    let label = format!(
        "{} {}",
        header.code(),
        match component {
            IagaComponent::Total => 'F',
            IagaComponent::Named(c) => c,
        }
    );
    let s = TimeSeries::with_gaps(t0, 1.0 / dt, values, gaps, label)?;
    Ok((header, s))
}

fn norm(v: &[f64]) -> f64 {
    if v.iter().any(|x| x.abs() >= MISSING_THRESHOLD) {
        return f64::INFINITY;
    }
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Writes a minimal IAGA-2002 file with `XYZF` columns in nT.
pub fn write_iaga2002(path: &Path, code: &str, start_epoch: i64, dt_s: i64, rows: &[[f64; 4]]) -> Result<()> {
    use std::fmt::Write as _;
    let mut s = String::new();
    let field = |s: &mut String, k: &str, v: &str| {
        let _ = writeln!(s, " {:<23}{:<45}|", k, v);
    };
    field(&mut s, "Format", "IAGA-2002");
    field(&mut s, "Source of Data", "synthetic");
    field(&mut s, "IAGA CODE", code);
    field(&mut s, "Reported", "XYZF");
    field(&mut s, "Data Interval Type", "1-minute");
    let _ = writeln!(
        s,
        "DATE       TIME         DOY     {code}X      {code}Y      {code}Z      {code}F   |"
    );
    for (i, r) in rows.iter().enumerate() {
        let t = chrono::DateTime::from_timestamp(start_epoch + i as i64 * dt_s, 0)
            .ok_or_else(|| Error::InvalidParameter("epoch out of range".into()))?;
        let _ = writeln!(
            s,
            "{} {}  {:>9.2} {:>9.2} {:>9.2} {:>9.2}",
            t.format("%Y-%m-%d %H:%M:%S%.3f"),
            t.format("%j"),
            r[0],
            r[1],
            r[2],
            r[3]
        );
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = "\
 Format                 IAGA-2002                                    |
 Source of Data         United States Geological Survey (USGS)       |
 Station Name           Fresno                                       |
 IAGA CODE              FRN                                          |
 Reported               XYZF                                         |
 # provisional data                                                  |
DATE       TIME         DOY     FRNX      FRNY      FRNZ      FRNF   |
2018-05-28 00:00:00.000 148     22614.05   5154.54  41799.07  47808.90
2018-05-28 00:01:00.000 148     22614.15   5154.44  41799.27  47809.10
2018-05-28 00:02:00.000 148     99999.00  99999.00  99999.00  99999.00
2018-05-28 00:03:00.000 148     22614.00   5154.50  41799.00  47808.80
2018-05-28 00:05:00.000 148     22614.00   5154.50  41799.00  47808.70
";

    fn fixture(text: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("frn20180528vmin.min");
        fs::write(&p, text).unwrap();
        (dir, p)
    }

    #[test]
    fn hand_read_values() {
        let (_d, p) = fixture(FIXTURE);
        let (h, s) = read_iaga2002_with_header(&p, IagaComponent::Total).unwrap();
        assert_eq!(h.code(), "FRN");
        assert_eq!(h.get("Station Name"), Some("Fresno"));
        assert_eq!(s.rate_hz(), 1.0 / 60.0);
        assert_eq!(s.start_epoch(), 1_527_465_600.0);
        assert_eq!(s.len(), 6);
        assert!((s.values()[0] - 47.8089).abs() < 1e-12);
        assert!((s.values()[1] - 47.8091).abs() < 1e-12);
        assert!((s.values()[3] - 47.8088).abs() < 1e-12);
        assert!((s.values()[5] - 47.8087).abs() < 1e-12);
        assert_eq!(s.gaps().ranges(), &[2..3, 4..5]);
        let z = read_iaga2002(&p, IagaComponent::Named('Z')).unwrap();
        assert!((z.values()[0] - 41.79907).abs() < 1e-12);
    }

    #[test]
    fn total_computed_from_vector_columns() {
        let text = FIXTURE.replace("XYZF", "XYZ").replace("FRNF", "FRNG");
        let (_d, p) = fixture(&text);
        let s = read_iaga2002(&p, IagaComponent::Total).unwrap();
        let expect = (22614.05f64.powi(2) + 5154.54f64.powi(2) + 41799.07f64.powi(2)).sqrt() / 1000.0;
        assert!((s.values()[0] - expect).abs() < 1e-12);
        assert!(s.is_gap(2));
    }

    #[test]
    fn header_and_component_errors() {
        let (_d, p) = fixture(&FIXTURE.replace(" IAGA CODE ", " IAGA_CODX "));
        assert!(read_iaga2002(&p, IagaComponent::Total).is_err());
        let (_d2, p2) = fixture(FIXTURE);
        assert!(read_iaga2002(&p2, IagaComponent::Named('Q')).is_err());
        assert!("xy".parse::<IagaComponent>().is_err());
        assert_eq!("z".parse::<IagaComponent>().unwrap(), IagaComponent::Named('Z'));
    }

    #[test]
    fn day_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("day.min");
        let rows: Vec<[f64; 4]> = (0..1440)
            .map(|i| [22_600.0, 5_150.0, 41_800.0, 47_800.0 + i as f64 * 0.01])
            .collect();
        write_iaga2002(&p, "FRN", 1_527_465_600, 60, &rows).unwrap();
        let s = read_iaga2002(&p, IagaComponent::Total).unwrap();
        assert_eq!(s.len(), 1440);
        assert_eq!(s.rate_hz(), 1.0 / 60.0);
        assert!(s.gaps().is_empty());
        assert!((s.values()[1439] - 47.81439).abs() < 1e-9);
    }
}
