use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, Utc};

use crate::error::{Error, Result};
use crate::model::{Channel, GapMap, SensorKind, StationMeta, TimeSeries};

/// Samples read per chunk when streaming a raw file.
pub const CHUNK_SAMPLES: usize = 1 << 16;

/// Canonical hourly file name, hour given in UTC.
pub fn raw_file_name(station: &str, hour_epoch: i64, channel: Channel) -> Result<String> {
    let dt = DateTime::<Utc>::from_timestamp(hour_epoch, 0)
        .ok_or_else(|| Error::InvalidParameter(format!("epoch {hour_epoch} out of range")))?;
    if hour_epoch.rem_euclid(3600) != 0 {
        return Err(Error::InvalidParameter(format!("epoch {hour_epoch} is not on an hour")));
    }
    Ok(format!("{station}_{}_{}.bin", dt.format("%Y-%m-%d_%H"), channel.as_str()))
}

/// Writes samples as a header-less little-endian float64 payload.
pub fn write_raw(path: &Path, values: &[f64]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for v in values {
        w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Streams a raw payload in chunks of at most `chunk` samples.
pub fn for_each_raw_chunk(path: &Path, chunk: usize, mut f: impl FnMut(&[f64])) -> Result<usize> {
    let len = fs::metadata(path).map_err(|e| Error::io(path, e))?.len();
    if len == 0 {
        return Err(Error::format(path, "empty raw file"));
    }
    if len % 8 != 0 {
        return Err(Error::format(path, format!("payload of {len} bytes is not a multiple of 8")));
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut bytes = vec![0u8; chunk.max(1) * 8];
    let mut vals = Vec::with_capacity(chunk.max(1));
    let mut remaining = (len / 8) as usize;
    let total = remaining;
    while remaining > 0 {
        let n = remaining.min(chunk.max(1));
        let buf = &mut bytes[..n * 8];
        r.read_exact(buf).map_err(|e| Error::io(path, e))?;
        vals.clear();
        vals.extend(
            buf.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))),
        );
        f(&vals);
        remaining -= n;
    }
    Ok(total)
}

/// Whole raw payload; non-finite values are kept as read.
pub fn read_raw(path: &Path) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for_each_raw_chunk(path, CHUNK_SAMPLES, |c| out.extend_from_slice(c))?;
    Ok(out)
}

/// Sample count of one full hour at `rate_hz`.
pub fn samples_per_hour(rate_hz: f64) -> usize {
    (rate_hz * 3600.0).round() as usize
}

/// One hour of one channel. Short files are padded with gaps; non-finite
/// samples become gaps.
pub fn read_biomed_hour(path: &Path, meta: &StationMeta, channel: Channel, hour_epoch: i64) -> Result<TimeSeries> {
    let expected = samples_per_hour(meta.nominal_rate_hz);
    let mut values = read_raw(path)?;
    if values.len() > expected {
        return Err(Error::format(
            path,
            format!("{} samples exceed one hour ({expected})", values.len()),
        ));
    }
    let mut gaps = GapMap::new();
    let mut last = 0.0;
    for (i, v) in values.iter_mut().enumerate() {
        if v.is_finite() {
            last = *v;
        } else {
            *v = last;
            gaps.insert(i..i + 1);
        }
    }
    if values.len() < expected {
        log::warn!(
            "{}: {} of {expected} samples, padding the rest as gap",
            path.display(),
            values.len()
        );
        gaps.insert(values.len()..expected);
        values.resize(expected, last);
    }
    TimeSeries::with_gaps(
        hour_epoch as f64,
        meta.nominal_rate_hz,
        values,
        gaps,
        format!("{} {}", meta.station_id, channel.as_str()),
    )
}

/// Sidecar path for a station inside `dir`.
pub fn meta_path(dir: &Path, station: &str) -> PathBuf {
    dir.join(format!("{station}.meta"))
}

pub fn write_meta(dir: &Path, meta: &StationMeta) -> Result<PathBuf> {
    let path = meta_path(dir, &meta.station_id);
    let mut text = format!(
        "station_id={}\nsensor_kind={}\nrate_hz={}\nutc_offset_hours={}\nsensitivity_pt_per_rthz={}\n",
        meta.station_id,
        meta.sensor_kind,
        meta.nominal_rate_hz,
        meta.utc_offset_hours,
        meta.sensitivity_pt_per_rthz
    );
    if !meta.location_label.is_empty() {
        text.push_str(&format!("location_label={}\n", meta.location_label));
    }
    if let Some(c) = meta.axis_calibration_systematic {
        text.push_str(&format!("axis_calibration_systematic={c}\n"));
    }
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Parses a `key=value` sidecar. `station_id` and `sensor_kind` are required.
pub fn read_meta(path: &Path) -> Result<StationMeta> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut id = None;
    let mut kind = None;
    let mut rest = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Row { path: path.into(), row: n + 1, msg: "expected key=value".into() })?;
        let (k, v) = (k.trim(), v.trim().trim_matches('"'));
        match k {
            "station_id" => id = Some(v.to_string()),
            "sensor_kind" => kind = Some(SensorKind::from_str(v)?),
            _ => rest.push((n + 1, k.to_string(), v.to_string())),
        }
    }
    let (id, kind) = match (id, kind) {
        (Some(i), Some(k)) => (i, k),
        _ => return Err(Error::format(path, "sidecar needs station_id and sensor_kind")),
    };
    let mut meta = StationMeta::new(id, kind);
    for (row, k, v) in rest {
        let num = || {
            v.parse::<f64>()
                .map_err(|_| Error::Row { path: path.into(), row, msg: format!("bad number for {k}") })
        };
        match k.as_str() {
            "rate_hz" => meta.nominal_rate_hz = num()?,
            "utc_offset_hours" => meta.utc_offset_hours = num()?,
            "sensitivity_pt_per_rthz" => meta.sensitivity_pt_per_rthz = num()?,
            "axis_calibration_systematic" => meta.axis_calibration_systematic = Some(num()?),
            "location_label" => meta.location_label = v.clone(),
            _ => log::warn!("{}: ignoring unknown key '{k}'", path.display()),
        }
    }
    if !(meta.nominal_rate_hz > 0.0 && meta.nominal_rate_hz.is_finite()) {
        return Err(Error::format(path, "rate_hz must be positive"));
    }
    Ok(meta)
}

/// Sample encoding of a foreign binary layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleType {
    F32,
    F64,
    I16,
    I32,
}

impl SampleType {
    fn width(self) -> usize {
        match self {
            SampleType::I16 => 2,
            SampleType::F32 | SampleType::I32 => 4,
            SampleType::F64 => 8,
        }
    }
}

impl FromStr for SampleType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(SampleType::F32),
            "f64" => Ok(SampleType::F64),
            "i16" => Ok(SampleType::I16),
            "i32" => Ok(SampleType::I32),
            other => Err(Error::InvalidParameter(format!("unknown sample type '{other}'"))),
        }
    }
}

/// Description of a non-canonical binary file: `value_µT = raw·scale + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForeignLayout {
    pub sample: SampleType,
    pub big_endian: bool,
    pub header_bytes: usize,
    pub scale: f64,
    pub offset: f64,
}

impl Default for ForeignLayout {
    fn default() -> Self {
        Self { sample: SampleType::F64, big_endian: false, header_bytes: 0, scale: 1.0, offset: 0.0 }
    }
}

/// Converts a foreign binary file to the canonical container; returns the sample count.
pub fn import_foreign(src: &Path, layout: &ForeignLayout, dest: &Path) -> Result<usize> {
    let bytes = fs::read(src).map_err(|e| Error::io(src, e))?;
    if bytes.len() < layout.header_bytes {
        return Err(Error::format(src, "file shorter than its header"));
    }
    let body = &bytes[layout.header_bytes..];
    let w = layout.sample.width();
    if body.is_empty() || body.len() % w != 0 {
        return Err(Error::format(
            src,
            format!("payload of {} bytes is not a positive multiple of {w}", body.len()),
        ));
    }
    let be = layout.big_endian;
    let values: Vec<f64> = body
        .chunks_exact(w)
        .map(|c| {
            let raw = match layout.sample {
                SampleType::F64 => {
                    let a: [u8; 8] = c.try_into().expect("width 8");
                    if be { f64::from_be_bytes(a) } else { f64::from_le_bytes(a) }
                }
                SampleType::F32 => {
                    let a: [u8; 4] = c.try_into().expect("width 4");
                    (if be { f32::from_be_bytes(a) } else { f32::from_le_bytes(a) }) as f64
                }
                SampleType::I32 => {
                    let a: [u8; 4] = c.try_into().expect("width 4");
                    (if be { i32::from_be_bytes(a) } else { i32::from_le_bytes(a) }) as f64
                }
                SampleType::I16 => {
                    let a: [u8; 2] = c.try_into().expect("width 2");
                    (if be { i16::from_be_bytes(a) } else { i16::from_le_bytes(a) }) as f64
                }
            };
            raw * layout.scale + layout.offset
        })
        .collect();
    write_raw(dest, &values)?;
    Ok(values.len())
}
