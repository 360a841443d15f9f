use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, Read, Seek, SeekFrom};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Channel;

use super::catalog::DatasetCatalog;
use super::raw::{samples_per_hour, CHUNK_SAMPLES};

const HOUR: i64 = 3600;

/// What a full-rate stream delivers, in time order.
#[derive(Debug, PartialEq)]
pub enum StreamEvent<'a> {
    /// Consecutive samples; non-finite values mark gap samples.
    Samples(&'a [f64]),
    /// A run of missing samples.
    Gap(usize),
}

/// Extent of a completed stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamSummary {
    pub start_epoch: f64,
    pub rate_hz: f64,
    pub samples: usize,
    pub gap_samples: usize,
}

/// Streams `[t0, t1)` of one axis, or of the total field when `channel` is
/// `None`, at the native rate without materializing the range. Hours missing
/// any required channel are delivered as gaps.
pub fn stream_station(
    catalog: &DatasetCatalog,
    station: &str,
    t0: f64,
    t1: f64,
    channel: Option<Channel>,
    mut f: impl FnMut(StreamEvent<'_>),
) -> Result<StreamSummary> {
    if !(t0 < t1) {
        return Err(Error::InvalidParameter(format!("range start {t0} must precede end {t1}")));
    }
    let meta = catalog
        .meta(station)
        .ok_or_else(|| Error::Empty(format!("no metadata sidecar for station '{station}'")))?;
    let rate = meta.nominal_rate_hz;
    let per_hour = samples_per_hour(rate);
    let wanted: Vec<Channel> = match channel {
        Some(c) => vec![c],
        None => Channel::ALL.to_vec(),
    };
    let h0 = (t0 / HOUR as f64).floor() as i64 * HOUR;
    let h1 = (t1 / HOUR as f64).ceil() as i64 * HOUR;
    let lookup: Vec<HashMap<i64, &Path>> = wanted
        .iter()
        .map(|&c| {
            catalog
                .entries_for(station, c)
                .iter()
                .filter(|e| e.start_epoch >= h0 && e.start_epoch < h1)
                .map(|e| (e.start_epoch, e.path.as_path()))
                .collect()
        })
        .collect();
    if lookup.iter().all(|m| m.is_empty()) {
        return Err(Error::Empty(format!("station '{station}' has no coverage in [{t0}, {t1})")));
    }
    let index = |t: f64| ((t - h0 as f64) * rate - 1e-9).ceil().max(0.0) as usize;
    let (i0, i1) = (index(t0), index(t1));
    let mut summary = StreamSummary {
        start_epoch: h0 as f64 + i0 as f64 / rate,
        rate_hz: rate,
        samples: 0,
        gap_samples: 0,
    };
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(CHUNK_SAMPLES); wanted.len()];
    let mut out = Vec::with_capacity(CHUNK_SAMPLES);
    let mut hour = h0;
    while hour < h1 {
        let base = ((hour - h0) / HOUR) as usize * per_hour;
        let lo = i0.max(base) - base;
        let hi = i1.min(base + per_hour).saturating_sub(base);
        if lo < hi {
            let paths: Option<Vec<&Path>> = lookup.iter().map(|m| m.get(&hour).copied()).collect();
            match paths {
                None => {
                    f(StreamEvent::Gap(hi - lo));
                    summary.gap_samples += hi - lo;
                }
                Some(paths) => {
                    let mut readers = paths
                        .iter()
                        .map(|p| HourReader::open(p, per_hour, lo))
                        .collect::<Result<Vec<_>>>()?;
                    let mut j = lo;
                    while j < hi {
                        let n = (hi - j).min(CHUNK_SAMPLES);
                        for (r, col) in readers.iter_mut().zip(cols.iter_mut()) {
                            r.read(n, col)?;
                        }
                        out.clear();
                        if cols.len() == 1 {
                            out.extend_from_slice(&cols[0]);
                        } else {
                            out.extend(
                                (0..n).map(|i| (cols[0][i].powi(2) + cols[1][i].powi(2) + cols[2][i].powi(2)).sqrt()),
                            );
                        }
                        summary.gap_samples += out.iter().filter(|x| !x.is_finite()).count();
                        f(StreamEvent::Samples(&out));
                        j += n;
                    }
                }
            }
            summary.samples += hi - lo;
        }
        hour += HOUR;
    }
    Ok(summary)
}

/// Sequential reader over one hour file; positions past its end read as NaN.
struct HourReader<'a> {
    path: &'a Path,
    inner: BufReader<File>,
    available: usize,
    pos: usize,
    bytes: Vec<u8>,
}

impl<'a> HourReader<'a> {
    fn open(path: &'a Path, per_hour: usize, start: usize) -> Result<Self> {
        let len = std::fs::metadata(path).map_err(|e| Error::io(path, e))?.len();
        if len % 8 != 0 {
            return Err(Error::format(path, format!("payload of {len} bytes is not a multiple of 8")));
        }
        let available = (len / 8) as usize;
        if available > per_hour {
            return Err(Error::format(
                path,
                format!("{available} samples exceed one hour of {per_hour}"),
            ));
        }
        if available < per_hour {
            log::warn!("{}: {} of {per_hour} samples, remainder treated as gap", path.display(), available);
        }
        let mut inner = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
        let pos = start.min(available);
        inner
            .seek(SeekFrom::Start(pos as u64 * 8))
            .map_err(|e| Error::io(path, e))?;
        Ok(Self { path, inner, available, pos: start, bytes: Vec::new() })
    }

    fn read(&mut self, n: usize, out: &mut Vec<f64>) -> Result<()> {
        out.clear();
        let real = self.available.saturating_sub(self.pos).min(n);
        self.bytes.resize(real * 8, 0);
        self.inner
            .read_exact(&mut self.bytes)
            .map_err(|e| Error::io(self.path, e))?;
        out.extend(
            self.bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))),
        );
        out.resize(n, f64::NAN);
        self.pos += n;
        Ok(())
    }
}
