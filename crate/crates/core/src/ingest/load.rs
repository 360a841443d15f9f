use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{slice_time, stitch, Channel, GapMap, StationMeta, TimeSeries, VectorSeries};
use crate::preprocess::{decimate, integer_ratio, StreamingDecimator};

use super::catalog::{CatalogEntry, DatasetCatalog};
use super::raw::{for_each_raw_chunk, read_biomed_hour, samples_per_hour, CHUNK_SAMPLES};

const HOUR: i64 = 3600;

/// Loads `[t0, t1)` of a station as a vector series.
///
/// With an integer-ratio `target_rate_hz` the hour files are streamed
/// through a decimator chunk by chunk, so resident memory stays bounded by a
/// chunk per channel rather than the full-rate range. Missing hours become gaps.
pub fn load_station_range(
    catalog: &DatasetCatalog,
    station: &str,
    t0: f64,
    t1: f64,
    target_rate_hz: Option<f64>,
) -> Result<VectorSeries> {
    if !(t0 < t1) {
        return Err(Error::InvalidParameter(format!("range start {t0} must precede end {t1}")));
    }
    let meta = catalog
        .meta(station)
        .cloned()
        .ok_or_else(|| Error::Empty(format!("no metadata sidecar for station '{station}'")))?;
    let h0 = (t0 / HOUR as f64).floor() as i64 * HOUR;
    let h1 = (t1 / HOUR as f64).ceil() as i64 * HOUR;
    let covered = Channel::ALL.iter().any(|&c| {
        catalog
            .entries_for(station, c)
            .iter()
            .any(|e| e.start_epoch >= h0 && e.start_epoch < h1)
    });
    if !covered {
        return Err(Error::Empty(format!("station '{station}' has no coverage in [{t0}, {t1})")));
    }
    let channels: Vec<TimeSeries> = Channel::ALL
        .par_iter()
        .map(|&c| load_channel(catalog.entries_for(station, c), &meta, c, h0, h1, target_rate_hz))
        .collect::<Result<_>>()?;
    let sliced: Vec<TimeSeries> = channels
        .iter()
        .map(|s| slice_time(s, t0, t1))
        .collect::<Result<_>>()?;
    let [x, y, z]: [TimeSeries; 3] = sliced.try_into().expect("three channels");
    VectorSeries::new(x, y, z, meta)
}

fn load_channel(
    entries: &[CatalogEntry],
    meta: &StationMeta,
    channel: Channel,
    h0: i64,
    h1: i64,
    target: Option<f64>,
) -> Result<TimeSeries> {
    let by_hour: HashMap<i64, &CatalogEntry> = entries
        .iter()
        .filter(|e| e.start_epoch >= h0 && e.start_epoch < h1)
        .map(|e| (e.start_epoch, e))
        .collect();
    let rate = meta.nominal_rate_hz;
    let label = format!("{} {}", meta.station_id, channel.as_str());
    let per_hour = samples_per_hour(rate);

    let streaming = match target {
        Some(t) if t < rate => Some(integer_ratio(rate, t).ok_or(t)),
        Some(t) if t > rate => {
            return Err(Error::InvalidParameter(format!("target rate {t} Hz exceeds {rate} Hz")))
        }
        _ => None,
    };
    match streaming {
        Some(Ok(_)) => {
            let target = target.expect("streaming implies target");
            let mut dec = StreamingDecimator::for_rates(rate, target)?;
            for h in (h0..h1).step_by(HOUR as usize) {
                match by_hour.get(&h) {
                    Some(e) => {
                        let n = for_each_raw_chunk(&e.path, CHUNK_SAMPLES, |c| dec.push(c))?;
                        if n > per_hour {
                            return Err(Error::format(&e.path, format!("{n} samples exceed one hour ({per_hour})")));
                        }
                        if n < per_hour {
                            log::warn!("{}: {n} of {per_hour} samples, padding as gap", e.path.display());
                            dec.push_gap(per_hour - n);
                        }
                    }
                    None => dec.push_gap(per_hour),
                }
            }
            let (values, gaps) = dec.finish();
            TimeSeries::with_gaps(h0 as f64, target, values, gaps, label)
        }
        other => {
            let mut parts = Vec::new();
            for h in (h0..h1).step_by(HOUR as usize) {
                let part = match by_hour.get(&h) {
                    Some(e) => read_biomed_hour(&e.path, meta, channel, h)?,
                    None => TimeSeries::with_gaps(
                        h as f64,
                        rate,
                        vec![0.0; per_hour],
                        GapMap::from_ranges([0..per_hour]),
                        label.clone(),
                    )?,
                };
                parts.push(part);
            }
            let full = stitch(&parts)?;
            match other {
                Some(Err(t)) => {
                    log::warn!("non-integer ratio {rate}->{t} Hz: decimating materialized range");
                    decimate(&full, t)
                }
                _ => Ok(full),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::catalog::{scan_catalog, DEFAULT_PATTERN};
    use crate::ingest::raw::{raw_file_name, write_meta, write_raw};
    use crate::model::SensorKind;

    fn build(dir: &std::path::Path, rate: f64, hours: &[i64]) -> StationMeta {
        let meta = StationMeta::new("tst", SensorKind::FluxgateBiomed).with_rate(rate);
        write_meta(dir, &meta).unwrap();
        let n = samples_per_hour(rate);
        for &h in hours {
            for (k, c) in Channel::ALL.iter().enumerate() {
                let v: Vec<f64> = (0..n)
                    .map(|i| {
                        let t = (h * 3600) as f64 + i as f64 / rate;
                        10.0 * (k + 1) as f64 + (t * 0.01).sin() + 0.1 * (t * 1.3).cos()
                    })
                    .collect();
                write_raw(&dir.join(raw_file_name("tst", h * 3600, *c).unwrap()), &v).unwrap();
            }
        }
        meta
    }

    #[test]
    fn streaming_matches_materialized_decimation() {
        let dir = tempfile::tempdir().unwrap();
        build(dir.path(), 40.0, &[100, 101, 103]);
        let cat = scan_catalog(dir.path(), DEFAULT_PATTERN).unwrap();
        let (t0, t1) = (100.0 * 3600.0, 104.0 * 3600.0);
        let fused = load_station_range(&cat, "tst", t0, t1, Some(1.0)).unwrap();
        let full = load_station_range(&cat, "tst", t0, t1, None).unwrap();
        let reference = decimate(&full.x, 1.0).unwrap();
        assert_eq!(fused.x.len(), 4 * 3600);
        assert_eq!(reference.len(), fused.x.len());
        assert_eq!(reference.gaps(), fused.x.gaps());
        for i in 0..fused.x.len() {
            if !fused.x.is_gap(i) {
                let (a, b) = (fused.x.values()[i], reference.values()[i]);
                assert!((a - b).abs() <= 1e-12 * b.abs(), "{i}: {a} vs {b}");
            }
        }
        // the missing hour spans 3600 decimated indices plus filter edges
        let g = fused.x.gaps();
        assert!((2 * 3600..3 * 3600).all(|i| g.contains(i)));
        assert!(!g.contains(2 * 3600 - 100) && !g.contains(3 * 3600 + 100));
    }

    #[test]
    fn full_rate_slice_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        build(dir.path(), 4.0, &[10, 11]);
        let cat = scan_catalog(dir.path(), DEFAULT_PATTERN).unwrap();
        let v = load_station_range(&cat, "tst", 36_000.0 + 1800.0, 39_600.0 + 1800.0, None).unwrap();
        assert_eq!(v.len(), 4 * 3600);
        assert_eq!(v.x.start_epoch(), 37_800.0);
        assert!(v.x.gaps().is_empty());
        assert_eq!(v.z.values()[0], 30.0 + (37_800.0f64 * 0.01).sin() + 0.1 * (37_800.0f64 * 1.3).cos());
        assert!(load_station_range(&cat, "tst", 5.0, 5.0, None).is_err());
        assert!(load_station_range(&cat, "tst", 0.0, 3600.0, None).is_err());
        assert!(load_station_range(&cat, "other", 36_000.0, 39_600.0, None).is_err());
        assert!(load_station_range(&cat, "tst", 36_000.0, 39_600.0, Some(8.0)).is_err());
    }

    #[test]
    fn fractional_target_falls_back() {
        let dir = tempfile::tempdir().unwrap();
        build(dir.path(), 10.0, &[3]);
        let cat = scan_catalog(dir.path(), DEFAULT_PATTERN).unwrap();
        let v = load_station_range(&cat, "tst", 3.0 * 3600.0, 4.0 * 3600.0, Some(3.0)).unwrap();
        assert_eq!(v.x.rate_hz(), 3.0);
        assert_eq!(v.len(), 3 * 3600);
    }
}
