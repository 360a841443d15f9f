use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Channel, GapMap, StationMeta, TimeSeries, VectorSeries};

/// Default fraction of malformed rows tolerated before aborting.
pub const DEFAULT_MALFORMED_TOLERANCE: f64 = 0.001;

/// Reads an `epoch_s,bx,by,bz` log with one header line.
///
/// Rows map to consecutive samples at the station rate; timestamp jumps of
/// more than half a sample open gaps. Malformed rows become single-sample
/// gaps. Row numbers in errors count data rows from 1.
pub fn read_vmr_log(path: &Path, meta: &StationMeta) -> Result<VectorSeries> {
    read_vmr_log_with(path, meta, DEFAULT_MALFORMED_TOLERANCE)
}

pub fn read_vmr_log_with(path: &Path, meta: &StationMeta, malformed_tolerance: f64) -> Result<VectorSeries> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let rate = meta.nominal_rate_hz;
    let mut axes: [Vec<f64>; 3] = Default::default();
    let mut gaps = GapMap::new();
    let mut t0: Option<f64> = None;
    let mut last_t = f64::NEG_INFINITY;
    let mut last = [0.0; 3];
    let (mut rows, mut malformed) = (0usize, 0usize);

    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        rows += 1;
        let parsed = rec.ok().and_then(|r| {
            if r.len() != 4 {
                return None;
            }
            let v: Option<Vec<f64>> = r.iter().map(|f| f.parse::<f64>().ok()).collect();
            v.filter(|v| v.iter().all(|x| x.is_finite()))
        });
        let next = axes[0].len();
        let Some(v) = parsed else {
            malformed += 1;
            log::warn!("{}: malformed row {row}", path.display());
            for (a, l) in axes.iter_mut().zip(&last) {
                a.push(*l);
            }
            gaps.insert(next..next + 1);
            continue;
        };
        let t = v[0];
        if t < last_t {
            return Err(Error::Row {
                path: path.into(),
                row,
                msg: format!("timestamp {t} precedes previous {last_t}"),
            });
        }
        last_t = t;
        let start = *t0.get_or_insert(t);
        let pos = (((t - start) * rate).round() as usize).max(next);
        if pos > next {
            for (a, l) in axes.iter_mut().zip(&last) {
                a.resize(pos, *l);
            }
            gaps.insert(next..pos);
        }
        for (k, a) in axes.iter_mut().enumerate() {
            a.push(v[k + 1]);
            last[k] = v[k + 1];
        }
    }
    if rows == 0 {
        return Err(Error::format(path, "log has no data rows"));
    }
    if malformed as f64 > malformed_tolerance * rows as f64 {
        return Err(Error::format(
            path,
            format!("{malformed} of {rows} rows malformed, tolerance {malformed_tolerance}"),
        ));
    }
    let start = t0.ok_or_else(|| Error::format(path, "no well-formed rows"))?;
    let [x, y, z] = axes;
    let mk = |vals: Vec<f64>, c: Channel| {
        TimeSeries::with_gaps(start, rate, vals, gaps.clone(), format!("{} {}", meta.station_id, c.as_str()))
    };
    VectorSeries::new(mk(x, Channel::X)?, mk(y, Channel::Y)?, mk(z, Channel::Z)?, meta.clone())
}

/// Writes a vector series as a log; gap samples are omitted.
pub fn write_vmr_log(path: &Path, v: &VectorSeries) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let res: std::io::Result<()> = (|| {
        writeln!(w, "epoch_s,bx,by,bz")?;
        for i in 0..v.len() {
            if v.x.is_gap(i) || v.y.is_gap(i) || v.z.is_gap(i) {
                continue;
            }
            writeln!(
                w,
                "{:.6},{:e},{:e},{:e}",
                v.x.time_at(i),
                v.x.values()[i],
                v.y.values()[i],
                v.z.values()[i]
            )?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}
