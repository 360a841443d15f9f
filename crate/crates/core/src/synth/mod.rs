//! Known-truth generators: scenes of signals, noises and moving dipoles,
//! and skew-normal samples.

mod dipole;
mod scene;
mod skewnormal;

use std::path::{Path, PathBuf};

pub use dipole::{dipole_field, path_position, PathPoint, MU0_OVER_4PI};
pub use scene::{generate, power_law_noise, AxisSel, Component, SceneSpec, SensorSpec};
pub use skewnormal::sample_skew_normal;

use crate::error::{Error, Result};
use crate::ingest::{raw_file_name, samples_per_hour, write_meta, write_raw};
use crate::model::VectorSeries;

/// Writes series as hourly raw files plus sidecars. Samples before the
/// series start within its first hour are written as NaN, which loads as gap.
pub fn write_raw_hours(series: &[VectorSeries], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for v in series {
        let rate = v.x.rate_hz();
        let per_hour = samples_per_hour(rate);
        if (per_hour as f64 - rate * 3600.0).abs() > 1e-6 {
            return Err(Error::InvalidParameter(format!(
                "rate {rate} Hz does not give whole samples per hour"
            )));
        }
        let start = v.x.start_epoch();
        let h0 = (start / 3600.0).floor() * 3600.0;
        let lead_f = (start - h0) * rate;
        let lead = lead_f.round() as usize;
        if (lead_f - lead as f64).abs() > 1e-6 {
            return Err(Error::InvalidParameter("series start is off the hourly sample grid".into()));
        }
        write_meta(dir, &v.station)?;
        for ch in crate::model::Channel::ALL {
            let s = v.channel(ch);
            let mut padded = vec![f64::NAN; lead];
            padded.extend(
                s.values()
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| if s.is_gap(i) { f64::NAN } else { x }),
            );
            for (k, chunk) in padded.chunks(per_hour).enumerate() {
                let hour = h0 as i64 + k as i64 * 3600;
                let path = dir.join(raw_file_name(&v.station.station_id, hour, ch)?);
                write_raw(&path, chunk)?;
                written.push(path);
            }
        }
    }
    Ok(written)
}
