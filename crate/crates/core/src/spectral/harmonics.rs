use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::quantile_sorted;

use super::welch::Spectrum;

/// Half-width in Hz of the peak search window around each harmonic.
pub const PEAK_SEARCH_HZ: f64 = 0.5;
/// Half-width in Hz of the noise reference band.
pub const NOISE_BAND_HZ: f64 = 2.0;
/// Bins on either side of the peak left out of the noise band.
pub const PEAK_EXCLUSION_BINS: usize = 3;
/// `local_snr` above which a harmonic is flagged as detected.
pub const DETECTION_SNR: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Harmonic {
    pub index: usize,
    pub freq_hz: f64,
    /// PSD value at the peak bin (µT²/Hz).
    pub peak_power: f64,
    pub local_snr: f64,
    pub detected: bool,
}

pub fn find_harmonics(spec: &Spectrum, fundamental_hz: f64, count: usize) -> Result<Vec<Harmonic>> {
    if !(fundamental_hz > 0.0 && fundamental_hz.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "fundamental must be positive, got {fundamental_hz}"
        )));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let fmax = spec.freqs_hz.last().copied().unwrap_or(0.0);
    let needed = count as f64 * fundamental_hz + NOISE_BAND_HZ;
    if needed > fmax {
        return Err(Error::Insufficient(format!(
            "spectrum ends at {fmax} Hz, harmonic {count} needs {needed} Hz"
        )));
    }
    let df = spec.resolution_hz();
    let band = |lo: f64, hi: f64| -> (usize, usize) {
        let a = spec.freqs_hz.partition_point(|&f| f < lo);
        let b = spec.freqs_hz.partition_point(|&f| f <= hi);
        (a, b)
    };
    let mut out = Vec::with_capacity(count);
    for k in 1..=count {
        let target = k as f64 * fundamental_hz;
        let (a, b) = band(target - PEAK_SEARCH_HZ - 0.5 * df, target + PEAK_SEARCH_HZ + 0.5 * df);
        if a >= b {
            return Err(Error::Insufficient(format!("no bins near {target} Hz")));
        }
        let peak = (a..b)
            .max_by(|&i, &j| spec.psd[i].total_cmp(&spec.psd[j]))
            .unwrap_or(a);
        let (na, nb) = band(target - NOISE_BAND_HZ, target + NOISE_BAND_HZ);
        let mut noise: Vec<f64> = (na..nb)
            .filter(|&i| i.abs_diff(peak) > PEAK_EXCLUSION_BINS)
            .map(|i| spec.psd[i])
            .collect();
        noise.sort_unstable_by(f64::total_cmp);
        let median = if noise.is_empty() { 0.0 } else { quantile_sorted(&noise, 0.5) };
        let peak_power = spec.psd[peak];
        let local_snr = if median > 0.0 {
            peak_power / median
        } else if peak_power > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        out.push(Harmonic {
            index: k,
            freq_hz: spec.freqs_hz[peak],
            peak_power,
            local_snr,
            detected: local_snr > DETECTION_SNR,
        });
    }
    Ok(out)
}
