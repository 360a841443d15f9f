//! Ensemble-average extraction of periodic signatures.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{local_midnight_before, DayNightSchedule, DayPart, TimeSeries};
use crate::preprocess::{apply_filter, transient_gaps, FilterSpec};

const DAY_S: f64 = 86_400.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractOptions {
    pub period_s: f64,
    pub window_s: f64,
    /// High-pass applied to the whole series before windowing.
    pub prefilter: Option<FilterSpec>,
    pub schedule: DayNightSchedule,
    pub part: DayPart,
    pub utc_offset_s: f64,
    /// Use at most this many accepted windows, earliest first.
    pub max_windows: Option<usize>,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            period_s: 1200.0,
            window_s: 6000.0,
            prefilter: Some(FilterSpec::highpass(0.001)),
            schedule: DayNightSchedule::berkeley(),
            part: DayPart::Day,
            utc_offset_s: 0.0,
            max_windows: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleResult {
    /// Pointwise mean over windows (µT), one value per window sample.
    pub waveform: Vec<f64>,
    pub segments_used: usize,
    pub prefilter: Option<FilterSpec>,
    /// Standard error of the mean waveform (µT).
    pub residual_ut: f64,
    pub rate_hz: f64,
    pub period_s: f64,
    /// UTC epochs of the windows used.
    pub window_starts: Vec<f64>,
    /// Amplitude gain of the prefilter at the period frequency (1 without a prefilter).
    pub filter_gain: f64,
}

impl EnsembleResult {
    /// Amplitude and phase of the best-fit sinusoid at `freq_hz`.
    pub fn sinusoid(&self, freq_hz: f64) -> (f64, f64) {
        sinusoid_fit(&self.waveform, self.rate_hz, freq_hz)
    }

    /// Sinusoid amplitude at the period, divided by the prefilter gain.
    pub fn corrected_amplitude(&self) -> f64 {
        self.sinusoid(1.0 / self.period_s).0 / self.filter_gain
    }
}

/// Least-squares `A·sin(2πft + φ) + c` fit; returns `(A, φ)`.
pub fn sinusoid_fit(v: &[f64], rate_hz: f64, freq_hz: f64) -> (f64, f64) {
    let n = v.len();
    let (mut ss, mut sc, mut cc, mut xs, mut xc, mut s1, mut c1, mut x1) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, &x) in v.iter().enumerate() {
        let w = 2.0 * PI * freq_hz * i as f64 / rate_hz;
        let (s, c) = w.sin_cos();
        ss += s * s;
        sc += s * c;
        cc += c * c;
        xs += x * s;
        xc += x * c;
        s1 += s;
        c1 += c;
        x1 += x;
    }
    // normal equations for [a, b, c] with basis sin, cos, 1
    let m = nalgebra::Matrix3::new(ss, sc, s1, sc, cc, c1, s1, c1, n as f64);
    let rhs = nalgebra::Vector3::new(xs, xc, x1);
    match m.lu().solve(&rhs) {
        Some(p) => (p[0].hypot(p[1]), p[1].atan2(p[0])),
        None => (0.0, 0.0),
    }
}

/// Pointwise mean and standard error over equal-length windows.
///
/// Each point sums its window values in sorted order, so the result does
/// not depend on window order.
pub fn ensemble_mean(windows: &[&[f64]]) -> Result<(Vec<f64>, f64)> {
    let first = windows.first().ok_or_else(|| Error::Insufficient("no windows to average".into()))?;
    let len = first.len();
    if windows.iter().any(|w| w.len() != len) || len == 0 {
        return Err(Error::Structure("windows must share a non-zero length".into()));
    }
    let n = windows.len();
    let stats: Vec<(f64, f64)> = (0..len)
        .into_par_iter()
        .map(|i| {
            let mut col: Vec<f64> = windows.iter().map(|w| w[i]).collect();
            col.sort_unstable_by(f64::total_cmp);
            let mean = col.iter().sum::<f64>() / n as f64;
            let mut dev: Vec<f64> = col.iter().map(|x| (x - mean) * (x - mean)).collect();
            dev.sort_unstable_by(f64::total_cmp);
            (mean, dev.iter().sum::<f64>())
        })
        .collect();
    let mean: Vec<f64> = stats.iter().map(|s| s.0).collect();
    let residual = if n > 1 {
        let ss: f64 = stats.iter().map(|s| s.1).sum();
        (ss / ((n - 1) * len) as f64).sqrt() / (n as f64).sqrt()
    } else {
        0.0
    };
    Ok((mean, residual))
}

/// Candidate window start indices: calendar-anchored at local midnight,
/// `window_s` apart, wholly inside one local day.
fn window_grid(s: &TimeSeries, window_s: f64, utc_offset_s: f64) -> Vec<(usize, f64)> {
    let per_day = (DAY_S / window_s + 1e-9).floor() as usize;
    let rate = s.rate_hz();
    let w = (window_s * rate).round() as usize;
    let mut out = Vec::new();
    let mut day = local_midnight_before(s.start_epoch(), utc_offset_s);
    while day < s.end_epoch() {
        for k in 0..per_day {
            let t = day + k as f64 * window_s;
            let idx_f = (t - s.start_epoch()) * rate;
            if idx_f < -1e-6 {
                continue;
            }
            let idx = idx_f.round() as usize;
            if idx + w <= s.len() {
                out.push((idx, t));
            }
        }
        day += DAY_S;
    }
    out
}

pub fn extract_periodic(s: &TimeSeries, opts: &ExtractOptions) -> Result<EnsembleResult> {
    if !(opts.period_s > 0.0 && opts.window_s > 0.0) {
        return Err(Error::InvalidParameter("period and window must be positive".into()));
    }
    let ratio = opts.window_s / opts.period_s;
    if (ratio - ratio.round()).abs() > 1e-9 * ratio || ratio.round() < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "window {} s is not a whole multiple of period {} s",
            opts.window_s, opts.period_s
        )));
    }
    let rate = s.rate_hz();
    let w_f = opts.window_s * rate;
    if (w_f - w_f.round()).abs() > 1e-6 {
        return Err(Error::InvalidParameter("window does not span whole samples".into()));
    }
    if opts.window_s > DAY_S {
        return Err(Error::InvalidParameter("window longer than a day".into()));
    }
    let w = w_f.round() as usize;

    let (filtered, excluded, gain) = match &opts.prefilter {
        Some(f) => {
            let out = apply_filter(s, f)?;
            let ex = transient_gaps(s, f).union(s.gaps());
            let g = f.gain_at(1.0 / opts.period_s, rate)?;
            (out, ex, g)
        }
        None => (s.clone(), s.gaps().clone(), 1.0),
    };

    let mut accepted: Vec<(usize, f64)> = window_grid(s, opts.window_s, opts.utc_offset_s)
        .into_iter()
        .filter(|&(idx, t)| {
            if excluded.intersects(idx..idx + w) {
                return false;
            }
            if opts.part == DayPart::All {
                return true;
            }
            let tod = crate::model::local_time_of_day(t, opts.utc_offset_s);
            opts.schedule.classify_interval(tod, tod + opts.window_s) == Some(opts.part)
        })
        .collect();
    if let Some(m) = opts.max_windows {
        accepted.truncate(m);
    }
    if accepted.len() < 2 {
        return Err(Error::Insufficient(format!(
            "{} usable {} s windows, need at least 2",
            accepted.len(),
            opts.window_s
        )));
    }
    let vals = filtered.values();
    let windows: Vec<&[f64]> = accepted.iter().map(|&(i, _)| &vals[i..i + w]).collect();
    let (waveform, residual) = ensemble_mean(&windows)?;
    Ok(EnsembleResult {
        waveform,
        segments_used: windows.len(),
        prefilter: opts.prefilter,
        residual_ut: residual,
        rate_hz: rate,
        period_s: opts.period_s,
        window_starts: accepted.iter().map(|a| a.1).collect(),
        filter_gain: gain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GapMap;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn series(days: usize, amp: f64, sigma: f64, seed: u64) -> TimeSeries {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, sigma.max(1e-300)).unwrap();
        let v = (0..days * 86_400)
            .map(|i| {
                let x = amp * (2.0 * PI * i as f64 / 1200.0).sin();
                if sigma > 0.0 { x + d.sample(&mut rng) } else { x }
            })
            .collect();
        TimeSeries::new(1_527_465_600.0, 1.0, v, "e").unwrap()
    }

    #[test]
    fn pure_sine_reproduces_attenuated_periods() {
        let s = series(3, 0.05, 0.0, 0);
        let r = extract_periodic(&s, &ExtractOptions::default()).unwrap();
        assert_eq!(r.waveform.len(), 6000);
        assert!(r.segments_used >= 2);
        let (amp, _) = r.sinusoid(1.0 / 1200.0);
        assert!((amp / (0.05 * r.filter_gain) - 1.0).abs() < 0.02, "amp {amp} gain {}", r.filter_gain);
        assert!((r.corrected_amplitude() / 0.05 - 1.0).abs() < 0.02);
        assert!(r.residual_ut < 1e-3 * amp, "residual {}", r.residual_ut);
        // repeats every period
        for i in 0..1200 {
            assert!((r.waveform[i] - r.waveform[i + 4800]).abs() < 1e-3 * amp);
        }
    }

    #[test]
    fn unfiltered_sine_is_exact() {
        let s = series(2, 0.05, 0.0, 0);
        let opts = ExtractOptions { prefilter: None, ..Default::default() };
        let r = extract_periodic(&s, &opts).unwrap();
        let (amp, _) = r.sinusoid(1.0 / 1200.0);
        assert!((amp - 0.05).abs() < 1e-12);
        assert!(r.residual_ut < 1e-12);
        assert_eq!(r.filter_gain, 1.0);
    }

    #[test]
    fn windows_respect_schedule_and_gaps() {
        let s = series(1, 0.0, 1.0, 1);
        let day = ExtractOptions { prefilter: None, ..Default::default() };
        let r = extract_periodic(&s, &day).unwrap();
        // Berkeley day windows of 100 min: 03:00..04:40 crosses 04:30, so 05:00 through 21:40
        assert_eq!(r.segments_used, 11);
        let night = ExtractOptions {
            prefilter: None,
            schedule: DayNightSchedule::brooklyn(),
            part: DayPart::Night,
            ..Default::default()
        };
        assert_eq!(extract_periodic(&s, &night).unwrap().segments_used, 4);
        let gappy = s.with_extra_gaps(&GapMap::from_ranges([20_000..20_001])).unwrap();
        assert_eq!(extract_periodic(&gappy, &day).unwrap().segments_used, 10);
    }

    #[test]
    fn noise_only_stays_within_residual() {
        for seed in 0..5 {
            let s = series(5, 0.0, 0.5, 100 + seed);
            let r = extract_periodic(&s, &ExtractOptions::default()).unwrap();
            let (amp, _) = r.sinusoid(1.0 / 1200.0);
            assert!(amp <= 3.0 * r.residual_ut, "seed {seed}: {amp} vs {}", r.residual_ut);
        }
    }

    #[test]
    fn parameter_errors() {
        let s = series(1, 0.0, 1.0, 1);
        let bad = ExtractOptions { window_s: 5000.0, ..Default::default() };
        assert!(extract_periodic(&s, &bad).is_err());
        let short = TimeSeries::new(0.0, 1.0, vec![0.0; 7000], "s").unwrap();
        assert!(matches!(
            extract_periodic(&short, &ExtractOptions { part: DayPart::All, prefilter: None, ..Default::default() }),
            Err(Error::Insufficient(_))
        ));
    }

    #[test]
    fn ensemble_mean_ignores_window_order() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let d = Normal::new(0.0, 1.0).unwrap();
        let data: Vec<Vec<f64>> = (0..40).map(|_| (0..300).map(|_| d.sample(&mut rng)).collect()).collect();
        let fwd: Vec<&[f64]> = data.iter().map(|v| v.as_slice()).collect();
        let mut rev = fwd.clone();
        rev.reverse();
        rev.swap(3, 17);
        let (a, ra) = ensemble_mean(&fwd).unwrap();
        let (b, rb) = ensemble_mean(&rev).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }
}
