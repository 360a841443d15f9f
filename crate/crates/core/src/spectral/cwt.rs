use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::TimeSeries;

/// Morlet centre frequency (dimensionless).
pub const MORLET_OMEGA0: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveletDescriptor {
    pub family: &'static str,
    pub omega0: f64,
    pub voices_per_octave: usize,
}

/// Time-frequency power map, rows are frequencies and columns are times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scalogram {
    pub freqs_hz: Vec<f64>,
    pub times: Vec<f64>,
    /// Row-major `freqs × times`, µT²/Hz.
    pub power: Vec<f64>,
    /// Cone-of-influence half-width in seconds for each frequency row.
    pub coi_s: Vec<f64>,
    pub wavelet: WaveletDescriptor,
}

impl Scalogram {
    pub fn rows(&self) -> usize {
        self.freqs_hz.len()
    }

    pub fn cols(&self) -> usize {
        self.times.len()
    }

    pub fn at(&self, f: usize, t: usize) -> f64 {
        self.power[f * self.times.len() + t]
    }

    pub fn row(&self, f: usize) -> &[f64] {
        let c = self.times.len();
        &self.power[f * c..(f + 1) * c]
    }

    /// True when the coefficient at `(f, t)` is clear of edge effects.
    pub fn in_cone(&self, f: usize, t: usize) -> bool {
        let (t0, t1) = (self.times[0], self.times[self.times.len() - 1]);
        let tt = self.times[t];
        tt - t0 >= self.coi_s[f] && t1 - tt >= self.coi_s[f]
    }

    /// Frequency span represented by each row in a log-spaced grid.
    pub fn bandwidths_hz(&self) -> Vec<f64> {
        let step = std::f64::consts::LN_2 / self.wavelet.voices_per_octave as f64;
        self.freqs_hz.iter().map(|f| f * step).collect()
    }

    /// Power integrated over frequency at every time column.
    pub fn slice_power(&self) -> Vec<f64> {
        let bw = self.bandwidths_hz();
        (0..self.cols())
            .map(|t| (0..self.rows()).map(|f| self.at(f, t) * bw[f]).sum())
            .collect()
    }

    /// Frequency of maximum power at every time column.
    pub fn ridge(&self) -> Vec<f64> {
        (0..self.cols())
            .map(|t| {
                let f = (0..self.rows())
                    .max_by(|&a, &b| self.at(a, t).total_cmp(&self.at(b, t)))
                    .unwrap_or(0);
                self.freqs_hz[f]
            })
            .collect()
    }
}

/// Log-spaced frequencies from `f_min` upward, `voices` per octave.
pub fn log_frequencies(f_min: f64, f_max: f64, voices: usize) -> Vec<f64> {
    let octaves = (f_max / f_min).log2();
    let n = (octaves * voices as f64 + 1e-9).floor() as usize + 1;
    (0..n).map(|k| f_min * 2f64.powf(k as f64 / voices as f64)).collect()
}

/// Analytic Morlet scalogram computed by FFT convolution.
///
/// Gap samples are set to the series mean. `time_stride` keeps every n-th
/// column; use 1 for full resolution.
pub fn cwt_scalogram(
    s: &TimeSeries,
    f_min_hz: f64,
    f_max_hz: f64,
    voices_per_octave: usize,
    time_stride: usize,
) -> Result<Scalogram> {
    if s.len() < 2 {
        return Err(Error::Insufficient("scalogram needs at least two samples".into()));
    }
    let duration = s.len() as f64 / s.rate_hz();
    let nyquist = s.rate_hz() / 2.0;
    if !(f_min_hz.is_finite() && f_max_hz.is_finite()) || f_min_hz <= 0.0 || f_min_hz >= f_max_hz {
        return Err(Error::InvalidParameter(format!(
            "invalid frequency bounds [{f_min_hz}, {f_max_hz}]"
        )));
    }
    if f_min_hz * duration < 1.0 - 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "f_min {f_min_hz} Hz below 1/duration = {} Hz",
            1.0 / duration
        )));
    }
    if f_max_hz > nyquist * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "f_max {f_max_hz} Hz above Nyquist {nyquist} Hz"
        )));
    }
    if voices_per_octave == 0 || time_stride == 0 {
        return Err(Error::InvalidParameter("voices and stride must be positive".into()));
    }

    let n = s.len();
    let mean = s.mean().unwrap_or(0.0);
    let nfft = (2 * n).next_power_of_two();
    let mut spectrum: Vec<Complex<f64>> = (0..nfft)
        .map(|i| {
            let v = if i < n && !s.is_gap(i) { s.values()[i] - mean } else { 0.0 };
            Complex::new(v, 0.0)
        })
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(nfft).process(&mut spectrum);
    let inverse = planner.plan_fft_inverse(nfft);

    let freqs = log_frequencies(f_min_hz, f_max_hz, voices_per_octave);
    let cols: Vec<usize> = (0..n).step_by(time_stride).collect();
    let dw = 2.0 * PI * s.rate_hz() / nfft as f64;
    let norm = 1.0 / nfft as f64;

    let rows: Vec<Vec<f64>> = freqs
        .par_iter()
        .map(|&f| {
            let scale = MORLET_OMEGA0 / (2.0 * PI * f);
            let mut buf = vec![Complex::new(0.0, 0.0); nfft];
            for (j, b) in buf.iter_mut().enumerate().take(nfft / 2 + 1).skip(1) {
                let arg = scale * j as f64 * dw - MORLET_OMEGA0;
                let g = 2.0 * (-0.5 * arg * arg).exp();
                if g > 1e-300 {
                    *b = spectrum[j] * g;
                }
            }
            inverse.process(&mut buf);
            let density = PI.sqrt() * scale;
            cols.iter()
                .map(|&t| buf[t].norm_sqr() * norm * norm * density)
                .collect()
        })
        .collect();

    let coi_s = freqs
        .iter()
        .map(|f| std::f64::consts::SQRT_2 * MORLET_OMEGA0 / (2.0 * PI * f))
        .collect();
    Ok(Scalogram {
        times: cols.iter().map(|&i| s.time_at(i)).collect(),
        power: rows.into_iter().flatten().collect(),
        freqs_hz: freqs,
        coi_s,
        wavelet: WaveletDescriptor {
            family: "morlet",
            omega0: MORLET_OMEGA0,
            voices_per_octave,
        },
    })
}
