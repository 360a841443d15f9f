use std::f64::consts::PI;
use std::str::FromStr;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TimeSeries;

/// Segment taper applied before each periodogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Taper {
    #[default]
    Hann,
    Hamming,
    Rectangular,
}

impl Taper {
    /// Periodic (DFT-even) window of length `n`.
    pub fn window(self, n: usize) -> Vec<f64> {
        let nf = n as f64;
        (0..n)
            .map(|i| {
                let c = (2.0 * PI * i as f64 / nf).cos();
                match self {
                    Taper::Hann => 0.5 - 0.5 * c,
                    Taper::Hamming => 0.54 - 0.46 * c,
                    Taper::Rectangular => 1.0,
                }
            })
            .collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            Taper::Hann => "hann",
            Taper::Hamming => "hamming",
            Taper::Rectangular => "rectangular",
        }
    }
}

impl FromStr for Taper {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hann" | "hanning" => Ok(Taper::Hann),
            "hamming" => Ok(Taper::Hamming),
            "rectangular" | "boxcar" | "none" => Ok(Taper::Rectangular),
            other => Err(Error::InvalidParameter(format!("unknown taper '{other}'"))),
        }
    }
}

/// Estimator settings recorded alongside a [`Spectrum`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchMeta {
    pub rate_hz: f64,
    pub segment_len: usize,
    pub overlap_frac: f64,
    pub taper: Taper,
    /// Segments averaged.
    pub averages: usize,
    /// Segments skipped because they intersect a gap.
    pub skipped: usize,
}

/// One-sided power spectral density in µT²/Hz, DC bin excluded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub freqs_hz: Vec<f64>,
    pub psd: Vec<f64>,
    pub meta: WelchMeta,
}

impl Spectrum {
    /// Bin spacing in Hz.
    pub fn resolution_hz(&self) -> f64 {
        self.meta.rate_hz / self.meta.segment_len as f64
    }

    /// Rectangle-rule integral of the PSD, i.e. the variance it accounts for.
    pub fn total_power(&self) -> f64 {
        self.psd.iter().sum::<f64>() * self.resolution_hz()
    }

    /// Integral of the PSD over bins whose centre lies within `[lo, hi]` Hz.
    pub fn band_power(&self, lo: f64, hi: f64) -> f64 {
        self.freqs_hz
            .iter()
            .zip(&self.psd)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(_, p)| p)
            .sum::<f64>()
            * self.resolution_hz()
    }

    /// Index of the bin nearest `freq_hz`.
    pub fn bin_of(&self, freq_hz: f64) -> usize {
        let k = (freq_hz / self.resolution_hz()).round() as usize;
        k.clamp(1, self.freqs_hz.len()) - 1
    }
}

/// Welch estimate with mean removal per segment.
pub fn psd_welch(s: &TimeSeries, segment_len: usize, overlap_frac: f64, taper: Taper) -> Result<Spectrum> {
    if segment_len >= 2 && segment_len > s.len() {
        return Err(Error::Insufficient(format!(
            "segment of {segment_len} samples exceeds series of {}",
            s.len()
        )));
    }
    let mut acc = WelchAccumulator::new(s.rate_hz(), segment_len, overlap_frac, taper)?;
    let values = s.values();
    let mut pos = 0;
    for r in s.gaps().ranges() {
        acc.push(&values[pos..r.start]);
        acc.push_gap(r.end - r.start);
        pos = r.end;
    }
    acc.push(&values[pos..]);
    acc.finish()
}

/// Incremental Welch estimator fed sample chunks in time order; memory is
/// bounded by one segment plus one parallel batch. Identical input gives the
/// same result as [`psd_welch`] regardless of how it is chunked.
pub struct WelchAccumulator {
    rate_hz: f64,
    segment_len: usize,
    overlap_frac: f64,
    taper: Taper,
    step: usize,
    window: Vec<f64>,
    wss: f64,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    tail: std::collections::VecDeque<f64>,
    pushed: usize,
    run: usize,
    pending: Vec<Vec<f64>>,
    batch: usize,
    sum: Vec<f64>,
    averages: usize,
    skipped: usize,
}

impl WelchAccumulator {
    pub fn new(rate_hz: f64, segment_len: usize, overlap_frac: f64, taper: Taper) -> Result<Self> {
        if segment_len < 2 {
            return Err(Error::InvalidParameter("segment length must be at least 2".into()));
        }
        if !(0.0..1.0).contains(&overlap_frac) {
            return Err(Error::InvalidParameter(format!(
                "overlap fraction {overlap_frac} must lie in [0, 1)"
            )));
        }
        if !(rate_hz.is_finite() && rate_hz > 0.0) {
            return Err(Error::InvalidParameter(format!("rate {rate_hz} Hz must be positive")));
        }
        let step = (segment_len - (overlap_frac * segment_len as f64).round() as usize).max(1);
        let window = taper.window(segment_len);
        let wss = window.iter().map(|w| w * w).sum();
        Ok(Self {
            rate_hz,
            segment_len,
            overlap_frac,
            taper,
            step,
            window,
            wss,
            fft: FftPlanner::<f64>::new().plan_fft_forward(segment_len),
            tail: std::collections::VecDeque::with_capacity(segment_len),
            pushed: 0,
            run: 0,
            pending: Vec::new(),
            batch: rayon::current_num_threads().max(1) * 2,
            sum: vec![0.0; segment_len / 2],
            averages: 0,
            skipped: 0,
        })
    }

    /// Appends samples; non-finite values are treated as gap samples.
    pub fn push(&mut self, chunk: &[f64]) {
        let l = self.segment_len;
        for &x in chunk {
            if self.tail.len() == l {
                self.tail.pop_front();
            }
            self.tail.push_back(x);
            self.run = if x.is_finite() { self.run + 1 } else { 0 };
            self.pushed += 1;
            if self.pushed >= l && (self.pushed - l) % self.step == 0 {
                if self.run >= l {
                    self.pending.push(self.tail.iter().copied().collect());
                    if self.pending.len() >= self.batch {
                        self.flush();
                    }
                } else {
                    self.skipped += 1;
                }
            }
        }
    }

    /// Appends `n` gap samples without materializing them.
    pub fn push_gap(&mut self, n: usize) {
        if n == 0 {
            return;
        }
        let (l, step, p) = (self.segment_len, self.step, self.pushed);
        let end = p + n;
        if end >= l {
            let k_max = (end - l) / step;
            let k_min = if p + 1 <= l { 0 } else { (p + 1 - l).div_ceil(step) };
            if k_max >= k_min {
                self.skipped += k_max - k_min + 1;
            }
        }
        self.pushed = end;
        self.run = 0;
        self.tail.clear();
    }

    /// Samples consumed so far, gaps included.
    pub fn samples(&self) -> usize {
        self.pushed
    }

    fn flush(&mut self) {
        let half = self.segment_len / 2;
        let (window, fft) = (&self.window, &self.fft);
        let parts: Vec<Vec<f64>> = self
            .pending
            .par_iter()
            .map(|seg| {
                let mean = seg.iter().sum::<f64>() / seg.len() as f64;
                let mut buf: Vec<Complex<f64>> = seg
                    .iter()
                    .zip(window)
                    .map(|(x, w)| Complex::new((x - mean) * w, 0.0))
                    .collect();
                fft.process(&mut buf);
                buf[1..=half].iter().map(|c| c.norm_sqr()).collect()
            })
            .collect();
        for p in parts {
            self.sum.iter_mut().zip(&p).for_each(|(a, v)| *a += v);
        }
        self.averages += self.pending.len();
        self.pending.clear();
    }

    pub fn finish(mut self) -> Result<Spectrum> {
        self.flush();
        if self.averages == 0 {
            return Err(Error::Insufficient(if self.skipped == 0 {
                format!("fewer than {} samples supplied", self.segment_len)
            } else {
                "every segment intersects a gap".into()
            }));
        }
        let (fs, n, half) = (self.rate_hz, self.segment_len, self.segment_len / 2);
        let scale = 1.0 / (fs * self.wss * self.averages as f64);
        let psd = self
            .sum
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let k = i + 1;
                let one_sided = if n % 2 == 0 && k == half { 1.0 } else { 2.0 };
                p * scale * one_sided
            })
            .collect();
        let freqs_hz = (1..=half).map(|k| k as f64 * fs / n as f64).collect();
        Ok(Spectrum {
            freqs_hz,
            psd,
            meta: WelchMeta {
                rate_hz: fs,
                segment_len: n,
                overlap_frac: self.overlap_frac,
                taper: self.taper,
                averages: self.averages,
                skipped: self.skipped,
            },
        })
    }
}

/// Default segment length: 2²⁰ for full-rate data, 2¹⁶ at 1 Hz and below,
/// clamped to the largest power of two not exceeding the series length.
pub fn default_segment_len(rate_hz: f64, len: usize) -> usize {
    let preferred = if rate_hz > 1.0 { 1 << 20 } else { 1 << 16 };
    let cap = if len >= 2 { 1usize << (usize::BITS - 1 - len.leading_zeros()) } else { 2 };
    preferred.min(cap)
}
