//! Butterworth low/high-pass filters in second-order sections.
//!
//! Filtering is applied independently to each gap-free run of a series, so
//! no output sample mixes data across a gap. With `zero_phase` set the
//! cascade runs forward then backward, squaring the magnitude response and
//! cancelling group delay.

use std::f64::consts::PI;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GapMap, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Lowpass,
    Highpass,
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lowpass" | "low" | "lp" => Ok(FilterKind::Lowpass),
            "highpass" | "high" | "hp" => Ok(FilterKind::Highpass),
            other => Err(Error::InvalidParameter(format!("unknown filter kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub cutoff_hz: f64,
    pub order: usize,
    pub zero_phase: bool,
}

impl FilterSpec {
    pub fn lowpass(cutoff_hz: f64) -> Self {
        Self {
            kind: FilterKind::Lowpass,
            cutoff_hz,
            order: 4,
            zero_phase: true,
        }
    }

    pub fn highpass(cutoff_hz: f64) -> Self {
        Self {
            kind: FilterKind::Highpass,
            cutoff_hz,
            order: 4,
            zero_phase: true,
        }
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    pub fn validate(&self, rate_hz: f64) -> Result<()> {
        if self.order == 0 {
            return Err(Error::InvalidParameter("filter order must be at least 1".into()));
        }
        if !(self.cutoff_hz > 0.0 && self.cutoff_hz < rate_hz / 2.0) {
            return Err(Error::InvalidParameter(format!(
                "cutoff {} Hz must lie in (0, {}) for rate {rate_hz} Hz",
                self.cutoff_hz,
                rate_hz / 2.0
            )));
        }
        Ok(())
    }

    /// Analog time constant `1 / (2π f_c)` in seconds.
    pub fn time_constant_s(&self) -> f64 {
        1.0 / (2.0 * PI * self.cutoff_hz)
    }

    /// Samples discarded at each run edge for statistics (five time constants).
    pub fn transient_samples(&self, rate_hz: f64) -> usize {
        (5.0 * self.time_constant_s() * rate_hz).ceil() as usize
    }

    /// Magnitude response at `freq_hz`, including the second pass when zero-phase.
    pub fn gain_at(&self, freq_hz: f64, rate_hz: f64) -> Result<f64> {
        self.validate(rate_hz)?;
        let g = Sos::design(self, rate_hz).magnitude(freq_hz / rate_hz);
        Ok(if self.zero_phase { g * g } else { g })
    }
}

#[derive(Debug, Clone, Copy)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// Transposed direct form II state for a constant input `u` held forever.
    fn steady_state(&self, u: f64) -> [f64; 2] {
        let y = self.dc_gain() * u;
        [y - self.b[0] * u, self.b[2] * u - self.a[1] * y]
    }
}

#[derive(Debug, Clone)]
struct Sos {
    sections: Vec<Biquad>,
}

impl Sos {
    fn design(spec: &FilterSpec, rate_hz: f64) -> Self {
        let n = spec.order;
        let k = (PI * spec.cutoff_hz / rate_hz).tan();
        let k2 = k * k;
        let mut sections = Vec::with_capacity(n.div_ceil(2));
        for i in 0..n / 2 {
            let zeta = (PI * (2 * i + 1) as f64 / (2 * n) as f64).sin();
            let a0 = 1.0 + 2.0 * zeta * k + k2;
            let a = [(2.0 * k2 - 2.0) / a0, (1.0 - 2.0 * zeta * k + k2) / a0];
            let b = match spec.kind {
                FilterKind::Lowpass => [k2 / a0, 2.0 * k2 / a0, k2 / a0],
                FilterKind::Highpass => [1.0 / a0, -2.0 / a0, 1.0 / a0],
            };
            sections.push(Biquad { b, a });
        }
        if n % 2 == 1 {
            let a0 = 1.0 + k;
            let a = [(k - 1.0) / a0, 0.0];
            let b = match spec.kind {
                FilterKind::Lowpass => [k / a0, k / a0, 0.0],
                FilterKind::Highpass => [1.0 / a0, -1.0 / a0, 0.0],
            };
            sections.push(Biquad { b, a });
        }
        Self { sections }
    }

    /// |H| at normalized frequency `f / fs`.
    fn magnitude(&self, norm_freq: f64) -> f64 {
        let w = 2.0 * PI * norm_freq;
        let (c1, s1, c2, s2) = (w.cos(), w.sin(), (2.0 * w).cos(), (2.0 * w).sin());
        self.sections
            .iter()
            .map(|q| {
                let nr = q.b[0] + q.b[1] * c1 + q.b[2] * c2;
                let ni = -(q.b[1] * s1 + q.b[2] * s2);
                let dr = 1.0 + q.a[0] * c1 + q.a[1] * c2;
                let di = -(q.a[0] * s1 + q.a[1] * s2);
                ((nr * nr + ni * ni) / (dr * dr + di * di)).sqrt()
            })
            .product()
    }

    /// In-place causal pass, starting from the steady state for `x[0]`.
    fn run(&self, x: &mut [f64]) {
        let Some(&first) = x.first() else { return };
        let mut u0 = first;
        for q in &self.sections {
            let [mut z1, mut z2] = q.steady_state(u0);
            u0 *= q.dc_gain();
            for v in x.iter_mut() {
                let xin = *v;
                let y = q.b[0] * xin + z1;
                z1 = q.b[1] * xin - q.a[0] * y + z2;
                z2 = q.b[2] * xin - q.a[1] * y;
                *v = y;
            }
        }
    }
}

/// Filters one contiguous run.
fn filter_run(sos: &Sos, spec: &FilterSpec, rate_hz: f64, run: &[f64]) -> Vec<f64> {
    if !spec.zero_phase {
        let mut out = run.to_vec();
        sos.run(&mut out);
        return out;
    }
    let n = run.len();
    if n < 2 {
        return run.to_vec();
    }
    // Odd reflection about each end suppresses the start-up step.
    let pad = spec
        .transient_samples(rate_hz)
        .max(3 * (spec.order + 1))
        .min(n - 1);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    let (x0, xn) = (run[0], run[n - 1]);
    ext.extend((1..=pad).rev().map(|i| 2.0 * x0 - run[i]));
    ext.extend_from_slice(run);
    ext.extend((1..=pad).map(|i| 2.0 * xn - run[n - 1 - i]));
    // Average of forward-backward and backward-forward passes: exactly
    // equivariant under time reversal, edge start-up included.
    let mut fb = ext.clone();
    sos.run(&mut fb);
    fb.reverse();
    sos.run(&mut fb);
    fb.reverse();
    let mut bf = ext;
    bf.reverse();
    sos.run(&mut bf);
    bf.reverse();
    sos.run(&mut bf);
    fb[pad..pad + n]
        .iter()
        .zip(&bf[pad..pad + n])
        .map(|(a, b)| 0.5 * (a + b))
        .collect()
}

/// Applies `spec` to every gap-free run of `s`. Gap samples pass through unchanged.
pub fn apply_filter(s: &TimeSeries, spec: &FilterSpec) -> Result<TimeSeries> {
    spec.validate(s.rate_hz())?;
    let sos = Sos::design(spec, s.rate_hz());
    let mut values = s.values().to_vec();
    for run in s.gaps().valid_runs(s.len()) {
        let out = filter_run(&sos, spec, s.rate_hz(), &s.values()[run.clone()]);
        values[run].copy_from_slice(&out);
    }
    s.with_values(values)
}

/// Index ranges within `transient_samples` of a run edge (series ends and gap boundaries).
pub fn transient_ranges(s: &TimeSeries, spec: &FilterSpec) -> Vec<Range<usize>> {
    let t = spec.transient_samples(s.rate_hz());
    let mut out = Vec::new();
    for run in s.gaps().valid_runs(s.len()) {
        if run.len() <= 2 * t {
            out.push(run);
        } else {
            out.push(run.start..run.start + t);
            out.push(run.end - t..run.end);
        }
    }
    out
}

/// Gap map extended with the filter transient zones.
pub fn transient_gaps(s: &TimeSeries, spec: &FilterSpec) -> GapMap {
    s.gaps().union(&GapMap::from_ranges(transient_ranges(s, spec)))
}
