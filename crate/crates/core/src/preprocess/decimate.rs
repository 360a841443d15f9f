//! Anti-aliased sample-rate reduction.
//!
//! Integer ratios run through a chain of polyphase FIR stages, each a
//! Kaiser-windowed sinc with unit DC gain, passband to 0.8 of the new Nyquist
//! and stopband from the new Nyquist. Filters are centred, so output sample
//! `j` sits at the same instant as input sample `j·M`. An output is a gap when
//! its filter window touches a gap or reaches past either end of the data.
//!
//! [`StreamingDecimator`] accepts data in arbitrary chunks and produces output
//! bit-identical to decimating the fully materialized series.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{GapMap, TimeSeries};

/// Stopband attenuation targeted by each stage, in dB.
pub const STAGE_ATTENUATION_DB: f64 = 80.0;

/// Largest single-stage factor.
const MAX_STAGE_FACTOR: usize = 12;

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Kaiser-windowed sinc low-pass, odd length, taps summing to one.
///
/// `cutoff` and `transition` are fractions of the input sample rate.
pub fn kaiser_lowpass(cutoff: f64, transition: f64, atten_db: f64) -> Vec<f64> {
    let beta = if atten_db > 50.0 {
        0.1102 * (atten_db - 8.7)
    } else if atten_db >= 21.0 {
        0.5842 * (atten_db - 21.0).powf(0.4) + 0.07886 * (atten_db - 21.0)
    } else {
        0.0
    };
    let dw = 2.0 * PI * transition;
    let mut len = ((atten_db - 7.95) / (2.285 * dw)).ceil() as usize + 1;
    if len % 2 == 0 {
        len += 1;
    }
    let half = (len / 2) as f64;
    let norm = bessel_i0(beta);
    let mut taps: Vec<f64> = (0..len)
        .map(|i| {
            let n = i as f64 - half;
            let sinc = if n == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * PI * cutoff * n).sin() / (PI * n)
            };
            let r = n / half;
            let w = bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / norm;
            sinc * w
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Canonical stage factors for an integer ratio: prime factors in descending
/// order, greedily merged while the product stays at most 12.
pub fn stage_factors(ratio: usize) -> Vec<usize> {
    let mut primes = Vec::new();
    let mut r = ratio;
    let mut p = 2;
    while p * p <= r {
        while r % p == 0 {
            primes.push(p);
            r /= p;
        }
        p += 1;
    }
    if r > 1 {
        primes.push(r);
    }
    primes.sort_unstable_by(|a, b| b.cmp(a));
    let mut stages: Vec<usize> = Vec::new();
    for p in primes {
        match stages.last_mut() {
            Some(last) if *last * p <= MAX_STAGE_FACTOR => *last *= p,
            _ => stages.push(p),
        }
    }
    stages
}

/// Integer ratio `from / to`, if it is one.
pub fn integer_ratio(from_hz: f64, to_hz: f64) -> Option<usize> {
    let r = from_hz / to_hz;
    let n = r.round();
    (n >= 1.0 && (r - n).abs() < 1e-9 * n).then_some(n as usize)
}

/// Stage design for decimation by `factor`.
fn stage_taps(factor: usize) -> Vec<f64> {
    let m = factor as f64;
    // fractions of the input rate: new Nyquist is 0.5/m
    kaiser_lowpass(0.45 / m, 0.1 / m, STAGE_ATTENUATION_DB)
}

#[derive(Debug, Clone)]
struct FirStage {
    taps: Vec<f64>,
    half: u64,
    factor: u64,
    ring: Vec<f64>,
    pos: usize,
    n_in: u64,
    /// Index of the most recent invalid input; -1 stands for "before the data".
    last_bad: i64,
    next_out: u64,
}

enum StageOutput {
    None,
    Sample(f64, bool),
}

impl FirStage {
    fn new(factor: usize) -> Self {
        let taps = stage_taps(factor);
        let len = taps.len();
        Self {
            half: (len / 2) as u64,
            factor: factor as u64,
            ring: vec![0.0; 2 * len],
            taps,
            pos: 0,
            n_in: 0,
            last_bad: -1,
            next_out: 0,
        }
    }

    fn len(&self) -> usize {
        self.taps.len()
    }

    fn due_index(&self) -> u64 {
        self.next_out * self.factor + self.half
    }

    fn output_valid(&self, j: u64) -> bool {
        let lo = (j * self.factor) as i64 - self.half as i64;
        self.last_bad < lo
    }

    fn push(&mut self, x: f64, valid: bool) -> StageOutput {
        let len = self.len();
        let v = if valid { x } else { 0.0 };
        self.ring[self.pos] = v;
        self.ring[self.pos + len] = v;
        self.pos = (self.pos + 1) % len;
        let p = self.n_in;
        self.n_in += 1;
        if !valid {
            self.last_bad = p as i64;
        }
        if p != self.due_index() {
            return StageOutput::None;
        }
        let j = self.next_out;
        self.next_out += 1;
        if !self.output_valid(j) {
            return StageOutput::Sample(0.0, false);
        }
        let window = &self.ring[self.pos..self.pos + len];
        let y = window.iter().zip(&self.taps).map(|(a, b)| a * b).sum();
        StageOutput::Sample(y, true)
    }

    /// Pushes `n` gap samples; returns the number of (gap) outputs produced.
    fn push_gap(&mut self, n: u64) -> Either {
        if n < self.len() as u64 {
            let mut outs = Vec::new();
            for _ in 0..n {
                if let StageOutput::Sample(y, ok) = self.push(0.0, false) {
                    outs.push((y, ok));
                }
            }
            return Either::Samples(outs);
        }
        let end = self.n_in + n;
        let due = self.due_index();
        let count = if due < end { (end - 1 - due) / self.factor + 1 } else { 0 };
        self.next_out += count;
        self.ring.iter_mut().for_each(|v| *v = 0.0);
        self.n_in = end;
        self.last_bad = end as i64 - 1;
        Either::Gaps(count)
    }

    /// Outputs whose centre lies within the data but whose window runs past the end.
    fn finish(&mut self) -> u64 {
        let total = self.n_in.div_ceil(self.factor);
        let pending = total.saturating_sub(self.next_out);
        self.next_out = total;
        pending
    }
}

enum Either {
    Samples(Vec<(f64, bool)>),
    Gaps(u64),
}

/// Chunk-fed integer-ratio decimator.
#[derive(Debug, Clone)]
pub struct StreamingDecimator {
    stages: Vec<FirStage>,
    factor: usize,
    out: Vec<f64>,
    gaps: GapMap,
}

impl StreamingDecimator {
    /// Decimator for an integer ratio; `ratio == 1` passes samples through.
    pub fn new(ratio: usize) -> Result<Self> {
        if ratio == 0 {
            return Err(Error::InvalidParameter("decimation ratio must be positive".into()));
        }
        Ok(Self {
            stages: stage_factors(ratio).into_iter().map(FirStage::new).collect(),
            factor: ratio,
            out: Vec::new(),
            gaps: GapMap::new(),
        })
    }

    /// Decimator from `from_hz` to `to_hz`, which must form an integer ratio.
    pub fn for_rates(from_hz: f64, to_hz: f64) -> Result<Self> {
        if !(to_hz > 0.0 && to_hz <= from_hz) {
            return Err(Error::InvalidParameter(format!(
                "target rate {to_hz} Hz must be positive and not exceed {from_hz} Hz"
            )));
        }
        let ratio = integer_ratio(from_hz, to_hz).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "streaming decimation needs an integer ratio, got {from_hz}/{to_hz}"
            ))
        })?;
        Self::new(ratio)
    }

    pub fn ratio(&self) -> usize {
        self.factor
    }

    pub fn stage_factors(&self) -> Vec<usize> {
        self.stages.iter().map(|s| s.factor as usize).collect()
    }

    /// Number of output samples produced so far.
    pub fn produced(&self) -> usize {
        self.out.len()
    }

    fn emit(&mut self, y: f64, ok: bool) {
        if !ok {
            let i = self.out.len();
            self.gaps.insert(i..i + 1);
        }
        self.out.push(y);
    }

    fn emit_gaps(&mut self, n: u64) {
        let i = self.out.len();
        let n = n as usize;
        self.gaps.insert(i..i + n);
        self.out.resize(i + n, 0.0);
    }

    fn feed(&mut self, from: usize, y: f64, ok: bool) {
        let (mut idx, mut y, mut ok) = (from, y, ok);
        while idx < self.stages.len() {
            match self.stages[idx].push(y, ok) {
                StageOutput::Sample(y2, ok2) => {
                    idx += 1;
                    y = y2;
                    ok = ok2;
                }
                StageOutput::None => return,
            }
        }
        self.emit(y, ok);
    }

    fn feed_gap(&mut self, from: usize, n: u64) {
        if n == 0 {
            return;
        }
        if from == self.stages.len() {
            self.emit_gaps(n);
            return;
        }
        match self.stages[from].push_gap(n) {
            Either::Gaps(k) => self.feed_gap(from + 1, k),
            Either::Samples(outs) => {
                for (y, ok) in outs {
                    self.feed(from + 1, y, ok);
                }
            }
        }
    }

    pub fn push_sample(&mut self, x: f64, valid: bool) {
        self.feed(0, x, valid && x.is_finite());
    }

    /// Pushes a chunk of samples; non-finite values count as gaps.
    pub fn push(&mut self, chunk: &[f64]) {
        for &x in chunk {
            self.feed(0, x, x.is_finite());
        }
    }

    /// Pushes `n` missing samples.
    pub fn push_gap(&mut self, n: usize) {
        self.feed_gap(0, n as u64);
    }

    /// Pushes a series segment honoring its gap map.
    pub fn push_series(&mut self, s: &TimeSeries) {
        let mut cursor = 0;
        for run in s.gaps().valid_runs(s.len()) {
            self.push_gap(run.start - cursor);
            self.push(&s.values()[run.clone()]);
            cursor = run.end;
        }
        self.push_gap(s.len() - cursor);
    }

    /// Flushes every stage and returns `(values, gaps)`.
    pub fn finish(mut self) -> (Vec<f64>, GapMap) {
        for i in 0..self.stages.len() {
            let pending = self.stages[i].finish();
            self.feed_gap(i + 1, pending);
        }
        (self.out, self.gaps)
    }
}

/// Reduces `s` to `target_rate_hz`.
///
/// Integer ratios use the staged FIR chain. Other ratios decimate by the
/// largest integer factor that keeps the rate at or above twice the target,
/// low-pass at 0.45 of the target rate, then resample linearly.
pub fn decimate(s: &TimeSeries, target_rate_hz: f64) -> Result<TimeSeries> {
    if !(target_rate_hz > 0.0 && target_rate_hz < s.rate_hz()) {
        return Err(Error::InvalidParameter(format!(
            "target rate {target_rate_hz} Hz must be positive and below {} Hz",
            s.rate_hz()
        )));
    }
    if let Some(ratio) = integer_ratio(s.rate_hz(), target_rate_hz) {
        let mut dec = StreamingDecimator::new(ratio)?;
        dec.push_series(s);
        let (values, gaps) = dec.finish();
        return TimeSeries::with_gaps(s.start_epoch(), target_rate_hz, values, gaps, s.label());
    }
    resample_fractional(s, target_rate_hz)
}

fn resample_fractional(s: &TimeSeries, target: f64) -> Result<TimeSeries> {
    let pre = ((s.rate_hz() / (2.0 * target)).floor() as usize).max(1);
    let mid = if pre > 1 {
        decimate(s, s.rate_hz() / pre as f64)?
    } else {
        s.clone()
    };
    let fs = mid.rate_hz();
    let taps = kaiser_lowpass(0.45 * target / fs, 0.1 * target / fs, STAGE_ATTENUATION_DB);
    let half = taps.len() / 2;
    let n = mid.len();
    let valid = mid.gaps().valid_mask(n);
    let vals = mid.values();
    let filtered_at = |i: usize| -> Option<f64> {
        if i < half || i + half >= n {
            return None;
        }
        let w = i - half..i + half + 1;
        if mid.gaps().intersects(w.clone()) {
            return None;
        }
        Some(vals[w].iter().zip(&taps).map(|(a, b)| a * b).sum())
    };
    let n_out = ((n as f64) * target / fs).floor() as usize;
    let mut out = Vec::with_capacity(n_out);
    let mut ok = Vec::with_capacity(n_out);
    for j in 0..n_out {
        let pos = j as f64 * fs / target;
        let i0 = pos.floor() as usize;
        let frac = pos - i0 as f64;
        let a = if valid.get(i0).copied().unwrap_or(false) { filtered_at(i0) } else { None };
        let b = if frac == 0.0 {
            a
        } else if valid.get(i0 + 1).copied().unwrap_or(false) {
            filtered_at(i0 + 1)
        } else {
            None
        };
        match (a, b) {
            (Some(a), Some(b)) => {
                out.push(a + frac * (b - a));
                ok.push(true);
            }
            _ => {
                out.push(0.0);
                ok.push(false);
            }
        }
    }
    TimeSeries::with_gaps(
        mid.start_epoch(),
        target,
        out,
        GapMap::from_valid_mask(&ok),
        s.label(),
    )
}

/// Gap-aware mean over consecutive bins of `bin_seconds`, anchored at the
/// series start. Bins without valid samples are gaps.
pub fn block_mean(s: &TimeSeries, bin_seconds: f64) -> Result<TimeSeries> {
    let per_bin = (bin_seconds * s.rate_hz()).round() as usize;
    if per_bin < 1 {
        return Err(Error::InvalidParameter(format!(
            "bin of {bin_seconds} s holds no samples at {} Hz",
            s.rate_hz()
        )));
    }
    let nbins = s.len().div_ceil(per_bin);
    let mut sums = vec![0.0; nbins];
    let mut counts = vec![0usize; nbins];
    for (i, v) in s.valid_iter() {
        sums[i / per_bin] += v;
        counts[i / per_bin] += 1;
    }
    let ok: Vec<bool> = counts.iter().map(|&c| c > 0).collect();
    let values = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    TimeSeries::with_gaps(
        s.start_epoch(),
        s.rate_hz() / per_bin as f64,
        values,
        GapMap::from_valid_mask(&ok),
        s.label(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Frequency response of a tap set by direct DTFT summation.
    fn dtft_mag(taps: &[f64], norm_freq: f64) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (k, t) in taps.iter().enumerate() {
            let ph = 2.0 * PI * norm_freq * k as f64;
            re += t * ph.cos();
            im -= t * ph.sin();
        }
        (re * re + im * im).sqrt()
    }

    fn tone(rate: f64, n: usize, f: f64) -> Vec<f64> {
        (0..n)
            .map(|i| (2.0 * PI * f * i as f64 / rate).sin())
            .collect()
    }

    #[test]
    fn staged_factors_are_canonical() {
        assert_eq!(stage_factors(3960), vec![11, 5, 9, 8]);
        assert_eq!(stage_factors(11), vec![11]);
        assert_eq!(stage_factors(360), vec![5, 9, 8]);
        assert_eq!(stage_factors(200), vec![5, 10, 4]);
        assert_eq!(stage_factors(1), Vec::<usize>::new());
        assert_eq!(stage_factors(13), vec![13]);
    }

    #[test]
    fn stage_taps_meet_stopband() {
        for m in [2, 5, 8, 9, 11, 12] {
            let taps = stage_taps(m);
            let sum: f64 = taps.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            // sweep the stopband [0.5/m, 0.5] and passband [0, 0.4/m]
            let mut worst_stop: f64 = 0.0;
            let mut worst_pass: f64 = 0.0;
            for k in 0..=4000 {
                let f = 0.5 * k as f64 / 4000.0;
                let g = dtft_mag(&taps, f);
                if f >= 0.5 / m as f64 {
                    worst_stop = worst_stop.max(g);
                } else if f <= 0.4 / m as f64 {
                    worst_pass = worst_pass.max((g - 1.0).abs());
                }
            }
            assert!(20.0 * worst_stop.log10() < -60.0, "m={m}: {worst_stop}");
            assert!(worst_pass < 1e-3, "m={m}: ripple {worst_pass}");
        }
    }

    #[test]
    fn constant_is_preserved() {
        let s = TimeSeries::new(0.0, 3960.0, vec![50.0; 3960 * 200], "c").unwrap();
        let d = decimate(&s, 1.0).unwrap();
        assert_eq!(d.len(), 200);
        assert!(d.valid_count() > 100);
        for (_, v) in d.valid_iter() {
            assert!((v - 50.0).abs() <= 50.0 * 1e-6);
        }
        // start and end windows reach past the data
        assert!(d.is_gap(0) && d.is_gap(199));
    }

    #[test]
    fn output_length_and_timing() {
        let s = TimeSeries::new(100.0, 10.0, vec![1.0; 1003], "c").unwrap();
        let d = decimate(&s, 1.0).unwrap();
        assert_eq!(d.len(), 101);
        assert_eq!(d.start_epoch(), 100.0);
        assert_eq!(d.rate_hz(), 1.0);
    }

    #[test]
    fn slow_tone_amplitude_preserved() {
        let rate = 3960.0;
        let n = 3960 * 1200;
        let f = 0.01;
        let s = TimeSeries::new(0.0, rate, tone(rate, n, f), "t").unwrap();
        let d = decimate(&s, 1.0).unwrap();
        for (i, v) in d.valid_iter() {
            let truth = (2.0 * PI * f * i as f64).sin();
            assert!((v - truth).abs() < 0.01, "i={i}: {v} vs {truth}");
        }
    }

    #[test]
    fn fast_tone_is_rejected() {
        let rate = 3960.0;
        let n = 3960 * 300;
        let s = TimeSeries::new(0.0, rate, tone(rate, n, 100.0), "t").unwrap();
        let d = decimate(&s, 1.0).unwrap();
        let peak = d.valid_iter().fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        assert!(peak <= 1e-3, "residual {peak}");
    }

    #[test]
    fn staged_decimation_is_consistent() {
        let rate = 3960.0;
        let n = 3960 * 400;
        let s = TimeSeries::new(0.0, rate, tone(rate, n, 0.02), "t").unwrap();
        let direct = decimate(&s, 1.0).unwrap();
        let via = decimate(&decimate(&s, 360.0).unwrap(), 1.0).unwrap();
        assert_eq!(direct.len(), via.len());
        for i in 0..direct.len() {
            if !direct.is_gap(i) && !via.is_gap(i) {
                let (a, b) = (direct.values()[i], via.values()[i]);
                assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn streaming_matches_batch_for_any_chunking() {
        let rate = 200.0;
        let mut v = tone(rate, 40_000, 0.7);
        v[12_345] = f64::NAN;
        let gaps = GapMap::from_ranges([20_000..23_000, 12_345..12_346]);
        let s = TimeSeries::with_gaps(0.0, rate, v.clone(), gaps, "t").unwrap();
        let batch = decimate(&s, 1.0).unwrap();

        let mut dec = StreamingDecimator::new(200).unwrap();
        let mut i = 0;
        let mut step = 1;
        while i < v.len() {
            let e = (i + step).min(v.len());
            if i >= 20_000 && e <= 23_000 {
                dec.push_gap(e - i);
            } else {
                for (k, &x) in v[i..e].iter().enumerate() {
                    let idx = i + k;
                    dec.push_sample(x, !(20_000..23_000).contains(&idx));
                }
            }
            i = e;
            step = step * 3 % 1777 + 1;
        }
        let (vals, g) = dec.finish();
        assert_eq!(g, *batch.gaps());
        for (a, b) in vals.iter().zip(batch.values()) {
            if a.is_finite() {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn gaps_propagate_to_overlapping_outputs() {
        let s = TimeSeries::with_gaps(0.0, 10.0, vec![1.0; 2000], GapMap::from_ranges([1000..1001]), "g").unwrap();
        let d = decimate(&s, 1.0).unwrap();
        assert!(d.is_gap(100));
        assert!(!d.is_gap(50) && !d.is_gap(150));
    }

    #[test]
    fn fractional_ratio() {
        let s = TimeSeries::new(0.0, 100.0, vec![3.0; 100 * 600], "c").unwrap();
        let d = decimate(&s, 7.0).unwrap();
        assert_eq!(d.rate_hz(), 7.0);
        assert!((d.len() as f64 - 4200.0).abs() <= 1.0);
        assert!(d.valid_count() > 4000);
        for (_, v) in d.valid_iter() {
            assert!((v - 3.0).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_upsampling() {
        let s = TimeSeries::new(0.0, 10.0, vec![0.0; 10], "c").unwrap();
        assert!(decimate(&s, 10.0).is_err());
        assert!(decimate(&s, 20.0).is_err());
    }

    #[test]
    fn block_mean_by_hour() {
        let mut v: Vec<f64> = (0..7200).map(|i| if i < 3600 { 1.0 } else { 3.0 }).collect();
        v[10] = 1000.0;
        let s = TimeSeries::with_gaps(0.0, 1.0, v, GapMap::from_ranges([10..11]), "h").unwrap();
        let h = block_mean(&s, 3600.0).unwrap();
        assert_eq!(h.values(), &[1.0, 3.0]);
        assert_eq!(h.rate_hz(), 1.0 / 3600.0);
    }
}
