//! Two-station normalized cross-correlation and its permutation null.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{GapMap, TimeSeries};
use crate::preprocess::{apply_filter, transient_gaps, FilterSpec};
use crate::stats::quantile_sorted;

/// Minimum ratio of gap-free overlap to the maximum lag.
pub const MIN_OVERLAP_LAGS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub lags_s: Vec<f64>,
    pub coeffs: Vec<f64>,
    pub best_lag_s: f64,
    pub best_coeff: f64,
    pub filters: [Option<FilterSpec>; 2],
    /// UTC span of the gap-free overlap that was correlated.
    pub overlap_start: f64,
    pub overlap_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullThresholds {
    pub p95: f64,
    pub p99: f64,
    pub n_permutations: usize,
    pub seed: u64,
}

/// Aligned, filtered, gap-free overlap of two series.
struct Pair {
    x: Vec<f64>,
    y: Vec<f64>,
    max_lag: usize,
    rate: f64,
    start: f64,
}

fn longest(runs: &[Range<usize>]) -> Option<Range<usize>> {
    runs.iter().max_by_key(|r| (r.len(), std::cmp::Reverse(r.start))).cloned()
}

fn prepare(
    a: &TimeSeries,
    b: &TimeSeries,
    max_lag_s: f64,
    fa: Option<&FilterSpec>,
    fb: Option<&FilterSpec>,
) -> Result<Pair> {
    let rate = a.rate_hz();
    if (b.rate_hz() - rate).abs() > 1e-9 * rate {
        return Err(Error::Structure(format!(
            "rate mismatch: {} Hz vs {} Hz",
            rate,
            b.rate_hz()
        )));
    }
    if !(max_lag_s >= 0.0 && max_lag_s.is_finite()) {
        return Err(Error::InvalidParameter(format!("max lag must be non-negative, got {max_lag_s}")));
    }
    let offset_f = (b.start_epoch() - a.start_epoch()) * rate;
    let offset = offset_f.round();
    if (offset_f - offset).abs() > 1e-3 {
        return Err(Error::Structure("series are not on a common sample grid".into()));
    }
    let filt = |s: &TimeSeries, f: Option<&FilterSpec>| -> Result<(TimeSeries, GapMap)> {
        match f {
            Some(f) => Ok((apply_filter(s, f)?, transient_gaps(s, f).union(s.gaps()))),
            None => Ok((s.clone(), s.gaps().clone())),
        }
    };
    let (sa, ga) = filt(a, fa)?;
    let (sb, gb) = filt(b, fb)?;
    // indices in a's frame
    let off = offset as i64;
    let lo = 0i64.max(off);
    let hi = (a.len() as i64).min(off + b.len() as i64);
    if hi <= lo {
        return Err(Error::Insufficient("series do not overlap".into()));
    }
    let n = (hi - lo) as usize;
    let (a0, b0) = (lo as usize, (lo - off) as usize);
    let valid: Vec<bool> = (0..n).map(|i| !ga.contains(a0 + i) && !gb.contains(b0 + i)).collect();
    let run = longest(&GapMap::from_valid_mask(&valid).valid_runs(n))
        .ok_or_else(|| Error::Insufficient("overlap contains no valid samples".into()))?;
    let max_lag = (max_lag_s * rate).round() as usize;
    if run.len() < (MIN_OVERLAP_LAGS * max_lag).max(2) {
        return Err(Error::Insufficient(format!(
            "gap-free overlap of {} samples is under {MIN_OVERLAP_LAGS}x the {max_lag}-sample lag",
            run.len()
        )));
    }
    Ok(Pair {
        x: sa.values()[a0 + run.start..a0 + run.end].to_vec(),
        y: sb.values()[b0 + run.start..b0 + run.end].to_vec(),
        max_lag,
        rate,
        start: a.time_at(a0 + run.start),
    })
}

/// Pearson coefficient between `x[i]` and `y[i + lag]` over their overlap.
fn coeff_at(x: &[f64], y: &[f64], lag: i64) -> f64 {
    let n = x.len() as i64;
    let (xs, ys) = if lag >= 0 {
        (&x[..(n - lag) as usize], &y[lag as usize..])
    } else {
        (&x[(-lag) as usize..], &y[..(n + lag) as usize])
    };
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let (mut sab, mut sa, mut sb) = (0.0, 0.0, 0.0);
    for (p, q) in xs.iter().zip(ys) {
        let (u, v) = (p - mx, q - my);
        sab += u * v;
        sa += u * u;
        sb += v * v;
    }
    if sa == 0.0 || sb == 0.0 {
        return 0.0;
    }
    (sab / (sa * sb).sqrt()).clamp(-1.0, 1.0)
}

fn all_lags(x: &[f64], y: &[f64], max_lag: usize) -> Vec<f64> {
    let l = max_lag as i64;
    (-l..=l).into_par_iter().map(|k| coeff_at(x, y, k)).collect()
}

/// Lags from `−max_lag_s` to `+max_lag_s`; positive lag means `b` is delayed.
pub fn cross_correlate(
    a: &TimeSeries,
    b: &TimeSeries,
    max_lag_s: f64,
    filter_a: Option<&FilterSpec>,
    filter_b: Option<&FilterSpec>,
) -> Result<CorrelationResult> {
    let p = prepare(a, b, max_lag_s, filter_a, filter_b)?;
    let coeffs = all_lags(&p.x, &p.y, p.max_lag);
    let l = p.max_lag as i64;
    let lags_s: Vec<f64> = (-l..=l).map(|k| k as f64 / p.rate).collect();
    // ties resolve toward the smallest |lag|
    let best = (0..coeffs.len())
        .min_by(|&i, &j| {
            coeffs[j]
                .abs()
                .total_cmp(&coeffs[i].abs())
                .then((i as i64 - l).abs().cmp(&(j as i64 - l).abs()))
        })
        .expect("at least one lag");
    Ok(CorrelationResult {
        best_lag_s: lags_s[best],
        best_coeff: coeffs[best],
        lags_s,
        coeffs,
        filters: [filter_a.copied(), filter_b.copied()],
        overlap_start: p.start,
        overlap_samples: p.x.len(),
    })
}

/// Percentiles of max |coeff| under circular shifts of `b` against `a`.
pub fn significance_null(
    a: &TimeSeries,
    b: &TimeSeries,
    max_lag_s: f64,
    n_permutations: usize,
    seed: u64,
    filter_a: Option<&FilterSpec>,
    filter_b: Option<&FilterSpec>,
) -> Result<NullThresholds> {
    if n_permutations < 100 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100 permutations, got {n_permutations}"
        )));
    }
    let p = prepare(a, b, max_lag_s, filter_a, filter_b)?;
    let n = p.x.len();
    let guard = p.max_lag + 1;
    if n < 4 * guard {
        return Err(Error::Insufficient(format!("{n} samples too short for a shift null")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shifts: Vec<usize> = (0..n_permutations).map(|_| rng.random_range(guard..=n - guard)).collect();
    let mut maxima: Vec<f64> = shifts
        .par_iter()
        .map(|&s| {
            let mut y = Vec::with_capacity(n);
            y.extend_from_slice(&p.y[s..]);
            y.extend_from_slice(&p.y[..s]);
            let l = p.max_lag as i64;
            (-l..=l).map(|k| coeff_at(&p.x, &y, k).abs()).fold(0.0, f64::max)
        })
        .collect();
    maxima.sort_unstable_by(f64::total_cmp);
    Ok(NullThresholds {
        p95: quantile_sorted(&maxima, 0.95),
        p99: quantile_sorted(&maxima, 0.99),
        n_permutations,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_distr::{Distribution, Normal};

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, 1.0).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    fn ts(v: Vec<f64>, start: f64) -> TimeSeries {
        TimeSeries::new(start, 1.0, v, "c").unwrap()
    }

    #[test]
    fn delayed_copy_found_at_exact_lag() {
        let v = noise(1, 20_000);
        let a = ts(v.clone(), 0.0);
        // b(t) = a(t - 300)
        let b = ts(v[..v.len() - 300].to_vec(), 300.0);
        let r = cross_correlate(&a, &b, 600.0, None, None).unwrap();
        assert_eq!(r.best_lag_s, 300.0);
        assert!(r.best_coeff >= 0.999);
        assert_eq!(r.lags_s.len(), 1201);
        assert_eq!(r.lags_s[0], -600.0);
    }

    #[test]
    fn negated_and_identical() {
        let v = noise(2, 5000);
        let a = ts(v.clone(), 0.0);
        let same = cross_correlate(&a, &a, 100.0, None, None).unwrap();
        assert_eq!(same.best_coeff, 1.0);
        assert_eq!(same.best_lag_s, 0.0);
        let neg = ts(v.iter().map(|x| -x).collect(), 0.0);
        let r = cross_correlate(&a, &neg, 100.0, None, None).unwrap();
        assert_eq!(r.best_lag_s, 0.0);
        assert_eq!(r.best_coeff, -1.0);
    }

    #[test]
    fn errors() {
        let a = ts(noise(3, 1000), 0.0);
        let b = TimeSeries::new(0.0, 2.0, noise(4, 1000), "b").unwrap();
        assert!(matches!(cross_correlate(&a, &b, 10.0, None, None), Err(Error::Structure(_))));
        assert!(matches!(cross_correlate(&a, &a, 200.0, None, None), Err(Error::Insufficient(_))));
        assert!(significance_null(&a, &a, 10.0, 50, 1, None, None).is_err());
    }

    #[test]
    fn longest_gap_free_overlap_is_used() {
        let mut v = noise(5, 3000);
        v[1000] = 1e9;
        let s = TimeSeries::with_gaps(0.0, 1.0, v, GapMap::from_ranges([1000..1001]), "g").unwrap();
        let r = cross_correlate(&s, &s, 50.0, None, None).unwrap();
        assert_eq!(r.overlap_samples, 1999);
        assert_eq!(r.overlap_start, 1001.0);
        assert_eq!(r.best_coeff, 1.0);
    }

    #[test]
    fn filtered_inputs_are_recorded() {
        let a = ts(noise(6, 6000), 0.0);
        let f = FilterSpec::lowpass(0.1);
        let r = cross_correlate(&a, &a, 100.0, Some(&f), Some(&f)).unwrap();
        assert_eq!(r.filters, [Some(f), Some(f)]);
        assert_eq!(r.best_coeff, 1.0);
        assert!(r.overlap_samples < 6000);
    }

    #[test]
    fn null_thresholds() {
        let a = ts(noise(7, 4000), 0.0);
        let t1 = significance_null(&a, &a, 50.0, 100, 9, None, None).unwrap();
        let t2 = significance_null(&a, &a, 50.0, 100, 9, None, None).unwrap();
        assert_eq!(t1, t2);
        assert!(t1.p99 < 1.0 && t1.p95 <= t1.p99);
        let b = ts(noise(8, 4000), 0.0);
        let r = cross_correlate(&a, &b, 50.0, None, None).unwrap();
        let t = significance_null(&a, &b, 50.0, 200, 1, None, None).unwrap();
        assert!(r.best_coeff.abs() < t.p99);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn symmetric_and_scale_invariant(seed in 0u64..1000, k in 0.01f64..100.0, lag in -20i64..20) {
            let x = noise(seed, 400);
            let y = noise(seed + 1, 400);
            let ab = coeff_at(&x, &y, lag);
            let ba = coeff_at(&y, &x, -lag);
            prop_assert_eq!(ab, ba);
            let ys: Vec<f64> = y.iter().map(|v| v * k).collect();
            prop_assert!((coeff_at(&x, &ys, lag) - ab).abs() < 1e-12);
            prop_assert!(ab.abs() <= 1.0);
        }
    }
}
