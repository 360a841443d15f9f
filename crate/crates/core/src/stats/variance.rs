//! Time-of-day variance profiles and day/night partitioning.

use chrono::{DateTime, Datelike, NaiveDate, Weekday};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{local_midnight_before, DayNightSchedule, DayPart, TimeSeries};

const DAY_S: f64 = 86_400.0;

/// Per-day, per-bin sample variances (µT²) with their across-day average.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceProfile {
    pub bin_seconds: f64,
    /// Local-midnight epochs, one per row of `matrix`.
    pub day_starts: Vec<f64>,
    pub dates: Vec<NaiveDate>,
    /// `matrix[day][bin]`; `None` where fewer than two valid samples fell in the bin.
    pub matrix: Vec<Vec<Option<f64>>>,
    pub daily_average: Vec<Option<f64>>,
    /// True for Monday–Friday days that are not listed holidays.
    pub weekday_mask: Vec<bool>,
}

impl VarianceProfile {
    pub fn bins_per_day(&self) -> usize {
        self.daily_average.len()
    }

    pub fn days(&self) -> usize {
        self.matrix.len()
    }

    /// Across-day average restricted to days where `include(day)` holds.
    pub fn average_where(&self, include: impl Fn(usize) -> bool) -> Vec<Option<f64>> {
        average_days(&self.matrix, self.bins_per_day(), include)
    }

    pub fn weekday_average(&self) -> Vec<Option<f64>> {
        self.average_where(|d| self.weekday_mask[d])
    }

    pub fn weekend_average(&self) -> Vec<Option<f64>> {
        self.average_where(|d| !self.weekday_mask[d])
    }

    /// Mean of the daily average over bins wholly inside `part`; bins that
    /// straddle a schedule boundary are left out.
    pub fn part_mean(&self, schedule: &DayNightSchedule, part: DayPart) -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0;
        for (b, v) in self.daily_average.iter().enumerate() {
            let a = b as f64 * self.bin_seconds;
            let class = schedule.classify_interval(a, a + self.bin_seconds);
            let keep = match part {
                DayPart::All => class.is_some(),
                p => class == Some(p),
            };
            if let (true, Some(v)) = (keep, v) {
                sum += v;
                n += 1;
            }
        }
        (n > 0).then(|| sum / n as f64)
    }

    /// Ratio of mean daytime to mean nighttime variance.
    pub fn day_night_ratio(&self, schedule: &DayNightSchedule) -> Option<f64> {
        let day = self.part_mean(schedule, DayPart::Day)?;
        let night = self.part_mean(schedule, DayPart::Night)?;
        (night > 0.0).then(|| day / night)
    }
}

fn average_days(matrix: &[Vec<Option<f64>>], bins: usize, include: impl Fn(usize) -> bool) -> Vec<Option<f64>> {
    (0..bins)
        .map(|b| {
            let mut sum = 0.0;
            let mut n = 0;
            for (d, row) in matrix.iter().enumerate() {
                if let (true, Some(v)) = (include(d), row[b]) {
                    sum += v;
                    n += 1;
                }
            }
            (n > 0).then(|| sum / n as f64)
        })
        .collect()
}

/// Builds the variance profile of `s` on local days (`utc_offset_s` from UTC).
///
/// Days run from local midnight; bins of `bin_seconds` must tile the day.
pub fn variance_profile(
    s: &TimeSeries,
    utc_offset_s: f64,
    bin_seconds: f64,
    holidays: &[NaiveDate],
) -> Result<VarianceProfile> {
    let bins_f = DAY_S / bin_seconds;
    let bins = bins_f.round() as usize;
    if bins == 0 || (bins_f - bins as f64).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "bin of {bin_seconds} s does not tile a day"
        )));
    }
    if s.duration_s() < DAY_S {
        return Err(Error::Insufficient(format!(
            "variance profile needs at least one full day, series spans {} s",
            s.duration_s()
        )));
    }
    let first_midnight = local_midnight_before(s.start_epoch(), utc_offset_s);
    let ndays = ((s.end_epoch() - first_midnight) / DAY_S).ceil() as usize;

    // Shifted sums per cell; the shift is the first value seen in the cell.
    #[derive(Clone, Copy, Default)]
    struct Acc {
        shift: f64,
        n: usize,
        s1: f64,
        s2: f64,
    }
    let mut acc = vec![Acc::default(); ndays * bins];
    for (i, v) in s.valid_iter() {
        let rel = s.time_at(i) - first_midnight;
        let d = ((rel / DAY_S).floor() as usize).min(ndays - 1);
        let b = (((rel - d as f64 * DAY_S) / bin_seconds).floor() as usize).min(bins - 1);
        let a = &mut acc[d * bins + b];
        if a.n == 0 {
            a.shift = v;
        }
        let x = v - a.shift;
        a.n += 1;
        a.s1 += x;
        a.s2 += x * x;
    }
    let matrix: Vec<Vec<Option<f64>>> = (0..ndays)
        .map(|d| {
            (0..bins)
                .map(|b| {
                    let a = acc[d * bins + b];
                    (a.n >= 2).then(|| {
                        let n = a.n as f64;
                        ((a.s2 - a.s1 * a.s1 / n) / (n - 1.0)).max(0.0)
                    })
                })
                .collect()
        })
        .collect();
    let day_starts: Vec<f64> = (0..ndays).map(|d| first_midnight + d as f64 * DAY_S).collect();
    let dates: Vec<NaiveDate> = day_starts
        .iter()
        .map(|&t| {
            DateTime::from_timestamp((t + utc_offset_s).round() as i64, 0)
                .map(|dt| dt.date_naive())
                .unwrap_or_default()
        })
        .collect();
    let weekday_mask = dates
        .iter()
        .map(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) && !holidays.contains(d))
        .collect();
    let daily_average = average_days(&matrix, bins, |_| true);
    Ok(VarianceProfile {
        bin_seconds,
        day_starts,
        dates,
        matrix,
        daily_average,
        weekday_mask,
    })
}

/// Sample-index partition of a series into day and night.
#[derive(Debug, Clone, PartialEq)]
pub struct DayNightSplit {
    pub day: Vec<usize>,
    pub night: Vec<usize>,
}

impl DayNightSplit {
    pub fn indices(&self, part: DayPart) -> Vec<usize> {
        match part {
            DayPart::Day => self.day.clone(),
            DayPart::Night => self.night.clone(),
            DayPart::All => {
                let mut all: Vec<usize> = self.day.iter().chain(&self.night).copied().collect();
                all.sort_unstable();
                all
            }
        }
    }

    pub fn values(&self, s: &TimeSeries, part: DayPart) -> Vec<f64> {
        self.indices(part).into_iter().map(|i| s.values()[i]).collect()
    }
}

/// Assigns every non-gap sample to day or night, preserving order.
pub fn split_day_night(s: &TimeSeries, schedule: &DayNightSchedule, utc_offset_s: f64) -> DayNightSplit {
    let mut day = Vec::new();
    let mut night = Vec::new();
    for (i, _) in s.valid_iter() {
        if schedule.is_night(s.time_at(i), utc_offset_s) {
            night.push(i);
        } else {
            day.push(i);
        }
    }
    DayNightSplit { day, night }
}
