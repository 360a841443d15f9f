//! Uniformly sampled field channels and the elementary operations on them.
//!
//! Timestamps are implicit: sample `i` sits at `start_epoch + i / rate_hz`
//! (UTC seconds). Missing data is tracked by a [`GapMap`] rather than by
//! sentinel values, and every statistic in the crate skips gap samples.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SECONDS_PER_DAY: f64 = 86_400.0;

/// Tolerance, in samples, when converting times to indices.
const INDEX_EPS: f64 = 1e-6;

/// Sorted, disjoint, non-adjacent half-open index ranges marking missing samples.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapMap {
    ranges: Vec<Range<usize>>,
}

impl GapMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a normalized map from arbitrary (possibly overlapping) ranges.
    pub fn from_ranges<I: IntoIterator<Item = Range<usize>>>(ranges: I) -> Self {
        let mut v: Vec<Range<usize>> = ranges.into_iter().filter(|r| r.start < r.end).collect();
        v.sort_by_key(|r| (r.start, r.end));
        let mut out: Vec<Range<usize>> = Vec::with_capacity(v.len());
        for r in v {
            match out.last_mut() {
                Some(last) if r.start <= last.end => last.end = last.end.max(r.end),
                _ => out.push(r),
            }
        }
        Self { ranges: out }
    }

    /// Gap map from a per-sample validity mask (`true` = valid).
    pub fn from_valid_mask(valid: &[bool]) -> Self {
        let mut ranges = Vec::new();
        let mut start = None;
        for (i, &ok) in valid.iter().enumerate() {
            match (ok, start) {
                (false, None) => start = Some(i),
                (true, Some(s)) => {
                    ranges.push(s..i);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            ranges.push(s..valid.len());
        }
        Self { ranges }
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    /// Number of gap samples.
    pub fn count(&self) -> usize {
        self.ranges.iter().map(|r| r.end - r.start).sum()
    }

    /// Adds a range, keeping the map normalized.
    pub fn insert(&mut self, r: Range<usize>) {
        if r.start >= r.end {
            return;
        }
        // Fast path for the append-in-order pattern used by streaming readers.
        match self.ranges.last_mut() {
            None => self.ranges.push(r),
            Some(last) if r.start > last.end => self.ranges.push(r),
            Some(last) if r.start >= last.start => last.end = last.end.max(r.end),
            _ => {
                let mut all = std::mem::take(&mut self.ranges);
                all.push(r);
                *self = Self::from_ranges(all);
            }
        }
    }

    pub fn contains(&self, i: usize) -> bool {
        let idx = self.ranges.partition_point(|r| r.end <= i);
        self.ranges.get(idx).is_some_and(|r| r.start <= i)
    }

    /// True when any index of `window` is a gap.
    pub fn intersects(&self, window: Range<usize>) -> bool {
        if window.start >= window.end {
            return false;
        }
        let idx = self.ranges.partition_point(|r| r.end <= window.start);
        self.ranges.get(idx).is_some_and(|r| r.start < window.end)
    }

    pub fn union(&self, other: &GapMap) -> GapMap {
        GapMap::from_ranges(self.ranges.iter().chain(other.ranges.iter()).cloned())
    }

    /// Ranges shifted by `offset` samples.
    pub fn shifted(&self, offset: usize) -> GapMap {
        GapMap {
            ranges: self
                .ranges
                .iter()
                .map(|r| r.start + offset..r.end + offset)
                .collect(),
        }
    }

    /// Restriction to `window`, re-indexed so that `window.start` becomes 0.
    pub fn clipped(&self, window: Range<usize>) -> GapMap {
        GapMap {
            ranges: self
                .ranges
                .iter()
                .filter_map(|r| {
                    let s = r.start.max(window.start);
                    let e = r.end.min(window.end);
                    (s < e).then(|| s - window.start..e - window.start)
                })
                .collect(),
        }
    }

    /// Per-sample validity mask of length `len` (`true` = valid).
    pub fn valid_mask(&self, len: usize) -> Vec<bool> {
        let mut mask = vec![true; len];
        for r in &self.ranges {
            let e = r.end.min(len);
            if r.start < e {
                mask[r.start..e].iter_mut().for_each(|m| *m = false);
            }
        }
        mask
    }

    /// Maximal runs of valid samples within `0..len`.
    pub fn valid_runs(&self, len: usize) -> Vec<Range<usize>> {
        let mut runs = Vec::new();
        let mut cursor = 0;
        for r in &self.ranges {
            let s = r.start.min(len);
            if s > cursor {
                runs.push(cursor..s);
            }
            cursor = cursor.max(r.end.min(len));
        }
        if cursor < len {
            runs.push(cursor..len);
        }
        runs
    }

    fn check_within(&self, len: usize) -> Result<()> {
        match self.ranges.last() {
            Some(r) if r.end > len => Err(Error::Structure(format!(
                "gap range {}..{} exceeds series length {len}",
                r.start, r.end
            ))),
            _ => Ok(()),
        }
    }
}

/// Uniformly sampled scalar channel, values in microtesla.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    start_epoch: f64,
    rate_hz: f64,
    values: Vec<f64>,
    gaps: GapMap,
    label: String,
}

impl TimeSeries {
    pub fn new(start_epoch: f64, rate_hz: f64, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        Self::with_gaps(start_epoch, rate_hz, values, GapMap::new(), label)
    }

    pub fn with_gaps(
        start_epoch: f64,
        rate_hz: f64,
        values: Vec<f64>,
        gaps: GapMap,
        label: impl Into<String>,
    ) -> Result<Self> {
        if !(rate_hz.is_finite() && rate_hz > 0.0) {
            return Err(Error::InvalidParameter(format!("rate must be positive, got {rate_hz}")));
        }
        if !start_epoch.is_finite() {
            return Err(Error::InvalidParameter("start epoch must be finite".into()));
        }
        gaps.check_within(values.len())?;
        Ok(Self {
            start_epoch,
            rate_hz,
            values,
            gaps,
            label: label.into(),
        })
    }

    pub fn start_epoch(&self) -> f64 {
        self.start_epoch
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn gaps(&self) -> &GapMap {
        &self.gaps
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.rate_hz
    }

    /// Time of sample `i` (UTC seconds).
    pub fn time_at(&self, i: usize) -> f64 {
        self.start_epoch + i as f64 / self.rate_hz
    }

    /// One past the last sample time.
    pub fn end_epoch(&self) -> f64 {
        self.time_at(self.values.len())
    }

    pub fn duration_s(&self) -> f64 {
        self.values.len() as f64 / self.rate_hz
    }

    pub fn is_gap(&self, i: usize) -> bool {
        self.gaps.contains(i)
    }

    pub fn valid_count(&self) -> usize {
        self.values.len() - self.gaps.count()
    }

    /// Iterator over `(index, value)` of non-gap samples.
    pub fn valid_iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.gaps
            .valid_runs(self.values.len())
            .into_iter()
            .flat_map(move |r| r.map(move |i| (i, self.values[i])))
    }

    /// Gap-aware mean, `None` when every sample is a gap.
    pub fn mean(&self) -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (_, v) in self.valid_iter() {
            sum += v;
            n += 1;
        }
        (n > 0).then(|| sum / n as f64)
    }

    /// Same timing and gaps with replaced values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::Structure(format!(
                "replacement has {} samples, series has {}",
                values.len(),
                self.values.len()
            )));
        }
        Ok(Self {
            values,
            ..self.clone()
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Adds gap ranges to a copy of the series.
    pub fn with_extra_gaps(&self, extra: &GapMap) -> Result<Self> {
        let gaps = self.gaps.union(extra);
        gaps.check_within(self.values.len())?;
        Ok(Self { gaps, ..self.clone() })
    }

    pub fn into_parts(self) -> (f64, f64, Vec<f64>, GapMap, String) {
        (self.start_epoch, self.rate_hz, self.values, self.gaps, self.label)
    }

    /// Index range `[lo, hi)` of samples whose time lies in `[t0, t1)`.
    pub fn index_range(&self, t0: f64, t1: f64) -> Range<usize> {
        let n = self.values.len();
        let to_idx = |t: f64| -> usize {
            let x = (t - self.start_epoch) * self.rate_hz;
            if x <= 0.0 {
                0
            } else {
                ((x - INDEX_EPS).ceil().max(0.0) as usize).min(n)
            }
        };
        let lo = to_idx(t0);
        let hi = to_idx(t1).max(lo);
        lo..hi
    }

    /// Copy of samples `range` as a new series.
    pub fn sub_range(&self, range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.values.len() {
            return Err(Error::Empty(format!(
                "index range {}..{} outside series of {} samples",
                range.start,
                range.end,
                self.values.len()
            )));
        }
        Ok(Self {
            start_epoch: self.time_at(range.start),
            rate_hz: self.rate_hz,
            values: self.values[range.clone()].to_vec(),
            gaps: self.gaps.clipped(range),
            label: self.label.clone(),
        })
    }
}

/// Station sensor family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorKind {
    FluxgateBiomed,
    VmrTwinleaf,
    UsgsReference,
}

impl SensorKind {
    pub fn default_rate_hz(self) -> f64 {
        match self {
            SensorKind::FluxgateBiomed => 3960.0,
            SensorKind::VmrTwinleaf => 200.0,
            SensorKind::UsgsReference => 1.0 / 60.0,
        }
    }

    /// Nominal noise floor in pT/√Hz.
    pub fn default_sensitivity_pt(self) -> f64 {
        match self {
            SensorKind::FluxgateBiomed => 70.0,
            SensorKind::VmrTwinleaf => 300.0,
            SensorKind::UsgsReference => 10.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SensorKind::FluxgateBiomed => "fluxgate_biomed",
            SensorKind::VmrTwinleaf => "vmr_twinleaf",
            SensorKind::UsgsReference => "usgs_reference",
        }
    }
}

impl FromStr for SensorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fluxgate_biomed" => Ok(SensorKind::FluxgateBiomed),
            "vmr_twinleaf" => Ok(SensorKind::VmrTwinleaf),
            "usgs_reference" => Ok(SensorKind::UsgsReference),
            other => Err(Error::InvalidParameter(format!("unknown sensor kind '{other}'"))),
        }
    }
}

impl fmt::Display for SensorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationMeta {
    pub station_id: String,
    pub sensor_kind: SensorKind,
    pub nominal_rate_hz: f64,
    pub sensitivity_pt_per_rthz: f64,
    /// Fixed local offset from UTC; no daylight-saving transitions.
    pub utc_offset_hours: f64,
    pub location_label: String,
    /// Relative per-axis calibration uncertainty, recorded but never applied.
    pub axis_calibration_systematic: Option<f64>,
}

impl StationMeta {
    pub fn new(station_id: impl Into<String>, sensor_kind: SensorKind) -> Self {
        Self {
            station_id: station_id.into(),
            sensor_kind,
            nominal_rate_hz: sensor_kind.default_rate_hz(),
            sensitivity_pt_per_rthz: sensor_kind.default_sensitivity_pt(),
            utc_offset_hours: 0.0,
            location_label: String::new(),
            axis_calibration_systematic: match sensor_kind {
                SensorKind::VmrTwinleaf => Some(0.10),
                _ => None,
            },
        }
    }

    pub fn with_rate(mut self, rate_hz: f64) -> Self {
        self.nominal_rate_hz = rate_hz;
        self
    }

    pub fn with_utc_offset(mut self, hours: f64) -> Self {
        self.utc_offset_hours = hours;
        self
    }

    pub fn utc_offset_s(&self) -> f64 {
        self.utc_offset_hours * 3600.0
    }
}

/// Axis selector for vector data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    X,
    Y,
    Z,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::X, Channel::Y, Channel::Z];

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::X => "x",
            Channel::Y => "y",
            Channel::Z => "z",
        }
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Channel::X),
            "y" => Ok(Channel::Y),
            "z" => Ok(Channel::Z),
            other => Err(Error::InvalidParameter(format!("unknown channel '{other}'"))),
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Three aligned axis channels from one station.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSeries {
    pub x: TimeSeries,
    pub y: TimeSeries,
    pub z: TimeSeries,
    pub station: StationMeta,
}

impl VectorSeries {
    pub fn new(x: TimeSeries, y: TimeSeries, z: TimeSeries, station: StationMeta) -> Result<Self> {
        check_aligned(&x, &y)?;
        check_aligned(&x, &z)?;
        Ok(Self { x, y, z, station })
    }

    pub fn channel(&self, c: Channel) -> &TimeSeries {
        match c {
            Channel::X => &self.x,
            Channel::Y => &self.y,
            Channel::Z => &self.z,
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

fn check_aligned(a: &TimeSeries, b: &TimeSeries) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Structure(format!(
            "channel lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.rate_hz != b.rate_hz {
        return Err(Error::Structure(format!(
            "channel rates differ: {} vs {} Hz",
            a.rate_hz, b.rate_hz
        )));
    }
    if (a.start_epoch - b.start_epoch).abs() > 0.5 / a.rate_hz {
        return Err(Error::Structure(format!(
            "channel start epochs differ: {} vs {}",
            a.start_epoch, b.start_epoch
        )));
    }
    Ok(())
}

/// Local time-of-day window treated as night. May wrap past midnight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayNightSchedule {
    night_start_s: f64,
    night_end_s: f64,
}

/// Which side of a [`DayNightSchedule`] to select.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DayPart {
    Day,
    Night,
    All,
}

impl FromStr for DayPart {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "day" | "daytime" => Ok(DayPart::Day),
            "night" | "nighttime" => Ok(DayPart::Night),
            "all" | "full" => Ok(DayPart::All),
            other => Err(Error::InvalidParameter(format!("unknown day part '{other}'"))),
        }
    }
}

impl DayNightSchedule {
    /// Night window from seconds-of-day `start` to `end` (local time).
    pub fn new(night_start_s: f64, night_end_s: f64) -> Result<Self> {
        let ok = |t: f64| (0.0..SECONDS_PER_DAY).contains(&t);
        if !ok(night_start_s) || !ok(night_end_s) {
            return Err(Error::InvalidParameter(
                "night bounds must lie within one day".into(),
            ));
        }
        if night_start_s == night_end_s {
            return Err(Error::InvalidParameter(
                "night start and end must differ".into(),
            ));
        }
        Ok(Self {
            night_start_s,
            night_end_s,
        })
    }

    /// Parses `HH:MM` (or `HH:MM:SS`) bounds.
    pub fn parse(start: &str, end: &str) -> Result<Self> {
        Self::new(parse_clock(start)?, parse_clock(end)?)
    }

    /// Berkeley-style schedule: night 01:00 to 04:30.
    pub fn berkeley() -> Self {
        Self::new(3600.0, 4.5 * 3600.0).expect("valid constant schedule")
    }

    /// Brooklyn-style schedule: night 23:00 to 07:00.
    pub fn brooklyn() -> Self {
        Self::new(23.0 * 3600.0, 7.0 * 3600.0).expect("valid constant schedule")
    }

    pub fn night_start_s(&self) -> f64 {
        self.night_start_s
    }

    pub fn night_end_s(&self) -> f64 {
        self.night_end_s
    }

    pub fn wraps_midnight(&self) -> bool {
        self.night_start_s > self.night_end_s
    }

    /// Night length in seconds.
    pub fn night_seconds(&self) -> f64 {
        if self.wraps_midnight() {
            SECONDS_PER_DAY - self.night_start_s + self.night_end_s
        } else {
            self.night_end_s - self.night_start_s
        }
    }

    /// Whether local seconds-of-day `tod` falls in the night window.
    pub fn is_night_tod(&self, tod: f64) -> bool {
        if self.wraps_midnight() {
            tod >= self.night_start_s || tod < self.night_end_s
        } else {
            tod >= self.night_start_s && tod < self.night_end_s
        }
    }

    /// Whether UTC time `t` is night for a station at `utc_offset_s`.
    pub fn is_night(&self, t: f64, utc_offset_s: f64) -> bool {
        self.is_night_tod(local_time_of_day(t, utc_offset_s))
    }

    pub fn selects(&self, part: DayPart, t: f64, utc_offset_s: f64) -> bool {
        match part {
            DayPart::All => true,
            DayPart::Night => self.is_night(t, utc_offset_s),
            DayPart::Day => !self.is_night(t, utc_offset_s),
        }
    }

    /// Whether the local interval `[a, b)` (seconds-of-day, `b <= 86400`) is entirely night or entirely day.
    pub fn classify_interval(&self, a: f64, b: f64) -> Option<DayPart> {
        let mut edges = vec![a];
        for e in [self.night_start_s, self.night_end_s] {
            if e > a && e < b {
                edges.push(e);
            }
        }
        if edges.len() > 1 {
            return None;
        }
        Some(if self.is_night_tod(a) {
            DayPart::Night
        } else {
            DayPart::Day
        })
    }
}

fn parse_clock(s: &str) -> Result<f64> {
    let parts: Vec<&str> = s.trim().split(':').collect();
    let bad = || Error::InvalidParameter(format!("expected HH:MM, got '{s}'"));
    if parts.len() < 2 || parts.len() > 3 {
        return Err(bad());
    }
    let h: u32 = parts[0].parse().map_err(|_| bad())?;
    let m: u32 = parts[1].parse().map_err(|_| bad())?;
    let sec: f64 = match parts.get(2) {
        Some(p) => p.parse().map_err(|_| bad())?,
        None => 0.0,
    };
    if h > 24 || m > 59 || !(0.0..60.0).contains(&sec) {
        return Err(bad());
    }
    let total = f64::from(h * 3600 + m * 60) + sec;
    Ok(if total >= SECONDS_PER_DAY { total - SECONDS_PER_DAY } else { total })
}

/// Local seconds-of-day for UTC time `t`.
pub fn local_time_of_day(t: f64, utc_offset_s: f64) -> f64 {
    (t + utc_offset_s).rem_euclid(SECONDS_PER_DAY)
}

/// UTC epoch of the local midnight at or before `t`.
pub fn local_midnight_before(t: f64, utc_offset_s: f64) -> f64 {
    t - local_time_of_day(t, utc_offset_s)
}

/// Total scalar field `sqrt(x² + y² + z²)` per sample.
pub fn scalar_field(v: &VectorSeries) -> Result<TimeSeries> {
    check_aligned(&v.x, &v.y)?;
    check_aligned(&v.x, &v.z)?;
    let values = v
        .x
        .values
        .iter()
        .zip(&v.y.values)
        .zip(&v.z.values)
        .map(|((x, y), z)| (x * x + y * y + z * z).sqrt())
        .collect();
    let gaps = v.x.gaps.union(&v.y.gaps).union(&v.z.gaps);
    TimeSeries::with_gaps(
        v.x.start_epoch,
        v.x.rate_hz,
        values,
        gaps,
        format!("{} scalar", v.station.station_id),
    )
}

/// Samples with `t(i) ∈ [t0, t1)`.
pub fn slice_time(s: &TimeSeries, t0: f64, t1: f64) -> Result<TimeSeries> {
    if !(t0 < t1) {
        return Err(Error::InvalidParameter(format!("slice start {t0} must precede end {t1}")));
    }
    let r = s.index_range(t0, t1);
    if r.is_empty() {
        return Err(Error::Empty(format!(
            "[{t0}, {t1}) does not overlap series span [{}, {})",
            s.start_epoch,
            s.end_epoch()
        )));
    }
    s.sub_range(r)
}

/// Concatenates time-ordered parts; holes between parts become gaps.
///
/// Hole samples carry the last valid value before the hole so that gap-unaware
/// consumers see a flat line rather than zeros.
pub fn stitch(parts: &[TimeSeries]) -> Result<TimeSeries> {
    let first = parts
        .first()
        .ok_or_else(|| Error::Empty("no parts to stitch".into()))?;
    let rate = first.rate_hz;
    let total: usize = parts.iter().map(TimeSeries::len).sum();
    let mut values = Vec::with_capacity(total);
    let mut gaps = first.gaps.clone();
    values.extend_from_slice(&first.values);

    for p in &parts[1..] {
        if p.rate_hz != rate {
            return Err(Error::Structure(format!(
                "rate mismatch while stitching: {} vs {rate} Hz",
                p.rate_hz
            )));
        }
        if p.label != first.label {
            return Err(Error::Structure(format!(
                "label mismatch while stitching: '{}' vs '{}'",
                p.label, first.label
            )));
        }
        let offset_f = (p.start_epoch - first.start_epoch) * rate;
        let offset = offset_f.round();
        if (offset_f - offset).abs() > 1e-3 {
            return Err(Error::Structure(format!(
                "part starting at {} is not on the sample grid",
                p.start_epoch
            )));
        }
        if offset < values.len() as f64 {
            return Err(Error::Structure(format!(
                "part starting at {} overlaps the previous part",
                p.start_epoch
            )));
        }
        let offset = offset as usize;
        if offset > values.len() {
            let hole = values.len()..offset;
            let fill = last_valid(&values, &gaps).unwrap_or(0.0);
            values.resize(offset, fill);
            gaps.insert(hole);
        }
        for r in p.gaps.ranges() {
            gaps.insert(r.start + offset..r.end + offset);
        }
        values.extend_from_slice(&p.values);
    }
    TimeSeries::with_gaps(first.start_epoch, rate, values, gaps, first.label.clone())
}

fn last_valid(values: &[f64], gaps: &GapMap) -> Option<f64> {
    let runs = gaps.valid_runs(values.len());
    runs.last().map(|r| values[r.end - 1])
}

/// Deviation from the gap-aware mean, in µT.
pub fn relative_variation(s: &TimeSeries) -> Result<TimeSeries> {
    if s.valid_count() < 2 {
        return Err(Error::Insufficient(format!(
            "'{}' has fewer than two valid samples",
            s.label
        )));
    }
    let mean = s.mean().expect("non-empty");
    let values = s.values.iter().map(|v| v - mean).collect();
    s.with_values(values)
}
