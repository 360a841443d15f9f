use std::f64::consts::PI;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{DayNightSchedule, SensorKind, StationMeta, TimeSeries, VectorSeries};

use super::dipole::{dipole_field, path_position, validate_path, PathPoint};

/// Axes a component is added to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisSel {
    X,
    Y,
    Z,
    /// Every axis, with independent noise streams per axis.
    All,
    /// Along the unit background direction, so the value reaches the
    /// scalar field to first order.
    #[default]
    Field,
}

fn default_fundamental() -> f64 {
    60.0
}

fn default_exponent() -> f64 {
    1.0
}

fn default_night_start() -> String {
    "01:00".into()
}

fn default_night_end() -> String {
    "04:30".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Component {
    Sine {
        freq_hz: f64,
        amplitude_ut: f64,
        #[serde(default)]
        phase_rad: f64,
        #[serde(default)]
        axis: AxisSel,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sensors: Option<Vec<String>>,
    },
    White {
        sigma_ut: f64,
        #[serde(default)]
        axis: AxisSel,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sensors: Option<Vec<String>>,
    },
    /// Power-law noise with one-sided PSD `level²·f^(−exponent)`, level in µT/√Hz at 1 Hz.
    OneOverF {
        level_ut_rthz: f64,
        #[serde(default = "default_exponent")]
        exponent: f64,
        #[serde(default)]
        axis: AxisSel,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sensors: Option<Vec<String>>,
    },
    Powerline {
        #[serde(default = "default_fundamental")]
        fundamental_hz: f64,
        /// Amplitude of harmonic k+1 at index k.
        amplitudes_ut: Vec<f64>,
        #[serde(default)]
        axis: AxisSel,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sensors: Option<Vec<String>>,
    },
    /// White noise whose sigma switches with local day and night.
    DayNight {
        #[serde(default = "default_night_start")]
        night_start: String,
        #[serde(default = "default_night_end")]
        night_end: String,
        day_sigma_ut: f64,
        night_sigma_ut: f64,
        #[serde(default)]
        axis: AxisSel,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sensors: Option<Vec<String>>,
    },
    /// Quasi-static point dipole moving along a piecewise-linear path.
    Dipole {
        moment_am2: [f64; 3],
        path: Vec<PathPoint>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sensors: Option<Vec<String>>,
    },
}

impl Component {
    fn sensors(&self) -> Option<&[String]> {
        match self {
            Component::Sine { sensors, .. }
            | Component::White { sensors, .. }
            | Component::OneOverF { sensors, .. }
            | Component::Powerline { sensors, .. }
            | Component::DayNight { sensors, .. }
            | Component::Dipole { sensors, .. } => sensors.as_deref(),
        }
    }

    fn applies_to(&self, sensor: &str) -> bool {
        self.sensors().is_none_or(|s| s.iter().any(|x| x == sensor))
    }

    /// Highest frequency the component puts into the signal, if deterministic.
    fn max_freq(&self) -> Option<f64> {
        match self {
            Component::Sine { freq_hz, .. } => Some(*freq_hz),
            Component::Powerline { fundamental_hz, amplitudes_ut, .. } => {
                Some(fundamental_hz * amplitudes_ut.len() as f64)
            }
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be finite and non-negative, got {v}")))
            }
        };
        match self {
            Component::Sine { freq_hz, amplitude_ut, phase_rad, .. } => {
                nonneg("sine amplitude", *amplitude_ut)?;
                nonneg("sine frequency", *freq_hz)?;
                if !phase_rad.is_finite() {
                    return Err(Error::InvalidParameter("sine phase must be finite".into()));
                }
            }
            Component::White { sigma_ut, .. } => nonneg("white sigma", *sigma_ut)?,
            Component::OneOverF { level_ut_rthz, exponent, .. } => {
                nonneg("one-over-f level", *level_ut_rthz)?;
                if !exponent.is_finite() {
                    return Err(Error::InvalidParameter("one-over-f exponent must be finite".into()));
                }
            }
            Component::Powerline { fundamental_hz, amplitudes_ut, .. } => {
                if !(*fundamental_hz > 0.0) {
                    return Err(Error::InvalidParameter("powerline fundamental must be positive".into()));
                }
                for a in amplitudes_ut {
                    nonneg("powerline amplitude", *a)?;
                }
            }
            Component::DayNight { night_start, night_end, day_sigma_ut, night_sigma_ut, .. } => {
                DayNightSchedule::parse(night_start, night_end)?;
                nonneg("day sigma", *day_sigma_ut)?;
                nonneg("night sigma", *night_sigma_ut)?;
            }
            Component::Dipole { moment_am2, path, .. } => {
                if moment_am2.iter().any(|m| !m.is_finite()) {
                    return Err(Error::InvalidParameter("dipole moment must be finite".into()));
                }
                validate_path(path)?;
            }
        }
        Ok(())
    }
}

fn default_sensor_kind() -> SensorKind {
    SensorKind::FluxgateBiomed
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSpec {
    pub id: String,
    #[serde(default)]
    pub position_m: [f64; 3],
    #[serde(default = "default_sensor_kind")]
    pub kind: SensorKind,
}

fn default_sensors() -> Vec<SensorSpec> {
    vec![SensorSpec { id: "syn".into(), position_m: [0.0; 3], kind: SensorKind::FluxgateBiomed }]
}

/// Known-truth scene description; the seed has no default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    #[serde(default)]
    pub start_epoch: f64,
    pub duration_s: f64,
    pub rate_hz: f64,
    pub seed: u64,
    #[serde(default)]
    pub utc_offset_hours: f64,
    /// Uniform background field in µT.
    #[serde(default)]
    pub background_ut: [f64; 3],
    #[serde(default = "default_sensors")]
    pub sensors: Vec<SensorSpec>,
    #[serde(default)]
    pub components: Vec<Component>,
}

impl SceneSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: SceneSpec =
            toml::from_str(text).map_err(|e| Error::InvalidParameter(format!("scene: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::InvalidParameter(m) => Error::format(path, m),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidParameter(format!("scene: {e}")))
    }

    pub fn samples(&self) -> usize {
        (self.duration_s * self.rate_hz).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate_hz > 0.0 && self.rate_hz.is_finite()) {
            return Err(Error::InvalidParameter(format!("rate must be positive, got {}", self.rate_hz)));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) || self.samples() == 0 {
            return Err(Error::InvalidParameter("duration must cover at least one sample".into()));
        }
        if !self.start_epoch.is_finite() || self.background_ut.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidParameter("start epoch and background must be finite".into()));
        }
        if self.sensors.is_empty() {
            return Err(Error::InvalidParameter("scene needs at least one sensor".into()));
        }
        let mut ids: Vec<&str> = self.sensors.iter().map(|s| s.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) || ids.iter().any(|i| i.is_empty()) {
            return Err(Error::InvalidParameter("sensor ids must be unique and non-empty".into()));
        }
        for c in &self.components {
            c.validate()?;
            if let Some(f) = c.max_freq() {
                if !(self.rate_hz > 2.0 * f) {
                    return Err(Error::InvalidParameter(format!(
                        "rate {} Hz does not exceed twice the component frequency {f} Hz",
                        self.rate_hz
                    )));
                }
            }
            if let Some(list) = c.sensors() {
                if let Some(bad) = list.iter().find(|s| !ids.contains(&s.as_str())) {
                    return Err(Error::InvalidParameter(format!("component names unknown sensor '{bad}'")));
                }
            }
        }
        Ok(())
    }
}

/// Seed of one noise stream, derived from the component content rather than
/// its position so that merging component lists leaves streams unchanged.
fn stream_seed(seed: u64, c: &Component, occurrence: usize, sensor: &str, axis: usize) -> u64 {
    #[derive(Serialize)]
    struct Wrap<'a> {
        c: &'a Component,
    }
    let body = toml::to_string(&Wrap { c }).expect("components serialize to toml");
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(body.as_bytes());
    h.update((occurrence as u64).to_le_bytes());
    h.update(sensor.as_bytes());
    h.update([0u8, axis as u8]);
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest is 32 bytes"))
}

fn white(seed: u64, n: usize, sigma: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sigma * z
        })
        .collect()
}

/// Spectrally shaped noise, one-sided PSD `level²·f^(−exponent)`, DC removed.
pub fn power_law_noise(seed: u64, n: usize, rate_hz: f64, level: f64, exponent: f64) -> Vec<f64> {
    if n < 2 || level == 0.0 {
        return vec![0.0; n];
    }
    let mut buf: Vec<Complex<f64>> = white(seed, n, 1.0).into_iter().map(|v| Complex::new(v, 0.0)).collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut buf);
    buf[0] = Complex::new(0.0, 0.0);
    for k in 1..n {
        let kk = k.min(n - k);
        let f = kk as f64 * rate_hz / n as f64;
        // unit white noise has one-sided PSD 2/fs
        let g = (level * level * f.powf(-exponent) * rate_hz / 2.0).sqrt();
        buf[k] *= g;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

struct Axes {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
}

impl Axes {
    fn add(&mut self, axis: AxisSel, unit: [f64; 3], k: usize, v: &[f64]) {
        let add = |dst: &mut Vec<f64>, w: f64| {
            if w != 0.0 {
                dst.iter_mut().zip(v).for_each(|(d, s)| *d += w * s);
            }
        };
        match (axis, k) {
            (AxisSel::X, 0) | (AxisSel::All, 0) => add(&mut self.x, 1.0),
            (AxisSel::Y, 1) | (AxisSel::All, 1) => add(&mut self.y, 1.0),
            (AxisSel::Z, 2) | (AxisSel::All, 2) => add(&mut self.z, 1.0),
            (AxisSel::Field, _) => {
                add(&mut self.x, unit[0]);
                add(&mut self.y, unit[1]);
                add(&mut self.z, unit[2]);
            }
            _ => {}
        }
    }
}

fn axis_streams(axis: AxisSel) -> &'static [usize] {
    match axis {
        AxisSel::X => &[0],
        AxisSel::Y => &[1],
        AxisSel::Z => &[2],
        AxisSel::All => &[0, 1, 2],
        AxisSel::Field => &[0],
    }
}

/// Renders every sensor of the scene.
pub fn generate(scene: &SceneSpec) -> Result<Vec<VectorSeries>> {
    scene.validate()?;
    let n = scene.samples();
    let fs = scene.rate_hz;
    let bg = scene.background_ut;
    let bnorm = (bg[0] * bg[0] + bg[1] * bg[1] + bg[2] * bg[2]).sqrt();
    let unit = if bnorm > 0.0 { bg.map(|b| b / bnorm) } else { [0.0, 0.0, 1.0] };
    let offset_s = scene.utc_offset_hours * 3600.0;

    // identical components get distinct streams by occurrence
    let occurrence: Vec<usize> = scene
        .components
        .iter()
        .enumerate()
        .map(|(i, c)| scene.components[..i].iter().filter(|o| *o == c).count())
        .collect();

    scene
        .sensors
        .par_iter()
        .map(|sensor| {
            let mut axes = Axes { x: vec![bg[0]; n], y: vec![bg[1]; n], z: vec![bg[2]; n] };
            for (ci, c) in scene.components.iter().enumerate() {
                if !c.applies_to(&sensor.id) {
                    continue;
                }
                let seed_for = |k: usize| stream_seed(scene.seed, c, occurrence[ci], &sensor.id, k);
                match c {
                    Component::Sine { freq_hz, amplitude_ut, phase_rad, axis, .. } => {
                        let v: Vec<f64> = (0..n)
                            .map(|i| amplitude_ut * (2.0 * PI * freq_hz * i as f64 / fs + phase_rad).sin())
                            .collect();
                        for &k in axis_streams(*axis) {
                            axes.add(*axis, unit, k, &v);
                        }
                    }
                    Component::Powerline { fundamental_hz, amplitudes_ut, axis, .. } => {
                        let v: Vec<f64> = (0..n)
                            .map(|i| {
                                let t = i as f64 / fs;
                                amplitudes_ut
                                    .iter()
                                    .enumerate()
                                    .map(|(h, a)| a * (2.0 * PI * (h + 1) as f64 * fundamental_hz * t).sin())
                                    .sum()
                            })
                            .collect();
                        for &k in axis_streams(*axis) {
                            axes.add(*axis, unit, k, &v);
                        }
                    }
                    Component::White { sigma_ut, axis, .. } => {
                        for &k in axis_streams(*axis) {
                            axes.add(*axis, unit, k, &white(seed_for(k), n, *sigma_ut));
                        }
                    }
                    Component::OneOverF { level_ut_rthz, exponent, axis, .. } => {
                        for &k in axis_streams(*axis) {
                            let v = power_law_noise(seed_for(k), n, fs, *level_ut_rthz, *exponent);
                            axes.add(*axis, unit, k, &v);
                        }
                    }
                    Component::DayNight { night_start, night_end, day_sigma_ut, night_sigma_ut, axis, .. } => {
                        let sched = DayNightSchedule::parse(night_start, night_end)?;
                        let env: Vec<f64> = (0..n)
                            .map(|i| {
                                let t = scene.start_epoch + i as f64 / fs;
                                if sched.is_night(t, offset_s) { *night_sigma_ut } else { *day_sigma_ut }
                            })
                            .collect();
                        for &k in axis_streams(*axis) {
                            let mut v = white(seed_for(k), n, 1.0);
                            v.iter_mut().zip(&env).for_each(|(x, e)| *x *= e);
                            axes.add(*axis, unit, k, &v);
                        }
                    }
                    Component::Dipole { moment_am2, path, .. } => {
                        for i in 0..n {
                            let src = path_position(path, i as f64 / fs);
                            let r = std::array::from_fn(|k| sensor.position_m[k] - src[k]);
                            let b = dipole_field(*moment_am2, r).ok_or(Error::Singular { index: i })?;
                            axes.x[i] += b[0];
                            axes.y[i] += b[1];
                            axes.z[i] += b[2];
                        }
                    }
                }
            }
            let meta = StationMeta::new(sensor.id.clone(), sensor.kind)
                .with_rate(fs)
                .with_utc_offset(scene.utc_offset_hours);
            let mk = |v: Vec<f64>, ch: &str| TimeSeries::new(scene.start_epoch, fs, v, format!("{} {ch}", sensor.id));
            VectorSeries::new(mk(axes.x, "x")?, mk(axes.y, "y")?, mk(axes.z, "z")?, meta)
        })
        .collect()
}
