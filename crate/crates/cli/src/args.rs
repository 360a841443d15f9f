use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use urbmag::ingest::DEFAULT_PATTERN;

#[derive(Debug, Parser)]
#[command(name = "urbmag", version, about = "Urban magnetometer data analysis")]
pub struct Cli {
    /// TOML file of default flags: top-level keys plus a table per subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Dataset root holding hourly raw files and station sidecars.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// File naming pattern for the dataset root.
    #[arg(long, global = true, default_value = DEFAULT_PATTERN)]
    pub pattern: String,
    /// More log output; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Month-scale time series at 1 Hz and hourly rate, histogram and coverage.
    Timeseries(TimeseriesArgs),
    /// Time-of-day variance profile with weekday/weekend split.
    Variance(VarianceArgs),
    /// Skewed-Gaussian fits of day, night and full-data field distributions.
    Fit(FitArgs),
    /// Welch power spectral density and power-line harmonic table.
    Psd(PsdArgs),
    /// Morlet wavelet scalogram.
    Scalogram(ScalogramArgs),
    /// Ensemble-averaged periodic waveform.
    Extract(ExtractArgs),
    /// Two-station cross-correlation with a permutation significance level.
    Xcorr(XcorrArgs),
    /// Generates a synthetic dataset from a scene file.
    Synth(SynthArgs),
    /// Coverage report of the dataset root.
    Catalog(CatalogArgs),
    /// Converts a foreign binary file into a canonical hour file.
    Import(ImportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Timeseries(_) => "timeseries",
            Command::Variance(_) => "variance",
            Command::Fit(_) => "fit",
            Command::Psd(_) => "psd",
            Command::Scalogram(_) => "scalogram",
            Command::Extract(_) => "extract",
            Command::Xcorr(_) => "xcorr",
            Command::Synth(_) => "synth",
            Command::Catalog(_) => "catalog",
            Command::Import(_) => "import",
        }
    }
}

/// Which quantity of a vector station to analyse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Signal {
    #[default]
    Scalar,
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PartArg {
    #[default]
    Day,
    Night,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TaperArg {
    #[default]
    Hann,
    Hamming,
    Rectangular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightingArg {
    #[default]
    Unweighted,
    Poisson,
}

/// Time range; epoch seconds, `YYYY-MM-DD` or RFC 3339. Defaults to coverage bounds.
#[derive(Debug, Clone, Args, Serialize)]
pub struct RangeArgs {
    #[arg(long)]
    pub start: Option<String>,
    #[arg(long)]
    pub end: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct TimeseriesArgs {
    /// Station to export; repeat for several.
    #[arg(long = "station")]
    pub stations: Vec<String>,
    #[command(flatten)]
    pub range: RangeArgs,
    /// IAGA-2002 observatory file to overlay.
    #[arg(long)]
    pub geomag: Option<PathBuf>,
    /// Relative-variation histogram bin width (µT); default Freedman–Diaconis.
    #[arg(long)]
    pub hist_width: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct VarianceArgs {
    #[arg(long)]
    pub station: Option<String>,
    /// `berkeley`, `brooklyn` or `HH:MM-HH:MM` local night.
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long, default_value_t = 1200.0)]
    pub bin_seconds: f64,
    /// Local date (YYYY-MM-DD) counted as weekend; repeatable.
    #[arg(long = "holiday")]
    pub holidays: Vec<String>,
    #[arg(long, value_enum, default_value_t)]
    pub signal: Signal,
    #[arg(long, default_value_t = 1.0)]
    pub rate: f64,
    #[command(flatten)]
    pub range: RangeArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[arg(long)]
    pub station: Option<String>,
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long, value_enum, default_value_t)]
    pub signal: Signal,
    #[arg(long, default_value_t = 1.0)]
    pub rate: f64,
    /// Histogram bin width (µT); default Freedman–Diaconis on the full data.
    #[arg(long)]
    pub bin_width: Option<f64>,
    #[arg(long, value_enum, default_value_t)]
    pub weighting: WeightingArg,
    #[command(flatten)]
    pub range: RangeArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct PsdArgs {
    #[arg(long)]
    pub station: Option<String>,
    #[arg(long, value_enum, default_value_t)]
    pub signal: Signal,
    /// Decimate to this rate first; default is the native rate, streamed.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Segment length in samples; default 2^20 at full rate, 2^16 at 1 Hz.
    #[arg(long)]
    pub segment: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub overlap: f64,
    #[arg(long, value_enum, default_value_t)]
    pub taper: TaperArg,
    #[arg(long, default_value_t = 60.0)]
    pub fundamental: f64,
    /// Harmonics to tabulate; default as many as fit below Nyquist, at most 6.
    #[arg(long)]
    pub harmonics: Option<usize>,
    #[command(flatten)]
    pub range: RangeArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ScalogramArgs {
    #[arg(long)]
    pub station: Option<String>,
    #[arg(long, value_enum, default_value_t)]
    pub signal: Signal,
    #[arg(long, default_value_t = 1.0)]
    pub rate: f64,
    /// Lowest frequency; default one cycle per analysed span.
    #[arg(long)]
    pub fmin: Option<f64>,
    /// Highest frequency; default Nyquist.
    #[arg(long)]
    pub fmax: Option<f64>,
    #[arg(long, default_value_t = 12)]
    pub voices: usize,
    /// Output every n-th time sample.
    #[arg(long, default_value_t = 60)]
    pub stride: usize,
    #[command(flatten)]
    pub range: RangeArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ExtractArgs {
    #[arg(long)]
    pub station: Option<String>,
    #[arg(long, value_enum, default_value_t)]
    pub signal: Signal,
    #[arg(long, default_value_t = 1.0)]
    pub rate: f64,
    #[arg(long, default_value_t = 1200.0)]
    pub period: f64,
    #[arg(long, default_value_t = 6000.0)]
    pub window: f64,
    /// High-pass cutoff applied first, or `none`.
    #[arg(long, default_value = "0.001")]
    pub highpass: String,
    #[arg(long, default_value = "berkeley")]
    pub schedule: String,
    #[arg(long, value_enum, default_value_t)]
    pub part: PartArg,
    #[arg(long)]
    pub max_windows: Option<usize>,
    #[command(flatten)]
    pub range: RangeArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct XcorrArgs {
    #[arg(long)]
    pub station_a: Option<String>,
    #[arg(long)]
    pub station_b: Option<String>,
    /// Portable-sensor CSV log used instead of a catalog station for side a.
    #[arg(long)]
    pub log_a: Option<PathBuf>,
    #[arg(long)]
    pub log_b: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub signal_a: Signal,
    #[arg(long, value_enum, default_value_t)]
    pub signal_b: Signal,
    #[arg(long, default_value_t = 1.0)]
    pub rate: f64,
    /// `lowpass:<Hz>`, `highpass:<Hz>` or `none`.
    #[arg(long, default_value = "none")]
    pub filter_a: String,
    #[arg(long, default_value = "none")]
    pub filter_b: String,
    #[arg(long, default_value_t = 600.0)]
    pub max_lag: f64,
    /// Circular-shift permutations for the null threshold; 0 skips it.
    #[arg(long, default_value_t = 1000)]
    pub permutations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub range: RangeArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long)]
    pub scene: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CatalogArgs {}

#[derive(Debug, Args, Serialize)]
pub struct ImportArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub station: Option<String>,
    /// Hour the file holds (UTC); epoch, or RFC 3339.
    #[arg(long)]
    pub hour: Option<String>,
    #[arg(long)]
    pub channel: Option<String>,
    /// f32, f64, i16 or i32.
    #[arg(long, default_value = "f64")]
    pub sample_type: String,
    #[arg(long)]
    pub big_endian: bool,
    #[arg(long, default_value_t = 0)]
    pub header_bytes: usize,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 0.0)]
    pub offset: f64,
}
