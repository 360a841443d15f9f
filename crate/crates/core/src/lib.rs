//! Analysis toolkit for urban magnetometer station data.
//!
//! The pipeline runs from raw station files ([`ingest`]) through rate
//! conversion and filtering ([`preprocess`]), windowed variance and
//! skewed-Gaussian distribution fits ([`stats`]), spectral estimation
//! ([`spectral`]), periodic-signal extraction ([`extract`]) and two-station
//! cross-correlation ([`correlate`]). [`synth`] generates known-truth scenes
//! for validating every stage.

pub mod correlate;
pub mod error;
pub mod extract;
pub mod ingest;
pub mod model;
pub mod preprocess;
pub mod spectral;
pub mod stats;
pub mod synth;

pub use error::{Error, ErrorClass, Result};
pub use model::{
    local_midnight_before, local_time_of_day, relative_variation, scalar_field, slice_time,
    stitch, Channel, DayNightSchedule, DayPart, GapMap, SensorKind, StationMeta, TimeSeries,
    VectorSeries,
};
pub use preprocess::{FilterKind, FilterSpec};

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
