//! Rate conversion, filtering and segmentation.

mod decimate;
mod filter;
mod segment;

pub use decimate::{
    block_mean, decimate, integer_ratio, kaiser_lowpass, stage_factors, StreamingDecimator,
    STAGE_ATTENUATION_DB,
};
pub use filter::{apply_filter, transient_gaps, transient_ranges, FilterKind, FilterSpec};
pub use segment::{segmentize, Segment, Segmentation};

use crate::error::Result;
use crate::model::{relative_variation, TimeSeries};

/// Removes the gap-aware mean; same operation as [`relative_variation`].
pub fn detrend_mean(s: &TimeSeries) -> Result<TimeSeries> {
    relative_variation(s)
}
