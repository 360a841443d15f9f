//! Variance profiles, histograms and skewed-Gaussian distribution fits.

mod histogram;
mod skewgauss;
mod variance;

pub use histogram::{quantile_sorted, Binning, Histogram};
pub use skewgauss::{
    default_init, eval_skew_gauss, fit_skew_gauss, fit_skew_gauss_with, FitOptions, FitOutcome,
    FitWeighting, SkewGaussParams,
};
pub use variance::{split_day_night, variance_profile, DayNightSplit, VarianceProfile};
