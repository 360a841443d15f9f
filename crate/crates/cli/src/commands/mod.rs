mod catalog;
mod extract;
mod fit;
mod import;
mod psd;
mod scalogram;
mod synth;
mod timeseries;
mod variance;
mod xcorr;

use crate::args::Command;
use crate::{CliError, Global, Run};

pub fn dispatch(g: &Global, c: &Command) -> Result<Run, CliError> {
    match c {
        Command::Timeseries(a) => timeseries::run(g, a),
        Command::Variance(a) => variance::run(g, a),
        Command::Fit(a) => fit::run(g, a),
        Command::Psd(a) => psd::run(g, a),
        Command::Scalogram(a) => scalogram::run(g, a),
        Command::Extract(a) => extract::run(g, a),
        Command::Xcorr(a) => xcorr::run(g, a),
        Command::Synth(a) => synth::run(g, a),
        Command::Catalog(a) => catalog::run(g, a),
        Command::Import(a) => import::run(g, a),
    }
}
