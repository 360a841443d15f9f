use serde::Serialize;

use urbmag::ingest::{stream_station, StreamEvent};
use urbmag::spectral::{default_segment_len, find_harmonics, psd_welch, write_spectrum_csv, Spectrum, Taper, WelchAccumulator, WelchMeta};
use urbmag::Channel;

use crate::args::{PsdArgs, Signal, TaperArg};
use crate::output::{check_station, load_signal, open_catalog, require, resolve_range, station_context, station_inputs, Outputs};
use crate::{CliError, Global, Run};

/// Harmonics tabulated by default when they fit below Nyquist.
const DEFAULT_HARMONICS: usize = 6;

#[derive(Serialize)]
struct Summary {
    station: String,
    start_epoch: f64,
    samples: usize,
    gap_samples: usize,
    streamed: bool,
    welch: WelchMeta,
    resolution_hz: f64,
    total_power_ut2: f64,
    harmonics_detected: usize,
}

pub fn run(g: &Global, a: &PsdArgs) -> Result<Run, CliError> {
    let st = require(&a.station, "station")?;
    let cat = open_catalog(&g.data, &g.pattern)?;
    check_station(&cat, st)?;
    let (t0, t1) = resolve_range(&cat, st, &a.range)?;
    let native = cat
        .meta(st)
        .map(|m| m.nominal_rate_hz)
        .ok_or_else(|| urbmag::Error::Empty(format!("no metadata sidecar for station '{st}'")))?;
    let taper = match a.taper {
        TaperArg::Hann => Taper::Hann,
        TaperArg::Hamming => Taper::Hamming,
        TaperArg::Rectangular => Taper::Rectangular,
    };

    let (spec, start_epoch, samples, gap_samples, streamed): (Spectrum, f64, usize, usize, bool) =
        match a.rate.filter(|&r| r < native) {
            None => {
                let expected = ((t1 - t0) * native).round().max(0.0) as usize;
                let seg = a.segment.unwrap_or_else(|| default_segment_len(native, expected));
                let mut acc = WelchAccumulator::new(native, seg, a.overlap, taper)?;
                let channel = match a.signal {
                    Signal::Scalar => None,
                    Signal::X => Some(Channel::X),
                    Signal::Y => Some(Channel::Y),
                    Signal::Z => Some(Channel::Z),
                };
                let sum = stream_station(&cat, st, t0, t1, channel, |e| match e {
                    StreamEvent::Samples(x) => acc.push(x),
                    StreamEvent::Gap(n) => acc.push_gap(n),
                })
                .map_err(|e| station_context(st, e))?;
                let spec = acc.finish().map_err(|e| station_context(st, e))?;
                (spec, sum.start_epoch, sum.samples, sum.gap_samples, true)
            }
            Some(rate) => {
                let s = load_signal(&cat, st, t0, t1, Some(rate), a.signal)?;
                let seg = a.segment.unwrap_or_else(|| default_segment_len(rate, s.len()));
                let spec = psd_welch(&s, seg, a.overlap, taper).map_err(|e| station_context(st, e))?;
                (spec, s.start_epoch(), s.len(), s.gaps().count(), false)
            }
        };

    let nyquist = spec.meta.rate_hz / 2.0;
    let count = match a.harmonics {
        Some(n) => n,
        None => {
            let fit = ((nyquist - 2.0) / a.fundamental).floor();
            if fit >= 1.0 { DEFAULT_HARMONICS.min(fit as usize) } else { 0 }
        }
    };
    let harmonics = find_harmonics(&spec, a.fundamental, count)?;

    let mut out = Outputs::create(&g.out)?;
    write_spectrum_csv(&spec, &out.file(&format!("{st}_psd.csv")))?;
    let mut csv = out.csv(&format!("{st}_harmonics.csv"))?;
    csv.header(&["index", "freq_hz", "peak_psd_ut2_per_hz", "local_snr", "detected"])?;
    for h in &harmonics {
        csv.text(h.index).num(h.freq_hz).num(h.peak_power).num(h.local_snr).text(h.detected).end()?;
    }
    csv.finish()?;
    let summary = Summary {
        station: st.to_string(),
        start_epoch,
        samples,
        gap_samples,
        streamed,
        welch: spec.meta,
        resolution_hz: spec.resolution_hz(),
        total_power_ut2: spec.total_power(),
        harmonics_detected: harmonics.iter().filter(|h| h.detected).count(),
    };
    out.json(&format!("{st}_psd_summary.json"), &summary)?;
    Ok(Run { outputs: out, inputs: station_inputs(&cat, st, t0, t1) })
}
