use serde::Serialize;

use urbmag::extract::{extract_periodic, ExtractOptions};
use urbmag::{DayPart, FilterSpec};

use crate::args::{ExtractArgs, PartArg};
use crate::output::{
    check_station, load_signal, open_catalog, parse_schedule, require, resolve_range, station_context, station_inputs,
    Outputs,
};
use crate::{CliError, Global, Run};

#[derive(Serialize)]
struct Summary {
    station: String,
    period_s: f64,
    window_s: f64,
    rate_hz: f64,
    prefilter: Option<FilterSpec>,
    filter_gain: f64,
    segments_used: usize,
    residual_ut: f64,
    amplitude_ut: f64,
    phase_rad: f64,
    corrected_amplitude_ut: f64,
    window_starts: Vec<f64>,
}

pub fn run(g: &Global, a: &ExtractArgs) -> Result<Run, CliError> {
    let st = require(&a.station, "station")?;
    let schedule = parse_schedule(&a.schedule)?;
    let prefilter = match a.highpass.trim() {
        "none" => None,
        hz => Some(FilterSpec::highpass(
            hz.parse()
                .map_err(|_| CliError::Usage(format!("--highpass '{hz}' is not a number or 'none'")))?,
        )),
    };
    let cat = open_catalog(&g.data, &g.pattern)?;
    check_station(&cat, st)?;
    let (t0, t1) = resolve_range(&cat, st, &a.range)?;
    let s = load_signal(&cat, st, t0, t1, Some(a.rate), a.signal)?;
    let opts = ExtractOptions {
        period_s: a.period,
        window_s: a.window,
        prefilter,
        schedule,
        part: match a.part {
            PartArg::Day => DayPart::Day,
            PartArg::Night => DayPart::Night,
            PartArg::All => DayPart::All,
        },
        utc_offset_s: cat.meta(st).map(|m| m.utc_offset_s()).unwrap_or(0.0),
        max_windows: a.max_windows,
    };
    let r = extract_periodic(&s, &opts).map_err(|e| station_context(st, e))?;

    let mut out = Outputs::create(&g.out)?;
    let mut csv = out.csv(&format!("{st}_waveform.csv"))?;
    csv.header(&["index", "time_s", "field_ut"])?;
    for (i, v) in r.waveform.iter().enumerate() {
        csv.text(i).num(i as f64 / r.rate_hz).num(*v).end()?;
    }
    csv.finish()?;
    let (amplitude, phase) = r.sinusoid(1.0 / r.period_s);
    let summary = Summary {
        station: st.to_string(),
        period_s: r.period_s,
        window_s: a.window,
        rate_hz: r.rate_hz,
        prefilter: r.prefilter,
        filter_gain: r.filter_gain,
        segments_used: r.segments_used,
        residual_ut: r.residual_ut,
        amplitude_ut: amplitude,
        phase_rad: phase,
        corrected_amplitude_ut: r.corrected_amplitude(),
        window_starts: r.window_starts.clone(),
    };
    out.json(&format!("{st}_extract_summary.json"), &summary)?;
    Ok(Run { outputs: out, inputs: station_inputs(&cat, st, t0, t1) })
}
