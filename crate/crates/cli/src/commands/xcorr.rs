use std::path::PathBuf;

use serde::Serialize;

use urbmag::correlate::{cross_correlate, significance_null, NullThresholds};
use urbmag::ingest::{read_vmr_log, DatasetCatalog};
use urbmag::preprocess::decimate;
use urbmag::{scalar_field, FilterSpec, SensorKind, StationMeta, TimeSeries};

use crate::args::{RangeArgs, Signal, XcorrArgs};
use crate::output::{check_station, load_signal, open_catalog, parse_filter, parse_time, resolve_range, station_inputs, Outputs};
use crate::{CliError, Global, Run};

#[derive(Serialize)]
struct Summary {
    a: String,
    b: String,
    rate_hz: f64,
    max_lag_s: f64,
    filters: [Option<FilterSpec>; 2],
    best_lag_s: f64,
    best_coeff: f64,
    overlap_start: f64,
    overlap_samples: usize,
    null: Option<NullThresholds>,
    significant_95: Option<bool>,
}

struct Side {
    label: String,
    series: TimeSeries,
    inputs: Vec<PathBuf>,
}

fn pick(v: &urbmag::VectorSeries, signal: Signal) -> urbmag::Result<TimeSeries> {
    Ok(match signal {
        Signal::Scalar => scalar_field(v)?,
        Signal::X => v.x.clone(),
        Signal::Y => v.y.clone(),
        Signal::Z => v.z.clone(),
    })
}

fn side(
    g: &Global,
    cat: &mut Option<DatasetCatalog>,
    station: &Option<String>,
    log: &Option<PathBuf>,
    signal: Signal,
    rate: f64,
    range: &RangeArgs,
    tag: &str,
) -> Result<Side, CliError> {
    match (station, log) {
        (Some(st), None) => {
            if cat.is_none() {
                *cat = Some(open_catalog(&g.data, &g.pattern)?);
            }
            let c = cat.as_ref().expect("catalog opened");
            check_station(c, st)?;
            let (t0, t1) = resolve_range(c, st, range)?;
            Ok(Side {
                label: st.clone(),
                series: load_signal(c, st, t0, t1, Some(rate), signal)?,
                inputs: station_inputs(c, st, t0, t1),
            })
        }
        (None, Some(path)) => {
            let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let v = read_vmr_log(path, &StationMeta::new(id.clone(), SensorKind::VmrTwinleaf))?;
            let mut s = pick(&v, signal)?;
            if s.rate_hz() > rate {
                s = decimate(&s, rate)?;
            }
            if range.start.is_some() || range.end.is_some() {
                let t0 = range.start.as_deref().map(parse_time).transpose()?.unwrap_or(s.start_epoch());
                let t1 = range.end.as_deref().map(parse_time).transpose()?.unwrap_or(s.end_epoch());
                s = urbmag::slice_time(&s, t0, t1)?;
            }
            Ok(Side { label: id, series: s, inputs: vec![path.clone()] })
        }
        _ => Err(CliError::Usage(format!("give exactly one of --station-{tag} and --log-{tag}"))),
    }
}

pub fn run(g: &Global, a: &XcorrArgs) -> Result<Run, CliError> {
    let fa = parse_filter(&a.filter_a)?;
    let fb = parse_filter(&a.filter_b)?;
    let mut cat = None;
    let sa = side(g, &mut cat, &a.station_a, &a.log_a, a.signal_a, a.rate, &a.range, "a")?;
    let sb = side(g, &mut cat, &a.station_b, &a.log_b, a.signal_b, a.rate, &a.range, "b")?;
    let r = cross_correlate(&sa.series, &sb.series, a.max_lag, fa.as_ref(), fb.as_ref())?;
    let null = if a.permutations > 0 {
        Some(significance_null(&sa.series, &sb.series, a.max_lag, a.permutations, a.seed, fa.as_ref(), fb.as_ref())?)
    } else {
        None
    };

    let mut out = Outputs::create(&g.out)?;
    let mut csv = out.csv(&format!("{}_{}_xcorr.csv", sa.label, sb.label))?;
    csv.header(&["lag_s", "coeff"])?;
    for (l, c) in r.lags_s.iter().zip(&r.coeffs) {
        csv.num(*l).num(*c).end()?;
    }
    csv.finish()?;
    let summary = Summary {
        a: sa.label.clone(),
        b: sb.label.clone(),
        rate_hz: sa.series.rate_hz(),
        max_lag_s: a.max_lag,
        filters: r.filters,
        best_lag_s: r.best_lag_s,
        best_coeff: r.best_coeff,
        overlap_start: r.overlap_start,
        overlap_samples: r.overlap_samples,
        significant_95: null.as_ref().map(|n| r.best_coeff.abs() > n.p95),
        null,
    };
    out.json(&format!("{}_{}_xcorr_summary.json", sa.label, sb.label), &summary)?;
    let mut inputs = sa.inputs;
    inputs.extend(sb.inputs);
    Ok(Run { outputs: out, inputs })
}
