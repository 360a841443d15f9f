use std::collections::BTreeMap;

use serde::Serialize;

use urbmag::ingest::{load_station_range, read_iaga2002, DatasetCatalog, IagaComponent};
use urbmag::preprocess::block_mean;
use urbmag::stats::{Binning, Histogram};
use urbmag::{relative_variation, scalar_field, slice_time, Channel, TimeSeries};

use crate::args::TimeseriesArgs;
use crate::output::{check_station, open_catalog, resolve_range, station_context, station_inputs, Outputs};
use crate::{CliError, Global, Run};

#[derive(Serialize)]
pub struct ChannelCoverage {
    pub spans: Vec<(i64, i64)>,
    pub holes: Vec<(i64, i64)>,
    pub covered_seconds: i64,
}

#[derive(Serialize)]
struct StationReport {
    range: (f64, f64),
    samples_1hz: usize,
    gap_samples_1hz: usize,
    channels: BTreeMap<String, ChannelCoverage>,
}

pub fn channel_coverage(cat: &DatasetCatalog, station: &str) -> BTreeMap<String, ChannelCoverage> {
    Channel::ALL
        .iter()
        .filter_map(|&c| cat.coverage_for(station, c).map(|cov| (c, cov)))
        .map(|(c, cov)| {
            (
                c.to_string(),
                ChannelCoverage {
                    spans: cov.spans.clone(),
                    holes: cov.holes(),
                    covered_seconds: cov.covered_seconds(),
                },
            )
        })
        .collect()
}

pub fn run(g: &Global, a: &TimeseriesArgs) -> Result<Run, CliError> {
    if a.stations.is_empty() {
        return Err(CliError::Usage("select at least one --station".into()));
    }
    let cat = open_catalog(&g.data, &g.pattern)?;
    for st in &a.stations {
        check_station(&cat, st)?;
    }
    let mut out = Outputs::create(&g.out)?;
    let mut inputs = Vec::new();
    let mut report = BTreeMap::new();
    let mut span = (f64::INFINITY, f64::NEG_INFINITY);
    for st in &a.stations {
        let (t0, t1) = resolve_range(&cat, st, &a.range)?;
        span = (span.0.min(t0), span.1.max(t1));
        let v = load_station_range(&cat, st, t0, t1, Some(1.0)).map_err(|e| station_context(st, e))?;
        let scalar = scalar_field(&v)?;

        let mut csv = out.csv(&format!("{st}_1hz.csv"))?;
        csv.header(&["epoch_s", "bx_ut", "by_ut", "bz_ut", "scalar_ut"])?;
        for i in 0..scalar.len() {
            csv.num(scalar.time_at(i));
            for s in [&v.x, &v.y, &v.z, &scalar] {
                csv.num(if s.is_gap(i) { f64::NAN } else { s.values()[i] });
            }
            csv.end()?;
        }
        csv.finish()?;

        let hourly: Vec<TimeSeries> = [&v.x, &v.y, &v.z, &scalar]
            .iter()
            .map(|s| block_mean(s, 3600.0))
            .collect::<urbmag::Result<_>>()?;
        let mut csv = out.csv(&format!("{st}_hourly.csv"))?;
        csv.header(&["epoch_s", "bx_ut", "by_ut", "bz_ut", "scalar_ut"])?;
        for i in 0..hourly[0].len() {
            csv.num(hourly[0].time_at(i));
            for s in &hourly {
                csv.num(if s.is_gap(i) { f64::NAN } else { s.values()[i] });
            }
            csv.end()?;
        }
        csv.finish()?;

        let rel = relative_variation(&scalar).map_err(|e| station_context(st, e))?;
        let values: Vec<f64> = rel.valid_iter().map(|(_, x)| x).collect();
        let binning = match a.hist_width {
            Some(w) => Binning::Width(w),
            None => Binning::FreedmanDiaconis,
        };
        let h = Histogram::from_samples(&values, binning)?;
        let mut csv = out.csv(&format!("{st}_histogram.csv"))?;
        csv.header(&["bin_lo_ut", "bin_hi_ut", "count"])?;
        for (k, c) in h.counts().iter().enumerate() {
            csv.num(h.edges()[k]).num(h.edges()[k + 1]).num(*c).end()?;
        }
        csv.finish()?;

        report.insert(
            st.clone(),
            StationReport {
                range: (t0, t1),
                samples_1hz: scalar.len(),
                gap_samples_1hz: scalar.gaps().count(),
                channels: channel_coverage(&cat, st),
            },
        );
        inputs.extend(station_inputs(&cat, st, t0, t1));
    }

    if let Some(path) = &a.geomag {
        let s = read_iaga2002(path, IagaComponent::Total)?;
        let s = slice_time(&s, span.0, span.1)?;
        let rel = relative_variation(&s)?;
        let mut csv = out.csv("geomag.csv")?;
        csv.header(&["epoch_s", "field_ut", "relative_ut"])?;
        for i in 0..s.len() {
            let gap = s.is_gap(i);
            csv.num(s.time_at(i));
            csv.num(if gap { f64::NAN } else { s.values()[i] });
            csv.num(if gap { f64::NAN } else { rel.values()[i] });
            csv.end()?;
        }
        csv.finish()?;
        inputs.push(path.clone());
    }
    out.json("coverage.json", &report)?;
    Ok(Run { outputs: out, inputs })
}
