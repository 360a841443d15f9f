use serde::Serialize;

use urbmag::stats::{fit_skew_gauss_with, split_day_night, Binning, FitOptions, FitWeighting, Histogram, SkewGaussParams};
use urbmag::DayPart;

use crate::args::{FitArgs, WeightingArg};
use crate::output::{
    check_station, load_signal, open_catalog, require, require_schedule, resolve_range, station_inputs, Outputs,
};
use crate::{CliError, Global, Run};

#[derive(Serialize)]
struct Estimate {
    value: f64,
    uncertainty: f64,
}

#[derive(Serialize)]
struct PartFit {
    samples: usize,
    amplitude: Estimate,
    mu_ut: Estimate,
    sigma_ut: Estimate,
    gamma: Estimate,
    cost: f64,
    iterations: usize,
    bins_used: usize,
}

impl PartFit {
    fn new(samples: usize, o: &urbmag::stats::FitOutcome) -> Self {
        let p = &o.params;
        let e = |value, uncertainty| Estimate { value, uncertainty };
        Self {
            samples,
            amplitude: e(p.amplitude, p.d_amplitude),
            mu_ut: e(p.mu, p.d_mu),
            sigma_ut: e(p.sigma, p.d_sigma),
            gamma: e(p.gamma, p.d_gamma),
            cost: o.cost,
            iterations: o.iterations,
            bins_used: o.bins_used,
        }
    }
}

/// Day plus night profile compared with the full-data histogram.
#[derive(Serialize)]
struct SumCheck {
    amplitude_sum: f64,
    full_area: f64,
    amplitude_ratio: f64,
    rel_rms_residual: f64,
}

#[derive(Serialize)]
struct Report {
    station: String,
    bin_width_ut: f64,
    weighting: FitWeighting,
    day: PartFit,
    night: PartFit,
    sum_check: SumCheck,
}

pub fn run(g: &Global, a: &FitArgs) -> Result<Run, CliError> {
    let schedule = require_schedule(&a.schedule)?;
    let st = require(&a.station, "station")?;
    let cat = open_catalog(&g.data, &g.pattern)?;
    check_station(&cat, st)?;
    let (t0, t1) = resolve_range(&cat, st, &a.range)?;
    let s = load_signal(&cat, st, t0, t1, Some(a.rate), a.signal)?;
    let offset = cat.meta(st).map(|m| m.utc_offset_s()).unwrap_or(0.0);
    let split = split_day_night(&s, &schedule, offset);
    let (day, night, all) = (
        split.values(&s, DayPart::Day),
        split.values(&s, DayPart::Night),
        split.values(&s, DayPart::All),
    );

    let full = Histogram::from_samples(
        &all,
        match a.bin_width {
            Some(w) => Binning::Width(w),
            None => Binning::FreedmanDiaconis,
        },
    )?;
    let edges = full.edges();
    let common = Binning::Edges { lo: edges[0], hi: edges[edges.len() - 1], bins: full.len() };
    let (hd, hn) = (Histogram::from_samples(&day, common)?, Histogram::from_samples(&night, common)?);
    let weighting = match a.weighting {
        WeightingArg::Unweighted => FitWeighting::Unweighted,
        WeightingArg::Poisson => FitWeighting::Poisson,
    };
    let opts = FitOptions { weighting, ..FitOptions::default() };
    let fd = fit_skew_gauss_with(&hd, None, &opts)?;
    let fnight = fit_skew_gauss_with(&hn, None, &opts)?;

    let mut out = Outputs::create(&g.out)?;
    let model = |p: &SkewGaussParams, x: f64| p.eval(x);
    let centers = full.centers();
    let (mut ss_res, mut ss_full) = (0.0, 0.0);
    let mut csv = out.csv(&format!("{st}_distribution.csv"))?;
    csv.header(&["bin_center_ut", "full_count", "day_count", "night_count", "day_model", "night_model", "sum_model"])?;
    for (k, &x) in centers.iter().enumerate() {
        let (md, mn) = (model(&fd.params, x), model(&fnight.params, x));
        let y = full.counts()[k];
        ss_res += (y - md - mn).powi(2);
        ss_full += y * y;
        csv.num(x).num(y).num(hd.counts()[k]).num(hn.counts()[k]);
        csv.num(md).num(mn).num(md + mn).end()?;
    }
    csv.finish()?;

    let amplitude_sum = fd.params.amplitude + fnight.params.amplitude;
    let full_area = full.in_range() * full.bin_width();
    let report = Report {
        station: st.to_string(),
        bin_width_ut: full.bin_width(),
        weighting,
        day: PartFit::new(day.len(), &fd),
        night: PartFit::new(night.len(), &fnight),
        sum_check: SumCheck {
            amplitude_sum,
            full_area,
            amplitude_ratio: amplitude_sum / full_area,
            rel_rms_residual: (ss_res / ss_full).sqrt(),
        },
    };
    out.json(&format!("{st}_fit.json"), &report)?;
    Ok(Run { outputs: out, inputs: station_inputs(&cat, st, t0, t1) })
}
