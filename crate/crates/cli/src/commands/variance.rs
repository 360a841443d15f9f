use serde::Serialize;

use urbmag::stats::variance_profile;
use urbmag::DayPart;

use crate::args::VarianceArgs;
use crate::output::{
    check_station, load_signal, open_catalog, parse_date, require, require_schedule, resolve_range, station_context,
    station_inputs, Outputs,
};
use crate::{CliError, Global, Run};

#[derive(Serialize)]
struct Summary {
    station: String,
    bin_seconds: f64,
    bins_per_day: usize,
    days: usize,
    weekday_days: usize,
    night_start_s: f64,
    night_end_s: f64,
    utc_offset_s: f64,
    day_mean_ut2: Option<f64>,
    night_mean_ut2: Option<f64>,
    day_night_ratio: Option<f64>,
}

pub fn run(g: &Global, a: &VarianceArgs) -> Result<Run, CliError> {
    let schedule = require_schedule(&a.schedule)?;
    let st = require(&a.station, "station")?;
    let holidays = a.holidays.iter().map(|h| parse_date(h)).collect::<Result<Vec<_>, _>>()?;
    let cat = open_catalog(&g.data, &g.pattern)?;
    check_station(&cat, st)?;
    let (t0, t1) = resolve_range(&cat, st, &a.range)?;
    let s = load_signal(&cat, st, t0, t1, Some(a.rate), a.signal)?;
    let offset = cat.meta(st).map(|m| m.utc_offset_s()).unwrap_or(0.0);
    let p = variance_profile(&s, offset, a.bin_seconds, &holidays).map_err(|e| station_context(st, e))?;

    let mut out = Outputs::create(&g.out)?;
    let (weekday, weekend) = (p.weekday_average(), p.weekend_average());
    let mut csv = out.csv(&format!("{st}_variance_profile.csv"))?;
    csv.header(&["bin", "local_start_s", "part", "daily_ut2", "weekday_ut2", "weekend_ut2"])?;
    for b in 0..p.bins_per_day() {
        let start = b as f64 * p.bin_seconds;
        let part = match schedule.classify_interval(start, start + p.bin_seconds) {
            Some(DayPart::Day) => "day",
            Some(DayPart::Night) => "night",
            _ => "boundary",
        };
        csv.text(b).num(start).text(part);
        csv.opt(p.daily_average[b]).opt(weekday[b]).opt(weekend[b]).end()?;
    }
    csv.finish()?;

    let mut csv = out.csv(&format!("{st}_variance_matrix.csv"))?;
    csv.header(&["date", "weekday", "bin", "variance_ut2"])?;
    for (d, row) in p.matrix.iter().enumerate() {
        for (b, v) in row.iter().enumerate() {
            csv.text(p.dates[d]).text(p.weekday_mask[d]).text(b).opt(*v).end()?;
        }
    }
    csv.finish()?;

    let summary = Summary {
        station: st.to_string(),
        bin_seconds: p.bin_seconds,
        bins_per_day: p.bins_per_day(),
        days: p.days(),
        weekday_days: p.weekday_mask.iter().filter(|&&w| w).count(),
        night_start_s: schedule.night_start_s(),
        night_end_s: schedule.night_end_s(),
        utc_offset_s: offset,
        day_mean_ut2: p.part_mean(&schedule, DayPart::Day),
        night_mean_ut2: p.part_mean(&schedule, DayPart::Night),
        day_night_ratio: p.day_night_ratio(&schedule),
    };
    out.json(&format!("{st}_variance_summary.json"), &summary)?;
    Ok(Run { outputs: out, inputs: station_inputs(&cat, st, t0, t1) })
}
