use urbmag::spectral::{cwt_scalogram, write_scalogram};

use crate::args::ScalogramArgs;
use crate::output::{check_station, load_signal, open_catalog, require, resolve_range, station_context, station_inputs, Outputs};
use crate::{CliError, Global, Run};

pub fn run(g: &Global, a: &ScalogramArgs) -> Result<Run, CliError> {
    let st = require(&a.station, "station")?;
    let cat = open_catalog(&g.data, &g.pattern)?;
    check_station(&cat, st)?;
    let (t0, t1) = resolve_range(&cat, st, &a.range)?;
    let s = load_signal(&cat, st, t0, t1, Some(a.rate), a.signal)?;
    let fmin = a.fmin.unwrap_or(s.rate_hz() / s.len() as f64);
    let fmax = a.fmax.unwrap_or(s.rate_hz() / 2.0);
    let sc = cwt_scalogram(&s, fmin, fmax, a.voices, a.stride).map_err(|e| station_context(st, e))?;

    let mut out = Outputs::create(&g.out)?;
    write_scalogram(&sc, &out.file(&format!("{st}_scalogram.grid")))?;
    let mut csv = out.csv(&format!("{st}_scalogram_rows.csv"))?;
    csv.header(&["row", "freq_hz", "bandwidth_hz", "coi_s", "mean_power_ut2_per_hz"])?;
    for (f, bw) in sc.bandwidths_hz().iter().enumerate() {
        let row = sc.row(f);
        let mean = row.iter().sum::<f64>() / row.len() as f64;
        csv.text(f).num(sc.freqs_hz[f]).num(*bw).num(sc.coi_s[f]).num(mean).end()?;
    }
    csv.finish()?;
    let mut csv = out.csv(&format!("{st}_scalogram_columns.csv"))?;
    csv.header(&["epoch_s", "band_power_ut2", "ridge_hz"])?;
    for ((t, p), r) in sc.times.iter().zip(sc.slice_power()).zip(sc.ridge()) {
        csv.num(*t).num(p).num(r).end()?;
    }
    csv.finish()?;
    Ok(Run { outputs: out, inputs: station_inputs(&cat, st, t0, t1) })
}
