use std::collections::BTreeMap;

use serde::Serialize;

use urbmag::StationMeta;

use super::timeseries::{channel_coverage, ChannelCoverage};
use crate::args::CatalogArgs;
use crate::output::{open_catalog, Outputs};
use crate::{CliError, Global, Run};

#[derive(Serialize)]
struct Station {
    meta: Option<StationMeta>,
    files: usize,
    channels: BTreeMap<String, ChannelCoverage>,
}

#[derive(Serialize)]
struct Report {
    root: String,
    pattern: String,
    stations: BTreeMap<String, Station>,
    unparsed: Vec<String>,
}

pub fn run(g: &Global, _a: &CatalogArgs) -> Result<Run, CliError> {
    let cat = open_catalog(&g.data, &g.pattern)?;
    let mut stations = BTreeMap::new();
    for id in cat.station_ids() {
        stations.insert(
            id.to_string(),
            Station {
                meta: cat.meta(id).cloned(),
                files: cat.entries.iter().filter(|e| e.station_id == id).count(),
                channels: channel_coverage(&cat, id),
            },
        );
    }
    let report = Report {
        root: cat.root_path.display().to_string(),
        pattern: g.pattern.clone(),
        stations,
        unparsed: cat.unparsed.iter().map(|p| p.display().to_string()).collect(),
    };
    let mut out = Outputs::create(&g.out)?;
    out.json("catalog.json", &report)?;
    Ok(Run { outputs: out, inputs: Vec::new() })
}
