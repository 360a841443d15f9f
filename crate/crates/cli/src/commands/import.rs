use urbmag::ingest::{import_foreign, raw_file_name, ForeignLayout};
use urbmag::Channel;

use crate::args::ImportArgs;
use crate::output::{parse_time, require, Outputs};
use crate::{CliError, Global, Run};

pub fn run(g: &Global, a: &ImportArgs) -> Result<Run, CliError> {
    let input = a
        .input
        .as_ref()
        .ok_or_else(|| CliError::Usage("--input is required".into()))?;
    let station = require(&a.station, "station")?;
    let hour = parse_time(require(&a.hour, "hour")?)?;
    let channel: Channel = require(&a.channel, "channel")?.parse()?;
    let layout = ForeignLayout {
        sample: a.sample_type.parse()?,
        big_endian: a.big_endian,
        header_bytes: a.header_bytes,
        scale: a.scale,
        offset: a.offset,
    };
    let mut out = Outputs::create(&g.out)?;
    let dest = out.file(&raw_file_name(station, hour as i64, channel)?);
    let n = import_foreign(input, &layout, &dest)?;
    log::info!("imported {n} samples into {}", dest.display());
    Ok(Run { outputs: out, inputs: vec![input.clone()] })
}
