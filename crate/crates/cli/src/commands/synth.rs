use urbmag::synth::{generate, write_raw_hours, SceneSpec};

use crate::args::SynthArgs;
use crate::output::write_text;
use crate::{CliError, Global, Run};
use crate::output::Outputs;

pub fn run(g: &Global, a: &SynthArgs) -> Result<Run, CliError> {
    let path = a
        .scene
        .as_ref()
        .ok_or_else(|| CliError::Usage("--scene is required".into()))?;
    let scene = SceneSpec::from_file(path)?;
    let series = generate(&scene)?;
    let mut out = Outputs::create(&g.out)?;
    let written = write_raw_hours(&series, &out.dir)?;
    let ids: std::collections::BTreeSet<&str> = series.iter().map(|v| v.station.station_id.as_str()).collect();
    out.files.extend(written);
    for id in ids {
        out.files.push(urbmag::ingest::meta_path(&out.dir, id));
    }
    let copy = out.file("scene.toml");
    write_text(&copy, &scene.to_toml()?)?;
    Ok(Run { outputs: out, inputs: vec![path.clone()] })
}
