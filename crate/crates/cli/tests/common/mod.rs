#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use urbmag::synth::write_raw_hours;
use urbmag::{SensorKind, StationMeta, TimeSeries, VectorSeries};

pub fn urbmag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_urbmag"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("spawn urbmag")
}

pub fn ok(args: &[&str]) -> Output {
    let o = urbmag(args);
    assert!(
        o.status.success(),
        "urbmag {args:?} failed with {:?}: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

pub fn code(args: &[&str]) -> i32 {
    urbmag(args).status.code().expect("exit code")
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Writes one 1 Hz (or `rate`) station whose x axis carries `x`; y and z are zero.
pub fn write_station(dir: &Path, id: &str, start: f64, rate: f64, x: Vec<f64>, utc_offset_hours: f64) {
    let n = x.len();
    let mk = |v: Vec<f64>, c: &str| TimeSeries::new(start, rate, v, format!("{id} {c}")).unwrap();
    let meta = StationMeta::new(id, SensorKind::FluxgateBiomed)
        .with_rate(rate)
        .with_utc_offset(utc_offset_hours);
    let v = VectorSeries::new(mk(x, "x"), mk(vec![0.0; n], "y"), mk(vec![0.0; n], "z"), meta).unwrap();
    write_raw_hours(&[v], dir).unwrap();
}

pub fn read_json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

pub fn csv_rows(p: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(p).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

/// File contents keyed by name; manifests lose their creation timestamp.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if !p.is_file() {
            continue;
        }
        let mut bytes = std::fs::read(&p).unwrap();
        if p.to_string_lossy().ends_with(".manifest.json") {
            let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
            v.as_object_mut().unwrap().remove("created_utc");
            bytes = serde_json::to_vec(&v).unwrap();
        }
        out.insert(p.file_name().unwrap().into(), bytes);
    }
    out
}
