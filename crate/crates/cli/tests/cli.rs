mod common;

use std::path::Path;

use common::*;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use urbmag::stats::SkewGaussParams;
use urbmag::synth::sample_skew_normal;
use urbmag::DayNightSchedule;

/// 2018-05-28 00:00 UTC.
const T0: f64 = 1_527_465_600.0;

fn scene(dir: &Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("scene.toml");
    std::fs::write(&p, body).unwrap();
    p
}

fn noise(seed: u64, n: usize, sigma: f64) -> Vec<f64> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let d = Normal::new(0.0, sigma).unwrap();
    (0..n).map(|_| d.sample(&mut rng)).collect()
}

#[test]
fn synth_month_timeseries_is_row_exact_and_bit_stable() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = scene(
        tmp.path(),
        &format!(
            "start_epoch = {T0}\nduration_s = 2419200\nrate_hz = 1\nseed = 11\nbackground_ut = [20.0, 5.0, 45.0]\n\
             [[components]]\ntype = \"day_night\"\nday_sigma_ut = 0.1\nnight_sigma_ut = 0.01\n"
        ),
    );
    let (data, out) = (tmp.path().join("data"), tmp.path().join("out"));
    let run = || {
        ok(&["synth", "--scene", s(&sc), "--out", s(&data)]);
        ok(&["timeseries", "--data", s(&data), "--out", s(&out), "--station", "syn"]);
        (snapshot(&data), snapshot(&out))
    };
    let first = run();
    assert_eq!(csv_rows(&out.join("syn_1hz.csv")).len(), 2_419_200);
    assert_eq!(csv_rows(&out.join("syn_hourly.csv")).len(), 672);
    assert!(csv_rows(&out.join("syn_histogram.csv")).len() > 10);
    let cov = read_json(&out.join("coverage.json"));
    assert_eq!(cov["syn"]["gap_samples_1hz"], 0);
    assert_eq!(cov["syn"]["channels"]["x"]["holes"].as_array().unwrap().len(), 0);
    let m = read_json(&out.join("timeseries.manifest.json"));
    assert_eq!(m["inputs"].as_array().unwrap().len(), 672 * 3 + 1);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 4);
    assert!(m["created_utc"].is_string());
    assert_eq!(run(), first);
}

#[test]
fn coverage_report_lists_missing_day() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    write_station(&data, "st", T0, 1.0, noise(1, 3 * 86_400, 0.1), 0.0);
    for e in std::fs::read_dir(&data).unwrap() {
        let p = e.unwrap().path();
        if p.to_string_lossy().contains("2018-05-29") {
            std::fs::remove_file(p).unwrap();
        }
    }
    let out = tmp.path().join("out");
    ok(&["timeseries", "--data", s(&data), "--out", s(&out), "--station", "st"]);
    let cov = read_json(&out.join("coverage.json"));
    for c in ["x", "y", "z"] {
        let holes = cov["st"]["channels"][c]["holes"].as_array().unwrap();
        assert_eq!(holes.len(), 1, "{c}");
        assert_eq!(holes[0][0], T0 as i64 + 86_400);
        assert_eq!(holes[0][1], T0 as i64 + 2 * 86_400);
    }
    assert_eq!(cov["st"]["gap_samples_1hz"], 86_400);
    let rows = csv_rows(&out.join("st_1hz.csv"));
    assert_eq!(rows.len(), 3 * 86_400);
    assert_eq!(rows[86_400][1], "");
    ok(&["catalog", "--data", s(&data), "--out", s(&out)]);
    let cat = read_json(&out.join("catalog.json"));
    assert_eq!(cat["stations"]["st"]["channels"]["y"]["holes"].as_array().unwrap().len(), 1);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    write_station(&data, "st", T0, 1.0, vec![50.0; 2 * 86_400], 0.0);
    let (d, o) = (s(&data).to_string(), s(&tmp.path().join("o")).to_string());
    assert_eq!(code(&["timeseries", "--data", &d, "--out", &o]), 2, "empty station selection");
    assert_eq!(code(&["timeseries", "--out", &o, "--station", "st"]), 2, "no dataset root");
    assert_eq!(code(&["timeseries", "--data", &d, "--out", &o, "--station", "nope"]), 2);
    assert_eq!(code(&["variance", "--data", &d, "--out", &o, "--station", "st"]), 2, "missing schedule");
    assert_eq!(code(&["fit", "--data", &d, "--out", &o, "--station", "st"]), 2, "missing schedule");
    assert_eq!(code(&["bogus"]), 2);
    assert_eq!(code(&["psd", "--data", &d, "--out", &o, "--station", "st", "--overlap", "1.5"]), 2);
    let missing = s(&tmp.path().join("absent")).to_string();
    assert_eq!(code(&["timeseries", "--data", &missing, "--out", &o, "--station", "st"]), 3);
    assert_eq!(
        code(&["timeseries", "--data", &d, "--out", &o, "--station", "st", "--start", "2030-01-01", "--end", "2030-01-02"]),
        3
    );
    // a constant field histogram is a single bin
    assert_eq!(code(&["fit", "--data", &d, "--out", &o, "--station", "st", "--schedule", "berkeley"]), 4);
    assert_eq!(code(&["--version"]), 0);
}

#[test]
fn constant_field_gives_zero_variance_profile() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    write_station(&data, "st", T0, 1.0, vec![50.0; 2 * 86_400], 0.0);
    let out = tmp.path().join("out");
    ok(&["variance", "--data", s(&data), "--out", s(&out), "--station", "st", "--schedule", "berkeley"]);
    let rows = csv_rows(&out.join("st_variance_profile.csv"));
    assert_eq!(rows.len(), 72);
    assert!(rows.iter().all(|r| r[3] == "0"), "{:?}", &rows[0]);
    assert_eq!(rows.iter().filter(|r| r[2] == "night").count(), 10);
    assert_eq!(rows.iter().filter(|r| r[2] == "boundary").count(), 1);
    assert_eq!(csv_rows(&out.join("st_variance_matrix.csv")).len(), 2 * 72);
}

#[test]
fn variance_weekday_weekend_split_and_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    // 2018-05-26 is a Saturday; weekend days and the holiday get ten times the noise
    let start = T0 - 2.0 * 86_400.0;
    let mut x = Vec::new();
    for d in 0..7 {
        let sigma = if d < 3 { 1.0 } else { 0.1 };
        x.extend(noise(d, 86_400, sigma).into_iter().map(|v| v + 50.0));
    }
    write_station(&data, "st", start, 1.0, x, 0.0);
    let out = tmp.path().join("out");
    let cfg = tmp.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "data = \"{}\"\nout = \"{}\"\n[variance]\nstation = \"st\"\nschedule = \"23:00-07:00\"\nbin_seconds = 3600\nholiday = [\"2018-05-28\"]\n",
            s(&data),
            s(&out)
        ),
    )
    .unwrap();
    ok(&["variance", "--config", s(&cfg)]);
    let rows = csv_rows(&out.join("st_variance_profile.csv"));
    assert_eq!(rows.len(), 24);
    for r in &rows {
        let (wd, we): (f64, f64) = (r[4].parse().unwrap(), r[5].parse().unwrap());
        assert!((wd / 0.01 - 1.0).abs() < 0.2, "weekday {wd}");
        assert!((we / 1.0 - 1.0).abs() < 0.2, "weekend {we}");
    }
    let sum = read_json(&out.join("st_variance_summary.json"));
    assert_eq!(sum["days"], 7);
    assert_eq!(sum["weekday_days"], 4);
    let m = read_json(&out.join("variance.manifest.json"));
    let argv: Vec<&str> = m["argv"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(argv.contains(&"--holiday=2018-05-28"));
    assert_eq!(m["parameters"]["command"]["variance"]["bin_seconds"], 3600.0);
    // the command line wins over the file
    ok(&["variance", "--config", s(&cfg), "--bin-seconds", "1200"]);
    assert_eq!(csv_rows(&out.join("st_variance_profile.csv")).len(), 72);
}

#[test]
fn fit_report_recovers_reference_parameters() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let local = -4.0;
    let schedule = DayNightSchedule::brooklyn();
    let n = 14 * 86_400;
    let day_p = SkewGaussParams::new(158_547.0, 92.802, 0.930, -1.15);
    let night_p = SkewGaussParams::new(79_559.0, 92.833, 0.617, -0.93);
    let day = sample_skew_normal(&day_p, n, 1).unwrap();
    let night = sample_skew_normal(&night_p, n, 2).unwrap();
    let x: Vec<f64> = (0..n)
        .map(|i| {
            let t = T0 + i as f64;
            if schedule.is_night(t, local * 3600.0) { night[i] } else { day[i] }
        })
        .collect();
    write_station(&data, "bk", T0, 1.0, x, local);
    let out = tmp.path().join("out");
    ok(&["fit", "--data", s(&data), "--out", s(&out), "--station", "bk", "--schedule", "brooklyn"]);
    let r = read_json(&out.join("bk_fit.json"));
    for (part, p) in [("day", day_p), ("night", night_p)] {
        let v = |k: &str| r[part][k]["value"].as_f64().unwrap();
        assert!((v("mu_ut") - p.mu).abs() < 0.02, "{part} mu {}", v("mu_ut"));
        assert!((v("sigma_ut") / p.sigma - 1.0).abs() < 0.05, "{part} sigma {}", v("sigma_ut"));
        assert!((v("gamma") / p.gamma - 1.0).abs() < 0.15, "{part} gamma {}", v("gamma"));
        assert!(r[part]["gamma"]["uncertainty"].as_f64().unwrap() > 0.0);
    }
    assert_eq!(r["day"]["samples"].as_u64().unwrap() + r["night"]["samples"].as_u64().unwrap(), n as u64);
    let ratio = r["sum_check"]["amplitude_ratio"].as_f64().unwrap();
    assert!((ratio - 1.0).abs() < 0.01, "sum check {ratio}");
    assert!(r["sum_check"]["rel_rms_residual"].as_f64().unwrap() < 0.05);
    assert!(csv_rows(&out.join("bk_distribution.csv")).len() > 20);
}

#[test]
fn psd_on_powerline_scene_detects_six_harmonics() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = scene(
        tmp.path(),
        &format!(
            "start_epoch = {T0}\nduration_s = 300\nrate_hz = 3960\nseed = 5\nbackground_ut = [20.0, 0.0, 45.0]\n\
             [[components]]\ntype = \"powerline\"\namplitudes_ut = [0.02, 0.01, 0.008, 0.005, 0.004, 0.003]\n\
             [[components]]\ntype = \"white\"\nsigma_ut = 0.01\naxis = \"all\"\n"
        ),
    );
    let (data, out) = (tmp.path().join("data"), tmp.path().join("out"));
    ok(&["synth", "--scene", s(&sc), "--out", s(&data)]);
    let end = format!("{}", T0 + 300.0);
    ok(&["psd", "--data", s(&data), "--out", s(&out), "--station", "syn", "--end", &end]);
    let rows = csv_rows(&out.join("syn_harmonics.csv"));
    assert_eq!(rows.len(), 6);
    for (k, r) in rows.iter().enumerate() {
        assert_eq!(r[0], (k + 1).to_string());
        let f: f64 = r[1].parse().unwrap();
        assert!((f - 60.0 * (k + 1) as f64).abs() < 0.05, "harmonic {k}: {f}");
        assert_eq!(r[4], "true", "harmonic {} snr {}", k + 1, r[3]);
    }
    let sum = read_json(&out.join("syn_psd_summary.json"));
    assert_eq!(sum["streamed"], true);
    assert_eq!(sum["welch"]["segment_len"], 1 << 20);
    let psd = csv_rows(&out.join("syn_psd.csv"));
    assert_eq!(psd.len(), 1 << 19);
}

#[test]
fn extract_gives_full_window_waveform() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = scene(
        tmp.path(),
        &format!(
            "start_epoch = {T0}\nduration_s = 259200\nrate_hz = 1\nseed = 8\nbackground_ut = [20.0, 0.0, 45.0]\n\
             [[components]]\ntype = \"sine\"\nfreq_hz = {}\namplitude_ut = 0.05\n\
             [[components]]\ntype = \"white\"\nsigma_ut = 0.1\n",
            1.0 / 1200.0
        ),
    );
    let (data, out) = (tmp.path().join("data"), tmp.path().join("out"));
    ok(&["synth", "--scene", s(&sc), "--out", s(&data)]);
    ok(&["extract", "--data", s(&data), "--out", s(&out), "--station", "syn"]);
    let rows = csv_rows(&out.join("syn_waveform.csv"));
    assert_eq!(rows.len(), 6000);
    assert_eq!(rows[5999][0], "5999");
    let sum = read_json(&out.join("syn_extract_summary.json"));
    assert_eq!(sum["segments_used"], 33);
    let amp = sum["corrected_amplitude_ut"].as_f64().unwrap();
    assert!((amp / 0.05 - 1.0).abs() < 0.15, "amplitude {amp}");
}

#[test]
fn xcorr_finds_station_delay() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let n = 4 * 3600;
    let v = noise(3, n + 300, 0.2);
    write_station(&data, "a", T0, 1.0, v[300..].to_vec(), 0.0);
    write_station(&data, "b", T0, 1.0, v[..n].to_vec(), 0.0);
    let out = tmp.path().join("out");
    let d = s(&data);
    ok(&["xcorr", "--data", d, "--out", s(&out), "--station-a", "a", "--station-b", "b", "--permutations", "200", "--seed", "4"]);
    let sum = read_json(&out.join("a_b_xcorr_summary.json"));
    assert_eq!(sum["best_lag_s"], 300.0);
    assert!(sum["best_coeff"].as_f64().unwrap() > 0.999);
    assert_eq!(sum["significant_95"], true);
    assert_eq!(csv_rows(&out.join("a_b_xcorr.csv")).len(), 1201);
    let o = s(&out);
    assert_eq!(code(&["xcorr", "--data", d, "--out", o, "--station-a", "a", "--station-b", "b", "--filter-a", "lowpass:10"]), 2);
    assert_eq!(code(&["xcorr", "--data", d, "--out", o, "--station-a", "a"]), 2);
}

#[test]
fn scalogram_grid_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let x: Vec<f64> = (0..7200).map(|i| 50.0 + 0.1 * (2.0 * std::f64::consts::PI * i as f64 / 120.0).sin()).collect();
    write_station(&data, "st", T0, 1.0, x, 0.0);
    let out = tmp.path().join("out");
    ok(&["scalogram", "--data", s(&data), "--out", s(&out), "--station", "st", "--fmin", "0.001", "--stride", "10"]);
    let g = urbmag::spectral::read_scalogram(&out.join("st_scalogram.grid")).unwrap();
    assert_eq!(g.cols(), 720);
    assert_eq!(csv_rows(&out.join("st_scalogram_rows.csv")).len(), g.rows());
    let cols = csv_rows(&out.join("st_scalogram_columns.csv"));
    let mid: f64 = cols[360][2].parse().unwrap();
    assert!((mid * 120.0 - 1.0).abs() < 0.06, "ridge {mid}");
}

#[test]
fn import_converts_foreign_samples() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("raw.dat");
    let mut bytes = b"HDR!".to_vec();
    for v in [1.5f32, -2.0, 3.25] {
        bytes.extend_from_slice(&v.to_be_bytes());
    }
    std::fs::write(&src, bytes).unwrap();
    let out = tmp.path().join("out");
    ok(&[
        "import", "--input", s(&src), "--out", s(&out), "--station", "st", "--hour", "2018-05-28T03:00:00Z",
        "--channel", "z", "--sample-type", "f32", "--big-endian", "--header-bytes", "4", "--scale", "2",
    ]);
    let v = urbmag::ingest::read_raw(&out.join("st_2018-05-28_03_z.bin")).unwrap();
    assert_eq!(v, vec![3.0, -4.0, 6.5]);
}
