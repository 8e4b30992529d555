use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use omc_core::spectrum::Spectrum;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn omc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_omc"))
        .args(args)
        .output()
        .expect("omc runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = omc(args);
    assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(omc(&[]).status.code(), Some(1));
    assert_eq!(omc(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(omc(&["g0", "--fields", "/nonexistent/fields.json"]).status.code(), Some(1));
    assert_eq!(omc(&["phasematch", "--ko", "1e7", "--km", "2e7", "--N", "31", "--a", "-1"]).status.code(), Some(1));
    assert_eq!(omc(&["--help"]).status.code(), Some(0));
}

#[test]
fn malformed_input_is_reported_not_panicked() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"omega_o_hz\": 1").unwrap();
    let o = omc(&["simulate", "omit", "--params", p(&bad), "--drive", p(&data("drive.json"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&o.stderr).contains("panicked"));
}

#[test]
fn table1_builtin_has_four_rows() {
    let csv = ok(&["table1", "--format", "csv"]);
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 5, "{csv}");
    assert!(rows.iter().any(|r| r.starts_with("This work")));
    let text = ok(&["table1"]);
    assert!(text.contains("1.41"), "kappa note missing: {text}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let out = dir.path().join(format!("opt_{tag}.json"));
        let trace = dir.path().join(format!("trace_{tag}.csv"));
        ok(&[
            "optimize",
            "--start",
            p(&data("cell.json")),
            "--max-iter",
            "20",
            "--format",
            "json",
            "--trace",
            p(&trace),
            "--out",
            p(&out),
        ]);
        (std::fs::read(out).unwrap(), std::fs::read(trace).unwrap())
    };
    let (a, ta) = run("a");
    let (b, tb) = run("b");
    assert_eq!(a, b);
    assert_eq!(ta, tb);
    let trace = String::from_utf8(ta).unwrap();
    assert!(trace.starts_with("iteration,operation,best_value,value_spread,diameter,x0,x1,x2,x3\n"));
    assert!(trace.lines().count() > 2);

    let t1 = ok(&["table1", "--format", "json"]);
    assert_eq!(t1, ok(&["table1", "--format", "json"]));
}

#[test]
fn omit_transparency_sits_at_the_mechanical_frequency() {
    let params = data("cavity.json");
    let csv = ok(&["simulate", "omit", "--params", p(&params), "--drive", p(&data("drive.json")), "--points", "4001"]);
    let s = Spectrum::from_csv(&csv).unwrap();
    let f = s.freq_hz();
    let y = s.values();
    let f_m = 5.365e9;
    let step = f[1] - f[0];
    let i_m = f.iter().position(|&x| (x - f_m).abs() < 0.5 * step).expect("grid hits f_m");
    let lo = i_m.saturating_sub(2);
    let local = (lo..=(i_m + 2).min(f.len() - 1)).max_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap();
    assert!(y[local] > y[local - 1] && y[local] > y[local + 1], "no transparency peak near f_m");

    // the broad cavity dip around it is centred on the mechanical frequency as well
    let i_min = (0..y.len()).min_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap();
    let kappa = 1.41e9;
    assert!((f[i_min] - f_m).abs() < 0.05 * kappa, "dip floor at {}", f[i_min]);
}

#[test]
fn simulated_series_fits_back_to_g0() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("series.csv");
    let params = data("cavity.json");
    ok(&[
        "simulate",
        "backaction",
        "--params",
        p(&params),
        "--drive",
        p(&data("drive_blue.json")),
        "--both",
        "--steps",
        "8",
        "--noise",
        "0.01",
        "--seed",
        "11",
        "--out",
        p(&series),
    ]);
    let csv = ok(&["fit", "g0", "--series", p(&series), "--params", p(&params), "--format", "csv"]);
    let g0 = csv
        .lines()
        .find_map(|l| l.strip_prefix("g0_hz,"))
        .and_then(|l| l.split(',').next())
        .and_then(|v| v.parse::<f64>().ok())
        .expect("g0 row");
    assert!((g0 - 500e3).abs() < 20e3, "{g0}");
}

#[test]
fn phasematch_reports_matched_terms() {
    let a = 188e-9;
    let ko = std::f64::consts::PI / (2.0 * a);
    let text = ok(&[
        "phasematch",
        "--ko",
        &ko.to_string(),
        "--km",
        &(2.0 * ko).to_string(),
        "--N",
        "31",
        "--a",
        &a.to_string(),
        "--format",
        "csv",
    ]);
    let matched: Vec<&str> = text
        .lines()
        .skip(1)
        .filter(|l| l.ends_with(",true"))
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(matched, ["iii", "v"], "{text}");
}

#[test]
fn g0_of_bundled_fields() {
    let out = ok(&["g0", "--fields", p(&data("fields.json")), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let g0 = v["g0_hz"].as_f64().expect("g0_hz field");
    assert!((g0 - 279e3).abs() < 5e3, "{g0}");
}

#[test]
fn out_flag_writes_file_and_nothing_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("window.csv");
    let s = ok(&["window", "--neff-min", "1.0", "--neff-max", "3.0", "--steps", "5", "--out", p(&out)]);
    assert!(s.is_empty());
    let body = std::fs::read_to_string(out).unwrap();
    assert!(body.starts_with("n_eff,a_m,f_saw_hz,in_window\n"));
}
