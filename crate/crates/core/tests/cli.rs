//! End-to-end runs of the `cwrm` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cwrm::cli::RunReport;
use tempfile::TempDir;

fn cwrm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cwrm")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = cwrm(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    let out = cwrm(args);
    if !out.status.success() {
        assert!(!out.stderr.is_empty(), "failure without a message");
    }
    out.status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulate(dir: &TempDir, preset: &str, seed: u64) -> PathBuf {
    let path = dir.path().join(format!("{preset}_{seed}.csv"));
    ok(&["simulate", "--preset", preset, "--seed", &seed.to_string(), "--out", p(&path)]);
    path
}

fn label_column(csv: &Path) -> Vec<usize> {
    let text = std::fs::read_to_string(csv).unwrap();
    text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect()
}

fn without_wall_time(json: &str) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(json).unwrap();
    v.as_object_mut().unwrap().remove("wall_time_ms");
    v
}

#[test]
fn simulate_counts() {
    let dir = TempDir::new().unwrap();
    let one = label_column(&simulate(&dir, "simdata1", 1));
    assert_eq!(one.len(), 200);
    assert_eq!(one.iter().filter(|&&l| l == 0).count(), 20);
    let three = label_column(&simulate(&dir, "simdata3", 1));
    assert_eq!(three.len(), 200);
    assert_eq!(three.iter().filter(|&&l| l == 0).count(), 4);
}

#[test]
fn simulate_is_reproducible() {
    let a = ok(&["simulate", "--preset", "simdata2", "--seed", "5"]);
    let b = ok(&["simulate", "--preset", "simdata2", "--seed", "5"]);
    let c = ok(&["simulate", "--preset", "simdata2", "--seed", "6"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a.starts_with("x_1,x_2,y,true_label\n"));
}

#[test]
fn simulate_from_spec_file() {
    let dir = TempDir::new().unwrap();
    let spec = cwrm::datagen::preset("simdata4").unwrap();
    let path = dir.path().join("spec.json");
    std::fs::write(&path, serde_json::to_string(&spec).unwrap()).unwrap();
    let from_file = ok(&["simulate", "--spec", p(&path), "--seed", "2"]);
    let from_preset = ok(&["simulate", "--preset", "simdata4", "--seed", "2"]);
    assert_eq!(from_file, from_preset);
}

#[test]
fn fit_report_contract() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "simdata1", 1);
    let rows = dir.path().join("rows.csv");
    let json = ok(&[
        "fit", p(&data), "--groups", "2", "--alpha", "0.1", "--cx", "20", "--ceps", "20", "--seed", "7",
        "--starts", "8", "--rows-out", p(&rows),
    ]);
    let report = RunReport::from_json(&json).unwrap();
    assert_eq!(report.params.weights.len(), 2);
    assert_eq!(report.n, 200);
    assert_eq!(report.retained, 180);
    assert_eq!(report.z.iter().filter(|&&k| k).count(), 180);
    assert_eq!(report.bands.len(), 2);
    for (band, s2) in report.bands.iter().zip(&report.params.noise_vars) {
        assert!((band.half_width - 2.0 * s2.sqrt()).abs() < 1e-12);
    }
    assert_eq!(report.to_json(), RunReport::from_json(&report.to_json()).unwrap().to_json());

    let table = std::fs::read_to_string(&rows).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("index,label,trimmed,max_posterior"));
    let body: Vec<&str> = lines.collect();
    assert_eq!(body.len(), 200);
    assert_eq!(body.iter().filter(|l| l.split(',').nth(2) == Some("true")).count(), 20);
}

#[test]
fn zero_trimming_keeps_every_row() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "simdata6", 3);
    let report = RunReport::from_json(&ok(&["fit", p(&data), "--alpha", "0", "--starts", "4"])).unwrap();
    assert!(report.z.iter().all(|&k| k));
    assert!(report.labels.iter().all(|&l| l > 0));
}

#[test]
fn fit_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "simdata4", 2);
    let args = ["fit", p(&data), "--alpha", "0.1", "--seed", "11", "--starts", "8"];
    assert_eq!(without_wall_time(&ok(&args)), without_wall_time(&ok(&args)));
}

#[test]
fn mixreg_method() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "simdata1", 1);
    let report = RunReport::from_json(&ok(&["fit", p(&data), "--method", "mixreg", "--alpha", "0.1", "--starts", "4"])).unwrap();
    assert!(report.params.means.is_none());
    assert_eq!(report.retained, 180);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "simdata1", 1);
    // parse errors
    assert_eq!(code(&["fit", "/definitely/missing.csv"]), 2);
    assert_eq!(code(&["fit", p(&data), "--alpha", "abc"]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    let ragged = dir.path().join("ragged.csv");
    std::fs::write(&ragged, "x,y\n1,2\n3\n").unwrap();
    assert_eq!(code(&["fit", p(&ragged)]), 2);
    // validation errors
    assert_eq!(code(&["fit", p(&data), "--alpha", "1.5"]), 3);
    assert_eq!(code(&["fit", p(&data), "--cx", "0.5"]), 3);
    assert_eq!(code(&["fit", p(&data), "--groups", "70"]), 3);
    assert_eq!(code(&["simulate", "--preset", "no_such_preset"]), 3);
    // every start fails on constant covariates
    let flat = dir.path().join("flat.csv");
    let body: String = (0..20).map(|i| format!("1.0,{}\n", i % 3)).collect();
    std::fs::write(&flat, format!("x,y\n{body}")).unwrap();
    assert_eq!(code(&["fit", p(&flat), "--alpha", "0", "--starts", "3"]), 4);
}

#[test]
fn header_options() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "simdata6", 1);
    let text = std::fs::read_to_string(&data).unwrap();
    // drop the header and the label column, then move y to the front
    let bare: String = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            format!("{},{}\n", f[1], f[0])
        })
        .collect();
    let bare_path = dir.path().join("bare.csv");
    std::fs::write(&bare_path, bare).unwrap();
    let base = ["--alpha", "0.1", "--starts", "4", "--seed", "1"];
    let with_header: Vec<&str> = ["fit", p(&data)].into_iter().chain(base).collect();
    let headerless: Vec<&str> = ["fit", p(&bare_path), "--no-header", "--response", "0"].into_iter().chain(base).collect();
    let a = RunReport::from_json(&ok(&with_header)).unwrap();
    let b = RunReport::from_json(&ok(&headerless)).unwrap();
    assert_eq!(a.objective, b.objective);
    assert_eq!(a.labels, b.labels);
    let by_name: Vec<&str> = ["fit", p(&data), "--response", "y"].into_iter().chain(base).collect();
    assert_eq!(RunReport::from_json(&ok(&by_name)).unwrap().objective, a.objective);
}

#[test]
fn evaluate_scores_a_fit() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "simdata1", 1);
    let report = dir.path().join("r.json");
    ok(&["fit", p(&data), "--alpha", "0.1", "--starts", "16", "--out", p(&report)]);
    let metrics: serde_json::Value =
        serde_json::from_str(&ok(&["evaluate", p(&data), "--report", p(&report), "--truth-preset", "simdata1"])).unwrap();
    assert_eq!(metrics["contamination_recall"], 1.0);
    assert_eq!(metrics["false_trim_rate"], 0.0);
    assert!(metrics["classification_error"].as_f64().unwrap() < 0.1);
    assert_eq!(metrics["parameter_errors"].as_array().unwrap().len(), 2);

    // a report for other rows is rejected
    let other = simulate(&dir, "tone_analog_1", 1);
    assert_eq!(code(&["evaluate", p(&other), "--report", p(&report)]), 3);
}

#[test]
fn sweep_cell_matches_fit() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "simdata1", 2);
    let common = ["--starts", "4", "--seed", "3"];
    let fit: Vec<&str> = ["fit", p(&data), "--alpha", "0.1", "--cx", "5", "--ceps", "7"].into_iter().chain(common).collect();
    let report = RunReport::from_json(&ok(&fit)).unwrap();
    let sweep: Vec<&str> = ["sweep", p(&data), "--alphas", "0.1", "--cxs", "5", "--cepss", "7"].into_iter().chain(common).collect();
    let table = ok(&sweep);
    let mut lines = table.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(lines.next().is_none());
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    assert_eq!(col("status"), "ok");
    assert_eq!(col("objective").parse::<f64>().unwrap(), report.objective);
    assert_eq!(col("retained").parse::<usize>().unwrap(), report.retained);
}

#[test]
fn sweep_grid_order() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "simdata6", 2);
    let table = ok(&["sweep", p(&data), "--alphas", "0,0.1", "--cxs", "1,20", "--starts", "2"]);
    let cells: Vec<(f64, f64)> = table
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap())
        })
        .collect();
    assert_eq!(cells, vec![(0.0, 1.0), (0.0, 20.0), (0.1, 1.0), (0.1, 20.0)]);
}
