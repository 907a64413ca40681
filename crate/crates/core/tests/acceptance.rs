//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the criteria execute in
//! order and their summary lines are printed even under output capture.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use cwrm::baselines::{fit_mixreg_once, fit_trimmed_mixreg};
use cwrm::cli::permutation_error;
use cwrm::constraints::{optimal_threshold, truncation_objective, WeightedValues};
use cwrm::datagen::{self, ComponentSpec, ContaminationSpec, ScenarioSpec, TONE_LOCATIONS};
use cwrm::em::{fit_once, fit_once_observed};
use cwrm::oracle::{exhaustive_lts, exhaustive_trimmed_cwm_g1, grid_threshold};
use cwrm::{fit, trimmed_loglik, Dataset, FitConfig, ModelParams};

// Pinned tolerances and thresholds.
const MONOTONE_REL_SLACK: f64 = 1e-8;
const FEASIBLE_REL_SLACK: f64 = 1e-8;
const SPHERICAL_TOL: f64 = 1e-8;
const EQUAL_VAR_TOL: f64 = 1e-10;
const GRID_POINTS: usize = 100_000;
const GRID_ABS_SLACK: f64 = 1e-9;
const GRID_REL_TOL: f64 = 1e-7;
const ORACLE_REL_TOL: f64 = 1e-6;
const ORACLE_ABS_EXCESS: f64 = 1e-9;
const TRANSLATION_TOL: f64 = 1e-8;
const REPLICATES: usize = 100;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within_budget(elapsed: Duration, limit_s: u64) -> bool {
    elapsed <= Duration::from_secs(limit_s)
}

/// Random CWM scenario with optional background noise.
fn random_scenario(rng: &mut ChaCha8Rng, n: usize, d: usize, groups: usize) -> ScenarioSpec {
    let components = (0..groups)
        .map(|_| {
            let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
            let s = &a * a.transpose() + DMatrix::identity(d, d) * 0.2;
            ComponentSpec {
                weight: 1.0 / groups as f64,
                mean: (0..d).map(|_| rng.random_range(-4.0..4.0)).collect(),
                scatter: (0..d).map(|i| (0..d).map(|j| s[(i, j)]).collect()).collect(),
                intercept: rng.random_range(-3.0..3.0),
                slope: (0..d).map(|_| rng.random_range(-2.0..2.0)).collect(),
                noise_var: rng.random_range(0.05..1.0),
                count: None,
            }
        })
        .collect();
    let noise = n / 10;
    ScenarioSpec {
        name: "random".into(),
        components,
        n_clean: n - noise,
        contamination: vec![ContaminationSpec::BackgroundBox {
            count: noise,
            lower: vec![-8.0; d + 1],
            upper: vec![8.0; d + 1],
        }],
        seed: rng.random(),
    }
}

fn spherical_error(s: &DMatrix<f64>) -> f64 {
    let d = s.nrows();
    let a = s.trace() / d as f64;
    (s - DMatrix::identity(d, d) * a).amax() / a.max(1.0)
}

/// Criteria 1 and 2 share their runs.
fn monotonicity_and_feasibility() -> (Outcome, Outcome) {
    let started = Instant::now();
    let alphas = [0.0, 0.05, 0.1, 0.25];
    let cs = [1.0, 5.0, 20.0];
    let per_config: Vec<(usize, usize, Vec<String>, Vec<String>)> = (0..200u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + k);
            let n = rng.random_range(30..=200);
            let d = rng.random_range(1..=3);
            let groups = rng.random_range(1..=3);
            let alpha = alphas[rng.random_range(0..alphas.len())];
            let c = cs[rng.random_range(0..cs.len())];
            let ds = datagen::generate(&random_scenario(&mut rng, n, d, groups)).unwrap();
            let cfg = FitConfig::new(groups, alpha, c, c).with_seed(k);
            let mut mono = Vec::new();
            let mut feas = Vec::new();
            let mut steps = 0;
            let mut failed = 0;
            for start in 0..4 {
                let mut last: Option<f64> = None;
                let res = fit_once_observed(&ds, &cfg, start, &mut |e| {
                    steps += 1;
                    if let (Some(prev), true) = (last, e.reseeded.is_empty()) {
                        if e.objective < prev - MONOTONE_REL_SLACK * prev.abs() {
                            mono.push(format!("config {k} start {start} iter {}: {prev} -> {}", e.iter, e.objective));
                        }
                    }
                    last = Some(e.objective);
                    check_feasible(e.params, c, &mut feas, k, e.iter);
                });
                if res.is_err() {
                    failed += 1;
                }
            }
            if failed == 4 {
                feas.push(format!("config {k}: every start failed"));
            }
            (steps, failed, mono, feas)
        })
        .collect();
    let elapsed = started.elapsed();
    let steps: usize = per_config.iter().map(|r| r.0).sum();
    let failed: usize = per_config.iter().map(|r| r.1).sum();
    let mono: Vec<&String> = per_config.iter().flat_map(|r| &r.2).collect();
    let feas: Vec<&String> = per_config.iter().flat_map(|r| &r.3).collect();
    let time_ok = within_budget(elapsed, 120);
    let c1 = outcome(
        mono.is_empty() && time_ok,
        format!(
            "200 configs x 4 starts, {steps} iterations checked, {failed} failed starts, {} decreases, {:.1}s{}",
            mono.len(),
            elapsed.as_secs_f64(),
            mono.first().map_or(String::new(), |m| format!("; first: {m}"))
        ),
    );
    let c2 = outcome(
        feas.is_empty(),
        format!(
            "{} violations{}",
            feas.len(),
            feas.first().map_or(String::new(), |m| format!("; first: {m}"))
        ),
    );
    (c1, c2)
}

fn check_feasible(p: &ModelParams, c: f64, out: &mut Vec<String>, k: u64, iter: usize) {
    let er = p.eigenvalue_ratio().unwrap_or(f64::INFINITY);
    if er > c * (1.0 + FEASIBLE_REL_SLACK) {
        out.push(format!("config {k} iter {iter}: eigenvalue ratio {er} > {c}"));
    }
    let vr = p.variance_ratio();
    if vr > c * (1.0 + FEASIBLE_REL_SLACK) {
        out.push(format!("config {k} iter {iter}: variance ratio {vr} > {c}"));
    }
    if c == 1.0 {
        let a0 = p.scatters[0].trace() / p.dim() as f64;
        for s in &p.scatters {
            let a = s.trace() / p.dim() as f64;
            if spherical_error(s) > SPHERICAL_TOL || (a - a0).abs() > SPHERICAL_TOL * a0.max(1.0) {
                out.push(format!("config {k} iter {iter}: scatter not a common a*I"));
            }
        }
        let v0 = p.noise_vars[0];
        if p.noise_vars.iter().any(|v| (v - v0).abs() > EQUAL_VAR_TOL) {
            out.push(format!("config {k} iter {iter}: unequal variances {:?}", p.noise_vars));
        }
    }
}

fn truncation_oracle() -> Outcome {
    let started = Instant::now();
    let results: Vec<Option<String>> = (0..1000u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(5000 + k);
            let len = rng.random_range(1..=12);
            // values log-uniform over eight orders of magnitude
            let values: Vec<f64> = (0..len).map(|_| 10f64.powf(rng.random_range(0.0..8.0))).collect();
            let weights: Vec<f64> = (0..len).map(|_| rng.random_range(0.01..1.0)).collect();
            let c = 10f64.powf(rng.random_range(0.0..4.0));
            let wv = WeightedValues::new(values, weights, c).unwrap();
            let m = optimal_threshold(&wv).unwrap();
            let ours = truncation_objective(&wv, m);
            let grid = grid_threshold(&wv, GRID_POINTS).unwrap().objective;
            let ok = ours <= grid + GRID_ABS_SLACK && (ours - grid).abs() <= GRID_REL_TOL * grid.abs();
            (!ok).then(|| format!("case {k}: closed form {ours}, grid {grid}"))
        })
        .collect();
    let elapsed = started.elapsed();
    let bad: Vec<&String> = results.iter().flatten().collect();
    outcome(
        bad.is_empty() && within_budget(elapsed, 60),
        format!(
            "1000 cases, {} mismatches, {:.1}s{}",
            bad.len(),
            elapsed.as_secs_f64(),
            bad.first().map_or(String::new(), |m| format!("; first: {m}"))
        ),
    )
}

fn tiny_instance(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b0 = rng.random_range(-2.0..2.0);
    let b1 = rng.random_range(-2.0..2.0);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..12 {
        let xi: f64 = rng.random_range(-3.0..3.0);
        let mut yi = b0 + b1 * xi + rng.random_range(-0.5..0.5);
        // a couple of gross outliers in some instances
        if i < 2 && seed.is_multiple_of(2) {
            yi += rng.random_range(5.0..10.0);
        }
        x.push(xi);
        y.push(yi);
    }
    Dataset::from_row_major(1, x, y, None).unwrap()
}

fn global_optimum_oracle() -> Outcome {
    let started = Instant::now();
    let alpha = 1.0 / 6.0;
    let results: Vec<Vec<String>> = (0..50u64)
        .into_par_iter()
        .map(|k| {
            let ds = tiny_instance(9000 + k);
            let cfg = FitConfig::new(1, alpha, 1.0, 1.0).with_starts(50).with_seed(k);
            let mut bad = Vec::new();
            let mut compare = |name: &str, got: f64, want: f64| {
                if got > want + ORACLE_ABS_EXCESS || (got - want).abs() > ORACLE_REL_TOL * want.abs() {
                    bad.push(format!("instance {k} {name}: fit {got}, oracle {want}"));
                }
            };
            let cwm = fit(&ds, &cfg).unwrap().objective;
            compare("cwm", cwm, exhaustive_trimmed_cwm_g1(&ds, alpha).unwrap().objective);
            let lts = fit_trimmed_mixreg(&ds, &cfg).unwrap().objective;
            compare("lts", lts, exhaustive_lts(&ds, alpha).unwrap().objective);
            bad
        })
        .collect();
    let elapsed = started.elapsed();
    let bad: Vec<&String> = results.iter().flatten().collect();
    outcome(
        bad.is_empty() && within_budget(elapsed, 120),
        format!(
            "50 instances x 2 models, {} mismatches, {:.1}s{}",
            bad.len(),
            elapsed.as_secs_f64(),
            bad.first().map_or(String::new(), |m| format!("; first: {m}"))
        ),
    )
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

fn simdata1_replication() -> Outcome {
    let started = Instant::now();
    let spec = datagen::preset("simdata1").unwrap();
    let true_slopes: Vec<f64> = spec.components.iter().map(|c| c.slope[0]).collect();
    let cfg = FitConfig::new(2, 0.1, 20.0, 20.0);
    let reps: Vec<(bool, Vec<f64>)> = (0..REPLICATES as u64)
        .into_par_iter()
        .map(|r| {
            let ds = datagen::generate(&spec.clone().with_seed(100 + r)).unwrap();
            let f = fit(&ds, &cfg.clone().with_seed(r)).unwrap();
            let truth = ds.true_labels().unwrap();
            let all_trimmed = truth.iter().zip(&f.resp.z).all(|(&t, &k)| t != 0 || !k);
            let (err, matching) = permutation_error(&f.labels, truth).unwrap();
            let slopes = matching
                .iter()
                .map(|&g| if g == 0 { f64::NAN } else { f.params.slopes[g - 1][0] })
                .collect();
            (all_trimmed && err <= 0.10, slopes)
        })
        .collect();
    let elapsed = started.elapsed();
    let good = reps.iter().filter(|r| r.0).count();
    let mut slope_ok = true;
    let mut slope_text = Vec::new();
    for (g, &b) in true_slopes.iter().enumerate() {
        let est: Vec<f64> = reps.iter().map(|r| r.1[g]).collect();
        let (m, sd) = mean_sd(&est);
        let se = sd / (est.len() as f64).sqrt();
        let ok = (m - b).abs() <= 3.0 * se;
        slope_ok &= ok;
        slope_text.push(format!("b{} mean {m:.4} vs {b} (3 se = {:.4})", g + 1, 3.0 * se));
    }
    outcome(
        good >= 95 && slope_ok && within_budget(elapsed, 300),
        format!(
            "{good}/100 replicates trim all outliers with error <= 10%; {}; {:.1}s",
            slope_text.join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

fn all_contamination_trimmed(ds: &Dataset, z: &[bool]) -> bool {
    ds.true_labels().unwrap().iter().zip(z).all(|(&t, &k)| t != 0 || !k)
}

fn tone_replication() -> Outcome {
    let started = Instant::now();
    let alpha = 0.1;
    let mut lines = Vec::new();
    let mut pass = true;
    for (k, (lx, ly)) in TONE_LOCATIONS.iter().enumerate() {
        let spec = datagen::preset(&format!("tone_analog_{}", k + 1)).unwrap();
        let rows: Vec<(bool, bool)> = (0..REPLICATES as u64)
            .into_par_iter()
            .map(|r| {
                let ds = datagen::generate(&spec.clone().with_seed(200 + r)).unwrap();
                let cfg = FitConfig::new(2, alpha, 1.0, 1.0).with_seed(r);
                let cwrm_yes = fit(&ds, &cfg).map(|f| all_contamination_trimmed(&ds, &f.resp.z)).unwrap_or(false);
                let mixreg_yes = fit_trimmed_mixreg(&ds, &cfg)
                    .map(|f| all_contamination_trimmed(&ds, &f.resp.z))
                    .unwrap_or(false);
                (cwrm_yes, mixreg_yes)
            })
            .collect();
        let cwrm_yes = rows.iter().filter(|r| r.0).count();
        let mixreg_no = rows.iter().filter(|r| !r.1).count();
        let leverage = k > 0;
        pass &= cwrm_yes >= 90 && (!leverage || mixreg_no >= 90);
        lines.push(format!("({lx},{ly}): cwrm yes {cwrm_yes}, mixreg no {mixreg_no}"));
    }
    let elapsed = started.elapsed();
    outcome(
        pass && within_budget(elapsed, 600),
        format!("{}; {:.1}s", lines.join("; "), elapsed.as_secs_f64()),
    )
}

/// A fitted component whose assigned points come at least 80% from the planted set.
fn spurious(ds: &Dataset, labels: &[usize], groups: usize) -> bool {
    let truth = ds.true_labels().unwrap();
    (1..=groups).any(|g| {
        let assigned: Vec<usize> = (0..ds.n()).filter(|&i| labels[i] == g).collect();
        let planted = assigned.iter().filter(|&&i| truth[i] == 0).count();
        !assigned.is_empty() && planted as f64 >= 0.8 * assigned.len() as f64
    })
}

fn spurious_rate(preset: &str, cfg: &FitConfig, seed0: u64) -> usize {
    let spec = datagen::preset(preset).unwrap();
    (0..REPLICATES as u64)
        .into_par_iter()
        .filter(|&r| {
            let ds = datagen::generate(&spec.clone().with_seed(seed0 + r)).unwrap();
            match fit(&ds, &cfg.clone().with_seed(r)) {
                Ok(f) => spurious(&ds, &f.labels, cfg.groups),
                Err(_) => false,
            }
        })
        .count()
}

fn spurious_suppression() -> Outcome {
    let started = Instant::now();
    let s2 = spurious_rate("simdata2", &FitConfig::new(2, 0.0, 20.0, 20.0), 300);
    let s3 = spurious_rate("simdata3", &FitConfig::new(2, 0.02, 20.0, 20.0), 400);
    let s3_loose = spurious_rate("simdata3", &FitConfig::new(2, 0.02, 20.0, 1e10), 400);
    outcome(
        100 - s2 >= 90 && 100 - s3 >= 90 && s3_loose >= 50,
        format!(
            "clean fits: simdata2 {}/100, simdata3 {}/100; spurious at c_eps = 1e10: {s3_loose}/100; {:.1}s",
            100 - s2,
            100 - s3,
            started.elapsed().as_secs_f64()
        ),
    )
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TRANSLATION_TOL * a.abs().max(b.abs()).max(1.0)
}

fn equivariance() -> Outcome {
    let mut bad = Vec::new();
    for k in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(7000 + k);
        let d = rng.random_range(1..=3);
        let groups = rng.random_range(1..=3);
        let n = rng.random_range(60..=150);
        let ds = datagen::generate(&random_scenario(&mut rng, n, d, groups)).unwrap();
        let t: Vec<f64> = (0..d).map(|_| rng.random_range(-50.0..50.0)).collect();
        let s = rng.random_range(-50.0..50.0);
        let moved = ds.translated(&t, s);
        let cfg = FitConfig::new(groups, 0.1, 5.0, 5.0).with_seed(k);
        // the invariant holds start by start; the multi-start winner may
        // flip between starts that reach the same optimum
        let mut a_best = None;
        for start in 0..4 {
            let (a, b) = match (fit_once(&ds, &cfg, start), fit_once(&moved, &cfg, start)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(_), Err(_)) => continue,
                (a, b) => {
                    bad.push(format!("instance {k} start {start}: outcome differs ({} vs {})", a.is_ok(), b.is_ok()));
                    continue;
                }
            };
            let (p, q) = (&a.params, &b.params);
            let mut ok = a.resp.z == b.resp.z && a.n_iter == b.n_iter;
            for g in 0..groups {
                ok &= close(p.weights[g], q.weights[g]) && close(p.noise_vars[g], q.noise_vars[g]);
                for j in 0..d {
                    ok &= close(p.means[g][j] + t[j], q.means[g][j]) && close(p.slopes[g][j], q.slopes[g][j]);
                    for l in 0..d {
                        ok &= close(p.scatters[g][(j, l)], q.scatters[g][(j, l)]);
                    }
                }
                let shifted: f64 = p.intercepts[g] + s - (0..d).map(|j| p.slopes[g][j] * t[j]).sum::<f64>();
                ok &= close(shifted, q.intercepts[g]);
                for i in 0..n {
                    ok &= close(a.resp.tau[(i, g)], b.resp.tau[(i, g)]);
                }
            }
            if !ok {
                let dz = a.resp.z.iter().zip(&b.resp.z).filter(|(u, v)| u != v).count();
                bad.push(format!(
                    "instance {k} start {start}: translated fit differs ({dz} trimming flags, iterations {} vs {})",
                    a.n_iter, b.n_iter
                ));
            }
            if a_best.is_none() {
                a_best = Some(a);
            }
        }
        let Some(a) = a_best else {
            bad.push(format!("instance {k}: every start failed"));
            continue;
        };
        let p = &a.params;

        // relabeling leaves the objective bit-for-bit unchanged
        let mut order: Vec<usize> = (0..groups).collect();
        order.reverse();
        if groups == 3 {
            order.swap(0, 1);
        }
        let direct = trimmed_loglik(&ds, p, &a.resp.z).unwrap();
        let permuted = trimmed_loglik(&ds, &p.permuted(&order), &a.resp.z).unwrap();
        if direct != permuted {
            bad.push(format!("instance {k}: permuted objective {permuted} != {direct}"));
        }
        if let Ok(m) = fit_mixreg_once(&ds, &cfg, 0, &mut |_| {}) {
            let w = &m.params;
            let perm = cwrm::MixRegParams {
                weights: order.iter().map(|&g| w.weights[g]).collect(),
                intercepts: order.iter().map(|&g| w.intercepts[g]).collect(),
                slopes: order.iter().map(|&g| w.slopes[g].clone()).collect(),
                noise_vars: order.iter().map(|&g| w.noise_vars[g]).collect(),
            };
            let a1 = cwrm::baselines::mixreg_trimmed_loglik(&ds, w, &m.resp.z);
            let a2 = cwrm::baselines::mixreg_trimmed_loglik(&ds, &perm, &m.resp.z);
            if a1 != a2 {
                bad.push(format!("instance {k}: permuted mixreg objective {a2} != {a1}"));
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "20 instances, {} failures{}",
            bad.len(),
            bad.first().map_or(String::new(), |m| format!("; first: {m}"))
        ),
    )
}

fn run_cli(args: &[&str], threads: &str) -> Result<serde_json::Value, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_cwrm"))
        .args(args)
        .env("CWRM_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    let mut v: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    v.as_object_mut().ok_or("report is not an object")?.remove("wall_time_ms");
    Ok(v)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("simdata1.csv");
    let data_s = data.to_str().unwrap();
    let sim = Command::new(env!("CARGO_BIN_EXE_cwrm"))
        .args(["simulate", "--preset", "simdata1", "--seed", "1", "--out", data_s])
        .status()
        .unwrap();
    if !sim.success() {
        return outcome(false, "simulate failed");
    }
    let args = ["fit", data_s, "--groups", "2", "--alpha", "0.1", "--cx", "20", "--ceps", "20", "--seed", "7"];
    let runs: Result<Vec<_>, String> = [("1", 0), ("1", 1), ("8", 0), ("8", 1)]
        .iter()
        .map(|(threads, _)| run_cli(&args, threads))
        .collect();
    match runs {
        Ok(r) => {
            let same = r.iter().all(|v| v == &r[0]);
            outcome(same, format!("4 runs (1 and 8 threads, twice each) {}", if same { "identical" } else { "differ" }))
        }
        Err(e) => outcome(false, format!("run failed: {e}")),
    }
}

fn main() -> ExitCode {
    let started = Instant::now();
    let (c1, c2) = monotonicity_and_feasibility();
    let results = vec![
        ("1 monotonicity", c1),
        ("2 feasibility", c2),
        ("3 truncation oracle", truncation_oracle()),
        ("4 global optimum oracle", global_optimum_oracle()),
        ("5 simdata1 replication", simdata1_replication()),
        ("6 tone analog table", tone_replication()),
        ("7 spurious suppression", spurious_suppression()),
        ("8 equivariance", equivariance()),
        ("9 determinism", determinism()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("criterion {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s",
        results.len() - failed,
        results.len(),
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
