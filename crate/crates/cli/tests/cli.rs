use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ks_stab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ks-stab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn manifest_paths(dir: &Path) -> Vec<String> {
    read_json(&dir.join("manifest.json"))["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["path"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn validate_rejects_critical_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = ks_stab(&["validate", "--set", "lambda=5*pi^2", "--set", "a=500", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error[parameter_rejection]:"), "{err}");
    assert!(err.contains("λ ∈ N"), "{err}");
    let report = read_json(&dir.path().join("validation.json"));
    assert_eq!(report["checks"][1]["passed"], false);
}

#[test]
fn validate_accepts_headline_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let o = ks_stab(&["validate", "--set", "lambda=45", "--set", "a=400", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(manifest_paths(dir.path()), vec!["config.txt", "validation.json"]);
}

#[test]
fn kernel_emits_model_and_residual_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = ks_stab(&[
        "kernel", "--set", "lambda=1", "--set", "a=10", "--set", "n_kernel=64", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let model = ks_core::kernel::KernelModel::from_json(
        &fs::read_to_string(dir.path().join("kernel.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(model.n(), 64);
    let report = read_json(&dir.path().join("kernel_report.json"));
    assert!(report["coefficient_residual"].as_f64().unwrap() < 1e-10);
    assert!(report["weak_residual_relative"].as_f64().unwrap() < 0.01);
    assert_eq!(report["closed_form"]["passed"], true);
}

#[test]
fn manifest_hashes_match_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = ks_stab(&["diagnose", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["command"], "diagnose");
    for f in manifest["files"].as_array().unwrap() {
        let bytes = fs::read(dir.path().join(f["path"].as_str().unwrap())).unwrap();
        use sha2::Digest;
        assert_eq!(hex::encode(sha2::Sha256::digest(&bytes)), f["sha256"].as_str().unwrap());
        assert_eq!(bytes.len() as u64, f["bytes"].as_u64().unwrap());
    }
}

#[test]
fn diagnose_dichotomy() {
    let dir = tempfile::tempdir().unwrap();
    let critical = dir.path().join("critical");
    let regular = dir.path().join("regular");
    assert!(ks_stab(&["diagnose", "--set", "lambda=5*pi^2", "--out", critical.to_str().unwrap()]).status.success());
    assert!(ks_stab(&["diagnose", "--set", "lambda=1", "--out", regular.to_str().unwrap()]).status.success());
    let c = read_json(&critical.join("diagnose.json"));
    assert_eq!(c["critical"], true);
    assert!(c["adjoint_signal_sup"].as_f64().unwrap() <= 1e-12);
    assert!(c["gram"]["determinant"].as_f64().unwrap().abs() <= 1e-12);
    let r = read_json(&regular.join("diagnose.json"));
    assert_eq!(r["critical"], false);
    assert!(r["gram"]["determinant"].as_f64().unwrap() > 0.0);
    assert!(fs::read_to_string(regular.join("adjoint.svg")).unwrap().starts_with("<svg"));
}

fn headline(out: &Path) -> Output {
    ks_stab(&[
        "simulate", "--set", "lambda=45", "--set", "a=400", "--set", "t_final=0.01", "--set",
        "initial=two_mode", "--set", "amplitude=1e-2", "--set", "open_loop=true", "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn simulate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let oa = headline(&a);
    assert_eq!(oa.status.code(), Some(0), "{}", stderr(&oa));
    assert!(headline(&b).status.success());
    let files = manifest_paths(&a);
    for name in ["trace.csv", "summary.json", "trace.svg", "open_trace.csv", "config.txt"] {
        assert!(files.iter().any(|f| f == name), "{name} missing");
    }
    for name in files.iter().map(String::as_str).chain(["manifest.json"]) {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let summary = read_json(&a.join("summary.json"));
    assert!(summary["summary"]["max_envelope_ratio"].as_f64().unwrap() <= 1.10);
    assert!(summary["mu1"].as_f64().unwrap() > 0.0);
}

#[test]
fn config_file_reproduces_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    assert!(headline(&first).status.success());
    let second = dir.path().join("second");
    let o = ks_stab(&["--config", first.join("config.txt").to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read(first.join("trace.csv")).unwrap(), fs::read(second.join("trace.csv")).unwrap());
}

#[test]
fn unknown_config_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# comment\nlambda = 1\nalpha = 3\n").unwrap();
    let o = ks_stab(&["validate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("`alpha`"), "{}", stderr(&o));
}

#[test]
fn plot_rejects_empty_trace() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("empty.csv");
    fs::write(&csv, "").unwrap();
    let o = ks_stab(&["plot", csv.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).starts_with("error[schema_error]"));
    let missing = dir.path().join("absent.csv");
    let o = ks_stab(&["plot", missing.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).starts_with("error[io_error]"));
}

#[test]
fn plot_of_headline_trace_keeps_curve_under_envelope() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    assert!(headline(&run).status.success());
    let nu = read_json(&run.join("summary.json"))["summary"]["params"]["nu"].as_f64().unwrap();
    let plot = dir.path().join("plot");
    let o = ks_stab(&[
        "plot", run.join("trace.csv").to_str().unwrap(), "--nu", &nu.to_string(), "--out",
        plot.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let svg = fs::read_to_string(plot.join("plot.svg")).unwrap();
    let lines: Vec<Vec<(f64, f64)>> = svg
        .lines()
        .filter(|l| l.contains("class=\"series\""))
        .map(|l| {
            l.split("points=\"").nth(1).unwrap().split('"').next().unwrap()
                .split(' ')
                .map(|p| {
                    let (x, y) = p.split_once(',').unwrap();
                    (x.parse().unwrap(), y.parse().unwrap())
                })
                .collect()
        })
        .collect();
    let (w, env) = (&lines[1], &lines[2]);
    let ((x0, y0), (x1, y1)) = (env[0], env[1]);
    // SVG y grows downward: under the envelope means a larger y coordinate.
    for &(x, y) in w {
        let e = y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        assert!(y >= e - 0.01, "({x}, {y}) above envelope {e}");
    }
}

#[test]
fn sweep_is_independent_of_job_count() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &Path, jobs: &'static str| {
        ks_stab(&[
            "sweep", "--set", "sweep_lambda=1, 45", "--set", "sweep_a=300, 400", "--set", "t_final=0.002",
            "--jobs", jobs, "--out", out.to_str().unwrap(),
        ])
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(args(&a, "4").status.success());
    assert!(args(&b, "1").status.success());
    let csv = fs::read_to_string(a.join("sweep.csv")).unwrap();
    assert_eq!(csv, fs::read_to_string(b.join("sweep.csv")).unwrap());
    assert_eq!(csv.lines().count(), 5);
    // a = 300 is below max μ_j ≈ 346.7 at λ = 45 and is rejected; the others run.
    let status: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(4).unwrap()).collect();
    assert_eq!(status, ["ok", "ok", "parameter_rejection", "ok"], "{csv}");
}

#[test]
fn random_initial_data_follows_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = ks_stab(&[
            "simulate", "--set", "initial=random", "--set", "t_final=0.001", "--set", "n_sim=128",
            "--seed", seed, "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(out.join("trace.csv")).unwrap()
    };
    assert_eq!(run("a", "7"), run("b", "7"));
    assert_ne!(run("a", "7"), run("c", "8"));
}

#[test]
fn presets_run_acceptance_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let o = ks_stab(&["--preset", "ac8", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("AC8 PASS"));
    assert_eq!(read_json(&dir.path().join("ac8.json"))["passed"], true);
    let o = ks_stab(&["--preset", "ac6", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("ac6_trace.csv").exists());
    let o = ks_stab(&["--preset", "ac10", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_experiment_kind_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = ks_stab(&["--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[parameter_rejection]"));
}
