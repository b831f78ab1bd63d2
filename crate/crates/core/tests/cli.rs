use std::path::Path;
use std::process::{Command, Output};

use maxin_core::game::load_matrix;
use maxin_core::harness::report::{read_summary_file, read_trace_file};

fn maxin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxin"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn error_json(out: &Output) -> serde_json::Value {
    assert!(!out.status.success());
    serde_json::from_slice(&out.stderr).expect("stderr is a JSON error")
}

#[test]
fn run_twice_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "run.cfg");
    std::fs::write(
        &cfg,
        "# small noisy game\nenv=noisy_elo\nnoise=0.05\nn=8\nT=120  # horizon\nseed=3\ntopk=1,3\n",
    )
    .unwrap();
    let mut bytes = Vec::new();
    let trace = path(dir.path(), "a.csv");
    let summary = path(dir.path(), "a.json");
    for _ in 0..2 {
        let out = maxin(&[
            "run",
            "--config",
            &cfg,
            "--out",
            &trace,
            "--set",
            &format!("summary_out={summary}"),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        bytes.push((
            std::fs::read(&trace).unwrap(),
            std::fs::read(&summary).unwrap(),
        ));
    }
    assert_eq!(bytes[0], bytes[1]);

    let trace = read_trace_file(Path::new(&path(dir.path(), "a.csv"))).unwrap();
    assert_eq!(trace.rows.len(), 120);
    assert_eq!(trace.topk, vec![1, 3]);
    let summary = read_summary_file(Path::new(&path(dir.path(), "a.json"))).unwrap();
    assert_eq!(summary.n, 8);
    assert!(summary
        .config
        .iter()
        .any(|(k, v)| k == "prng" && v.starts_with("ChaCha8Rng")));
}

#[test]
fn flags_override_config_and_replicates_get_indexed_files() {
    let dir = tempfile::tempdir().unwrap();
    let trace = path(dir.path(), "t.csv");
    let out = maxin(&[
        "run",
        "--algo",
        "random",
        "--n",
        "5",
        "--T",
        "30",
        "--replicates",
        "3",
        "--out",
        &trace,
    ]);
    assert!(out.status.success());
    for i in 0..3 {
        assert!(dir.path().join(format!("t_{i}.csv")).exists());
    }
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["algo"], "random");
    assert_eq!(summary["replicates"].as_array().unwrap().len(), 3);

    let curve = path(dir.path(), "curve.csv");
    let files: Vec<String> = (0..3)
        .map(|i| path(dir.path(), &format!("t_{i}.csv")))
        .collect();
    let mut args = vec!["report"];
    args.extend(files.iter().map(String::as_str));
    args.extend(["--out", &curve]);
    assert!(maxin(&args).status.success());
    let text = std::fs::read_to_string(&curve).unwrap();
    assert!(text.starts_with("t,cum_regret_mean,cum_regret_std,rr_mean,rr_std\n"));
    assert_eq!(text.lines().count(), 31);
}

#[test]
fn gen_then_run_on_the_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = path(dir.path(), "m.csv");
    let out = maxin(&[
        "gen",
        "--env",
        "cyclic_dominant",
        "--n",
        "4",
        "--out",
        &matrix,
    ]);
    assert!(out.status.success());
    let m = load_matrix(Path::new(&matrix), 1e-3).unwrap();
    assert_eq!(m.n(), 5);

    let out = maxin(&[
        "run",
        "--matrix",
        &matrix,
        "--algo",
        "maxin_melo",
        "--k",
        "2",
        "--T",
        "60",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["n"], 5);
}

#[test]
fn sweep_reports_every_point() {
    let out = maxin(&[
        "sweep",
        "--n",
        "6",
        "--T",
        "40",
        "--replicates",
        "2",
        "--workers",
        "2",
        "--grid",
        "gamma=0.5,1.0,2.0",
        "--grid",
        "tau=0,4",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let points = doc["points"].as_array().unwrap();
    assert_eq!(points.len(), 6);
    assert_eq!(points[0]["result"]["Err"]["code"], "invariant");
    assert!(points[1]["result"]["Ok"].is_object());
    assert_eq!(doc["best_per_replicate"].as_array().unwrap().len(), 2);
    assert!(doc["best_overall"].is_u64());
}

#[test]
fn errors_are_machine_readable() {
    let err = error_json(&maxin(&["run", "--algo", "bogus"]));
    assert_eq!(err["error"], "unknown_algorithm");

    let err = error_json(&maxin(&["run", "--tau", "0"]));
    assert_eq!(err["error"], "invariant");
    assert!(err["message"].as_str().unwrap().contains("tau"));

    let err = error_json(&maxin(&["run", "--set", "colour=blue"]));
    assert_eq!(err["error"], "unknown_key");

    let err = error_json(&maxin(&["run", "--n", "many"]));
    assert_eq!(err["error"], "type_mismatch");
    assert!(err["message"].as_str().unwrap().contains('n'));

    let err = error_json(&maxin(&["report", "/nonexistent/trace.csv"]));
    assert_eq!(err["error"], "io");
}
