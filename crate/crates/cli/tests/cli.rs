//! End-to-end runs of the `etc-bench` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn etc_bench(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_etc-bench"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn gen_model(dir: &Path) {
    let out = etc_bench(
        dir,
        &[
            "--seed",
            "3",
            "--out",
            "gen",
            "gen-model",
            "--states",
            "3",
            "--actions",
            "2",
            "--observations",
            "3",
            "--rank",
            "2",
            "--horizon",
            "2",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn assert_outputs_exist(dir: &Path) {
    let m = manifest(dir);
    for o in m["outputs"].as_array().unwrap() {
        assert!(
            dir.join(o.as_str().unwrap()).exists(),
            "{o} missing in {}",
            dir.display()
        );
    }
}

const RUN: &str = r#"
[model]
path = "gen/model.json"

[candidates]
recipe = "perturbed"
count = 2
strength = 0.5
seed = 1

[learner]
iterations = 15
seed = 2
"#;

#[test]
fn generated_model_verifies_and_inspects() {
    let dir = tempfile::tempdir().unwrap();
    gen_model(dir.path());
    assert_outputs_exist(&dir.path().join("gen"));

    let out = etc_bench(dir.path(), &["--out", "v", "verify", "gen/model.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let report = std::fs::read_to_string(dir.path().join("v/verify.csv")).unwrap();
    assert!(report.starts_with("check,step,detail,value,limit,pass\n"));
    assert!(report.lines().skip(1).all(|l| l.ends_with(",1")));
    assert_outputs_exist(&dir.path().join("v"));

    let out = etc_bench(dir.path(), &["--out", "i", "inspect", "gen/model.json"]);
    assert_eq!(code(&out), 0);
    let report = std::fs::read_to_string(dir.path().join("i/inspect.csv")).unwrap();
    assert!(report.starts_with("metric,step,value,note\n"));
    assert!(report.contains("\nnu,"));
}

#[test]
fn perturbed_operator_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    gen_model(dir.path());
    let out = etc_bench(
        dir.path(),
        &[
            "--out",
            "v",
            "verify",
            "gen/model.json",
            "--perturb-bellman",
            "1,0,0,0.001",
        ],
    );
    assert_eq!(code(&out), 3);
    let report = std::fs::read_to_string(dir.path().join("v/verify.csv")).unwrap();
    assert!(report.lines().any(|l| l.starts_with("bellman,1,") && l.ends_with(",0")));
}

#[test]
fn corrupted_model_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    gen_model(dir.path());
    let path = dir.path().join("gen/model.json");
    let mut file: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    file["transition"][0][0][0][0] = Value::from(1.1);
    std::fs::write(dir.path().join("bad.json"), file.to_string()).unwrap();
    let out = etc_bench(dir.path(), &["--out", "i", "inspect", "bad.json"]);
    assert_eq!(code(&out), 1);
    assert!(!dir.path().join("i/manifest.json").exists());
}

#[test]
fn unknown_config_key_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    gen_model(dir.path());
    std::fs::write(dir.path().join("run.toml"), format!("{RUN}colour = \"blue\"\n")).unwrap();
    assert_eq!(code(&etc_bench(dir.path(), &["run-etc", "run.toml"])), 1);
}

#[test]
fn oversized_policy_class_is_a_guard_error() {
    let dir = tempfile::tempdir().unwrap();
    gen_model(dir.path());
    let config = format!("{RUN}policy_class = \"history-table\"\nenumeration_cap = 4\n");
    std::fs::write(dir.path().join("run.toml"), config).unwrap();
    assert_eq!(code(&etc_bench(dir.path(), &["run-etc", "run.toml"])), 2);
}

#[test]
fn empty_confidence_set_is_a_statistical_failure() {
    let dir = tempfile::tempdir().unwrap();
    gen_model(dir.path());
    let config = RUN.replace("iterations = 15", "iterations = 15\nc_beta = 0.0");
    std::fs::write(dir.path().join("run.toml"), config).unwrap();
    let out = etc_bench(dir.path(), &["run-etc", "run.toml"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn run_writes_log_policy_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    gen_model(dir.path());
    std::fs::write(dir.path().join("run.toml"), RUN).unwrap();
    let out = etc_bench(dir.path(), &["--out", "r", "run-etc", "run.toml"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = dir.path().join("r");
    assert_outputs_exist(&r);
    let log = std::fs::read_to_string(r.join("log.csv")).unwrap();
    assert_eq!(log.lines().count(), 16);
    assert_eq!(manifest(&r)["seeds"], serde_json::json!([2]));

    let out = etc_bench(
        dir.path(),
        &[
            "--out",
            "e",
            "eval-policy",
            "gen/model.json",
            "r/policy.json",
            "--episodes",
            "500",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let eval = std::fs::read_to_string(dir.path().join("e/eval.csv")).unwrap();
    assert!(eval.starts_with("method,value,stderr\n"));
}

#[test]
fn sweep_writes_one_manifest_per_run_and_ignores_jobs() {
    let dir = tempfile::tempdir().unwrap();
    gen_model(dir.path());
    std::fs::write(
        dir.path().join("sweep.toml"),
        format!("{RUN}\n[sweep]\nseeds = [4, 5, 6]\n"),
    )
    .unwrap();
    for (out, jobs) in [("s1", "1"), ("s4", "4")] {
        let o = etc_bench(dir.path(), &["--out", out, "--jobs", jobs, "sweep", "sweep.toml"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let s1 = dir.path().join("s1");
    let runs: Vec<_> = std::fs::read_dir(s1.join("runs")).unwrap().collect();
    assert_eq!(runs.len(), 3);
    for r in runs {
        let r = r.unwrap().path();
        assert!(r.join("manifest.json").exists());
        assert_outputs_exist(&r);
    }
    assert_outputs_exist(&s1);
    let agg = |d: &str| std::fs::read(dir.path().join(d).join("aggregate.csv")).unwrap();
    assert_eq!(agg("s1"), agg("s4"));
}
