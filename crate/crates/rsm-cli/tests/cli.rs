//! End-to-end checks of the `rsm` binary: round trips, determinism of
//! stochastic commands, and the exit-code contract.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn rsm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rsm"))
}

fn run(args: &[&str]) -> Output {
    rsm().args(args).output().expect("binary runs")
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("rsm-cli-test-{}-{name}", std::process::id()));
    p
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).expect("file exists")
}

#[test]
fn decompose_serialize_verify_round_trip() {
    // Round trip for every transition-row catalog model: decompose →
    // serialize → deserialize → verify passes.
    for (name, truncate) in [
        ("two-state", None),
        ("rmnodom", Some("6")),
        ("two-step", Some("5")),
        ("not-determ", Some("4")),
        ("inf-look-back", Some("2")),
    ] {
        let rep = tmp(&format!("rep-{name}.json"));
        let mut args = vec![
            "decompose",
            "--example",
            name,
            "--out",
            rep.to_str().unwrap(),
        ];
        if let Some(t) = truncate {
            args.extend(["--truncate", t]);
        }
        let out = run(&args);
        assert!(
            out.status.success(),
            "{name}: decompose failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );

        let mut args = vec!["verify", "--example", name, "--rep", rep.to_str().unwrap()];
        if let Some(t) = truncate {
            args.extend(["--truncate", t]);
        }
        let out = run(&args);
        assert!(
            out.status.success(),
            "{name}: verify failed: {}{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        );
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert!(stdout.contains("all checks passed"));
        std::fs::remove_file(&rep).ok();
    }
}

#[test]
fn exit_code_names_violated_invariant() {
    // Tamper with a serialized representation: verify must exit nonzero
    // and name the failing invariant.
    let rep = tmp("tampered.json");
    let out = run(&[
        "decompose",
        "--example",
        "two-state",
        "--out",
        rep.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    // Inflate the first level's mass: the mixture overdraws the row.
    let text = read(&rep).replace("\"p\": \"4/5\"", "\"p\": \"9/10\"");
    std::fs::write(&rep, text).unwrap();

    let out = run(&["verify", "--example", "two-state", "--rep", rep.to_str().unwrap()]);
    assert!(!out.status.success(), "tampered representation must fail");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("table-domination") || stderr.contains("mixture-reconstruction"),
        "stderr must name the invariant: {stderr}"
    );
    std::fs::remove_file(&rep).ok();
}

#[test]
fn simulate_is_deterministic_given_seed() {
    let a = tmp("path-a.json");
    let b = tmp("path-b.json");
    for out_path in [&a, &b] {
        let out = run(&[
            "simulate",
            "--example",
            "two-state",
            "--length",
            "5000",
            "--seed",
            "7",
            "--backend",
            "float",
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(read(&a), read(&b), "same seed must give identical paths");

    let c = tmp("path-c.json");
    let out = run(&[
        "simulate",
        "--example",
        "two-state",
        "--length",
        "5000",
        "--seed",
        "8",
        "--backend",
        "float",
        "--out",
        c.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_ne!(read(&a), read(&c), "different seeds must differ");
    for p in [a, b, c] {
        std::fs::remove_file(p).ok();
    }
}

#[test]
fn examples_build_loads_back_as_model() {
    let model = tmp("rmnodom.json");
    let out = run(&[
        "examples",
        "build",
        "rmnodom",
        "--truncate",
        "8",
        "--out",
        model.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    // The emitted file is a loadable model spec.
    let out = run(&[
        "variations",
        "--model",
        model.to_str().unwrap(),
        "--k-max",
        "2",
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("var_k"));
    std::fs::remove_file(&model).ok();
}

#[test]
fn determinize_pipeline_through_files() {
    let ratio = tmp("ratio.json");
    let det = tmp("det.json");
    let out = run(&[
        "ratio-decompose",
        "--example",
        "two-state",
        "--k-max",
        "20",
        "--out",
        ratio.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = run(&[
        "determinize",
        "--rep",
        ratio.to_str().unwrap(),
        "--family",
        "balister",
        "--digit-depth",
        "16",
        "--tolerance",
        "1e-6",
        "--out",
        det.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = read(&det);
    assert!(text.contains("\"index_function\""));
    assert!(text.contains("\"family\": \"balister\""));

    // An incomplete base (exact zero tolerance) is refused.
    let out = run(&[
        "determinize",
        "--rep",
        ratio.to_str().unwrap(),
        "--digit-depth",
        "16",
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("incomplete"));
    for p in [ratio, det] {
        std::fs::remove_file(p).ok();
    }
}

#[test]
fn unknown_example_and_missing_args_fail_cleanly() {
    let out = run(&["examples", "build", "nope"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown example"));

    let out = run(&["decompose"]);
    assert!(!out.status.success());

    let out = run(&["variations", "--example", "two-state", "--model", "x.json"]);
    assert!(!out.status.success());
}

#[test]
fn rsm_threads_env_is_honoured() {
    let out = rsm()
        .env("RSM_THREADS", "1")
        .args(["variations", "--example", "two-state", "--k-max", "4"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = rsm()
        .env("RSM_THREADS", "not-a-number")
        .args(["variations", "--example", "two-state", "--k-max", "4"])
        .output()
        .unwrap();
    assert!(out.status.success(), "malformed RSM_THREADS falls back");
}
