use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const HEADER: &str = "n,x,v,y,v_hat,v_hat_p,e_hat,alpha,M,flag_error,flag_res_up,flag_res_down,flag_steady,flag_reinit";

fn modadc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modadc"))
        .args(args)
        .output()
        .expect("spawn modadc")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exp1_writes_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let res = modadc(&["exp1", "--seed", "3", "--n", "2000", "--out", path(&out)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    for f in ["trace.csv", "truth.csv", "summary.json", "config.echo"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some(HEADER));
    assert_eq!(trace.lines().count(), 2001);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["n_samples"], 2000);
}

#[test]
fn verify_accepts_fresh_output_and_rejects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    assert_eq!(
        code(&modadc(&["exp1", "--n", "3000", "--out", path(&out)])),
        0
    );
    assert_eq!(code(&modadc(&["verify", "--out", path(&out)])), 0);

    let summary = out.join("summary.json");
    let text = fs::read_to_string(&summary).unwrap();
    let tampered = text.replacen("\"n_error_events\": ", "\"n_error_events\": 9", 1);
    assert_ne!(text, tampered);
    fs::write(&summary, tampered).unwrap();
    assert_eq!(code(&modadc(&["verify", "--out", path(&out)])), 4);
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "kappa = 4.0\nkapa = 3.0\n").unwrap();
    let res = modadc(&["run", "--config", path(&cfg)]);
    assert_eq!(code(&res), 2);
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("kapa") && err.contains("line 2"), "{err}");
}

#[test]
fn invalid_values_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "delta_alpha = 1.5\n").unwrap();
    assert_eq!(code(&modadc(&["run", "--config", path(&cfg)])), 2);
    assert_eq!(
        code(&modadc(&["run", "--config", "/nonexistent/cfg.toml"])),
        2
    );
}

#[test]
fn input_out_of_numeric_range_is_a_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("huge.toml");
    fs::write(&cfg, "alpha0 = 1e308\nn_samples = 500\n").unwrap();
    let res = modadc(&["run", "--config", path(&cfg)]);
    assert_eq!(code(&res), 3, "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn run_with_trials_writes_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mc");
    let cfg = dir.path().join("mc.toml");
    fs::write(
        &cfg,
        format!("n_samples = 2000\nseed = 4\nout_dir = {:?}\n", path(&out)),
    )
    .unwrap();
    let res = modadc(&["run", "--config", path(&cfg), "--trials", "3"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let agg: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("aggregate.json")).unwrap()).unwrap();
    assert_eq!(agg["trials"], 3);
    assert_eq!(agg["fields"]["n_samples"]["mean"], 2000.0);
    let trials: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("trials.json")).unwrap()).unwrap();
    assert_eq!(trials.as_array().unwrap().len(), 3);
}

#[test]
fn sweep_prints_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(&cfg, "n_samples = 2000\ntrials = 2\n").unwrap();
    let res = modadc(&[
        "sweep",
        "--param",
        "kappa",
        "--values",
        "3.5,4.5",
        "--config",
        path(&cfg),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let text = String::from_utf8(res.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("kappa,"));
    assert!(lines[1].starts_with("3.5,") && lines[2].starts_with("4.5,"));

    let bad = modadc(&[
        "sweep",
        "--param",
        "gain",
        "--values",
        "1",
        "--config",
        path(&cfg),
    ]);
    assert_eq!(code(&bad), 2);
}
