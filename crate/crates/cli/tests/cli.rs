use std::process::{Command, Output};

fn cirsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cirsim"))
        .args(args)
        .env_remove("CIRSIM_SEED")
        .output()
        .expect("run cirsim")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn value_of(csv: &str, metric: &str) -> f64 {
    csv.lines()
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|f| f[4] == metric)
        .unwrap_or_else(|| panic!("no {metric} row in\n{csv}"))[5]
        .parse()
        .unwrap()
}

#[test]
fn moments_at_time_zero() {
    let out = cirsim(&[
        "moments", "--b", "2", "--sigma", "1", "--x0", "1", "--t", "0",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("experiment,n,C,t,metric,value,bound,decision\n"));
    assert_eq!(value_of(&text, "mean"), 1.0);
    assert_eq!(value_of(&text, "second_moment"), 1.0);
}

#[test]
fn bounds_table_drift_residual() {
    let out = cirsim(&[
        "bounds", "--b", "1", "--sigma", "1", "--x0", "1", "--T", "1", "--n", "100", "--C", "5",
    ]);
    assert!(out.status.success());
    let drift = value_of(&stdout(&out), "drift_residual_bound");
    assert!((drift - 0.06).abs() < 1e-15);
}

#[test]
fn converge_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| {
        let path = dir.path().join(name);
        let out = cirsim(&[
            "converge",
            "--seed",
            "42",
            "--paths",
            "3000",
            "--n",
            "8,32,128",
            "--t",
            "0.5,1",
            "--workers",
            workers,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.code().is_some_and(|c| c <= 1), "{out:?}");
        std::fs::read(path).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "3");
    assert_eq!(a, b);
    assert!(a.ends_with(b"\n") && !a.ends_with(b"\n\n"));
}

#[test]
fn json_output_by_extension() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let out = cirsim(&[
        "marginal",
        "--t",
        "1",
        "--x",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.starts_with("[\n") && text.ends_with("]\n"));
    assert!(text.contains("\"metric\": \"cdf\""));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        "[model]\nb = 2.0\nx0 = 1.0\n[grid]\neval_times = [0.0]\n",
    )
    .unwrap();
    let out = cirsim(&["moments", "--config", cfg.to_str().unwrap(), "--x0", "3"]);
    assert!(out.status.success());
    assert_eq!(value_of(&stdout(&out), "mean"), 3.0);
}

#[test]
fn env_seed_is_default_only() {
    let args = ["scheme", "--n", "16", "--dump", "1"];
    let with_env = Command::new(env!("CARGO_BIN_EXE_cirsim"))
        .args(args)
        .env("CIRSIM_SEED", "7")
        .output()
        .unwrap();
    let with_flag = cirsim(&[&args[..], &["--seed", "7"]].concat());
    let default = cirsim(&args);
    assert_eq!(with_env.stdout, with_flag.stdout);
    assert_ne!(with_env.stdout, default.stdout);
    let overridden = Command::new(env!("CARGO_BIN_EXE_cirsim"))
        .args([&args[..], &["--seed", "42"]].concat())
        .env("CIRSIM_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(overridden.stdout, default.stdout);
}

#[test]
fn precondition_violations_exit_two() {
    let out = cirsim(&["converge", "--T", "4", "--n", "8", "--paths", "500"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n > 2T"));

    let out = cirsim(&["sandwich", "--C", "0.9", "--paths", "500"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("max(b, 1)"));

    let out = cirsim(&["converge", "--paths", "50"]);
    assert_eq!(out.status.code(), Some(2));

    let out = cirsim(&["moments", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rejected_rows_exit_one() {
    // Four steps are far from the exact law; at a loose confidence the KS row rejects.
    let out = cirsim(&[
        "converge",
        "--paths",
        "2000",
        "--n",
        "3,4",
        "--confidence",
        "0.01",
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
}
