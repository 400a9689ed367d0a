use std::process::{Command, Output};

fn sucre(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sucre"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn help_lists_every_subcommand() {
    let o = sucre(&["--help"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for cmd in [
        "estimator-compare",
        "two-ue",
        "resolve-vs-m",
        "bias-sweep",
        "crowded",
        "validate",
    ] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
    let o = sucre(&["crowded", "--help"]);
    for flag in ["--config", "--seed", "--trials", "--out", "--threads"] {
        assert!(stdout(&o).contains(flag), "{flag}");
    }
}

#[test]
fn unknown_subcommand_fails() {
    assert!(!sucre(&["figure-7"]).status.success());
    assert!(!sucre(&[]).status.success());
}

#[test]
fn writes_csv_to_file_and_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("two.toml");
    std::fs::write(&cfg, "grid = [0.0, 3.0]\n[params]\nantennas = [50]\n").unwrap();
    let out = dir.path().join("two.csv");
    let o = sucre(&[
        "two-ue",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "50",
        "--seed",
        "3",
        "--threads",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let file = std::fs::read_to_string(&out).unwrap();
    assert!(file.starts_with("experiment,series,sweep_value,metric,estimate,std_error,trials,closed_form\n"));
    assert!(file.contains("two-ue,M=50,3,repeat_ue1,"));

    let o = sucre(&[
        "two-ue",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "50",
        "--seed",
        "3",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), file);
}

#[test]
fn bad_inputs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let o = sucre(&["bias-sweep", "--trials", "0"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("trials"));
    let bad = dir.path().join("missing/out.csv");
    let o = sucre(&["crowded", "--trials", "5", "--out", bad.to_str().unwrap()]);
    assert!(!o.status.success());
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "experiment = \"crowded\"\n").unwrap();
    assert!(!sucre(&["two-ue", "--config", cfg.to_str().unwrap()]).status.success());
}

#[test]
fn validate_reports_every_check() {
    let o = sucre(&["validate", "--trials", "20000", "--seed", "5"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("PASS") || l.starts_with("FAIL"))
        .collect();
    assert!(lines.len() >= 10, "{text}");
    let failed = lines.iter().filter(|l| l.starts_with("FAIL")).count();
    assert!(text.contains(&format!("{} checks, {failed} failed", lines.len())));
    assert_eq!(o.status.success(), failed == 0);
}
