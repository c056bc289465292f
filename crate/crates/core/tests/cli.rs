//! End-to-end checks of the command-line binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_semigroup-lab"))
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_spec(dir: &Path) {
    std::fs::write(
        dir.join("expcomb.json"),
        r#"{"family": "exp_comb", "gamma": 1, "modes": 1000}"#,
    )
    .unwrap();
}

fn dir_listing(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn norms_dyadic_grid_has_21_rows() {
    let d = tempfile::tempdir().unwrap();
    write_spec(d.path());
    let o = run_in(
        d.path(),
        &[
            "norms",
            "--spec",
            "expcomb.json",
            "--kernel",
            "inv_frac:1",
            "--grid",
            "dyadic:1:1e6",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 21);
    assert_eq!(text.lines().next(), Some("abscissa,value,argmax_k"));
    assert_eq!(dir_listing(d.path()), vec!["expcomb.json"]);
}

#[test]
fn outputs_only_under_out() {
    let d = tempfile::tempdir().unwrap();
    write_spec(d.path());
    let o = run_in(
        d.path(),
        &[
            "norms",
            "--spec",
            "expcomb.json",
            "--kernel",
            "inv",
            "--grid",
            "dyadic:1:64",
            "--out",
            "res",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert_eq!(dir_listing(d.path()), vec!["expcomb.json", "res"]);
    assert_eq!(
        dir_listing(&d.path().join("res")),
        vec!["norms.csv", "norms.json"]
    );
}

#[test]
fn cayley_csv_header_and_dyadic_samples() {
    let d = tempfile::tempdir().unwrap();
    write_spec(d.path());
    let o = run_in(
        d.path(),
        &[
            "cayley",
            "--spec",
            "expcomb.json",
            "--schedule",
            "random:0.5,4,seed=42",
            "--alpha",
            "1",
            "--steps",
            "1000",
            "--samples",
            "dyadic",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "n,value,argmax_k");
    assert_eq!(rows.len(), 1 + 11);
    assert!(rows.last().unwrap().starts_with("1000,"));
}

#[test]
fn bnorm_and_lyapunov_csv_headers() {
    let d = tempfile::tempdir().unwrap();
    write_spec(d.path());
    let o = run_in(d.path(), &["bnorm", "--alpha", "1", "--grid", "list:1,10"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("t,b0,envelope,ratio\n"));

    let o = run_in(
        d.path(),
        &[
            "lyapunov",
            "--spec",
            "expcomb.json",
            "--probe",
            "p_form",
            "--grid",
            "dyadic:0.01:1",
        ],
    );
    assert!(stdout(&o).starts_with("xi,value\n"));

    let o = run_in(
        d.path(),
        &[
            "lyapunov",
            "--spec",
            "expcomb.json",
            "--probe",
            "pz",
            "--grid",
            "list:0.5,0.75",
            "--steps",
            "100",
            "--schedule",
            "random:0.5,4,seed=1",
        ],
    );
    assert!(stdout(&o).starts_with("r,constant\n"), "{}", stdout(&o));

    let o = run_in(
        d.path(),
        &[
            "lyapunov",
            "--spec",
            "expcomb.json",
            "--probe",
            "shifted_inverse",
            "--grid",
            "dyadic:1e-3:1",
            "--json",
        ],
    );
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["probe", "constant", "finite", "trend"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn fit_reads_a_saved_curve() {
    let d = tempfile::tempdir().unwrap();
    write_spec(d.path());
    let o = run_in(
        d.path(),
        &[
            "norms",
            "--spec",
            "expcomb.json",
            "--kernel",
            "inv_frac:1",
            "--grid",
            "geometric:10:1e5:4",
            "--out",
            "o",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let o = run_in(
        d.path(),
        &[
            "fit",
            "o/norms.csv",
            "--model",
            "power",
            "--window",
            "1e2:1e5",
        ],
    );
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let p = v["fit"]["exponent"].as_f64().unwrap();
    assert!((p - 0.5).abs() < 0.01, "{p}");
    let o = run_in(
        d.path(),
        &[
            "fit",
            "o/norms.csv",
            "--model",
            "logpow:1",
            "--window",
            "1e2:1e5",
        ],
    );
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["verdict"]["finite"], true);
}

#[test]
fn matrix_operations() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("a.json"), "[[[-1,0],[0.5,0]],[[0,0],[-2,0]]]").unwrap();
    for op in [
        "eig",
        "expm",
        "cayley",
        "lyapunov",
        "frac_power",
        "bcalc",
        "semigroup_bound",
    ] {
        let o = run_in(d.path(), &["matrix", "a.json", op]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{op}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let _: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    }
}

#[test]
fn malformed_config_exits_2_with_pointer() {
    let d = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenarios().join("exp_comb_rate.json"))
        .unwrap()
        .replacen("\"inv_frac:1\"", "\"inv_frac:one\"", 1);
    std::fs::write(d.path().join("bad.json"), text).unwrap();
    let o = run_in(d.path(), &["run", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(report["error"], "schema");
    assert_eq!(report["pointer"], "/steps/0/kernel");
}

#[test]
fn numerical_failure_exits_3() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(
        d.path().join("poly.json"),
        r#"{"family": "poly_comb", "beta": 1, "modes": 8}"#,
    )
    .unwrap();
    let o = run_in(
        d.path(),
        &[
            "lyapunov",
            "--spec",
            "poly.json",
            "--probe",
            "p_form",
            "--grid",
            "list:0",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(report["error"], "precondition");
}

#[test]
fn failed_expectation_exits_1() {
    let d = tempfile::tempdir().unwrap();
    let o = run_in(
        d.path(),
        &[
            "run",
            scenarios().join("cn_three_quarter.json").to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["pass"], false);
}

#[test]
fn scenario_reruns_are_byte_identical() {
    let d = tempfile::tempdir().unwrap();
    let cfg = scenarios().join("lyapunov_probes.json");
    let cfg = cfg.to_str().unwrap();
    let a = run_in(d.path(), &["run", cfg, "--out", "a"]);
    let b = bin()
        .current_dir(d.path())
        .env("SEMIGROUP_LAB_THREADS", "1")
        .args(["run", cfg, "--out", "b"])
        .output()
        .unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let files = dir_listing(&d.path().join("a/lyapunov_probes"));
    assert!(files.len() >= 12);
    for f in files {
        let x = std::fs::read(d.path().join("a/lyapunov_probes").join(&f)).unwrap();
        let y = std::fs::read(d.path().join("b/lyapunov_probes").join(&f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
    assert_eq!(
        std::fs::read(d.path().join("a/lyapunov_probes.report.json")).unwrap(),
        std::fs::read(d.path().join("b/lyapunov_probes.report.json")).unwrap()
    );
}

#[test]
fn shipped_scenarios_validate() {
    for entry in std::fs::read_dir(scenarios()).unwrap() {
        let path = entry.unwrap().path();
        semigroup_lab::scenario::load_scenario(&path)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn verify_prints_one_line_per_criterion() {
    let d = tempfile::tempdir().unwrap();
    let o = run_in(
        d.path(),
        &[
            "verify",
            "--suite",
            "paper",
            "--criteria",
            "1,6",
            "--out",
            "v",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
    assert!(d.path().join("v/verify.json").exists());
}

#[test]
fn bad_arguments_exit_2() {
    let o = bin().args(["norms", "--kernel", "inv"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["verify", "--suite", "other"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
