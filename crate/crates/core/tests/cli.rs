use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ppath::run::{sweep_columns, RunSummary, SWEEP_HEADER};

fn ppath(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppath"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn short_run(out: &Path) -> Output {
    ppath(&[
        "evolve",
        "--out",
        out.to_str().unwrap(),
        "--override",
        "lambda=1",
        "--override",
        "eta=16",
        "--override",
        "t_final=2",
        "--override",
        "sigma=0.6",
    ])
}

#[test]
fn evolve_is_deterministic_and_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(short_run(&a).status.success());
    assert!(short_run(&b).status.success());
    for name in ["trace.csv", "reduced.csv", "bounce.csv"] {
        let first = fs::read(a.join(name)).unwrap();
        assert_eq!(first, fs::read(b.join(name)).unwrap(), "{name} differs between runs");
    }
    let trace = fs::read_to_string(a.join("trace.csv")).unwrap();
    assert!(trace.starts_with("t,P_F,Gamma\n"));
    assert!(!trace.contains('\r'));
    let row: Vec<&str> = trace.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row.len(), 3);
    for field in row {
        let mantissa = field.split('e').next().unwrap();
        assert_eq!(mantissa.trim_start_matches('-').len(), 18, "{field}");
        field.parse::<f64>().unwrap();
    }
    assert!(fs::read_to_string(a.join("reduced.csv")).unwrap().starts_with("R,K,U\n"));
    assert!(fs::read_to_string(a.join("bounce.csv")).unwrap().starts_with("rho,phi\n"));
}

#[test]
fn meta_json_reproduces_the_configuration() {
    let dir = tempfile::tempdir().unwrap();
    assert!(short_run(dir.path()).status.success());
    let summary = RunSummary::read(&dir.path().join("meta.json")).unwrap();
    assert_eq!(summary.command, "evolve");
    assert!(!summary.partial);
    let cfg = summary.run_config().unwrap();
    assert_eq!(cfg.lambda, 1.0);
    assert_eq!(cfg.t_final, 2.0);
    assert_eq!(cfg.to_key_values(), summary.config);
    // feeding the echoed configuration back reproduces the run exactly
    let config_path = dir.path().join("echo.cfg");
    fs::write(&config_path, cfg.to_config_text()).unwrap();
    let again = dir.path().join("again");
    let out = ppath(&["evolve", "--config", config_path.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        fs::read(dir.path().join("trace.csv")).unwrap(),
        fs::read(again.join("trace.csv")).unwrap()
    );
}

#[test]
fn sweep_records_failed_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = ppath(&[
        "sweep",
        "--jobs",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
        "--override",
        "sweep_lambda=1,1e-7",
        "--override",
        "sweep_eta=16",
        "--override",
        "t_final=2",
        "--override",
        "sigma=0.6",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), SWEEP_HEADER.join(","));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].ends_with(','), "successful row has an empty error field");
    assert!(rows[1].ends_with('"'), "failed row carries a quoted message: {}", rows[1]);
    let columns = sweep_columns(&text);
    assert!(columns[0][7].is_some(), "statistic present");
    assert!(columns[1][7].is_none(), "statistic missing for the failed point");
}

#[test]
fn configuration_errors_exit_nonzero_with_context() {
    let out = ppath(&["reduce", "--override", "lambda=1", "--override", "eta=16", "--override", "bogus=1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus: unknown key"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    fs::write(&path, "# comment\nlambda = 1\neta = sixteen\n").unwrap();
    let out = ppath(&["reduce", "--config", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3: eta"));

    let out = ppath(&["reduce", "--override", "lambda=-1", "--override", "eta=0", "--override", "dx=0"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    for key in ["lambda", "eta", "dx"] {
        assert!(stderr.contains(key), "{key} missing from: {stderr}");
    }
}

#[test]
fn coldatom_subcommand_forces_the_condensate_system() {
    let dir = tempfile::tempdir().unwrap();
    let out = ppath(&[
        "coldatom",
        "--out",
        dir.path().to_str().unwrap(),
        "--override",
        "lambda=0.25",
        "--override",
        "eta=0.8",
        "--override",
        "sigma=2",
        "--override",
        "r_max=40",
        "--override",
        "t_final=5",
        "--override",
        "smoothing_window=1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = RunSummary::read(&dir.path().join("meta.json")).unwrap();
    assert_eq!(summary.config["system"], "cold-atom");
    assert!(summary.s_e_field.is_some());
    assert!(fs::read_to_string(dir.path().join("densities.csv")).unwrap().starts_with("r,rho,gamma\n"));
}
