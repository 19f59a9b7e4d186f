use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ldp_core::uniform::run_simulation;
use ldp_std::formats::{
    from_csv, BoundsRow, ChannelFile, FactorizationFile, FisherMaxFile, SimReportFile, SimRow,
    VerifyReport,
};
use serde::de::DeserializeOwned;

fn ldp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ldp"))
        .args(args)
        .output()
        .unwrap()
}

fn data(name: &str) -> String {
    format!("{}/testdata/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn parse<T: DeserializeOwned>(out: &Output) -> T {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn verify_reports_budget_and_extremality() {
    let r: VerifyReport = parse(&ldp(&[
        "verify",
        "--channel",
        &data("rr.json"),
        "--alpha",
        "0.5",
    ]));
    assert!(r.passes && r.is_extremal);
    assert!((r.alpha_effective.unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn factorization_output_is_readable_back() {
    let f: FactorizationFile = parse(&ldp(&[
        "factorize",
        "--channel",
        &data("rr.json"),
        "--alpha",
        "0.5",
    ]));
    assert!(
        f.checks.reconstruction_error < 1e-12 && f.checks.q1_extremal && f.checks.mass_in_window
    );
    let q1 = f.q1.to_channel().unwrap();
    let q2 = f.q2.to_channel().unwrap();
    let original = ChannelFile::from(&q1.compose(&q2).unwrap());
    let path = scratch("recomposed.json");
    std::fs::write(&path, serde_json::to_string(&original).unwrap()).unwrap();
    let again: VerifyReport = parse(&ldp(&[
        "verify",
        "--channel",
        path.to_str().unwrap(),
        "--alpha",
        "0.5",
    ]));
    assert!(again.passes);
}

#[test]
fn fisher_max_bernoulli_half() {
    let r: FisherMaxFile = parse(&ldp(&[
        "fisher-max",
        "--model",
        &data("bernoulli_half.json"),
    ]));
    assert!((r.i_max - 0.08867).abs() < 1e-5);
    assert_eq!(r.support, vec![1, 2]);
    let closed: FisherMaxFile = parse(&ldp(&[
        "fisher-max",
        "--model",
        &data("bernoulli_half.json"),
        "--method",
        "closed-form",
    ]));
    assert!((closed.i_max - r.i_max).abs() < 1e-12);
    assert!(
        r.mechanism
            .to_channel()
            .unwrap()
            .verify_ldp(0.3)
            .unwrap()
            .passes
    );
}

#[test]
fn bounds_csv_columns_and_uniform_model() {
    let out = ldp(&[
        "bounds", "--model", "uniform", "--theta0", "2", "--alpha", "0,0.3",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("alpha,lower,upper,two_point_info,ratio_to_limit\n"));
    let rows: Vec<BoundsRow> = from_csv(&text).unwrap();
    assert_eq!(rows[0].ratio_to_limit, None);
    let e1 = 0.3f64.exp_m1();
    assert!((rows[1].upper - e1 * e1 / 4.0).abs() < 1e-10);
    assert!(rows[1].lower <= rows[1].two_point_info && rows[1].two_point_info <= rows[1].upper);
}

#[test]
fn simulation_outputs_round_trip() {
    let csv_path = scratch("sim.csv");
    let json_path = scratch("sim.json");
    let out = ldp(&[
        "simulate-uniform",
        "--n",
        "300",
        "--iters",
        "500",
        "--grid-start",
        "0.8",
        "--grid-end",
        "1.2",
        "--grid-step",
        "0.2",
        "--seed",
        "5",
        "--workers",
        "3",
        "--out",
        csv_path.to_str().unwrap(),
        "--json",
        json_path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows: Vec<SimRow> = from_csv(&std::fs::read_to_string(&csv_path).unwrap()).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].theory_std.is_some() && rows[2].theory_std.is_none());
    let report: SimReportFile =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    // The JSON carries the full config: re-running it sequentially reproduces the report.
    let rerun = run_simulation(&report.to_config()).unwrap();
    assert_eq!(SimReportFile::from(&rerun), report);
}

#[test]
fn config_file_supplies_parameters() {
    let cfg = scratch("config.json");
    std::fs::write(
        &cfg,
        r#"{"seed": 9, "workers": 2, "bounds": {"model": "gaussian", "alpha": [0.2]}}"#,
    )
    .unwrap();
    let out = ldp(&["bounds", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let rows: Vec<BoundsRow> = from_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    std::fs::write(&cfg, r#"{"bounds": {"alphas": [0.2]}}"#).unwrap();
    let bad = ldp(&["bounds", "--config", cfg.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("alphas"));
}

#[test]
fn validation_errors_exit_with_two() {
    let missing = ldp(&["fisher-max"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("model"));
    let budget = ldp(&["factorize", "--channel", &data("rr.json"), "--alpha", "0.2"]);
    assert_eq!(budget.status.code(), Some(2));
    let grid = ldp(&["simulate-uniform", "--grid-start", "2", "--grid-end", "1"]);
    assert_eq!(grid.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&grid.stderr).contains("grid"));
    let unknown_flag = ldp(&["verify", "--colour"]);
    assert_eq!(unknown_flag.status.code(), Some(2));
    let csv_verify = ldp(&[
        "verify",
        "--channel",
        &data("rr.json"),
        "--alpha",
        "1",
        "--format",
        "csv",
    ]);
    assert_eq!(csv_verify.status.code(), Some(2));
}

#[test]
fn help_documents_file_formats() {
    let out = ldp(&["--help"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"kernel\"") && text.contains("M_star") && text.contains("Exit codes"));
}
