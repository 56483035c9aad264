//! Black-box tests of the command line binary: reference output, artifact
//! writing, data-path resolution, exit codes, and byte-level
//! reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_ddd-itsa");

fn data_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/cigsales.csv")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn golden_args(subcommand: &str) -> Vec<String> {
    let mut args: Vec<String> = vec![subcommand.into()];
    for a in [
        "--data",
        &data_path().display().to_string(),
        "--treatid",
        "3",
        "--contid",
        "8",
        "19",
        "--contid2",
        "4",
        "--trperiod",
        "1989",
        "--lag",
        "1",
    ] {
        args.push(a.into());
    }
    args
}

fn run_golden(subcommand: &str, extra: &[&str]) -> Output {
    let mut args = golden_args(subcommand);
    args.extend(extra.iter().map(|s| s.to_string()));
    Command::new(BIN).args(&args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

#[test]
fn fit_prints_the_reference_table() {
    let out = run_golden("fit", &[]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("124 observations, 12 coefficients"));
    assert!(text.contains("Newey-West (Bartlett) covariance, lag 1"));
    assert!(text.contains("95% LCL"));

    let row7 = text
        .lines()
        .find(|l| l.starts_with("b7 "))
        .expect("table has a b7 row");
    let cells: Vec<&str> = row7.split_whitespace().collect();
    assert_eq!(
        cells,
        ["b7", "(Z1XT)", "-2.07", "0.75", "-2.77", "0.006", "-3.54", "-0.61"]
    );
    let row11 = text.lines().find(|l| l.starts_with("b11 ")).unwrap();
    assert!(row11.split_whitespace().any(|c| c == "-0.31"));
}

#[test]
fn reruns_are_byte_identical() {
    let first = run_golden("fit", &["--posttrend"]);
    let second = run_golden("fit", &["--posttrend"]);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    assert!(first.stderr.is_empty());
}

#[test]
fn data_dir_env_provides_the_default_file() {
    let dir = data_path().parent().unwrap().to_path_buf();
    let out = Command::new(BIN)
        .args([
            "fit", "--treatid", "3", "--contid", "8", "19", "--contid2", "4", "--trperiod",
            "1989", "--lag", "1",
        ])
        .env("DDD_ITSA_DATA", &dir)
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("124 observations, 12 coefficients"));
}

#[test]
fn balance_lists_six_passing_contrasts() {
    let out = run_golden("balance", &[]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("alpha = 0.05"));
    assert!(text.contains("pre trend difference: control 2 vs control 1"));
    let passes = text.lines().filter(|l| l.trim_end().ends_with("pass")).count();
    assert_eq!(passes, 6);
}

#[test]
fn posttrend_prints_one_row_per_arm() {
    let out = run_golden("posttrend", &[]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("Post-period trends"));
    for arm in ["control 1", "treatment", "control 2"] {
        assert!(text.contains(&format!("post trend: {arm}")), "missing {arm}");
    }
}

#[test]
fn lincom_agrees_between_fresh_and_stored_fits() {
    let dir = tempfile::tempdir().unwrap();
    let fit_file = dir.path().join("golden-fit.json");

    let saved = run_golden("fit", &["--save-fit", &fit_file.display().to_string()]);
    assert!(saved.status.success());
    assert!(stdout(&saved).contains("saved fit:"));

    let fresh = run_golden("lincom", &["--expr", "b7 - b11"]);
    assert!(fresh.status.success());
    let from_fresh = stdout(&fresh);
    assert!(from_fresh.contains("-1.76"));

    let stored = run(&[
        "lincom",
        "--expr",
        "b7 - b11",
        "--fit",
        &fit_file.display().to_string(),
    ]);
    assert!(stored.status.success(), "stderr: {}", String::from_utf8_lossy(&stored.stderr));
    let from_stored = stdout(&stored);

    let row = |text: &str| {
        text.lines()
            .find(|l| l.starts_with("b7 - b11"))
            .expect("result row")
            .to_string()
    };
    assert_eq!(row(&from_fresh), row(&from_stored));
}

#[test]
fn figure_writes_plot_json_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = golden_args("fit");
    args.push("--figure".into());
    let out = Command::new(BIN)
        .args(&args)
        .current_dir(dir.path())
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("saved plot: ddd-itsa-plot.json"));
    assert!(text.contains("saved plot: ddd-itsa-plot.svg"));

    let json = std::fs::read_to_string(dir.path().join("ddd-itsa-plot.json")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&json).expect("plot JSON parses");
    assert_eq!(doc["intervention_time"], 1989);
    assert_eq!(doc["series"].as_array().unwrap().len(), 3);

    let svg = std::fs::read_to_string(dir.path().join("ddd-itsa-plot.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.trim_end().ends_with("</svg>"));
}

#[test]
fn save_design_round_trips_through_the_loader() {
    let dir = tempfile::tempdir().unwrap();
    let design_file = dir.path().join("design.csv");
    let out = run_golden("fit", &["--save-design", &design_file.display().to_string()]);
    assert!(out.status.success());

    let text = std::fs::read_to_string(&design_file).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("series,time,y,const,T,X,XT,Z1"));
    assert_eq!(lines.count(), 124);
}

#[test]
fn simulate_is_seeded_and_saves_json() {
    let dir = tempfile::tempdir().unwrap();
    let json_file = dir.path().join("power.json");
    let args = [
        "simulate",
        "--seed",
        "7",
        "--reps",
        "40",
        "--fit-lag",
        "1",
        "--json",
        &json_file.display().to_string(),
    ];
    let first = run(&args);
    assert!(first.status.success(), "stderr: {}", String::from_utf8_lossy(&first.stderr));
    let text = stdout(&first);
    assert!(text.contains("Power analysis: trend DDD"));
    assert!(text.contains("replications 40 (completed 40, failed 0), seed 7"));

    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_file).unwrap()).unwrap();
    assert_eq!(value["replications"], 40);
    assert_eq!(value["target"], "trend DDD");
    let rate = value["rejection_rate"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&rate));

    let second = run(&args);
    assert_eq!(first.stdout, second.stdout, "same seed must reproduce the study");
}

#[test]
fn diag_prints_the_autocorrelation_battery() {
    let out = run_golden("diag", &["--max-lag", "3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for section in ["ACF", "PACF", "Breusch-Godfrey LM tests", "Suggested kernel lag"] {
        assert!(text.contains(section), "missing section {section}");
    }
    assert!(text.contains("average"));
}

#[test]
fn exit_codes_separate_usage_from_data_errors() {
    // Malformed expression: usage error, one-line message, no trace.
    let out = run_golden("lincom", &["--expr", "b99"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error:"), "got: {err}");
    assert_eq!(err.trim_end().lines().count(), 1);

    // Unknown unit id: specification error.
    let out = run(&[
        "fit",
        "--data",
        &data_path().display().to_string(),
        "--treatid",
        "99",
        "--contid",
        "8",
        "--trperiod",
        "1989",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // Missing file: data error.
    let out = run(&[
        "fit",
        "--data",
        "/definitely/not/here.csv",
        "--treatid",
        "3",
        "--contid",
        "8",
        "--trperiod",
        "1989",
    ]);
    assert_eq!(out.status.code(), Some(1));

    // Bad flags: clap usage error.
    let out = run(&["fit", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));

    // Help and version: success.
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn lincom_without_fit_or_model_is_a_usage_error() {
    let out = run(&["lincom", "--expr", "b1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--fit or --treatid"), "got: {err}");
}
