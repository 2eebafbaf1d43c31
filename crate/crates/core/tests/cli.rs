use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use optomech::config::Config;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optomech"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn error_line(o: &Output) -> serde_json::Value {
    let err = stderr(o);
    let line = err.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|_| panic!("not JSON: {err}"))
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn point_at_decoupled_vacuum() {
    let o = run(&["point", "--set", "params.P=0", "--set", "params.T=0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let field = |k: &str| {
        text.lines()
            .find(|l| l.starts_with(k))
            .map(|l| l[k.len()..].trim().to_string())
            .unwrap_or_else(|| panic!("missing {k}: {text}"))
    };
    assert_eq!(field("E_N "), "0");
    assert_eq!(field("stable "), "true");
    assert_eq!(field("n_th "), "0");
}

#[test]
fn dump_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.toml");
    let o = run(&[
        "preset",
        "fig4",
        "--set",
        "params.r=1.25",
        "--dump-config",
        "--out",
        path_str(&first),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&first).unwrap();

    let o = run(&["sweep", "--config", path_str(&first), "--dump-config"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), text);
    assert_eq!(
        Config::parse(&text).unwrap(),
        Config::parse(&stdout(&o)).unwrap()
    );
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[numerics]\nstabilty_margin = 0.1\n").unwrap();
    let o = run(&["point", "--config", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_line(&o)["error"], "ConfigParseError");

    let o = run(&["point", "--set", "params.Tx=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_line(&o)["error"], "ConfigParseError");
}

#[test]
fn unit_mismatch_is_a_config_error() {
    let o = run(&["point", "--set", "params.T=\"0.2 K\""]);
    assert_eq!(o.status.code(), Some(2));
    let e = error_line(&o);
    assert!(
        e["message"].as_str().unwrap().contains("unit mismatch"),
        "{e}"
    );

    let o = run(&[
        "point",
        "--set",
        "params.T=\"0.02 mK\"",
        "--set",
        "params.lambda=0.1Γ",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn domain_errors_exit_with_three() {
    let o = run(&["point", "--set", "params.L=-1"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_line(&o)["error"], "InvalidParameter");
}

#[test]
fn unknown_preset_exits_with_two() {
    let o = run(&["preset", "fig7"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_line(&o)["error"], "UnknownPreset");
}

#[test]
fn sweep_writes_csv_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig2.csv");
    let o = run(&[
        "preset",
        "fig2",
        "--set",
        "sweep.axes.0.points=6",
        "--jobs",
        "2",
        "--plot",
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(&out).unwrap();
    let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(
        data[0],
        "beta_Gamma,T_mK,E_N,nu_minus,stable,residual,status"
    );
    assert_eq!(data.len(), 1 + 3 * 6);
    assert!(csv.lines().any(|l| l.starts_with("# timestamp_unix: ")));
    let svg = fs::read_to_string(dir.path().join("fig2.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn plot_without_out_is_rejected() {
    let o = run(&["preset", "fig2", "--plot"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_rejected_before_running() {
    let o = run(&["preset", "fig2", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_line(&o)["error"], "IoError");
}

#[test]
fn bad_grid_points_are_reported_not_fatal() {
    let o = run(&[
        "sweep",
        "--set",
        "sweep.axes=[{ name = \"T\", start = -0.1, end = 0.1, points = 3 }]",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let warn: serde_json::Value =
        serde_json::from_str(stderr(&o).lines().next().expect("warning line")).unwrap();
    assert_eq!(warn["warning"], "InvalidParameter");
    assert_eq!(warn["point"]["T"], -0.1);
    let rows: Vec<String> = stdout(&o)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(String::from)
        .collect();
    assert!(
        rows[1].ends_with("nan,nan,false,nan,InvalidParameter"),
        "{}",
        rows[1]
    );
    assert!(
        rows[2].contains(",true,") && rows[2].ends_with(",ok"),
        "{}",
        rows[2]
    );
}

#[test]
fn sweep_without_axes_is_a_config_error() {
    let o = run(&["sweep"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_line(&o)["error"], "InvalidSweep");
}

#[test]
fn threshold_reports_death_temperature() {
    let o = run(&[
        "threshold",
        "--preset",
        "fig2",
        "--set",
        "sweep.family.values=[0.0002]",
        "--resolution",
        "1e-4",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("death threshold along T [mK]"), "{text}");
}

#[test]
fn threshold_without_crossing_exits_with_three() {
    let o = run(&[
        "threshold",
        "--preset",
        "fig2",
        "--set",
        "sweep.family.values=[0.0002]",
        "--kind",
        "birth",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_line(&o)["error"], "NoCrossing");
}

#[test]
fn validate_reports_counts() {
    let o = run(&["validate", "--draws", "2"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    let text = stdout(&o);
    assert!(text.trim_end().ends_with("9 passed, 0 failed"), "{text}");
}
