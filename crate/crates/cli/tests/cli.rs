use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use haps_ris_cli::run::{self, CSV_COLUMNS};
use haps_ris_cli::{exit, RunOptions, ScenarioFile, StrategySet};

const BASE: &str = r#"
[scenario]
carrier_frequency = "2 GHz"
orbit_radius = "3 km"
speed = "110 km/h"
ris_length = "0.4 lambda"
ris_width = "0.4 lambda"
element_length = "0.2 lambda"
element_width = "0.2 lambda"
tx_position = ["-5 km", "0 km", "20 km"]
rx_position = ["5 km", "0 km", "20 km"]

[sweep]
ris_lengths = ["10 m"]
start = "0 s"
stop = "4 s"
step = "1 s"
"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_haps-ris"))
        .args(args)
        .output()
        .unwrap()
}

fn run_with(text: &str, args: &[&str]) -> Output {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), text);
    let mut full = vec![args[0], path.to_str().unwrap()];
    full.extend_from_slice(&args[1..]);
    cli(&full)
}

fn data_lines(stdout: &[u8]) -> Vec<String> {
    String::from_utf8_lossy(stdout)
        .lines()
        .filter(|l| !l.starts_with('#') && *l != CSV_COLUMNS)
        .map(str::to_owned)
        .collect()
}

#[test]
fn single_length_both_strategies_gives_two_rows() {
    let out = run_with(BASE, &["sweep-dims"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = data_lines(&out.stdout);
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("1.00000000000e1,proposed,334,2,"));
    assert!(rows[1].starts_with("1.00000000000e1,reversed,334,2,"));
}

#[test]
fn csv_header_is_versioned_and_hashed() {
    let out = run_with(BASE, &["sweep-time", "--strategy", "proposed"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let comment = lines.next().unwrap();
    assert!(comment.starts_with("# haps-ris "));
    assert!(comment.contains("sweep-time schema=1 sweep_var=time_s config_sha256="));
    assert_eq!(lines.next(), Some(CSV_COLUMNS));
    assert_eq!(lines.count(), 5);
}

#[test]
fn strategy_flag_filters_rows() {
    let out = run_with(BASE, &["sweep-dims", "--strategy", "reversed"]);
    let rows = data_lines(&out.stdout);
    assert_eq!(rows.len(), 1);
    assert!(rows[0].contains(",reversed,"));
}

#[test]
fn empty_length_list_is_a_config_error() {
    let text = BASE.replace("ris_lengths = [\"10 m\"]", "ris_lengths = []");
    for cmd in ["sweep-dims", "sweep-time"] {
        let out = run_with(&text, &[cmd]);
        assert_eq!(out.status.code(), Some(exit::CONFIG));
        assert!(String::from_utf8_lossy(&out.stderr).contains("sweep.ris_lengths"));
    }
}

#[test]
fn nonpositive_step_is_a_config_error() {
    for step in ["0 s", "-1 s"] {
        let out = run_with(
            &BASE.replace("step = \"1 s\"", &format!("step = \"{step}\"")),
            &["sweep-time"],
        );
        assert_eq!(out.status.code(), Some(exit::CONFIG));
        assert!(String::from_utf8_lossy(&out.stderr).contains("sweep.step"));
    }
}

#[test]
fn bare_number_and_unknown_key_are_config_errors() {
    let out = run_with(&BASE.replace("\"3 km\"", "3000"), &["sweep-dims"]);
    assert_eq!(out.status.code(), Some(exit::CONFIG));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no unit suffix"));

    let out = run_with(
        &BASE.replace("[sweep]", "[sweep]\nris_height = \"1 m\""),
        &["sweep-dims"],
    );
    assert_eq!(out.status.code(), Some(exit::CONFIG));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let out = cli(&["snapshot", "/nonexistent/scenario.toml"]);
    assert_eq!(out.status.code(), Some(exit::CONFIG));
}

#[test]
fn reference_outside_grid_is_a_config_error() {
    let out = run_with(BASE, &["snapshot", "--ref", "3,1"]);
    assert_eq!(out.status.code(), Some(exit::CONFIG));
}

#[test]
fn oracle_guard_violation_exits_with_guard_code() {
    let text = BASE.replace("0.4 lambda", "0.6 lambda");
    let out = run_with(&text, &["oracle"]);
    assert_eq!(out.status.code(), Some(exit::GUARD));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("over 9 elements"), "{err}");
}

#[test]
fn degenerate_distance_exits_with_numerical_code() {
    let text = BASE.replace("[sweep]", "min_distance = \"30 km\"\n\n[sweep]");
    let out = run_with(&text, &["snapshot"]);
    assert_eq!(
        out.status.code(),
        Some(exit::NUMERICAL),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn oracle_reports_bounded_optimum() {
    let out = run_with(BASE, &["oracle"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["states_searched"], 65536);
    assert_eq!(v["best_within_bounds"], true);
    assert_eq!(v["best_levels"].as_array().unwrap().len(), 4);
}

#[test]
fn snapshot_dump_lists_every_element() {
    let out = run_with(BASE, &["snapshot", "--dump-elements", "--time", "2.5 s"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["t_s"], 2.5);
    assert_eq!(v["reports"].as_array().unwrap().len(), 2);
    let elements = v["elements"].as_array().unwrap();
    assert_eq!(elements.len(), 4);
    assert!(elements
        .iter()
        .all(|e| e["psi_proposed_rad"].as_f64().unwrap() >= 0.0));

    let plain = run_with(BASE, &["snapshot"]);
    let v: serde_json::Value = serde_json::from_slice(&plain.stdout).unwrap();
    assert!(v.get("elements").is_none());
}

#[test]
fn out_flag_writes_file_and_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), BASE);
    let target = dir.path().join("rows.csv");
    let out = cli(&[
        "sweep-time",
        config.to_str().unwrap(),
        "--out",
        target.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let stdout = cli(&["sweep-time", config.to_str().unwrap()]).stdout;
    assert_eq!(std::fs::read(&target).unwrap(), stdout);
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 2, "temporary file left behind");
}

#[test]
fn failed_run_leaves_existing_output_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        &BASE.replace("ris_lengths = [\"10 m\"]", "ris_lengths = []"),
    );
    let target = dir.path().join("rows.csv");
    std::fs::write(&target, "previous").unwrap();
    let out = cli(&[
        "sweep-dims",
        config.to_str().unwrap(),
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(exit::CONFIG));
    assert_eq!(std::fs::read_to_string(&target).unwrap(), "previous");
}

#[test]
fn stationary_platform_gives_constant_rows() {
    let file = ScenarioFile::parse(
        &BASE
            .replace("\"110 km/h\"", "\"0 m/s\"")
            .replace("stop = \"4 s\"", "stop = \"60 s\""),
    )
    .unwrap();
    let rows = run::sweep_time(&file, &RunOptions::default()).unwrap();
    assert_eq!(rows.len(), 61 * 2);
    let close = |a: f64, b: f64| a == b || ((a - b) / b).abs() <= 1e-12;
    for pair in rows.chunks(2).collect::<Vec<_>>().windows(2) {
        for (r0, r1) in pair[0].iter().zip(pair[1]) {
            assert_eq!(r0.strategy, r1.strategy);
            assert!(close(r0.gain_db, r1.gain_db));
            assert!(close(r0.delay_spread_s, r1.delay_spread_s));
            assert!(close(r0.delay_upper_s, r1.delay_upper_s));
            assert_eq!(r1.doppler_hz, 0.0);
        }
    }
}

#[test]
fn rows_follow_input_order() {
    let file =
        ScenarioFile::parse(&BASE.replace("[\"10 m\"]", "[\"14 m\", \"10 m\", \"12 m\"]")).unwrap();
    let opts = RunOptions {
        strategy: Some(StrategySet::Proposed),
        ..RunOptions::default()
    };
    let rows = run::sweep_dims(&file, &opts).unwrap();
    let order: Vec<f64> = rows.iter().map(|r| r.sweep_var).collect();
    assert_eq!(order, vec![14.0, 10.0, 12.0]);
}
