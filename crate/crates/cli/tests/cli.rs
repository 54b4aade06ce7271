use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn drm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drm"))
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

fn scenario_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_fig1_prints_prices() {
    let file = scenario_file("fig1.json");
    let out = drm(&["solve", path_str(&file)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("company 1: 2.40601503759"), "{text}");
    assert!(text.contains("company 2: 1.8045112782"), "{text}");
    assert!(text.contains("company 3: 1.44360902256"), "{text}");
    assert!(text.contains("clamped: none"));
}

#[test]
fn solve_preset_matches_file() {
    let file = scenario_file("fig1.json");
    let a = drm(&["solve", path_str(&file)]);
    let b = drm(&["solve", "--preset", "fig1"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn solve_writes_demand_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("demands.csv");
    let file = scenario_file("fig1.json");
    let out = drm(&["solve", path_str(&file), "--output", path_str(&csv)]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("user,company,period,price,demand")
    );
    assert_eq!(text.lines().count(), 1 + 5 * 3);
}

#[test]
fn zero_budgets_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("broke.json");
    fs::write(
        &file,
        r#"{"K": 1, "N": 2, "T": 1, "budgets": [0, 0], "capacities": [[5]]}"#,
    )
    .unwrap();
    let out = drm(&["solve", path_str(&file)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("all budgets zero"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn missing_file_exits_two() {
    let out = drm(&["solve", "/nonexistent/scenario.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    fs::write(&file, r#"{"K": 1, "N": 1, "T": 1, "budgets": [1]}"#).unwrap();
    let out = drm(&["solve", path_str(&file)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("capacities required"));
}

#[test]
fn sweep_fig3_has_constant_revenue() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fig3.csv");
    let out = drm(&["sweep", "fig3", path_str(&csv)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("50 rows (0 failed) over num_periods"));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "revenue_c1").unwrap();
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 50);
    for row in rows {
        assert_eq!(row.split(',').nth(col), Some("750"), "{row}");
    }
}

#[test]
fn sweep_fig1_has_41_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fig1.csv");
    let out = drm(&["sweep", "--preset", "fig1", "--output", path_str(&csv)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 42);
}

#[test]
fn sweep_unknown_preset_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("x.csv");
    let out = drm(&["sweep", "nosuch", path_str(&csv)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!csv.exists());
}

#[test]
fn sweep_where_every_row_fails_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"base": {"K": 1, "N": 1, "T": 1, "budgets": [3], "capacities": [[5]]},
            "axis": {"user_budget": {"user": 1}}, "values": [0]}"#,
    )
    .unwrap();
    let csv = dir.path().join("out.csv");
    let out = drm(&["sweep", path_str(&spec), path_str(&csv)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("1 rows (1 failed)"));
}

#[test]
fn sweep_file_from_scenarios_dir() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("cap.csv");
    let spec = scenario_file("capacity_sweep.json");
    let out = drm(&["sweep", path_str(&spec), path_str(&csv)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("capacity_c2_t2,"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn verify_fig1_passes() {
    let out = drm(&["verify", "--preset", "fig1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(!text.contains("FAIL"));
    assert!(text.contains("PASS capacity balance"));
    assert!(text.contains("PASS gap law"));
}

#[test]
fn verify_random_trials_are_deterministic() {
    let a = drm(&["verify", "--trials", "200", "--seed", "7"]);
    let b = drm(&["verify", "--trials", "200", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("verified 200 scenarios (200 random, seed 7)"));
}

#[test]
fn corrupted_price_exits_three() {
    let file = scenario_file("fig1.json");
    let out = drm(&["verify", path_str(&file), "--corrupt-price", "1.05"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(
        stderr(&out).contains("capacity balance"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    drm(&["sweep", "fig2", path_str(&a)]);
    drm(&["sweep", "fig2", path_str(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let file = scenario_file("bounded.json");
    assert_eq!(
        drm(&["solve", path_str(&file)]).stdout,
        drm(&["solve", path_str(&file)]).stdout
    );
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(drm(&["sweep"]).status.code(), Some(2));
    assert_eq!(drm(&["frobnicate"]).status.code(), Some(2));
}
