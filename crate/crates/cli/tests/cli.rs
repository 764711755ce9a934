use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn asmc(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asmc"))
        .args(args)
        .current_dir(cwd)
        .env_remove("ASMC_CSV_PRECISION")
        .output()
        .expect("spawn asmc")
}

fn text(out: &Output) -> String {
    format!(
        "{}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    )
}

fn preset_file(name: &str) -> String {
    format!("{}/../../presets/{name}.toml", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn presets_list_names_every_preset() {
    let dir = tempfile::tempdir().unwrap();
    let out = asmc(&["presets", "list"], dir.path());
    assert!(out.status.success());
    for name in asmc::presets::names() {
        assert!(text(&out).contains(name), "{name} missing");
    }
}

#[test]
fn run_writes_csv_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = asmc(
        &[
            "run",
            "regulation-smooth",
            "--out",
            "res",
            "--dt",
            "1e-3",
            "--t-end",
            "2",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", text(&out));
    let csv = fs::read_to_string(dir.path().join("res/regulation-smooth.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,x0,s,u,gain,gain_rate,delta_f,V,Vprime"
    );
    assert_eq!(lines.count(), 2001);
    let meta: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("res/regulation-smooth.metrics.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(meta["rows"], 2001);
    assert_eq!(meta["integration"]["dt"], 1e-3);
    assert!(meta["metrics"]["chattering_index"].as_f64().unwrap() >= 0.0);
    assert!(text(&out).contains("chattering index"));
}

#[test]
fn run_accepts_a_scenario_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = asmc(
        &[
            "run",
            &preset_file("tracking"),
            "--out",
            ".",
            "--t-end",
            "1",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", text(&out));
    assert!(dir.path().join("tracking.csv").exists());
}

#[test]
fn precision_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_asmc"))
        .args([
            "run",
            "regulation-smooth",
            "--out",
            ".",
            "--dt",
            "1e-2",
            "--t-end",
            "1",
        ])
        .current_dir(dir.path())
        .env("ASMC_CSV_PRECISION", "4")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", text(&out));
    let csv = fs::read_to_string(dir.path().join("regulation-smooth.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(row[0], "1.000e-2");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["a", "b"] {
        let out = asmc(
            &["run", "regulation-square", "--out", sub, "--t-end", "3"],
            dir.path(),
        );
        assert!(out.status.success(), "{}", text(&out));
    }
    let a = fs::read(dir.path().join("a/regulation-square.csv")).unwrap();
    let b = fs::read(dir.path().join("b/regulation-square.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn invalid_scenario_exits_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let src = fs::read_to_string(preset_file("regulation-smooth"))
        .unwrap()
        .replace("rho = 1.0", "rho = 0.0");
    fs::write(dir.path().join("bad.toml"), &src).unwrap();
    let out = asmc(&["run", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let line = src.lines().position(|l| l.starts_with("rho")).unwrap() + 1;
    assert!(
        text(&out).contains(&format!("bad.toml:{line}")),
        "{}",
        text(&out)
    );
    assert!(text(&out).contains("rho"));

    let out = asmc(&["run", "no-such-thing"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn blow_up_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let src = fs::read_to_string(preset_file("compare-classical"))
        .unwrap()
        .replace("gain = 1.0", "gain = 1e308");
    fs::write(dir.path().join("boom.toml"), src).unwrap();
    let out = asmc(&["run", "boom.toml", "--t-end", "1"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", text(&out));
    assert!(text(&out).contains("blow-up"));
}

#[test]
fn compare_flags_lowest_chattering() {
    let dir = tempfile::tempdir().unwrap();
    let out = asmc(
        &[
            "compare",
            "regulation-smooth",
            "compare-plestan-3000",
            "--out",
            "cmp",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", text(&out));
    let table = text(&out);
    let starred = table
        .lines()
        .find(|l| l.starts_with('*') && l.contains("regulation"))
        .unwrap();
    assert!(starred.contains("new_adaptive"));
    assert!(dir.path().join("cmp/compare-plestan-3000.csv").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("cmp/comparison.json")).unwrap())
            .unwrap();
    assert_eq!(summary.as_array().unwrap().len(), 2);
}

#[test]
fn compare_rejects_mismatched_plants() {
    let dir = tempfile::tempdir().unwrap();
    let out = asmc(
        &["compare", "regulation-smooth", "tracking", "--out", "cmp"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("cmp").exists());
}

#[test]
fn verify_reports_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = asmc(&["verify", "regulation-smooth"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", text(&out));
    let t = text(&out);
    for needle in [
        "eta",
        "sigma",
        "T ",
        "b ",
        "m ",
        "delta",
        "PASS reach bound",
        "PASS overshoot bound",
    ] {
        assert!(t.contains(needle), "{needle} missing in\n{t}");
    }
}

#[test]
fn verify_marks_reach_bound_not_applicable_for_k0() {
    let dir = tempfile::tempdir().unwrap();
    let out = asmc(&["verify", "regulation-smooth-k0"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", text(&out));
    assert!(text(&out).contains("N/A  reach bound"));
}

#[test]
fn verify_needs_the_adaptive_law() {
    let dir = tempfile::tempdir().unwrap();
    let out = asmc(&["verify", "compare-classical"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
