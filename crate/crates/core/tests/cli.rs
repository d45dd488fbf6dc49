//! End-to-end tests of the `psps` binary: argument parsing, exit codes,
//! flag and environment overrides, and the files each command writes.

use std::path::Path;
use std::process::{Command, Output};

use psps_core::formulations::PlanFile;
use psps_core::net::Network;

fn psps(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psps"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary launches")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const NETWORK: &str = r#"{
    "base_mva": 100.0,
    "buses": [
        {"id": "plant", "demand_pu": 0.0},
        {"id": "load", "demand_pu": 0.9}
    ],
    "lines": [
        {"id": "corridor", "from_bus": 0, "to_bus": 1, "susceptance_pu": -5.0,
         "flow_limit_pu": 2.0, "angle_min_rad": -0.5, "angle_max_rad": 0.5,
         "length_miles": 10.0, "switchable": true, "hardenable": true}
    ],
    "generators": [
        {"id": "g0", "bus": 0, "p_min_pu": 0.0, "p_max_pu": 1.0}
    ]
}"#;

fn demand_csv() -> String {
    let mut s = String::from("day,hour,scale\n");
    for day in 1..=5 {
        for h in 0..24 {
            let scale = if (10..=12).contains(&h) { 1.0 } else { 0.0 };
            s.push_str(&format!("2021-06-{day:02},{h},{scale}\n"));
        }
    }
    s
}

fn risk_csv() -> String {
    let mut s = String::from("line_id,date,risk\n");
    for (day, v) in [(1, 10.0), (2, 31.0), (3, 40.0), (4, 5.0), (5, 45.0)] {
        s.push_str(&format!("corridor,2021-06-{day:02},{v}\n"));
    }
    s
}

const CONFIG: &str = r#"
[paths]
network = "network.json"
risk = "risk.csv"
demand_profile = "demand.csv"
out_dir = "out"

[parameters]
alpha = 0.5
budget_musd = 79.0
gap = 0.0
"#;

fn write_fixture(dir: &Path, config: &str) {
    std::fs::write(dir.join("network.json"), NETWORK).unwrap();
    std::fs::write(dir.join("demand.csv"), demand_csv()).unwrap();
    std::fs::write(dir.join("risk.csv"), risk_csv()).unwrap();
    std::fs::write(dir.join("config.toml"), config).unwrap();
}

#[test]
fn validate_succeeds_on_a_good_fixture() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), CONFIG);
    let out = psps(dir.path(), &["validate"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("network: 2 buses, 1 lines"), "{text}");
    assert!(text.contains("risk: 5 planning days"), "{text}");
    assert!(text.trim_end().ends_with("validate: ok"), "{text}");
}

#[test]
fn missing_config_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = psps(dir.path(), &["--config", "definitely_missing.toml", "validate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error:"), "{}", stderr(&out));
}

#[test]
fn alpha_endpoints_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), CONFIG);
    let out = psps(dir.path(), &["--alpha", "1.0", "validate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("alpha"), "{}", stderr(&out));
}

#[test]
fn plan_sizes_batteries_to_cover_islanded_demand() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), CONFIG);
    let out = psps(dir.path(), &["plan"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("= 60.0000 of 79.0000 $M"), "{text}");

    // Serving the three-hour 2.7 pu-h load through the 0.95-efficient
    // store drains 2.7 / 0.95 ~= 2.84 pu-h of charge: two units fall
    // short, three suffice, and the budget rules out a fourth.
    let plan = PlanFile::load(dir.path().join("out/plan.json")).unwrap();
    assert_eq!(plan.scenario, 1);
    assert!(plan.objective.abs() < 1e-9, "objective {}", plan.objective);
    assert!((plan.spend.battery_musd - 60.0).abs() < 1e-9);
    assert!((plan.spend.total_musd - 60.0).abs() < 1e-9);
    let net = Network::load(dir.path().join("network.json")).unwrap();
    let decoded = plan.to_plan(&net).unwrap();
    assert_eq!(decoded.batteries.get(&1), Some(&3));
    assert_eq!(decoded.batteries.len(), 1);
    assert!(decoded.solar.is_empty());
    assert!(decoded.hardened.is_empty());
}

#[test]
fn budget_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), CONFIG);
    let out = psps(dir.path(), &["--budget", "15", "plan"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let plan = PlanFile::load(dir.path().join("out/plan.json")).unwrap();
    assert_eq!(plan.budget_musd, 15.0);
    // 15 $M buys no 20 $M unit, so the best score is the 0.5 tie between
    // keeping the risky corridor up and shedding the whole load.
    assert!((plan.objective - 0.5).abs() < 1e-9, "{}", plan.objective);
    let net = Network::load(dir.path().join("network.json")).unwrap();
    let decoded = plan.to_plan(&net).unwrap();
    assert!(decoded.is_empty());
}

#[test]
fn export_mode_writes_model_files_without_solving() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), CONFIG);
    let out = psps(dir.path(), &["--solver", "export", "plan"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("no solve requested"));
    assert!(dir.path().join("out/model.lp").is_file());
    assert!(dir.path().join("out/model.mps").is_file());
    assert!(!dir.path().join("out/plan.json").exists());
}

#[test]
fn simulate_without_a_plan_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), CONFIG);
    let out = psps(dir.path(), &["simulate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("plan file"), "{}", stderr(&out));
}

#[test]
fn plan_then_simulate_writes_the_season_table() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), CONFIG);
    assert_eq!(psps(dir.path(), &["plan"]).status.code(), Some(0));
    let out = psps(dir.path(), &["simulate"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("shutoff days"), "{text}");
    let season = std::fs::read_to_string(dir.path().join("out/season.csv")).unwrap();
    assert!(season.starts_with("# season v1\n"));
    assert_eq!(season.lines().count(), 2 + 5);
}

#[test]
fn out_flag_beats_config_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), CONFIG);
    let elsewhere = dir.path().join("elsewhere");
    let out = Command::new(env!("CARGO_BIN_EXE_psps"))
        .current_dir(dir.path())
        .env("PSPS_OUT_DIR", dir.path().join("ignored"))
        .args(["--solver", "export", "--out"])
        .arg(&elsewhere)
        .arg("plan")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(elsewhere.join("model.lp").is_file());
    assert!(!dir.path().join("ignored").exists());
    assert!(!dir.path().join("out").exists());
}

#[test]
fn out_dir_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let config = CONFIG.replace("out_dir = \"out\"\n", "");
    write_fixture(dir.path(), &config);
    let target = dir.path().join("from_env");
    let out = Command::new(env!("CARGO_BIN_EXE_psps"))
        .current_dir(dir.path())
        .env("PSPS_OUT_DIR", &target)
        .args(["--solver", "export", "plan"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(target.join("model.lp").is_file());
}

#[test]
fn unwritable_out_dir_exits_with_code_four() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), CONFIG);
    std::fs::write(dir.path().join("blocked"), "a file, not a directory").unwrap();
    let out = psps(
        dir.path(),
        &["--solver", "export", "--out", "blocked/sub", "plan"],
    );
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    assert!(stderr(&out).contains("creating"), "{}", stderr(&out));
}

#[test]
fn flags_narrow_the_sweep_grid_to_one_case() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!(
        "{CONFIG}\n[sweep]\nscenarios = [1]\nbudgets_musd = [20.0, 40.0]\nalphas = [0.4, 0.6]\n"
    );
    write_fixture(dir.path(), &config);
    let out = psps(dir.path(), &["--budget", "40", "--alpha", "0.6", "sweep"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("sweep: 1 cases, 1 done, 0 failed"), "{text}");
    assert!(dir.path().join("out/sweep.csv").is_file());
    assert!(dir.path().join("out/tradeoff.csv").is_file());
    assert!(dir.path().join("out/breakdown.csv").is_file());
}

#[test]
fn gridded_risk_sources_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let network = NETWORK
        .replace(
            "{\"id\": \"plant\", \"demand_pu\": 0.0}",
            "{\"id\": \"plant\", \"demand_pu\": 0.0, \"latitude\": 0.0, \"longitude\": 0.0}",
        )
        .replace(
            "{\"id\": \"load\", \"demand_pu\": 0.9}",
            "{\"id\": \"load\", \"demand_pu\": 0.9, \"latitude\": 0.0, \"longitude\": 0.2}",
        );
    std::fs::write(dir.path().join("network.json"), network).unwrap();
    std::fs::write(dir.path().join("demand.csv"), demand_csv()).unwrap();
    let mut raster = String::from("date,lat,lon,value\n");
    for (day, v) in [(1, 10.0), (2, 31.0)] {
        raster.push_str(&format!(
            "2021-06-{day:02},0.0,0.0,{v}\n2021-06-{day:02},0.0,0.2,{v}\n"
        ));
    }
    std::fs::write(dir.path().join("risk.csv"), raster).unwrap();
    std::fs::write(dir.path().join("config.toml"), CONFIG).unwrap();
    let out = psps(dir.path(), &["validate"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("risk: 2 planning days"), "{}", stdout(&out));
}
