use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gripsim_cli::Source;
use gripsim_core::finger::{forward_kinematics, solve_posture, FingerParams};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn gripsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gripsim")).args(args).output().unwrap()
}

fn run(cmd: &str, scenario: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        cmd,
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    gripsim(&args)
}

const UNITS: &str =
    r#""units": {"force": "N", "length": "mm", "angle": "deg", "torque": "N·mm", "stiffness": "N·mm/deg"}"#;

#[test]
fn fig10_fixture_writes_three_postures() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run("run", &fixture("finger_postures.scenario"), tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    for i in 0..3 {
        let text = fs::read_to_string(tmp.path().join(format!("posture_{i}.csv"))).unwrap();
        assert!(text.starts_with("joint,theta_rad,theta_deg,f_fs_N,joint_torque_Nmm,pin_x_mm,pin_y_mm\n"));
        assert_eq!(text.lines().count(), 8);
        assert!(!text.contains('\r'));
    }
}

#[test]
fn summary_round_trips_through_the_scenario_reader() {
    let tmp = tempfile::tempdir().unwrap();
    for name in [
        "finger_postures.scenario",
        "drive_preloads.scenario",
        "hand.scenario",
        "validate.scenario",
    ] {
        let dir = tmp.path().join(name);
        assert_eq!(run("run", &fixture(name), &dir, &[]).status.code(), Some(0), "{name}");
        let summary = fs::read_to_string(dir.join("summary.json")).unwrap();
        let back = Source::parse(&summary).unwrap();
        let original = Source::parse(&fs::read_to_string(fixture(name)).unwrap()).unwrap();
        assert!(back.scenario.results.is_some());
        let mut stripped = back.scenario.clone();
        stripped.results = None;
        assert_eq!(stripped, original.scenario, "{name}");
    }
}

#[test]
fn exit_codes_follow_the_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.scenario");
    fs::write(&empty, "").unwrap();
    let out = run("run", &empty, &tmp.path().join("a"), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1: missing experiment selector"));

    let typo = tmp.path().join("typo.scenario");
    fs::write(&typo, format!("{{\n  \"experiment\": \"validate\",\n  {UNITS},\n  \"hand\": {{\"tau_th\": 100, \"finger_count\": 3, \"finger_strength\": 104.2, \"motor_step\": 0.3, \"lock_start\": 84, \"extra\": 1}}\n}}\n")).unwrap();
    let out = run("run", &typo, &tmp.path().join("b"), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4:"));

    let validate = fixture("validate.scenario");
    assert_eq!(run("run", &validate, &tmp.path().join("c"), &[]).status.code(), Some(0));
    assert_eq!(
        run("run", &validate, &tmp.path().join("d"), &["--strict"])
            .status
            .code(),
        Some(3)
    );

    let budget = tmp.path().join("budget.scenario");
    fs::write(
        &budget,
        format!(
            r#"{{"experiment": "finger-solve", {UNITS}, "solver": {{"max_iterations": 1, "jitter_starts": 0}},
                "finger": {{"n": 7, "link_length": 12, "shaft_offset": 13, "shaft_stiffness": 4.5}},
                "finger_solve": {{"forces": [6.3]}}}}"#
        ),
    )
    .unwrap();
    assert_eq!(run("run", &budget, &tmp.path().join("e"), &[]).status.code(), Some(2));
}

#[test]
fn preload_sweep_peaks_are_non_decreasing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        "sweep",
        &fixture("preload_sweep.scenario"),
        tmp.path(),
        &["--threads", "3"],
    );
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_path(tmp.path().join("sweep.csv")).unwrap();
    let peaks: Vec<f64> = reader.records().map(|r| r.unwrap()[3].parse().unwrap()).collect();
    assert_eq!(peaks.len(), 11);
    assert!(peaks.windows(2).all(|w| w[1] >= w[0]), "{peaks:?}");
}

#[test]
fn single_point_sweep_matches_run() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = tmp.path().join("one.scenario");
    fs::write(
        &scenario,
        format!(
            r#"{{"experiment": "finger-solve", {UNITS},
                "finger": {{"n": 7, "link_length": 12, "shaft_offset": 13, "shaft_stiffness": 4.5}},
                "finger_solve": {{"forces": [5.1]}},
                "sweep": {{"parameter": "f-tr", "values": [5.1]}}}}"#
        ),
    )
    .unwrap();
    assert_eq!(
        run("run", &scenario, &tmp.path().join("run"), &[]).status.code(),
        Some(0)
    );
    assert_eq!(
        run("sweep", &scenario, &tmp.path().join("sweep"), &[]).status.code(),
        Some(0)
    );
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("run/summary.json")).unwrap()).unwrap();
    let from_run = summary["results"]["postures"][0]["sum_theta_rad"].as_f64().unwrap();
    let mut reader = csv::Reader::from_path(tmp.path().join("sweep/sweep.csv")).unwrap();
    let row = reader.records().next().unwrap().unwrap();
    assert_eq!(&row[1], "ok");
    assert_eq!(row[2].parse::<f64>().unwrap(), from_run);
}

#[test]
fn diameter_sweep_reports_contacts_per_object() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run("sweep", &fixture("diameter_sweep.scenario"), tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_path(tmp.path().join("sweep.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    for row in &rows {
        assert_eq!(&row[1], "ok");
        assert!(row[2].parse::<usize>().unwrap() >= 1);
    }
}

#[test]
fn identification_reads_observations_from_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let truth = FingerParams::bare(7, 12.0, 13.0, 4.5f64.to_degrees()).unwrap();
    let mut csv_text = String::from("f_tr_N,pin_index,x_mm,y_mm\n");
    for f in [3.2, 5.1, 6.3] {
        let pose = forward_kinematics(&truth, &solve_posture(&truth, f).unwrap().posture);
        for (i, p) in pose.pins.iter().enumerate() {
            csv_text.push_str(&format!("{f},{i},{:.12},{:.12}\n", p.x, p.y));
        }
    }
    fs::write(tmp.path().join("obs.csv"), csv_text).unwrap();
    let scenario = tmp.path().join("id.scenario");
    fs::write(
        &scenario,
        format!(
            r#"{{"experiment": "identify-kfs", {UNITS},
                "finger": {{"n": 7, "link_length": 12, "shaft_offset": 13, "shaft_stiffness": 1}},
                "identify": {{"observations": "obs.csv"}}}}"#
        ),
    )
    .unwrap();
    let out = run("run", &scenario, &tmp.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/summary.json")).unwrap()).unwrap();
    let k = summary["results"]["k_fs_scenario_unit"].as_f64().unwrap();
    assert!((k - 4.5).abs() / 4.5 < 1e-3, "{k}");
}

#[test]
fn seed_flag_only_changes_jitter() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = fixture("finger_postures.scenario");
    run("run", &scenario, &tmp.path().join("a"), &["--seed", "1"]);
    run("run", &scenario, &tmp.path().join("b"), &["--seed", "99"]);
    let a = fs::read_to_string(tmp.path().join("a/posture_2.csv")).unwrap();
    let b = fs::read_to_string(tmp.path().join("b/posture_2.csv")).unwrap();
    assert_eq!(a, b);
}
