use std::path::Path;
use std::process::{Command, Output};

fn zonemem(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zonemem"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn zonemem")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn small_world(dir: &Path, out: &str, seed: &str) {
    let o = zonemem(
        dir,
        &[
            "gen-world",
            "--rooms",
            "2",
            "--room-size",
            "4x4",
            "--kf-spacing",
            "1",
            "--seed",
            seed,
            "--out",
            out,
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn gen_world_defaults_and_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(zonemem(tmp.path(), &["gen-world", "--out", "a"])
        .status
        .success());
    assert!(zonemem(tmp.path(), &["gen-world", "--out", "b"])
        .status
        .success());
    for f in ["zones.json", "keyframes.jsonl", "index.json"] {
        let a = std::fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let zones = std::fs::read_to_string(tmp.path().join("a/zones.json")).unwrap();
    assert_eq!(zones.matches("\"name\"").count(), 7);
}

#[test]
fn usage_errors_exit_2_without_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let o = zonemem(tmp.path(), &["gen-world", "--rooms", "0", "--out", "w"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!tmp.path().join("w").exists());

    small_world(tmp.path(), "world", "1");
    let o = zonemem(
        tmp.path(),
        &["replay", "--strategy", "geometric", "--prefetch", "on"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("prefetch"));
    assert!(!tmp.path().join("report-geometric.json").exists());

    let o = zonemem(
        tmp.path(),
        &["replay", "--budget", "5", "--budget-schedule", "s.csv"],
    );
    assert_eq!(o.status.code(), Some(2));
    let o = zonemem(tmp.path(), &["replay", "--budget", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = zonemem(tmp.path(), &["replay", "--lc-radius", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = zonemem(tmp.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn replay_writes_both_files() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(zonemem(tmp.path(), &["gen-world"]).status.success());
    let o = zonemem(
        tmp.path(),
        &[
            "replay",
            "--strategy",
            "semantic",
            "--budget",
            "200",
            "--report",
            "r.json",
            "--timeseries",
            "t.csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let report = std::fs::read_to_string(tmp.path().join("r.json")).unwrap();
    assert!(report.contains("\"schema\": 1"));
    let ts = std::fs::read_to_string(tmp.path().join("t.csv")).unwrap();
    assert!(ts.starts_with("t,resident_count,resident_bytes,k_max,cum_transactions,lc_outcome\n"));
    let parsed = zonemem::report::ReplayReport::from_json(&report).unwrap();
    assert_eq!(ts.lines().count(), parsed.timeseries.len() + 1);
}

#[test]
fn missing_trajectory_is_runtime_error_naming_path() {
    let tmp = tempfile::tempdir().unwrap();
    small_world(tmp.path(), "world", "1");
    let o = zonemem(tmp.path(), &["replay", "--trajectory", "nowhere/traj.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nowhere/traj.csv"), "{}", stderr(&o));
}

#[test]
fn trajectory_route_and_schedule_files() {
    let tmp = tempfile::tempdir().unwrap();
    small_world(tmp.path(), "world", "1");
    let o = zonemem(tmp.path(), &["gen-trajectory", "--revisit"]);
    assert!(o.status.success(), "{}", stderr(&o));
    std::fs::write(tmp.path().join("sched.csv"), "t_start,k_max\n0,40\n5,10\n").unwrap();
    let o = zonemem(
        tmp.path(),
        &[
            "replay",
            "--strategy",
            "semantic",
            "--trajectory",
            "trajectory.csv",
            "--route",
            "route.csv",
            "--prefetch",
            "on",
            "--budget-schedule",
            "sched.csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let r =
        zonemem::report::ReplayReport::read_json(&tmp.path().join("report-semantic.json")).unwrap();
    assert!(r.config.params.route_aware);
    assert_eq!(r.config.budget_schedule.len(), 2);
    let o = zonemem(
        tmp.path(),
        &["gen-trajectory", "--visit", "room_0,corridor,zoo"],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_same_and_different_maps() {
    let tmp = tempfile::tempdir().unwrap();
    small_world(tmp.path(), "world", "1");
    assert!(zonemem(tmp.path(), &["replay"]).status.success());
    let o = zonemem(tmp.path(), &["compare", "--out", "table.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout).into_owned();
    let csv = std::fs::read_to_string(tmp.path().join("table.csv")).unwrap();
    assert_eq!(stdout.lines().count(), csv.lines().count());
    for (text, row) in stdout.lines().zip(csv.lines()).skip(1) {
        let cells: Vec<&str> = row.split(',').collect();
        let words: Vec<&str> = text.split_whitespace().collect();
        assert_eq!(cells, words);
    }

    small_world(tmp.path(), "other", "2");
    let o = zonemem(
        tmp.path(),
        &[
            "replay",
            "--map",
            "other",
            "--strategy",
            "semantic",
            "--report",
            "o.json",
            "--timeseries",
            "o.csv",
        ],
    );
    assert!(o.status.success());
    let o = zonemem(
        tmp.path(),
        &["compare", "--a", "report-semantic.json", "--b", "o.json"],
    );
    // same layout, different seed: payload seeds and therefore the map hash differ
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("hash mismatch"), "{}", stderr(&o));
}
