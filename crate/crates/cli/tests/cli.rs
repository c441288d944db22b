use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use reachgrid::export::{read_csv_file, Summary};
use reachgrid::taskfile::load_task;

fn reachgrid(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reachgrid"))
        .args(args)
        .env("REACHGRID_OUT", out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn summary(path: &Path) -> Summary {
    Summary::parse(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Writes the mini-yard task file and returns its text.
fn mini_yard(dir: &Path) -> String {
    let path = dir.join("mini-yard.toml");
    let o = reachgrid(&["scenario", "mini-yard", "-o", path.to_str().unwrap()], dir);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    fs::read_to_string(path).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn validate_reports_each_failure_class() {
    let dir = tempfile::tempdir().unwrap();
    let text = mini_yard(dir.path());
    let ok = write(dir.path(), "ok.toml", &text);
    assert_eq!(code(&reachgrid(&["validate", &ok], dir.path())), 0);
    assert_eq!(code(&reachgrid(&["validate", "builtin:mini-yard"], dir.path())), 0);

    let short = text
        .lines()
        .map(|l| {
            if l.starts_with("waypoints") {
                "waypoints = [[7, 7, 0], [7, 7, 5], [12, 7, 0]]"
            } else {
                l
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    let o = reachgrid(&["validate", &write(dir.path(), "short.toml", &short)], dir.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("n ≥ 4"), "{}", stderr(&o));

    let sealed = text.replacen("boxes = [", "boxes = [[[9, 0, 0], [9, 29, 11]], ", 1);
    let o = reachgrid(&["validate", &write(dir.path(), "sealed.toml", &sealed)], dir.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("not δ-perforated"), "{}", stderr(&o));

    let o = reachgrid(&["validate", &write(dir.path(), "broken.toml", "schema = 1\n[grid\n")], dir.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("parse error"));

    let missing = dir.path().join("missing.toml");
    assert_eq!(code(&reachgrid(&["validate", missing.to_str().unwrap()], dir.path())), 1);
    assert_eq!(code(&reachgrid(&["validate", "builtin:nowhere"], dir.path())), 1);
}

#[test]
fn scenario_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    mini_yard(dir.path());
    let loaded = load_task(&dir.path().join("mini-yard.toml")).unwrap();
    let builtin = reachgrid_core::scenario::builtin_scenario("mini-yard").unwrap();
    assert_eq!(loaded.task, builtin.task);
    assert_eq!(loaded.params, builtin.params);

    let random = dir.path().join("random.toml");
    let args = ["scenario", "random", "-o", random.to_str().unwrap(), "--seed", "4", "--dims", "16,14,8"];
    assert_eq!(code(&reachgrid(&args, dir.path())), 0);
    assert_eq!(code(&reachgrid(&["validate", random.to_str().unwrap()], dir.path())), 0);
}

#[test]
fn solve_writes_stats() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("solve");
    let o = reachgrid(
        &["solve", "builtin:mini-yard", "--segment", "2", "--dump-table", "--out", out.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = summary(&out.join("solve.txt"));
    assert_eq!(s.get("mode"), Some("cruise"));
    let k_fp: u32 = s.get("k_fp").unwrap().parse().unwrap();
    let horizon: u32 = s.get("horizon").unwrap().parse().unwrap();
    assert!(k_fp < horizon);
    assert!(s.get("backups_per_sec").is_some());
    assert!(out.join("table.bin").exists());
    assert!(out.join("manifest.json").exists());
}

#[test]
fn undisturbed_play_ends_in_standby_and_uses_the_env_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("env-out");
    let o = reachgrid(&["play", "builtin:mini-yard", "--dist", "none"], &out);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = read_csv_file(&out.join("trajectory.csv")).unwrap();
    assert_eq!(rows.last().unwrap().mode, "standby");
    assert_eq!(summary(&out.join("summary.txt")).get("outcome"), Some("terminated"));
    for f in ["top.svg", "side.svg", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert!(!out.join("reference.csv").exists());
}

#[test]
fn windy_play_draws_a_reference_and_replots_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("play");
    let o = reachgrid(
        &["play", "builtin:mini-yard", "--dist", "worst", "--seed", "3", "--out", out.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = summary(&out.join("summary.txt"));
    assert!(s.get("reference_deviation").is_some());
    assert!(s.get("reference_within_tube").is_some());
    let top = fs::read_to_string(out.join("top.svg")).unwrap();
    assert!(top.contains("#1f77b4") && top.contains("#d62728"));

    let again = dir.path().join("replot");
    let o = reachgrid(
        &[
            "plot",
            "builtin:mini-yard",
            "--csv",
            out.join("trajectory.csv").to_str().unwrap(),
            "--reference",
            out.join("reference.csv").to_str().unwrap(),
            "--out",
            again.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["top.svg", "side.svg"] {
        assert_eq!(fs::read(out.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn sweeps_summarize_every_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = reachgrid(
        &["play", "builtin:mini-yard", "--sweep", "3", "--jobs", "2", "--out", out.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = summary(&out.join("summary.txt"));
    assert_eq!(s.get("plays"), Some("3"));
    assert_eq!(s.get("terminated_pct"), Some("100.0"));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn a_cruise_that_cannot_be_won_fails_the_play() {
    let dir = tempfile::tempdir().unwrap();
    let text = mini_yard(dir.path());
    // A single stage cannot reach the next transition cuboid.
    let text = text.replace("horizon = 12", "horizon = 1").replace("max_extensions = 3", "max_extensions = 0");
    let task = write(dir.path(), "hasty.toml", &text);
    let o = reachgrid(&["play", &task, "--dist", "none"], dir.path());
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let o = reachgrid(&["solve", &task, "--segment", "2"], dir.path());
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("unsolvable"));
}

#[test]
fn bench_reports_throughput() {
    let dir = tempfile::tempdir().unwrap();
    let o = reachgrid(&["bench", "--cells", "20000", "--reps", "3"], dir.path());
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("controls=27") && text.contains("disturbances=5"));
    assert!(text.contains("wall_median_s="));
    let o = reachgrid(&["bench", "--cells", "0"], dir.path());
    assert_eq!(code(&o), 0);
}
