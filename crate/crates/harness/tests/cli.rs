//! The binary, driven the way a user drives it.

use std::path::Path;
use std::process::{Command, Output};

fn aslam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aslam")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("episode.cfg");
    std::fs::write(
        &path,
        "# short episode for the CLI test\n\
         world = bundled:closed_rooms_small\n\
         seed = 9\n\
         trials = 1\n\
         step_cap = 2\n\
         criterion = coverage:20\n\
         criterion = task:2:3\n\
         start = 6.4 3.475 0.0\n\
         sensor.range = 3.5\n\
         sensor.beams = 120\n",
    )
    .unwrap();
    path
}

#[test]
fn explore_replay_and_graph_tool_chain_together() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out_dir = dir.path().join("runs");

    let run = aslam(&[
        "explore",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "explore failed: {}", String::from_utf8_lossy(&run.stderr));
    let text = stdout(&run);
    assert!(text.contains("trial 0 (seed 9)"), "unexpected output:\n{text}");
    assert!(text.contains("artifacts:"));

    let trial = out_dir.join("trial_0");
    for name in ["trace.csv", "summary.csv", "fig2.csv", "decisions.csv"] {
        assert!(trial.join(name).is_file(), "{name} missing");
    }

    // The early coverage target trips during the opening sweep, so the
    // triggered-graph snapshot must be there; feed it back through the
    // graph tool.
    let snapshot = trial.join("graph_at_coverage_20.g2o");
    assert!(snapshot.is_file(), "no graph snapshot at the coverage trigger");
    let tool = aslam(&["graph-tool", "dopt", snapshot.to_str().unwrap()]);
    assert!(tool.status.success());
    let tool_text = stdout(&tool);
    assert!(tool_text.contains("nodes:"));
    assert!(tool_text.contains("spanning-tree D-opt:"));

    // Offline re-evaluation of the recorded trace agrees with the run.
    let trace = trial.join("trace.csv");
    let replay = aslam(&["replay", "--trace", trace.to_str().unwrap(), "--criterion", "task:2:3"]);
    assert!(replay.status.success());
    assert!(stdout(&replay).contains("recorded decisions: match"));

    // A trace carries no frontier signal; asking for that criterion is a
    // configuration error, not a silent never-stops.
    let bad = aslam(&["replay", "--trace", trace.to_str().unwrap(), "--criterion", "frontier"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("frontier"));
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let run = aslam(&[
        "explore",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("override").to_str().unwrap(),
        "--seed",
        "42",
    ]);
    assert!(run.status.success());
    assert!(stdout(&run).contains("trial 0 (seed 42)"));
}

#[test]
fn bench_command_reports_both_routes() {
    let out = aslam(&["bench-dopt", "--sizes", "8,24", "--reps", "1", "--seed", "3"]);
    assert!(out.status.success(), "bench failed: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("speedup"));
    assert_eq!(text.lines().count(), 3, "header plus one row per size:\n{text}");
}

#[test]
fn a_config_error_names_the_offender() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    std::fs::write(&path, "world = bundled:closed_rooms_small\nwat = 7\n").unwrap();
    let out = aslam(&["explore", "--config", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("wat"));
}
