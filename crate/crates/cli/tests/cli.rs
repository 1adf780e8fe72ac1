use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn puckbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_puckbench")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn qualify_writes_tables_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = puckbench(&["qualify", "--agent", "hold", "--episodes", "2", "--no-timing", "--profile", "ideal", "--replay", "--out", out_dir]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("hold"));
    for name in ["leaderboard.csv", "leaderboard.json", "qualifying.json", "hold_hit.jsonl", "hold_defend.jsonl", "hold_prepare.jsonl"] {
        assert!(dir.path().join(name).is_file(), "missing {name}");
    }
    let csv = fs::read_to_string(dir.path().join("leaderboard.csv")).unwrap();
    assert!(csv.starts_with("rank,team,level"));

    let replay = puckbench(&["replay", dir.path().join("hold_hit.jsonl").to_str().unwrap()]);
    assert_eq!(code(&replay), 0);
    assert!(stdout(&replay).contains("1000 steps over 2 episodes"), "{}", stdout(&replay));
}

#[test]
fn same_seed_gives_identical_replay_bytes() {
    let run = |dir: &Path| {
        let out = puckbench(&["qualify", "--agent", "composite", "--episodes", "1", "--no-timing", "--seed", "9", "--replay", "--out", dir.to_str().unwrap()]);
        assert_eq!(code(&out), 0);
        fs::read(dir.join("composite_hit.jsonl")).unwrap()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(run(a.path()), run(b.path()));
}

#[test]
fn unknown_agent_exits_with_agent_code() {
    let out = puckbench(&["qualify", "--agent", "nobody"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("nobody"));
}

#[test]
fn bad_config_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "episode_steps = \"many\"\n").unwrap();
    assert_eq!(code(&puckbench(&["qualify", "--config", bad.to_str().unwrap()])), 2);

    let invalid = dir.path().join("invalid.toml");
    fs::write(&invalid, "episode_steps = 0\n").unwrap();
    assert_eq!(code(&puckbench(&["qualify", "--config", invalid.to_str().unwrap()])), 2);
}

#[test]
fn config_file_is_applied() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.toml");
    fs::write(&cfg, "profile = \"ideal\"\nepisode_steps = 50\ntiming = false\n").unwrap();
    let out = puckbench(&["qualify", "--config", cfg.to_str().unwrap(), "--agent", "hold", "--episodes", "1", "--replay", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let replay = puckbench(&["replay", dir.path().join("hold_hit.jsonl").to_str().unwrap()]);
    assert!(stdout(&replay).contains("50 steps over 1 episodes"), "{}", stdout(&replay));
}

#[test]
fn missing_files_exit_with_io_code() {
    assert_eq!(code(&puckbench(&["qualify", "--config", "/definitely/not/here.toml"])), 4);
    assert_eq!(code(&puckbench(&["replay", "/definitely/not/here.jsonl"])), 4);
}

#[test]
fn truncated_replay_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = puckbench(&["qualify", "--agent", "hold", "--episodes", "1", "--no-timing", "--replay", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let path = dir.path().join("hold_hit.jsonl");
    let text = fs::read_to_string(&path).unwrap();
    fs::write(&path, &text[..text.len() / 2]).unwrap();
    let replay = puckbench(&["replay", path.to_str().unwrap()]);
    assert_eq!(code(&replay), 4);
    assert!(String::from_utf8_lossy(&replay.stderr).contains("last valid line"));
}

#[test]
fn tournament_prints_standings() {
    let dir = tempfile::tempdir().unwrap();
    let out = puckbench(&["tournament", "--agent", "hold", "--agent", "spacer", "--no-timing", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("pts") && text.contains("hold x spacer"), "{text}");
    for name in ["standings.csv", "matches.csv", "tournament.json"] {
        assert!(dir.path().join(name).is_file(), "missing {name}");
    }
}

#[test]
fn tournament_needs_two_agents() {
    assert_eq!(code(&puckbench(&["tournament", "--agent", "hold", "--no-timing"])), 2);
}

#[test]
fn fit_arm_recovers_configured_lag_and_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = puckbench(&["fit-arm", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("tau 0.0150"), "{}", stdout(&out));
    let trace = fs::read_to_string(dir.path().join("fit_arm_trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,best,mean"));
}

#[test]
fn fit_puck_model_saves_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = puckbench(&["fit-puck-model", "--samples", "3000", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(dir.path().join("puck_model.json").is_file());
}

#[test]
fn tune_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = puckbench(&["tune", "--iterations", "2", "--population", "3", "--episodes", "1", "--no-timing", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let trace = fs::read_to_string(dir.path().join("tune_trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 3);
}

#[test]
fn ablate_prints_every_column() {
    let out = puckbench(&["ablate", "--agent", "hold", "--episodes", "1", "--no-timing"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    for label in ["ideal", "model_mismatch", "obs_noise", "puck_disturbance", "track_loss", "all"] {
        assert!(text.contains(label), "missing {label} in {text}");
    }
}
