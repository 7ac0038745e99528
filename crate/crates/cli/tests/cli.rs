//! End-to-end tests of the command-line surface: formats, determinism, exit
//! codes, and the analytic corridor fixture.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use driftbench_core::policy::{build, Arch, PolicySpec};
use driftbench_core::procgen::forward_zero_action_clearance;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_driftbench"));
    cmd.env_remove("DRIFTBENCH_DATA");
    cmd
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("driftbench-cli-{}-{name}", std::process::id()));
    std::fs::remove_dir_all(&dir).ok();
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed ({:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Recursively collect relative path -> bytes.
fn tree_bytes(root: &Path) -> std::collections::BTreeMap<String, Vec<u8>> {
    let mut out = std::collections::BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().to_string();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn gen_is_deterministic_and_valid_json() {
    let dir = tmp("gen");
    let a = dir.join("a.json");
    let b = dir.join("b.json");
    run_ok(bin().args(["gen", "--env", "sandbox", "--seed", "1", "--out"]).arg(&a));
    run_ok(bin().args(["gen", "--env", "sandbox", "--seed", "1", "--out"]).arg(&b));
    let bytes_a = std::fs::read(&a).unwrap();
    assert_eq!(bytes_a, std::fs::read(&b).unwrap());
    let world = driftbench_core::sim::World::from_json_bytes(&bytes_a).unwrap();
    assert_eq!(world.obstacles.len(), 17);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn unknown_flag_and_env_are_usage_errors() {
    let out = bin().args(["gen", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin()
        .args(["gen", "--env", "volcano", "--out", "/tmp/x.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("volcano"));
}

#[test]
fn unreadable_model_path_is_an_io_error() {
    let out = bin()
        .args(["eval", "--model", "/nonexistent/model.dshc", "--env", "canyon"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn version_mismatched_model_is_a_format_error() {
    let dir = tmp("badmodel");
    let path = dir.join("bad.dshc");
    let mut bytes = Vec::new();
    bytes.extend_from_slice(b"DSHC");
    bytes.extend_from_slice(&99u32.to_le_bytes());
    bytes.extend_from_slice(&0u32.to_le_bytes());
    std::fs::write(&path, bytes).unwrap();
    let out = bin()
        .args(["eval", "--model"])
        .arg(&path)
        .args(["--env", "canyon"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("version"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn infeasible_generation_exits_4() {
    let dir = tmp("infeasible");
    // A forest too dense to place: trunk placement cannot satisfy the
    // pairwise clearance, so every retry fails.
    let cfg = dir.join("cfg.toml");
    std::fs::write(&cfg, "[forest]\ntrunk_count = 5000\n").unwrap();
    let out = bin()
        .args(["gen", "--env", "forest", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(dir.join("w.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn help_lists_every_documented_flag() {
    let out = run_ok(bin().arg("--help"));
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    for sub in ["gen", "collect", "acd", "train", "eval", "bench", "plot"] {
        assert!(text.contains(sub), "missing {sub} in help");
    }
    for (sub, flags) in [
        ("gen", vec!["--env", "--seed", "--out", "--config", "--reverse"]),
        ("collect", vec!["--flights", "--kinds", "--out", "--jobs"]),
        ("train", vec!["--arch", "--data", "--out", "--epochs", "--lr", "--batch", "--stride", "--beta"]),
        ("eval", vec!["--model", "--env", "--runs"]),
        ("bench", vec!["--arch", "--population", "--flights", "--out"]),
        ("plot", vec!["--in", "--out"]),
    ] {
        let out = run_ok(bin().args([sub, "--help"]));
        let text = String::from_utf8_lossy(&out.stdout).to_string();
        for flag in flags {
            assert!(text.contains(flag), "{sub} help missing {flag}");
        }
        // Defaults are documented for value-carrying options.
        assert!(text.contains("default"), "{sub} help lists no defaults");
    }
}

/// Small-but-real collection config: default geometry, smaller camera.
fn small_cfg(dir: &Path) -> PathBuf {
    let cfg = dir.join("cfg.toml");
    std::fs::write(
        &cfg,
        "[camera]\nimage_width = 64\nimage_height = 48\n\n[train]\nstride = 8\nepochs = 2\n\n[policy]\nconv_channels = [4, 8]\nhidden = 12\ndepth_hidden = 16\n",
    )
    .unwrap();
    cfg
}

#[test]
fn collect_tree_is_deterministic_and_carries_config() {
    let dir = tmp("collect");
    let cfg = small_cfg(&dir);
    for name in ["a", "b"] {
        run_ok(
            bin()
                .args(["collect", "--flights", "2", "--kinds", "canyon,sandbox", "--seed", "3"])
                .args(["--config"])
                .arg(&cfg)
                .args(["--jobs", "2", "--out"])
                .arg(dir.join(name)),
        );
    }
    let a = tree_bytes(&dir.join("a"));
    let b = tree_bytes(&dir.join("b"));
    assert_eq!(a.len(), b.len());
    assert!(a.keys().any(|k| k == "config.resolved"));
    assert!(a.keys().any(|k| k == "summary.json"));
    assert!(a.keys().any(|k| k.starts_with("canyon/ep_000/")));
    for (path, bytes) in &a {
        assert_eq!(Some(bytes), b.get(path).as_deref(), "mismatch in {path}");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn eval_zero_weight_policy_matches_corridor_clearance_fixture() {
    let dir = tmp("zeroeval");
    let model = dir.join("zero.dshc");
    let mut net = build::<f32>(&PolicySpec::with_arch(Arch::Naux), 0).unwrap();
    net.for_each_param(&mut |_, p, _| p.fill(0.0));
    net.save(&model).unwrap();

    let out = run_ok(
        bin()
            .args(["eval", "--model"])
            .arg(&model)
            .args(["--env", "corridor", "--runs", "1", "--seed", "0"]),
    );
    let stdout = String::from_utf8_lossy(&out.stdout).to_string();
    let avg_line = stdout
        .lines()
        .find(|l| l.starts_with("avg,"))
        .expect("avg row");
    let distance: f64 = avg_line.split(',').nth(4).unwrap().parse().unwrap();
    // Straight flight from the spawn to the outer wall of the first turn.
    let expect = forward_zero_action_clearance() - 0.25;
    assert!(
        (distance - expect).abs() <= 1.3 * 0.05 + 1e-9,
        "distance {distance} vs clearance {expect}"
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn bench_population_one_has_equal_topk_and_two_polylines() {
    let dir = tmp("bench1");
    let cfg = small_cfg(&dir);
    let out_dir = dir.join("bench");
    run_ok(
        bin()
            .args(["bench", "--arch", "naux,auxd", "--population", "1", "--flights", "1"])
            .args(["--seed", "5", "--config"])
            .arg(&cfg)
            .args(["--out"])
            .arg(&out_dir),
    );
    let topk = std::fs::read_to_string(out_dir.join("topk.md")).unwrap();
    let corridor = topk
        .lines()
        .find(|l| l.starts_with("| Corridor |"))
        .unwrap();
    let cells: Vec<&str> = corridor
        .split('|')
        .map(|c| c.trim())
        .filter(|c| !c.is_empty())
        .skip(1)
        .collect();
    assert_eq!(cells.len(), 6);
    // top5 == top3 == top1 per arch for a population of one.
    assert_eq!(cells[0], cells[2]);
    assert_eq!(cells[2], cells[4]);
    assert_eq!(cells[1], cells[3]);
    assert_eq!(cells[3], cells[5]);

    let svg = std::fs::read_to_string(out_dir.join("curve.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert!(out_dir.join("population.csv").exists());
    assert!(out_dir.join("acd.md").exists());
    assert!(out_dir.join("config.resolved").exists());

    // plot regenerates a curve from the CSV.
    let replot = dir.join("replot.svg");
    run_ok(bin().args(["plot", "--in"]).arg(&out_dir).args(["--out"]).arg(&replot));
    let svg2 = std::fs::read_to_string(&replot).unwrap();
    assert_eq!(svg2.matches("<polyline").count(), 2);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn numeric_failure_during_training_exits_3() {
    let dir = tmp("numfail");
    let cfg = small_cfg(&dir);
    let data = dir.join("data");
    run_ok(
        bin()
            .args(["collect", "--flights", "1", "--kinds", "sandbox", "--seed", "1"])
            .args(["--config"])
            .arg(&cfg)
            .args(["--out"])
            .arg(&data),
    );
    // An absurd learning rate overflows the parameters; the refused step
    // surfaces as a numeric failure.
    let out = bin()
        .args(["train", "--arch", "naux", "--seed", "1", "--lr", "1e30", "--epochs", "2"])
        .args(["--config"])
        .arg(&cfg)
        .args(["--data"])
        .arg(&data)
        .args(["--out"])
        .arg(dir.join("m.dshc"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn acd_gen_and_eval_roundtrip() {
    let dir = tmp("acd");
    let acd_dir = dir.join("set");
    run_ok(
        bin()
            .args(["acd", "gen", "--seed", "2", "--trajectories", "5", "--out"])
            .arg(&acd_dir),
    );
    let index: serde_json::Value =
        serde_json::from_slice(&std::fs::read(acd_dir.join("acd.json")).unwrap()).unwrap();
    assert_eq!(index["trajectories"].as_array().unwrap().len(), 5);
    assert_eq!(index["straight"], 1);

    // A zero policy always answers "straight": only the straight trajectory
    // classifies correctly.
    let model = dir.join("zero.dshc");
    let mut net = build::<f32>(&PolicySpec::with_arch(Arch::Naux), 0).unwrap();
    net.for_each_param(&mut |_, p, _| p.fill(0.0));
    net.save(&model).unwrap();
    let out = run_ok(
        bin()
            .args(["acd", "eval", "--model"])
            .arg(&model)
            .args(["--data"])
            .arg(&acd_dir),
    );
    let stdout = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(stdout.lines().next().unwrap().starts_with("section,key"));
    let correct = stdout
        .lines()
        .filter(|l| l.starts_with("trajectory,") && l.ends_with(",100.0"))
        .count();
    assert_eq!(correct, 1);
    std::fs::remove_dir_all(&dir).ok();
}
