//! End-to-end runs of the command-line tool on a tiny synthetic scene.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn surfsplat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_surfsplat")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn metrics(dir: &Path) -> Vec<Value> {
    std::fs::read_to_string(dir.join("metrics.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn gen_scene(dir: &Path) -> std::path::PathBuf {
    let data = dir.join("data");
    let o = surfsplat(&["gen-scene", "--kind", "cube", "--views", "6", "--resolution", "32", "--out", s(&data)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    data
}

#[test]
fn train_render_mesh_eval_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let data = gen_scene(tmp.path());

    let init = tmp.path().join("init");
    let o = surfsplat(&["train", "--data", s(&data), "--out", s(&init), "--iters", "0"]);
    assert_eq!(code(&o), 0);
    assert!(init.join("model.ckpt").exists());
    assert!(!init.join("metrics.jsonl").exists());

    let run = tmp.path().join("run");
    let o = surfsplat(&["train", "--data", s(&data), "--out", s(&run), "--iters", "20", "--checkpoint-every", "10"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = metrics(&run);
    assert_eq!(m.len(), 20);
    assert!(m.iter().any(|r| r["distortion_active"] == true));
    for f in ["model.ckpt", "checkpoint_000010.ckpt", "manifest.json", "config.toml"] {
        assert!(run.join(f).exists(), "{f}");
    }
    // the final state is model.ckpt, not a numbered checkpoint
    assert!(!run.join("checkpoint_000020.ckpt").exists());
    let ckpt = run.join("model.ckpt");

    let img = tmp.path().join("img");
    let o = surfsplat(&["render", "--ckpt", s(&ckpt), "--data", s(&data), "--view", "0", "--out", s(&img)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["000_color.png", "000_depth.pfm", "000_normal.png", "000_alpha.png"] {
        assert!(img.join(f).exists(), "{f}");
    }
    let o = surfsplat(&["render", "--ckpt", s(&ckpt), "--data", s(&data), "--view", "0", "--channels", "", "--out", s(&img)]);
    assert_eq!(code(&o), 1);
    let o = surfsplat(&["render", "--ckpt", s(&ckpt), "--data", s(&data), "--view", "99", "--out", s(&img)]);
    assert_eq!(code(&o), 1);

    let mesh = tmp.path().join("mesh");
    let o = surfsplat(&["mesh", "--ckpt", s(&ckpt), "--data", s(&data), "--out", s(&mesh), "--obj"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(mesh.join("mesh.ply").exists() && mesh.join("mesh.obj").exists());

    let o = surfsplat(&["eval", "--ckpt", s(&ckpt), "--data", s(&data)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("mean_psnr"), "{stdout}");
}

#[test]
fn ablation_flags_disable_regularizers() {
    let tmp = tempfile::tempdir().unwrap();
    let data = gen_scene(tmp.path());
    let run = tmp.path().join("run");
    let o = surfsplat(&[
        "train", "--data", s(&data), "--out", s(&run), "--iters", "12",
        "--no-normal-loss", "--no-distortion-loss",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for r in metrics(&run) {
        assert_eq!(r["distortion_active"], false);
        assert_eq!(r["normal_active"], false);
    }
}

#[test]
fn usage_and_data_errors_have_distinct_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&surfsplat(&["--help"])), 0);
    assert_eq!(code(&surfsplat(&["train"])), 1);
    assert_eq!(code(&surfsplat(&["gradcheck", "--precision", "quad"])), 1);
    let missing = tmp.path().join("missing");
    let o = surfsplat(&["train", "--data", s(&missing), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn gradcheck_passes_from_the_command_line() {
    let o = surfsplat(&["--threads", "2", "gradcheck", "--scenes", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}
