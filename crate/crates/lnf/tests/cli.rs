//! End-to-end runs of the `lnf` binary: exit codes, artifacts, stderr.

use std::path::Path;
use std::process::{Command, Output};

fn lnf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lnf"))
        .args(args)
        .output()
        .expect("spawn lnf")
}

fn write_tiny_config(dir: &Path, out_dir: &Path) -> std::path::PathBuf {
    let text = format!(
        r#"
[dataset]
source = "synthetic"
classes = ["sphere", "plane"]
clouds_per_class = 8
points_per_cloud = 48
noise_sigma = 0.01
seed = 5

[model]
mode = "both"

[[model.stages]]
anchors = 12
radius = 0.4
k_max = 8
lift = [8, 8]

[train]
epochs = 3
batch_size = 4
seeds = [1]

[output]
dir = "{}"
"#,
        out_dir.display()
    );
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn train_eval_round_trip_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("runs");
    let config = write_tiny_config(dir.path(), &out_dir);

    let out = lnf(&["train", "--config", config.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("summary.json").exists());
    assert!(out_dir.join("history.jsonl").exists());

    let ckpt = std::fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().map(|x| x == "lnfc").unwrap_or(false))
        .expect("a checkpoint was written");
    let out = lnf(&["eval", "--config", config.to_str().unwrap(), "--checkpoint", ckpt.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("mAcc"), "got: {text}");
}

#[test]
fn unknown_config_key_exits_2_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(
        &path,
        "[dataset]\nsource = \"synthetic\"\n\n[train]\nlerning_rate = 0.1\n",
    )
    .unwrap();
    let out = lnf(&["train", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("lerning_rate"), "stderr should name the key: {err}");
}

#[test]
fn missing_config_file_exits_2() {
    let out = lnf(&["train", "--config", "/nonexistent/nope.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_with_mismatched_model_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("runs");
    let config = write_tiny_config(dir.path(), &out_dir);
    let out = lnf(&["train", "--config", config.to_str().unwrap()]);
    assert!(out.status.success());
    let ckpt = std::fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().map(|x| x == "lnfc").unwrap_or(false))
        .unwrap();

    // same dataset, different architecture
    let other = dir.path().join("other.toml");
    let text = std::fs::read_to_string(&config).unwrap().replace("lift = [8, 8]", "lift = [6, 6]");
    std::fs::write(&other, text).unwrap();
    let out = lnf(&["eval", "--config", other.to_str().unwrap(), "--checkpoint", ckpt.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn soup_k1_reproduces_the_best_checkpoint_payload() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("runs");
    let config = write_tiny_config(dir.path(), &out_dir);
    let out = lnf(&["train", "--config", config.to_str().unwrap()]);
    assert!(out.status.success());

    let soup_path = dir.path().join("soup.lnfc");
    let out = lnf(&[
        "soup",
        "--dir",
        out_dir.to_str().unwrap(),
        "-k",
        "1",
        "--out",
        soup_path.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    // k=1 is the identity: the payload must match the source checkpoint of
    // the same epoch bit for bit
    let souped = lnf::checkpoint_io::load_checkpoint(&soup_path).unwrap();
    let best = lnf::checkpoint_io::load_checkpoint_dir(&out_dir)
        .unwrap()
        .into_iter()
        .find(|c| c.epoch == souped.epoch)
        .expect("source checkpoint for the soup epoch");
    assert_eq!(best.params.len(), souped.params.len());
    assert!(best
        .params
        .iter()
        .zip(&souped.params)
        .all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn soup_k_larger_than_store_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("runs");
    let config = write_tiny_config(dir.path(), &out_dir);
    let out = lnf(&["train", "--config", config.to_str().unwrap()]);
    assert!(out.status.success());
    let out = lnf(&["soup", "--dir", out_dir.to_str().unwrap(), "-k", "99"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn extract_writes_one_record_per_slot() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("cloud.xyz");
    let mut text = String::new();
    let mut v = 0.37_f64;
    for _ in 0..40 {
        // cheap deterministic scatter
        v = (v * 997.13).fract();
        let w = (v * 877.31).fract();
        let u = (v * 131.71).fract();
        text.push_str(&format!("{v} {w} {u}\n"));
    }
    std::fs::write(&input, text).unwrap();
    let out_path = dir.path().join("features.jsonl");
    let out = lnf(&[
        "extract",
        "--input",
        input.to_str().unwrap(),
        "--anchors",
        "8",
        "--k-max",
        "4",
        "--radius",
        "0.3",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let lines: Vec<String> =
        std::fs::read_to_string(&out_path).unwrap().lines().map(String::from).collect();
    assert_eq!(lines.len(), 8 * 4);
    let first: serde_json::Value = serde_json::from_str(&lines[0]).unwrap();
    for key in ["anchor_row", "anchor_index", "slot", "neighbor_index", "padded", "raw_distance", "d", "dv"] {
        assert!(first.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn bench_prints_a_table() {
    let out = lnf(&["bench", "--sizes", "128", "--reps", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("stage_forward_base"), "got: {text}");
    assert!(text.contains("overhead"), "got: {text}");
}
