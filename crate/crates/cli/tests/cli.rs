use std::path::Path;
use std::process::{Command, Output};

fn gate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gate")).args(args).output().expect("spawn gate")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Small-batch config shared by `train` and `render` so their hashes agree.
fn config(dir: &Path) -> String {
    let p = dir.join("run.json");
    std::fs::write(&p, r#"{"scene": {"fixture": "corner"}, "trainer": {"batch_size": 256}}"#).unwrap();
    p.to_str().unwrap().to_owned()
}

fn train(out: &Path, iters: &str) -> Output {
    let cfg = config(out);
    gate(&["train", "--config", &cfg, "--deterministic", "--threads", "1", "--out", out.to_str().unwrap(), "--iters", iters])
}

fn data_rows(csv: &str) -> usize {
    csv.lines().filter(|l| !l.starts_with('#')).count() - 1
}

#[test]
fn train_writes_one_row_per_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let o = train(dir.path(), "12");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert!(csv.starts_with("# config_hash="));
    assert_eq!(data_rows(&csv), 12);
    assert!(dir.path().join("checkpoint.bin").exists());
    assert!(dir.path().join("final.ppm").exists());
}

#[test]
fn zero_iterations_checkpoints_the_initialization() {
    let dir = tempfile::tempdir().unwrap();
    let o = train(dir.path(), "0");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("checkpoint.bin").exists());
}

#[test]
fn render_with_reference_prints_metrics() {
    let dir = tempfile::tempdir().unwrap();
    assert!(train(dir.path(), "4").status.success());
    let ckpt = dir.path().join("checkpoint.bin");
    let out = dir.path().to_str().unwrap();
    let cfg = config(dir.path());
    let o = gate(&["render", "--config", &cfg, "--out", out, "--checkpoint", ckpt.to_str().unwrap(), "--reference"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    let line = s.lines().find(|l| l.starts_with("mse=")).expect("metrics line");
    assert!(line.contains(" psnr="), "{line}");
}

#[test]
fn render_rejects_missing_and_mismatched_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let missing = dir.path().join("nope.bin");
    let o = gate(&["render", "--fixture", "corner", "--out", out, "--checkpoint", missing.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(!o.stderr.is_empty());

    assert!(train(dir.path(), "1").status.success());
    let ckpt = dir.path().join("checkpoint.bin");
    let cfg = config(dir.path());
    let o = gate(&["render", "--config", &cfg, "--seed", "77", "--out", out, "--checkpoint", ckpt.to_str().unwrap()]);
    assert!(!o.status.success(), "config mismatch must be rejected");
}

#[test]
fn deterministic_reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(train(a.path(), "3").status.success());
    assert!(train(b.path(), "3").status.success());
    for f in ["checkpoint.bin", "metrics.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn stats_reports_unit_area_for_single_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let o = gate(&["stats", "--fixture", "quad", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["triangles"], 512);
    assert_eq!(v["meshes"][0]["normalized_area"], 1.0);
}

#[test]
fn viz_json_matches_layout() {
    let dir = tempfile::tempdir().unwrap();
    let o = gate(&["viz", "--fixture", "mixed", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("layout.json")).unwrap()).unwrap();
    let total = json["layout"]["total_slots"].as_u64().unwrap();
    let per_level: u64 = json["layout"]["levels"].as_array().unwrap().iter().map(|l| l["slots"].as_u64().unwrap()).sum();
    assert_eq!(total, per_level);
    assert!(dir.path().join("voronoi.ppm").exists());
}

#[test]
fn unknown_fixture_fails_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let o = gate(&["stats", "--fixture", "nowhere", "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere"));
}
