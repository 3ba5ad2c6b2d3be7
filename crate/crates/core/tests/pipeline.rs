use gate_core::checkpoint::Checkpoint;
use gate_core::config::{RunConfig, SceneSource};
use gate_core::mesh_colors::{feature_count_per_triangle, LevelSpec, StorageMode};
use gate_core::nao::{primary_hits, render_inference};
use gate_core::pipeline::{self, Setup};

fn cfg(fixture: &str, out: &std::path::Path) -> RunConfig {
    let mut c = RunConfig::default();
    c.scene = SceneSource::Fixture(fixture.into());
    c.out_dir = out.to_path_buf();
    c.deterministic = true;
    c.trainer.batch_size = 256;
    c
}

#[test]
fn fresh_model_renders_near_zero() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg("corner", dir.path());
    let setup = Setup::new(&c).unwrap();
    let model = pipeline::build_model(&c, &setup.scene).unwrap();
    let img = render_inference(&setup.scene, &setup.bvh, &setup.camera, &model).unwrap();
    let hits = primary_hits(&setup.bvh, &setup.camera);
    for (p, h) in img.pixels.iter().zip(&hits) {
        if h.is_some() {
            assert!(p[0] < 0.05, "fresh prediction {}", p[0]);
        } else {
            assert_eq!(p[0], 1.0);
        }
    }
}

#[test]
fn checkpoint_reloads_the_trained_model() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = cfg("corner", dir.path());
    c.trainer.iterations = 5;
    let s = pipeline::cmd_train(&c, None).unwrap();
    let setup = Setup::new(&c).unwrap();
    let ck = Checkpoint::load(&s.checkpoint, &setup.scene).unwrap();
    assert_eq!(ck.iteration, 5);
    assert_eq!(ck.config_hash, s.config_hash);
    let r = pipeline::cmd_render(&c, &s.checkpoint, true).unwrap();
    // The render of the reloaded model matches the training run's final image.
    assert!((r.mse.unwrap() - s.final_mse.unwrap()).abs() < 1e-12);
}

#[test]
fn compare_matches_parameter_counts_and_logs_both() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = cfg("corner", dir.path());
    c.trainer.iterations = 3;
    let r = pipeline::compare(&c, None, true).unwrap();
    assert!((0.9..=1.1).contains(&r.param_ratio), "ratio {}", r.param_ratio);
    assert_eq!(r.gate.iterations, r.hashgrid.iterations);
    assert_eq!(r.gate.bytes, 4 * r.gate.feature_params as u64);
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("compare.json")).unwrap()).unwrap();
    assert_eq!(json["config_hash"], c.config_hash());
    assert_eq!(json["gate"]["mean_ms_iteration"], 0.0, "timings zeroed in deterministic mode");

    let fixed = pipeline::compare(&c, Some(1 << 10), false).unwrap();
    assert_eq!(fixed.hashgrid.table_size, Some(1 << 10));
}

#[test]
fn viz_adaptive_uses_fewer_slots_than_fixed() {
    let dir = tempfile::tempdir().unwrap();
    let mut fixed = cfg("mixed", dir.path());
    fixed.encoder.levels = vec![LevelSpec::Fixed(4), LevelSpec::Fixed(1)];
    let adaptive = cfg("mixed", dir.path());
    let f = pipeline::cmd_viz(&fixed).unwrap();
    let a = pipeline::cmd_viz(&adaptive).unwrap();
    assert!(a.layout.total_slots < f.layout.total_slots, "{} vs {}", a.layout.total_slots, f.layout.total_slots);
}

#[test]
fn flat_bytes_follow_the_count_formula() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = cfg("mixed", dir.path());
    c.encoder.storage = StorageMode::Flat;
    c.encoder.levels = vec![LevelSpec::Fixed(5), LevelSpec::Fixed(2)];
    let v = pipeline::cmd_viz(&c).unwrap();
    let (scene, _) = c.load_scene().unwrap();
    let l = c.encoder.features as u64;
    let per_tri: u64 = [5, 2].iter().map(|&r| feature_count_per_triangle(r).unwrap() as u64).sum();
    assert_eq!(v.layout.bytes, scene.triangle_count() as u64 * per_tri * l * 4);
}

#[test]
fn stats_resolutions_are_clamped() {
    let dir = tempfile::tempdir().unwrap();
    let s = pipeline::cmd_stats(&cfg("stadium", dir.path())).unwrap();
    assert_eq!(s.triangles, 12 + 1280);
    for m in &s.meshes {
        assert!(m.normalized_area > 0.0 && m.normalized_area <= 1.0);
        assert!(m.resolutions.iter().all(|r| (1..=32).contains(r)));
    }
    assert!(s.meshes.iter().any(|m| m.normalized_area == 1.0));
}
