use gate_core::geometry::{
    build_adjacency, intersect_triangle, load_manifest, load_obj, parse_obj, Bvh, Mesh, Ray, Scene,
};
use glam::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn soup(n: usize, rng: &mut ChaCha8Rng) -> Scene {
    let mut vertices = Vec::new();
    let mut indices = Vec::new();
    for t in 0..n {
        let c = Vec3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        for _ in 0..3 {
            vertices.push(c + Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
        let b = 3 * t as u32;
        indices.push([b, b + 1, b + 2]);
    }
    Scene::new(vec![Mesh::new("soup", vertices, indices).unwrap()]).unwrap()
}

fn brute(scene: &Scene, ray: &Ray) -> Option<(u32, f32)> {
    let m = scene.mesh(0);
    let mut best: Option<(u32, f32)> = None;
    for t in 0..m.triangle_count() {
        let [a, b, c] = m.triangle(t);
        if let Some((d, _, _)) = intersect_triangle(ray, a, b - a, c - a) {
            if d >= ray.t_min && d <= ray.t_max && best.map_or(true, |(_, bd)| d < bd) {
                best = Some((t as u32, d));
            }
        }
    }
    best
}

#[test]
fn bvh_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let scene = soup(200, &mut rng);
    let bvh = Bvh::build(&scene);
    let mut hits = 0;
    for _ in 0..10_000 {
        let origin = Vec3::new(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0));
        let dir = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).normalize();
        let ray = Ray::new(origin, dir, 0.0, rng.gen_range(1.0..30.0));
        let want = brute(&scene, &ray);
        let got = bvh.intersect(&ray);
        match (want, got) {
            (None, None) => {}
            (Some((_, d)), Some(h)) => {
                hits += 1;
                assert!((h.t - d).abs() <= 1e-5 * d.max(1.0), "t {} vs {}", h.t, d);
            }
            (w, g) => panic!("brute {w:?} vs bvh {:?}", g.map(|h| (h.point.tri_id, h.t))),
        }
        assert_eq!(bvh.occluded(&ray), want.is_some());
    }
    assert!(hits > 500, "too few hits to be meaningful: {hits}");
}

const CUBE: &str = "\
# unit cube, quads
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 4 3 2
f 5 6 7 8
f 1 2 6 5
f 2 3 7 6
f 3 4 8 7
f 4 1 5 8
";

#[test]
fn obj_quads_triangulate_into_a_closed_manifold() {
    let meshes = parse_obj(CUBE, std::path::Path::new("cube.obj")).unwrap();
    assert_eq!(meshes.len(), 1);
    let m = &meshes[0];
    assert_eq!(m.triangle_count(), 12);
    assert!((m.total_area() - 6.0).abs() < 1e-5);
    let adj = build_adjacency(m);
    assert_eq!(adj.edges.len(), 18);
    assert!(adj.edges.values().all(|u| u.len() == 2));
}

#[test]
fn manifest_loads_relative_objs_with_camera() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cube.obj"), CUBE).unwrap();
    let manifest = r#"{
        "meshes": [{ "obj": "cube.obj", "albedo": [0.5, 0.5, 0.5] }, { "obj": "cube.obj" }],
        "camera": { "position": [3, 3, 3], "look_at": [0.5, 0.5, 0.5], "up": [0, 1, 0],
                    "fov_y_deg": 40, "width": 32, "height": 24 }
    }"#;
    let path = dir.path().join("scene.json");
    std::fs::write(&path, manifest).unwrap();
    let (scene, cam) = load_manifest(&path).unwrap();
    assert_eq!(scene.meshes().len(), 2);
    assert_eq!(scene.triangle_count(), 24);
    assert_eq!((cam.width, cam.height), (32, 24));

    let single = load_obj(dir.path().join("cube.obj")).unwrap();
    assert_eq!(single.triangle_count(), 12);
}

#[test]
fn malformed_inputs_are_rejected() {
    let p = std::path::Path::new("bad.obj");
    assert!(parse_obj("v 0 0 0\nv 1 0 0\nf 1 2 3\n", p).is_err(), "index out of range");
    assert!(parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 1 2\n", p).is_err(), "repeated vertex");
    assert!(parse_obj("v 0 0 nope\n", p).is_err());
    assert!(load_obj("/definitely/not/here.obj").is_err());
}
