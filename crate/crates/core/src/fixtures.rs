//! Built-in synthetic scenes, so tests and demos need no external assets.

use std::collections::HashMap;

use glam::Vec3;

use crate::geometry::{Mesh, Scene};
use crate::nao::Camera;
use crate::{Error, Result};

pub const NAMES: [&str; 4] = ["corner", "quad", "stadium", "mixed"];

/// Scene and default camera for a named fixture.
pub fn load(name: &str) -> Result<(Scene, Camera)> {
    match name {
        "corner" => Ok((corner(8), corner_camera())),
        "quad" => Ok((quad(16), quad_camera())),
        "stadium" => Ok((stadium(), stadium_camera())),
        "mixed" => Ok((mixed(), mixed_camera())),
        _ => Err(Error::InvalidConfig(format!(
            "unknown fixture `{name}` (expected one of {})",
            NAMES.join(", ")
        ))),
    }
}

/// `n x n` grid of quads spanning `origin + [0,1]·u + [0,1]·v`, two triangles
/// per cell, normal along `u x v`.
pub fn grid_mesh(name: &str, origin: Vec3, u: Vec3, v: Vec3, n: u32) -> Mesh {
    let mut vertices = Vec::with_capacity(((n + 1) * (n + 1)) as usize);
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(origin + u * (i as f32 / n as f32) + v * (j as f32 / n as f32));
        }
    }
    let id = |i: u32, j: u32| j * (n + 1) + i;
    let mut indices = Vec::with_capacity((2 * n * n) as usize);
    for j in 0..n {
        for i in 0..n {
            indices.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            indices.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Mesh::new(name, vertices, indices).expect("grid mesh is valid")
}

/// Unit square in the `z = 0` plane, `n x n` cells (`2n²` triangles).
pub fn quad(n: u32) -> Scene {
    Scene::new(vec![grid_mesh("quad", Vec3::ZERO, Vec3::X, Vec3::Y, n)]).expect("quad scene")
}

pub fn quad_camera() -> Camera {
    Camera {
        position: Vec3::new(0.5, 0.5, 1.5),
        look_at: Vec3::new(0.5, 0.5, 0.0),
        up: Vec3::Y,
        fov_y_deg: 40.0,
        width: 64,
        height: 64,
    }
}

/// Concave dihedral corner: a floor (`y = 0`) meeting a wall (`x = 0`) along
/// the z axis, each 2 x 2 units with `n x n` cells.
pub fn corner(n: u32) -> Scene {
    let floor = grid_mesh("floor", Vec3::ZERO, Vec3::Z * 2.0, Vec3::X * 2.0, n);
    let wall = grid_mesh("wall", Vec3::ZERO, Vec3::Y * 2.0, Vec3::Z * 2.0, n);
    Scene::new(vec![floor, wall]).expect("corner scene")
}

pub fn corner_camera() -> Camera {
    Camera {
        position: Vec3::new(2.4, 1.6, 1.0),
        look_at: Vec3::new(0.4, 0.4, 1.0),
        up: Vec3::Y,
        fov_y_deg: 50.0,
        width: 64,
        height: 64,
    }
}

/// Subdivided icosahedron projected onto a sphere.
pub fn icosphere(name: &str, center: Vec3, radius: f32, subdivisions: u32) -> Mesh {
    let t = (1.0 + 5f32.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid = HashMap::new();
        let mut midpoint = |a: u32, b: u32, verts: &mut Vec<Vec3>| -> u32 {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a as usize] + verts[b as usize]) * 0.5).normalize());
                verts.len() as u32 - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let verts = verts.into_iter().map(|v| center + v * radius).collect();
    Mesh::new(name, verts, faces).expect("icosphere is valid")
}

/// Axis-aligned box of side `size` centered at `center` with inward-facing
/// triangles (12 in total).
pub fn room(name: &str, center: Vec3, size: f32) -> Mesh {
    let h = size * 0.5;
    let c = |x: f32, y: f32, z: f32| center + Vec3::new(x, y, z) * h;
    let vertices = vec![
        c(-1.0, -1.0, -1.0),
        c(1.0, -1.0, -1.0),
        c(1.0, 1.0, -1.0),
        c(-1.0, 1.0, -1.0),
        c(-1.0, -1.0, 1.0),
        c(1.0, -1.0, 1.0),
        c(1.0, 1.0, 1.0),
        c(-1.0, 1.0, 1.0),
    ];
    let quads = [[0, 1, 5, 4], [3, 7, 6, 2], [0, 4, 7, 3], [1, 2, 6, 5], [0, 3, 2, 1], [4, 5, 6, 7]];
    let mut indices = Vec::new();
    for [a, b, cc, d] in quads {
        let (pa, pb, pc) = (vertices[a as usize], vertices[b as usize], vertices[cc as usize]);
        let inward = (pb - pa).cross(pc - pa).dot(center - pa) > 0.0;
        if inward {
            indices.extend([[a, b, cc], [a, cc, d]]);
        } else {
            indices.extend([[a, cc, b], [a, d, cc]]);
        }
    }
    Mesh::new(name, vertices, indices).expect("room is valid")
}

/// A 100-unit room around a unit-radius icosphere resting on the floor.
pub fn stadium() -> Scene {
    let floor_y = -50.0;
    Scene::new(vec![
        room("stadium", Vec3::ZERO, 100.0),
        icosphere("teapot", Vec3::new(0.0, floor_y + 1.0, 0.0), 1.0, 3),
    ])
    .expect("stadium scene")
}

pub fn stadium_camera() -> Camera {
    Camera {
        position: Vec3::new(2.5, -47.5, 3.5),
        look_at: Vec3::new(0.0, -49.3, 0.0),
        up: Vec3::Y,
        fov_y_deg: 45.0,
        width: 64,
        height: 64,
    }
}

/// Meshes of very different triangle sizes: a coarse 2-triangle floor, a
/// dense icosphere and a medium-resolution wall.
pub fn mixed() -> Scene {
    Scene::new(vec![
        grid_mesh("floor", Vec3::new(-3.0, 0.0, -3.0), Vec3::Z * 6.0, Vec3::X * 6.0, 1),
        icosphere("ball", Vec3::new(0.0, 0.8, 0.0), 0.8, 3),
        grid_mesh("wall", Vec3::new(-3.0, 0.0, -3.0), Vec3::X * 6.0, Vec3::Y * 3.0, 6),
    ])
    .expect("mixed scene")
}

pub fn mixed_camera() -> Camera {
    Camera {
        position: Vec3::new(1.5, 2.5, 4.5),
        look_at: Vec3::new(0.0, 0.6, -0.5),
        up: Vec3::Y,
        fov_y_deg: 50.0,
        width: 64,
        height: 64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_adjacency;

    #[test]
    fn counts_and_orientation() {
        let q = quad(16);
        assert_eq!(q.triangle_count(), 512);
        assert!((q.mesh(0).total_area() - 1.0).abs() < 1e-5);
        assert!((q.mesh(0).geometric_normal(0) - Vec3::Z).length() < 1e-6);

        let c = corner(4);
        assert!((c.mesh(0).geometric_normal(0) - Vec3::Y).length() < 1e-6);
        assert!((c.mesh(1).geometric_normal(0) - Vec3::X).length() < 1e-6);

        let s = stadium();
        assert_eq!(s.mesh(0).triangle_count(), 12);
        assert_eq!(s.mesh(1).triangle_count(), 20 * 64);
        for t in 0..12 {
            let n = s.mesh(0).geometric_normal(t);
            let centroid = s.mesh(0).position(t, [1.0 / 3.0; 3]);
            assert!(n.dot(centroid) < 0.0, "room face {t} must face inward");
        }
        assert!((s.mesh(0).geometric_normal(0) - Vec3::Y).length() < 1e-6);
        for t in 0..s.mesh(1).triangle_count() {
            let centroid = s.mesh(1).position(t, [1.0 / 3.0; 3]);
            assert!(s.mesh(1).geometric_normal(t).dot(centroid - Vec3::new(0.0, -49.0, 0.0)) > 0.0);
        }
        let adj = build_adjacency(s.mesh(1));
        assert!(adj.edges.values().all(|u| u.len() == 2), "icosphere is closed");
    }

    #[test]
    fn named() {
        for n in NAMES {
            let (scene, cam) = load(n).unwrap();
            cam.validate().unwrap();
            assert!(scene.triangle_count() > 0);
        }
        assert!(load("teapot").is_err());
    }
}
