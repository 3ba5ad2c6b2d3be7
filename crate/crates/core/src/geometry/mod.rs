//! Triangle meshes, scenes, adjacency and surface sampling.

mod bvh;
mod manifest;
mod obj;

use std::collections::HashMap;

use glam::Vec3;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use bvh::{intersect_triangle, Bvh};
pub use manifest::{load_manifest, MeshEntry, SceneManifest};
pub use obj::{load_obj, parse_obj};

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: Vec3::splat(f32::INFINITY),
        max: Vec3::splat(f32::NEG_INFINITY),
    };

    pub fn grow(&mut self, p: Vec3) {
        self.min = self.min.min(p);
        self.max = self.max.max(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.min(other.min),
            max: self.max.max(other.max),
        }
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn diagonal(&self) -> f32 {
        self.extent().length()
    }

    pub fn center(&self) -> Vec3 {
        0.5 * (self.min + self.max)
    }

    pub fn surface_area(&self) -> f32 {
        let e = self.extent().max(Vec3::ZERO);
        2.0 * (e.x * e.y + e.y * e.z + e.z * e.x)
    }

    pub fn contains(&self, p: Vec3) -> bool {
        p.cmpge(self.min).all() && p.cmple(self.max).all()
    }

    /// Maps `p` into `[0,1]^3` relative to the box, clamping outside points.
    pub fn normalize(&self, p: Vec3) -> Vec3 {
        let ext = self.extent().max(Vec3::splat(f32::MIN_POSITIVE));
        ((p - self.min) / ext).clamp(Vec3::ZERO, Vec3::ONE)
    }
}

/// A triangle mesh. Counter-clockwise winding defines the geometric normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub name: String,
    pub vertices: Vec<Vec3>,
    pub indices: Vec<[u32; 3]>,
    pub albedo: Option<Vec3>,
}

impl Mesh {
    pub fn new(name: impl Into<String>, vertices: Vec<Vec3>, indices: Vec<[u32; 3]>) -> Result<Self> {
        let mesh = Mesh {
            name: name.into(),
            vertices,
            indices,
            albedo: None,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn with_albedo(mut self, albedo: Vec3) -> Self {
        self.albedo = Some(albedo);
        self
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Error::InvalidMesh {
            name: self.name.clone(),
            msg,
        };
        if self.indices.is_empty() {
            return Err(bad("mesh has no triangles".into()));
        }
        if let Some(i) = self.vertices.iter().position(|v| !v.is_finite()) {
            return Err(bad(format!("vertex {i} is not finite")));
        }
        let n = self.vertices.len() as u32;
        for (t, tri) in self.indices.iter().enumerate() {
            if let Some(&v) = tri.iter().find(|&&v| v >= n) {
                return Err(bad(format!("triangle {t} references vertex {v}, only {n} vertices")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[2] == tri[0] {
                return Err(bad(format!("triangle {t} repeats a vertex index: {tri:?}")));
            }
        }
        if let Some(a) = self.albedo {
            if !a.is_finite() || a.min_element() < 0.0 || a.max_element() > 1.0 {
                return Err(bad(format!("albedo {a} outside [0,1]^3")));
            }
        }
        Ok(())
    }

    pub fn triangle_count(&self) -> usize {
        self.indices.len()
    }

    #[inline]
    pub fn triangle(&self, tri: usize) -> [Vec3; 3] {
        let [a, b, c] = self.indices[tri];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Half the cross-product magnitude of two edges; zero for degenerate triangles.
    pub fn triangle_area(&self, tri: usize) -> f32 {
        let [a, b, c] = self.triangle(tri);
        0.5 * (b - a).cross(c - a).length()
    }

    pub fn mean_triangle_area(&self) -> f32 {
        let sum: f64 = (0..self.triangle_count()).map(|t| self.triangle_area(t) as f64).sum();
        (sum / self.triangle_count() as f64) as f32
    }

    pub fn total_area(&self) -> f32 {
        (0..self.triangle_count()).map(|t| self.triangle_area(t) as f64).sum::<f64>() as f32
    }

    /// Unit geometric normal, or zero for a degenerate triangle.
    pub fn geometric_normal(&self, tri: usize) -> Vec3 {
        let [a, b, c] = self.triangle(tri);
        (b - a).cross(c - a).normalize_or_zero()
    }

    #[inline]
    pub fn position(&self, tri: usize, bary: [f32; 3]) -> Vec3 {
        let [a, b, c] = self.triangle(tri);
        bary[0] * a + bary[1] * b + bary[2] * c
    }
}

/// An ordered collection of meshes. Mesh order defines mesh ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    meshes: Vec<Mesh>,
    aabb: Aabb,
}

impl Scene {
    pub fn new(meshes: Vec<Mesh>) -> Result<Self> {
        if meshes.is_empty() {
            return Err(Error::InvalidScene("scene has no meshes".into()));
        }
        let mut aabb = Aabb::EMPTY;
        for m in &meshes {
            for &v in &m.vertices {
                aabb.grow(v);
            }
        }
        Ok(Scene { meshes, aabb })
    }

    pub fn meshes(&self) -> &[Mesh] {
        &self.meshes
    }

    pub fn mesh(&self, mesh_id: usize) -> &Mesh {
        &self.meshes[mesh_id]
    }

    pub fn aabb(&self) -> Aabb {
        self.aabb
    }

    pub fn triangle_count(&self) -> usize {
        self.meshes.iter().map(Mesh::triangle_count).sum()
    }

    /// Ray offset used for secondary rays.
    pub fn ray_epsilon(&self) -> f32 {
        1e-4 * self.aabb.diagonal().max(f32::MIN_POSITIVE)
    }

    pub fn position(&self, p: &SurfacePoint) -> Vec3 {
        self.meshes[p.mesh_id as usize].position(p.tri_id as usize, p.bary)
    }

    pub fn normal(&self, p: &SurfacePoint) -> Vec3 {
        self.meshes[p.mesh_id as usize].geometric_normal(p.tri_id as usize)
    }

    /// Stable content hash used to key cached artifacts.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for m in &self.meshes {
            h.update(m.name.as_bytes());
            h.update((m.vertices.len() as u64).to_le_bytes());
            for v in &m.vertices {
                for c in v.to_array() {
                    h.update(c.to_le_bytes());
                }
            }
            for t in &m.indices {
                for i in t {
                    h.update(i.to_le_bytes());
                }
            }
        }
        crate::config::short_hex(&h.finalize())
    }
}

/// A point on the scene surface: the query key of the encoding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub mesh_id: u32,
    pub tri_id: u32,
    pub bary: [f32; 3],
}

impl SurfacePoint {
    pub fn new(mesh_id: u32, tri_id: u32, bary: [f32; 3]) -> Self {
        SurfacePoint { mesh_id, tri_id, bary }
    }

    pub fn is_valid(&self) -> bool {
        self.bary.iter().all(|&b| b >= -1e-9 && b.is_finite())
            && (self.bary.iter().sum::<f32>() - 1.0).abs() <= 1e-6
    }
}

/// Uniform point on a triangle from two uniform numbers in `[0,1)`.
pub fn sample_surface_point(mesh_id: u32, tri_id: u32, u1: f32, u2: f32) -> SurfacePoint {
    let s = u1.sqrt();
    let b1 = s * (1.0 - u2);
    let b2 = s * u2;
    SurfacePoint::new(mesh_id, tri_id, [(1.0 - s).max(0.0), b1, b2])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
    pub t_min: f32,
    pub t_max: f32,
}

impl Ray {
    pub fn new(origin: Vec3, dir: Vec3, t_min: f32, t_max: f32) -> Self {
        debug_assert!((dir.length() - 1.0).abs() < 1e-4, "ray direction must be unit");
        Ray { origin, dir, t_min, t_max }
    }

    pub fn at(&self, t: f32) -> Vec3 {
        self.origin + t * self.dir
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub point: SurfacePoint,
    pub t: f32,
    pub geo_normal: Vec3,
    pub position: Vec3,
}

/// Undirected mesh edge keyed by global vertex indices, `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeKey {
    pub lo: u32,
    pub hi: u32,
}

impl EdgeKey {
    pub fn new(a: u32, b: u32) -> Self {
        debug_assert_ne!(a, b);
        EdgeKey {
            lo: a.min(b),
            hi: a.max(b),
        }
    }
}

/// Global vertex pair of local edge `e`, which spans local corners `e` and `(e+1) % 3`.
#[inline]
pub fn local_edge_vertices(tri: [u32; 3], e: usize) -> (u32, u32) {
    (tri[e], tri[(e + 1) % 3])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeUse {
    pub tri: u32,
    pub local_edge: u8,
}

#[derive(Debug, Clone, Default)]
pub struct Adjacency {
    pub edges: HashMap<EdgeKey, Vec<EdgeUse>>,
}

impl Adjacency {
    pub fn uses(&self, key: &EdgeKey) -> &[EdgeUse] {
        self.edges.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Edges with more than two incident triangles.
    pub fn non_manifold(&self) -> impl Iterator<Item = &EdgeKey> {
        self.edges.iter().filter(|(_, u)| u.len() > 2).map(|(k, _)| k)
    }

    pub fn is_non_manifold(&self, key: &EdgeKey) -> bool {
        self.uses(key).len() > 2
    }

    pub fn entry_count(&self) -> usize {
        self.edges.values().map(Vec::len).sum()
    }
}

/// Edge → incident (triangle, local edge) list, in triangle order.
pub fn build_adjacency(mesh: &Mesh) -> Adjacency {
    let mut edges: HashMap<EdgeKey, Vec<EdgeUse>> = HashMap::with_capacity(mesh.triangle_count() * 3 / 2 + 1);
    for (t, tri) in mesh.indices.iter().enumerate() {
        for e in 0..3 {
            let (a, b) = local_edge_vertices(*tri, e);
            edges.entry(EdgeKey::new(a, b)).or_default().push(EdgeUse {
                tri: t as u32,
                local_edge: e as u8,
            });
        }
    }
    Adjacency { edges }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri_mesh(v: [[f32; 3]; 3]) -> Mesh {
        Mesh::new("t", v.iter().map(|&p| Vec3::from(p)).collect(), vec![[0, 1, 2]]).unwrap()
    }

    #[test]
    fn triangle_area_analytic() {
        assert_eq!(tri_mesh([[0., 0., 0.], [1., 0., 0.], [0., 1., 0.]]).triangle_area(0), 0.5);
        assert_eq!(tri_mesh([[0., 0., 0.], [1., 0., 0.], [2., 0., 0.]]).triangle_area(0), 0.0);
        let eq = tri_mesh([[0., 0., 0.], [2., 0., 0.], [1., 3f32.sqrt(), 0.]]);
        assert!((eq.triangle_area(0) - 1.732_050_8).abs() < 1e-6);
    }

    #[test]
    fn quad_fan_area_additive() {
        let m = Mesh::new(
            "quad",
            vec![
                Vec3::new(0., 0., 0.),
                Vec3::new(3., 0., 0.),
                Vec3::new(3., 2., 0.),
                Vec3::new(0., 2., 0.),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        assert!((m.total_area() - 6.0).abs() < 1e-6);
    }

    #[test]
    fn mesh_validation() {
        let v = vec![Vec3::ZERO, Vec3::X, Vec3::Y];
        assert!(Mesh::new("a", v.clone(), vec![]).is_err());
        assert!(Mesh::new("a", v.clone(), vec![[0, 1, 5]]).is_err());
        assert!(Mesh::new("a", v.clone(), vec![[0, 1, 1]]).is_err());
        assert!(Mesh::new("a", vec![Vec3::NAN, Vec3::X, Vec3::Y], vec![[0, 1, 2]]).is_err());
    }

    #[test]
    fn adjacency_counts() {
        let single = tri_mesh([[0., 0., 0.], [1., 0., 0.], [0., 1., 0.]]);
        let adj = build_adjacency(&single);
        assert_eq!(adj.edges.len(), 3);
        assert!(adj.edges.values().all(|u| u.len() == 1));

        let v = vec![Vec3::ZERO, Vec3::X, Vec3::Y, Vec3::ONE, Vec3::Z];
        let two = Mesh::new("two", v.clone(), vec![[0, 1, 2], [2, 1, 3]]).unwrap();
        let adj = build_adjacency(&two);
        assert_eq!(adj.uses(&EdgeKey::new(1, 2)).len(), 2);
        assert_eq!(adj.entry_count(), 6);

        let fin = Mesh::new("fin", v, vec![[0, 1, 2], [2, 1, 3], [1, 2, 4]]).unwrap();
        let adj = build_adjacency(&fin);
        assert_eq!(adj.uses(&EdgeKey::new(1, 2)).len(), 3);
        assert!(adj.is_non_manifold(&EdgeKey::new(1, 2)));
        assert_eq!(adj.non_manifold().count(), 1);
        assert_eq!(adj.entry_count(), 9);
    }

    #[test]
    fn warp_endpoints() {
        assert_eq!(sample_surface_point(0, 0, 0.0, 0.7).bary, [1.0, 0.0, 0.0]);
        assert_eq!(sample_surface_point(0, 0, 1.0, 0.0).bary, [0.0, 1.0, 0.0]);
    }

    #[test]
    fn sampled_mean_is_centroid() {
        use rand::Rng as _;
        let m = tri_mesh([[0., 0., 0.], [2., 0., 0.], [0.5, 1.5, 0.]]);
        let mut rng = crate::rng::stream_rng(7, 0, 0);
        let n = 100_000;
        let mut acc = glam::DVec3::ZERO;
        for _ in 0..n {
            let p = sample_surface_point(0, 0, rng.gen(), rng.gen());
            assert!(p.is_valid());
            acc += m.position(0, p.bary).as_dvec3();
        }
        let mean = (acc / n as f64).as_vec3();
        let [a, b, c] = m.triangle(0);
        let centroid = (a + b + c) / 3.0;
        let min_edge = (b - a).length().min((c - b).length()).min((a - c).length());
        assert!((mean - centroid).length() < 0.01 * min_edge, "{mean} vs {centroid}");
    }

    #[test]
    fn aabb_normalize_clamps() {
        let b = Aabb {
            min: Vec3::ZERO,
            max: Vec3::new(2.0, 4.0, 8.0),
        };
        assert_eq!(b.normalize(Vec3::new(1.0, 1.0, 1.0)), Vec3::new(0.5, 0.25, 0.125));
        assert_eq!(b.normalize(Vec3::splat(-1.0)), Vec3::ZERO);
        assert_eq!(b.normalize(Vec3::splat(100.0)), Vec3::ONE);
    }
}
