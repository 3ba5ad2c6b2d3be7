//! Global feature-slot layout across levels and meshes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{
    adaptive_resolution, classify, feature_count_per_triangle, interior_count, locate, mesh_mean_normalized_areas,
    LatticeClass, LatticePoint, MAX_RESOLUTION,
};
use crate::geometry::{build_adjacency, local_edge_vertices, EdgeKey, Mesh, Scene, SurfacePoint};
use crate::{Error, Result};

pub const MAX_LEVELS: usize = 4;
pub const MAX_FEATURES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelSpec {
    Fixed(u32),
    /// `R_scale` for the area-driven resolution rule.
    Adaptive(f32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionConfig {
    pub levels: Vec<LevelSpec>,
    pub features_per_level: usize,
}

impl Default for ResolutionConfig {
    /// One adaptive level stacked with a vertex-only level, two features each.
    fn default() -> Self {
        ResolutionConfig {
            levels: vec![LevelSpec::Adaptive(1.0), LevelSpec::Fixed(1)],
            features_per_level: 2,
        }
    }
}

impl ResolutionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.levels.is_empty() || self.levels.len() > MAX_LEVELS {
            return bad(format!("level count must be in 1..={MAX_LEVELS}, got {}", self.levels.len()));
        }
        if self.features_per_level == 0 || self.features_per_level > MAX_FEATURES {
            return bad(format!(
                "features per level must be in 1..={MAX_FEATURES}, got {}",
                self.features_per_level
            ));
        }
        for l in &self.levels {
            match *l {
                LevelSpec::Fixed(r) if !(1..=MAX_RESOLUTION).contains(&r) => {
                    return bad(format!("fixed resolution must be in 1..={MAX_RESOLUTION}, got {r}"))
                }
                LevelSpec::Adaptive(s) if !(s > 0.0 && s.is_finite()) => {
                    return bad(format!("R_scale must be positive, got {s}"))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StorageMode {
    /// Vertex and edge lattice points are deduplicated between neighbours.
    #[default]
    Shared,
    /// Every triangle owns `(R+1)(R+2)/2` consecutive slots.
    Flat,
}

/// Compiled per-triangle slot table for shared storage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct TriSlots {
    vertex: [u32; 3],
    /// First slot of each local edge's `R-1` steps in canonical order.
    edge_base: [u32; 3],
    /// Local edge runs against the canonical low→high vertex direction.
    edge_reversed: [bool; 3],
    interior_base: u32,
}

#[derive(Debug, Clone, PartialEq)]
struct SharedTables {
    /// Mesh vertex → slot, `u32::MAX` for vertices no triangle uses.
    vertex_slots: Vec<u32>,
    /// Canonical edge → first slot of its steps.
    edge_slots: HashMap<EdgeKey, u32>,
    /// Private edge slots for incidences beyond the second on non-manifold edges.
    private_edges: usize,
    tris: Vec<TriSlots>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshLayout {
    pub resolution: u32,
    /// Global index of the mesh's first slot (the instance offset).
    pub offset: u32,
    pub slot_count: u32,
    pub triangle_count: u32,
    shared: Option<SharedTables>,
}

impl MeshLayout {
    pub fn used_vertices(&self) -> Option<usize> {
        self.shared
            .as_ref()
            .map(|s| s.vertex_slots.iter().filter(|&&v| v != u32::MAX).count())
    }

    pub fn shared_edges(&self) -> Option<usize> {
        self.shared.as_ref().map(|s| s.edge_slots.len())
    }

    pub fn private_edges(&self) -> Option<usize> {
        self.shared.as_ref().map(|s| s.private_edges)
    }

    /// Global slot of lattice point `p` of triangle `tri`.
    pub fn slot(&self, tri: u32, p: LatticePoint) -> u32 {
        let r = self.resolution;
        match &self.shared {
            None => self.offset + tri * feature_count_per_triangle(r).expect("R >= 1") + p.ordinal(r),
            Some(tables) => {
                let ts = &tables.tris[tri as usize];
                match classify(p, r) {
                    LatticeClass::Vertex(c) => ts.vertex[c as usize],
                    LatticeClass::Edge { edge, step } => {
                        let e = edge as usize;
                        let s = if ts.edge_reversed[e] { r - step } else { step };
                        ts.edge_base[e] + s - 1
                    }
                    LatticeClass::Interior(o) => ts.interior_base + o,
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelLayout {
    pub spec: LevelSpec,
    pub offset: u32,
    pub slot_count: u32,
    pub meshes: Vec<MeshLayout>,
}

impl LevelLayout {
    pub fn max_resolution(&self) -> u32 {
        self.meshes.iter().map(|m| m.resolution).max().unwrap_or(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureLayout {
    pub mode: StorageMode,
    pub features_per_level: usize,
    pub levels: Vec<LevelLayout>,
    pub total_slots: u32,
}

/// Three slots and their interpolation weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LookupResult {
    pub slots: [u32; 3],
    pub weights: [f32; 3],
}

impl FeatureLayout {
    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Width of the encoded vector: one `L`-vector per level.
    pub fn encoding_width(&self) -> usize {
        self.levels.len() * self.features_per_level
    }

    pub fn level_of_slot(&self, slot: u32) -> usize {
        self.levels
            .iter()
            .position(|l| slot < l.offset + l.slot_count)
            .expect("slot in range")
    }

    /// Level whose meshes carry the most slots; used for visualization.
    pub fn finest_level(&self) -> usize {
        let mut best = 0;
        for (i, l) in self.levels.iter().enumerate() {
            if l.slot_count > self.levels[best].slot_count {
                best = i;
            }
        }
        best
    }

    pub fn resolve(&self, level: usize, point: &SurfacePoint) -> LookupResult {
        let mesh = &self.levels[level].meshes[point.mesh_id as usize];
        let (pts, weights) = locate(point.bary, mesh.resolution);
        LookupResult {
            slots: pts.map(|p| mesh.slot(point.tri_id, p)),
            weights,
        }
    }

    pub fn stats(&self) -> LayoutStats {
        let l = self.features_per_level;
        let levels = self
            .levels
            .iter()
            .map(|lv| LevelStats {
                spec: lv.spec,
                slots: lv.slot_count,
                bytes: lv.slot_count as u64 * 4 * l as u64,
                meshes: lv
                    .meshes
                    .iter()
                    .map(|m| MeshStats {
                        resolution: m.resolution,
                        triangles: m.triangle_count,
                        slots: m.slot_count,
                        bytes: m.slot_count as u64 * 4 * l as u64,
                    })
                    .collect(),
            })
            .collect();
        let bytes = self.total_slots as u64 * 4 * l as u64;
        LayoutStats {
            mode: self.mode,
            features_per_level: l,
            total_slots: self.total_slots,
            bytes,
            megabytes: bytes as f64 / (1024.0 * 1024.0),
            levels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    pub resolution: u32,
    pub triangles: u32,
    pub slots: u32,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub spec: LevelSpec,
    pub slots: u32,
    pub bytes: u64,
    pub meshes: Vec<MeshStats>,
}

/// Memory accounting at 4 bytes per feature component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutStats {
    pub mode: StorageMode,
    pub features_per_level: usize,
    pub total_slots: u32,
    pub bytes: u64,
    pub megabytes: f64,
    pub levels: Vec<LevelStats>,
}

/// Per-level, per-mesh resolutions for `config` on `scene`.
pub fn level_resolutions(scene: &Scene, config: &ResolutionConfig) -> Result<Vec<Vec<u32>>> {
    let needs_areas = config.levels.iter().any(|l| matches!(l, LevelSpec::Adaptive(_)));
    let areas = if needs_areas {
        mesh_mean_normalized_areas(scene)?
    } else {
        Vec::new()
    };
    Ok(config
        .levels
        .iter()
        .map(|l| match *l {
            LevelSpec::Fixed(r) => vec![r; scene.meshes().len()],
            LevelSpec::Adaptive(s) => areas.iter().map(|&a| adaptive_resolution(a, s)).collect(),
        })
        .collect())
}

pub fn build_layout(scene: &Scene, config: &ResolutionConfig, mode: StorageMode) -> Result<FeatureLayout> {
    config.validate()?;
    let resolutions = level_resolutions(scene, config)?;
    let mut next: u64 = 0;
    let mut levels = Vec::with_capacity(config.levels.len());
    for (spec, rs) in config.levels.iter().zip(resolutions) {
        let level_offset = next;
        let mut meshes = Vec::with_capacity(rs.len());
        for (mesh, r) in scene.meshes().iter().zip(rs) {
            let ml = match mode {
                StorageMode::Flat => flat_mesh(mesh, r, checked(next)?),
                StorageMode::Shared => shared_mesh(mesh, r, checked(next)?),
            };
            next += ml.slot_count as u64;
            meshes.push(ml);
        }
        levels.push(LevelLayout {
            spec: *spec,
            offset: checked(level_offset)?,
            slot_count: checked(next - level_offset)?,
            meshes,
        });
    }
    Ok(FeatureLayout {
        mode,
        features_per_level: config.features_per_level,
        levels,
        total_slots: checked(next)?,
    })
}

fn checked(n: u64) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::InvalidConfig(format!("layout needs {n} slots, more than u32 can index")))
}

fn flat_mesh(mesh: &Mesh, r: u32, offset: u32) -> MeshLayout {
    let per_tri = feature_count_per_triangle(r).expect("validated");
    MeshLayout {
        resolution: r,
        offset,
        slot_count: per_tri * mesh.triangle_count() as u32,
        triangle_count: mesh.triangle_count() as u32,
        shared: None,
    }
}

fn shared_mesh(mesh: &Mesh, r: u32, offset: u32) -> MeshLayout {
    let adjacency = build_adjacency(mesh);
    let mut next = offset;

    let mut vertex_slots = vec![u32::MAX; mesh.vertices.len()];
    for tri in &mesh.indices {
        for &v in tri {
            if vertex_slots[v as usize] == u32::MAX {
                vertex_slots[v as usize] = next;
                next += 1;
            }
        }
    }

    let steps = r - 1;
    let mut edge_slots: HashMap<EdgeKey, u32> = HashMap::new();
    let mut private_edges = 0;
    let mut tris = Vec::with_capacity(mesh.triangle_count());
    let mut edge_base_of = Vec::with_capacity(mesh.triangle_count());
    for (t, tri) in mesh.indices.iter().enumerate() {
        let mut base = [0u32; 3];
        let mut reversed = [false; 3];
        for e in 0..3 {
            let (a, b) = local_edge_vertices(*tri, e);
            let key = EdgeKey::new(a, b);
            // Steps count from the lower-numbered local corner; for edge 2
            // (corners 2,0) that is corner 0, i.e. vertex `b`.
            let (from, to) = if e == 2 { (b, a) } else { (a, b) };
            reversed[e] = from > to;
            let rank = adjacency
                .uses(&key)
                .iter()
                .position(|u| u.tri == t as u32 && u.local_edge == e as u8)
                .expect("adjacency covers every edge");
            base[e] = if rank < 2 {
                *edge_slots.entry(key).or_insert_with(|| {
                    let b = next;
                    next += steps;
                    b
                })
            } else {
                private_edges += 1;
                let b = next;
                next += steps;
                b
            };
        }
        edge_base_of.push((base, reversed));
    }

    let per_interior = interior_count(r);
    for (t, tri) in mesh.indices.iter().enumerate() {
        let (edge_base, edge_reversed) = edge_base_of[t];
        tris.push(TriSlots {
            vertex: tri.map(|v| vertex_slots[v as usize]),
            edge_base,
            edge_reversed,
            interior_base: next,
        });
        next += per_interior;
    }

    MeshLayout {
        resolution: r,
        offset,
        slot_count: next - offset,
        triangle_count: mesh.triangle_count() as u32,
        shared: Some(SharedTables {
            vertex_slots,
            edge_slots,
            private_edges,
            tris,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use glam::Vec3;

    fn two_triangles() -> Scene {
        let m = Mesh::new(
            "pair",
            vec![Vec3::ZERO, Vec3::X, Vec3::Y, Vec3::new(1.0, 1.0, 0.0)],
            vec![[0, 1, 2], [2, 1, 3]],
        )
        .unwrap();
        Scene::new(vec![m]).unwrap()
    }

    fn fixed(r: u32) -> ResolutionConfig {
        ResolutionConfig {
            levels: vec![LevelSpec::Fixed(r)],
            features_per_level: 2,
        }
    }

    #[test]
    fn slot_counts() {
        let s = two_triangles();
        assert_eq!(build_layout(&s, &fixed(2), StorageMode::Shared).unwrap().total_slots, 9);
        assert_eq!(build_layout(&s, &fixed(2), StorageMode::Flat).unwrap().total_slots, 12);

        let single = Scene::new(vec![Mesh::new("t", vec![Vec3::ZERO, Vec3::X, Vec3::Y], vec![[0, 1, 2]]).unwrap()]).unwrap();
        assert_eq!(build_layout(&single, &fixed(3), StorageMode::Shared).unwrap().total_slots, 10);
    }

    #[test]
    fn shared_edge_points_agree() {
        let s = two_triangles();
        for r in 1..=6 {
            let layout = build_layout(&s, &fixed(r), StorageMode::Shared).unwrap();
            // Shared edge is vertices 1-2: local edge 1 of tri 0 (1→2), local edge 0 of tri 1 (2→1).
            for t in 0..=r {
                let a = SurfacePoint::new(0, 0, [0.0, 1.0 - t as f32 / r as f32, t as f32 / r as f32]);
                let b = SurfacePoint::new(0, 1, [t as f32 / r as f32, 1.0 - t as f32 / r as f32, 0.0]);
                let la = layout.resolve(0, &a);
                let lb = layout.resolve(0, &b);
                let ka = la.weights.iter().position(|&w| w > 0.5).unwrap();
                let kb = lb.weights.iter().position(|&w| w > 0.5).unwrap();
                assert_eq!(la.slots[ka], lb.slots[kb], "r={r} t={t}");
            }
        }
    }

    #[test]
    fn levels_are_disjoint_ranges() {
        let s = two_triangles();
        let cfg = ResolutionConfig {
            levels: vec![LevelSpec::Fixed(3), LevelSpec::Fixed(1)],
            features_per_level: 2,
        };
        let layout = build_layout(&s, &cfg, StorageMode::Shared).unwrap();
        assert_eq!(layout.levels[0].offset, 0);
        assert_eq!(layout.levels[1].offset, layout.levels[0].slot_count);
        assert_eq!(layout.total_slots, layout.levels[0].slot_count + 4);
        assert_eq!(layout.encoding_width(), 4);
        let p = SurfacePoint::new(0, 1, [0.2, 0.3, 0.5]);
        assert!(layout.resolve(1, &p).slots.iter().all(|&s| s >= layout.levels[1].offset));
    }

    #[test]
    fn config_validation() {
        assert!(ResolutionConfig::default().validate().is_ok());
        let mut c = fixed(33);
        assert!(c.validate().is_err());
        c.levels = vec![LevelSpec::Adaptive(0.0)];
        assert!(c.validate().is_err());
        c.levels = vec![LevelSpec::Fixed(1); 5];
        assert!(c.validate().is_err());
        c.levels = vec![LevelSpec::Fixed(1)];
        c.features_per_level = 9;
        assert!(c.validate().is_err());
    }

    #[test]
    fn stats_bytes() {
        let s = two_triangles();
        let layout = build_layout(&s, &fixed(4), StorageMode::Flat).unwrap();
        let st = layout.stats();
        assert_eq!(st.total_slots, 30);
        assert_eq!(st.bytes, 30 * 2 * 4);
        let json = serde_json::to_string(&st).unwrap();
        assert!(json.contains("\"flat\""));
    }
}
