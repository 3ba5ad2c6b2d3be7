//! Mesh-colors lattice: a resolution-`R` virtual tessellation of every
//! triangle with `(R+1)(R+2)/2` sample points, and the machinery that maps a
//! barycentric query onto the three lattice points of its micro-triangle.
//!
//! A lattice point `(i, j)` sits at barycentric position `(k, i, j) / R`
//! with `k = R - i - j`, so `i` runs toward corner 1 and `j` toward corner 2.

mod layout;

use crate::geometry::Scene;
use crate::{Error, Result};

pub use layout::{
    build_layout, level_resolutions, FeatureLayout, LayoutStats, LevelLayout, LevelSpec, LevelStats, LookupResult, MeshLayout,
    MeshStats, ResolutionConfig, StorageMode,
};

pub const MAX_RESOLUTION: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint {
    pub i: u32,
    pub j: u32,
}

impl LatticePoint {
    pub const fn new(i: u32, j: u32) -> Self {
        LatticePoint { i, j }
    }

    pub fn k(&self, r: u32) -> u32 {
        r - self.i - self.j
    }

    pub fn is_valid(&self, r: u32) -> bool {
        self.i + self.j <= r
    }

    /// Barycentric position `(k, i, j) / R`.
    pub fn bary(&self, r: u32) -> [f64; 3] {
        let rf = r as f64;
        [self.k(r) as f64 / rf, self.i as f64 / rf, self.j as f64 / rf]
    }

    /// Position in the row-major enumeration of all lattice points of a triangle.
    pub fn ordinal(&self, r: u32) -> u32 {
        let i = self.i;
        i * (r + 1) - i * (i.saturating_sub(1)) / 2 + self.j
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeClass {
    /// Triangle corner 0, 1 or 2.
    Vertex(u8),
    /// Local edge `e` spans corners `e` and `(e+1) % 3`; `step` in `1..R`
    /// counts from the edge's lower-numbered corner.
    Edge { edge: u8, step: u32 },
    /// Ordinal among the `(R-1)(R-2)/2` interior points.
    Interior(u32),
}

pub fn feature_count_per_triangle(r: u32) -> Result<u32> {
    if r < 1 {
        return Err(Error::InvalidConfig(format!("mesh-colors resolution must be >= 1, got {r}")));
    }
    Ok((r + 1) * (r + 2) / 2)
}

pub fn interior_count(r: u32) -> u32 {
    if r < 3 {
        0
    } else {
        (r - 1) * (r - 2) / 2
    }
}

/// `round(clamp(32 A^2 R_scale, 1, 32))`.
pub fn adaptive_resolution(normalized_area: f32, r_scale: f32) -> u32 {
    let r = (MAX_RESOLUTION as f32 * normalized_area * normalized_area * r_scale).clamp(1.0, MAX_RESOLUTION as f32);
    r.round() as u32
}

pub fn classify(p: LatticePoint, r: u32) -> LatticeClass {
    debug_assert!(p.is_valid(r));
    let (i, j) = (p.i, p.j);
    let k = r - i - j;
    let zeros = (i == 0) as u8 + (j == 0) as u8 + (k == 0) as u8;
    if zeros >= 2 {
        return LatticeClass::Vertex(if k == r {
            0
        } else if i == r {
            1
        } else {
            2
        });
    }
    if j == 0 {
        LatticeClass::Edge { edge: 0, step: i }
    } else if k == 0 {
        LatticeClass::Edge { edge: 1, step: j }
    } else if i == 0 {
        LatticeClass::Edge { edge: 2, step: j }
    } else {
        // Interior rows for i' < i hold R-1-i' points each.
        let before = (i - 1) * (r - 1) - (i - 1) * i / 2;
        LatticeClass::Interior(before + j - 1)
    }
}

/// Finds the micro-triangle containing `bary` at resolution `r` and the
/// barycentric weights of the query inside it.
pub fn locate(bary: [f32; 3], r: u32) -> ([LatticePoint; 3], [f32; 3]) {
    let rf = r as f64;
    let mut u = (bary[1] as f64).max(0.0) * rf;
    let mut v = (bary[2] as f64).max(0.0) * rf;
    if u + v > rf {
        let s = rf / (u + v);
        u *= s;
        v *= s;
    }
    let mut iu = (u.floor() as u32).min(r);
    let mut iv = (v.floor() as u32).min(r);
    let mut fu = u - iu as f64;
    let mut fv = v - iv as f64;
    // Exactly on a lattice point of the far edge: step back into the last
    // valid micro-triangle with a fractional part of one.
    if iu + iv >= r {
        if iu > 0 {
            iu -= 1;
            fu += 1.0;
        } else {
            iv -= 1;
            fv += 1.0;
        }
    }
    // On the far edge rounding can leave fu + fv a hair above one with no
    // upper micro-triangle to fall into.
    if iu + iv + 1 == r && fu + fv > 1.0 {
        fu = fu.min(1.0);
        fv = (1.0 - fu).min(fv);
    }
    if fu + fv <= 1.0 || iu + iv + 1 == r {
        (
            [
                LatticePoint::new(iu, iv),
                LatticePoint::new(iu + 1, iv),
                LatticePoint::new(iu, iv + 1),
            ],
            [(1.0 - fu - fv).max(0.0) as f32, fu as f32, fv as f32],
        )
    } else {
        (
            [
                LatticePoint::new(iu + 1, iv + 1),
                LatticePoint::new(iu, iv + 1),
                LatticePoint::new(iu + 1, iv),
            ],
            [(fu + fv - 1.0) as f32, (1.0 - fu) as f32, (1.0 - fv) as f32],
        )
    }
}

/// Mean triangle area per mesh divided by the largest per-mesh mean.
pub fn mesh_mean_normalized_areas(scene: &Scene) -> Result<Vec<f32>> {
    let means: Vec<f64> = scene
        .meshes()
        .iter()
        .map(|m| m.mean_triangle_area() as f64)
        .collect();
    let max = means.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(Error::InvalidScene("every triangle in the scene is degenerate".into()));
    }
    Ok(means.iter().map(|&m| (m / max) as f32).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Mesh;
    use glam::Vec3;

    #[test]
    fn per_triangle_counts() {
        assert_eq!(feature_count_per_triangle(1).unwrap(), 3);
        assert_eq!(feature_count_per_triangle(4).unwrap(), 15);
        assert_eq!(feature_count_per_triangle(32).unwrap(), 561);
        assert!(feature_count_per_triangle(0).is_err());
    }

    #[test]
    fn adaptive_resolution_clamps_and_rounds() {
        assert_eq!(adaptive_resolution(1.0, 1.0), 32);
        assert_eq!(adaptive_resolution(0.0, 5.0), 1);
        assert_eq!(adaptive_resolution(0.25, 2.0), 4);
        assert_eq!(adaptive_resolution(1.0, 100.0), 32);
    }

    #[test]
    fn classification_examples() {
        for r in 1..6 {
            assert_eq!(classify(LatticePoint::new(0, 0), r), LatticeClass::Vertex(0));
            assert_eq!(classify(LatticePoint::new(r, 0), r), LatticeClass::Vertex(1));
            assert_eq!(classify(LatticePoint::new(0, r), r), LatticeClass::Vertex(2));
        }
        assert_eq!(classify(LatticePoint::new(1, 0), 2), LatticeClass::Edge { edge: 0, step: 1 });
        assert_eq!(classify(LatticePoint::new(1, 1), 3), LatticeClass::Interior(0));
        assert_eq!(classify(LatticePoint::new(1, 1), 2), LatticeClass::Edge { edge: 1, step: 1 });
        assert_eq!(classify(LatticePoint::new(0, 2), 3), LatticeClass::Edge { edge: 2, step: 2 });
    }

    #[test]
    fn class_counts_and_interior_ordinals_are_dense() {
        for r in 1..=12 {
            let mut vertices = 0;
            let mut edges = [0u32; 3];
            let mut interior = Vec::new();
            let mut ordinals = Vec::new();
            for i in 0..=r {
                for j in 0..=r - i {
                    let p = LatticePoint::new(i, j);
                    ordinals.push(p.ordinal(r));
                    match classify(p, r) {
                        LatticeClass::Vertex(_) => vertices += 1,
                        LatticeClass::Edge { edge, step } => {
                            assert!((1..r).contains(&step));
                            edges[edge as usize] += 1;
                        }
                        LatticeClass::Interior(o) => interior.push(o),
                    }
                }
            }
            assert_eq!(vertices, 3);
            assert_eq!(edges, [r - 1; 3]);
            interior.sort_unstable();
            assert_eq!(interior, (0..interior_count(r)).collect::<Vec<_>>());
            assert_eq!(ordinals, (0..feature_count_per_triangle(r).unwrap()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn locate_examples() {
        for r in 1..8 {
            let (pts, w) = locate([1.0, 0.0, 0.0], r);
            assert_eq!(pts[0], LatticePoint::new(0, 0));
            assert_eq!(w, [1.0, 0.0, 0.0]);
        }
        let third = 1.0 / 3.0;
        let (pts, w) = locate([third, third, third], 1);
        let mut got: Vec<_> = pts.iter().zip(w).map(|(p, w)| (p.i, p.j, w)).collect();
        got.sort_by_key(|g| (g.0, g.1));
        for (g, want) in got.iter().zip([(0, 0), (0, 1), (1, 0)]) {
            assert_eq!((g.0, g.1), want);
            assert!((g.2 - third).abs() < 1e-6);
        }
        let (pts, w) = locate([0.25, 0.5, 0.25], 2);
        assert_eq!(pts, [LatticePoint::new(1, 0), LatticePoint::new(2, 0), LatticePoint::new(1, 1)]);
        assert_eq!(w, [0.5, 0.0, 0.5]);
    }

    #[test]
    fn locate_far_corners_stay_in_range() {
        for r in 1..10 {
            for bary in [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.5, 0.5]] {
                let (pts, w) = locate(bary, r);
                assert!(pts.iter().all(|p| p.is_valid(r)), "{bary:?} r={r}: {pts:?}");
                assert!(((w.iter().sum::<f32>()) - 1.0).abs() < 1e-6);
            }
        }
        let (pts, w) = locate([0.0, 1.0, 0.0], 4);
        let k = w.iter().position(|&x| x == 1.0).unwrap();
        assert_eq!(pts[k], LatticePoint::new(4, 0));
    }

    #[test]
    fn far_edge_rounding_stays_in_range() {
        for r in 1..=32 {
            for n in 0..2000 {
                let t = n as f32 / 1999.0 + 1e-7 * (n % 3) as f32;
                let (pts, w) = locate([0.0, 1.0 - t, t], r);
                assert!(pts.iter().all(|p| p.is_valid(r)), "t={t} r={r}: {pts:?}");
                assert!(w.iter().all(|&x| x >= 0.0));
            }
        }
    }

    #[test]
    fn normalized_areas() {
        let quad = |s: f32| {
            Mesh::new(
                "q",
                vec![Vec3::ZERO, Vec3::X * s, Vec3::new(s, s, 0.0), Vec3::Y * s],
                vec![[0, 1, 2], [0, 2, 3]],
            )
            .unwrap()
        };
        let single = Scene::new(vec![quad(1.0)]).unwrap();
        assert_eq!(mesh_mean_normalized_areas(&single).unwrap(), vec![1.0]);

        // Mean areas 4 and 1.
        let two = Scene::new(vec![quad(8f32.sqrt()), quad(2f32.sqrt())]).unwrap();
        let a = mesh_mean_normalized_areas(&two).unwrap();
        assert!((a[0] - 1.0).abs() < 1e-6 && (a[1] - 0.25).abs() < 1e-6, "{a:?}");

        let flat = Mesh::new("flat", vec![Vec3::ZERO, Vec3::X, Vec3::X * 2.0], vec![[0, 1, 2]]).unwrap();
        let mixed = Scene::new(vec![quad(1.0), flat.clone()]).unwrap();
        let a = mesh_mean_normalized_areas(&mixed).unwrap();
        assert_eq!(a[1], 0.0);
        assert_eq!(adaptive_resolution(a[1], 3.0), 1);

        let degenerate = Scene::new(vec![flat]).unwrap();
        assert!(mesh_mean_normalized_areas(&degenerate).is_err());
    }
}
