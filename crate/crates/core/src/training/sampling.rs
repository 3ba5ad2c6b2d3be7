use rand::Rng as _;

use super::TriangleTrainState;
use crate::geometry::{sample_surface_point, Scene, SurfacePoint};
use crate::rng::Rng;
use crate::{Error, Result};

/// Area-proportional triangle picker over the whole scene.
#[derive(Debug, Clone)]
pub struct AreaSampler {
    cdf: Vec<f64>,
    tris: Vec<(u32, u32)>,
    total: f64,
}

impl AreaSampler {
    pub fn new(scene: &Scene) -> Result<Self> {
        let mut cdf = Vec::new();
        let mut tris = Vec::new();
        let mut total = 0.0f64;
        for (m, mesh) in scene.meshes().iter().enumerate() {
            for t in 0..mesh.triangle_count() {
                let a = mesh.triangle_area(t) as f64;
                if a > 0.0 {
                    total += a;
                    cdf.push(total);
                    tris.push((m as u32, t as u32));
                }
            }
        }
        if tris.is_empty() {
            return Err(Error::InvalidScene("every triangle is degenerate".into()));
        }
        Ok(AreaSampler { cdf, tris, total })
    }

    pub fn total_area(&self) -> f64 {
        self.total
    }

    /// Triangle whose CDF bucket contains `u * total`, `u` in `[0,1)`.
    pub fn pick(&self, u: f64) -> (u32, u32) {
        let x = u * self.total;
        let i = self.cdf.partition_point(|&c| c <= x).min(self.tris.len() - 1);
        self.tris[i]
    }

    pub fn sample(&self, rng: &mut Rng) -> SurfacePoint {
        let (m, t) = self.pick(rng.gen());
        sample_surface_point(m, t, rng.gen(), rng.gen())
    }
}

/// Eq. 4 weight `1 / min(cap, max(1, t))`.
pub fn selection_weight(count: u32, cap: u32) -> f64 {
    1.0 / count.max(1).min(cap.max(1)) as f64
}

/// Normalized selection probabilities for candidates with the given counts.
pub fn selection_probabilities(counts: &[u32], cap: u32) -> Vec<f64> {
    let w: Vec<f64> = counts.iter().map(|&c| selection_weight(c, cap)).collect();
    let sum: f64 = w.iter().sum();
    w.into_iter().map(|x| x / sum).collect()
}

/// Picks one of `candidates` with probability proportional to its weight.
pub fn select_among(candidates: &[SurfacePoint], state: &TriangleTrainState, cap: u32, rng: &mut Rng) -> SurfacePoint {
    debug_assert!(!candidates.is_empty());
    let w: Vec<f64> = candidates
        .iter()
        .map(|p| selection_weight(state.count(p.mesh_id, p.tri_id), cap))
        .collect();
    let mut x = rng.gen::<f64>() * w.iter().sum::<f64>();
    for (p, wi) in candidates.iter().zip(&w) {
        if x < *wi {
            return *p;
        }
        x -= wi;
    }
    *candidates.last().unwrap()
}

/// Draws `m` area-uniform candidates and resamples one of them.
pub fn select_sample(state: &TriangleTrainState, sampler: &AreaSampler, m: usize, cap: u32, rng: &mut Rng) -> SurfacePoint {
    let candidates: Vec<SurfacePoint> = (0..m.max(1)).map(|_| sampler.sample(rng)).collect();
    select_among(&candidates, state, cap, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rng::stream_rng;

    #[test]
    fn weights() {
        assert_eq!(selection_weight(0, 512), 1.0);
        assert_eq!(selection_weight(10_000, 512), 1.0 / 512.0);
        let p = selection_probabilities(&[1, 512], 512);
        assert!((p[0] - 512.0 / 513.0).abs() < 1e-12);
        assert!((p[1] - 1.0 / 513.0).abs() < 1e-12);
        let p = selection_probabilities(&[7; 4], 512);
        assert!(p.iter().all(|&x| (x - 0.25).abs() < 1e-12));
    }

    #[test]
    fn area_sampler_skips_degenerate() {
        let scene = fixtures::quad(1);
        let s = AreaSampler::new(&scene).unwrap();
        assert!((s.total_area() - 1.0).abs() < 1e-6);
        assert_eq!(s.pick(0.0), (0, 0));
        assert_eq!(s.pick(0.999), (0, 1));
        let mut rng = stream_rng(1, 0, 0);
        assert!(s.sample(&mut rng).is_valid());
    }
}
