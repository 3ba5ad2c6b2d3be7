use super::{ao_oracle, AoParams, Camera, Image};
use crate::geometry::{Bvh, Hit, Scene};
use crate::mesh_colors::FeatureLayout;
use crate::model::{Model, Query};
use crate::rng::{stream_rng, streams};
use crate::{par, Real, Result};

/// Primary hit per pixel, row-major.
pub fn primary_hits(bvh: &Bvh, camera: &Camera) -> Vec<Option<Hit>> {
    let w = camera.width;
    par::map_indexed(camera.pixel_count(), |i| {
        let i = i as u32;
        bvh.intersect(&camera.ray(i % w, i / w))
    })
}

/// Ground-truth AO with `reference_spp` rays per covered pixel; misses are 1.
pub fn render_reference(scene: &Scene, bvh: &Bvh, camera: &Camera, params: &AoParams, seed: u64) -> Image {
    let max_dist = params.max_dist(scene);
    let eps = scene.ray_epsilon();
    let w = camera.width;
    let gray = par::map_indexed(camera.pixel_count(), |i| {
        let ray = camera.ray(i as u32 % w, i as u32 / w);
        match bvh.intersect(&ray) {
            Some(hit) => {
                let mut rng = stream_rng(seed, streams::REFERENCE, i as u64);
                ao_oracle(bvh, hit.position, hit.geo_normal, params.reference_spp, max_dist, eps, &mut rng)
            }
            None => 1.0,
        }
    });
    Image::from_gray(camera.width, camera.height, &gray)
}

/// Network prediction per covered pixel, clamped to `[0,1]`; misses are 1.
pub fn render_inference<T: Real>(scene: &Scene, bvh: &Bvh, camera: &Camera, model: &Model<T>) -> Result<Image> {
    let hits = primary_hits(bvh, camera);
    let w = camera.width;
    let mut queries = Vec::new();
    let mut pixel_of = Vec::new();
    for (i, hit) in hits.iter().enumerate() {
        if let Some(hit) = hit {
            let ray = camera.ray(i as u32 % w, i as u32 / w);
            queries.push(Query::on_surface(scene, hit.point, -ray.dir));
            pixel_of.push(i);
        }
    }
    let pred = model.predict(&queries)?;
    let mut gray = vec![1f32; camera.pixel_count()];
    for (p, &i) in pred.iter().zip(&pixel_of) {
        let v = p.to_f32_lossy();
        gray[i] = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    }
    Ok(Image::from_gray(camera.width, camera.height, &gray))
}

/// Deterministic pseudo-random color for a feature slot.
pub fn slot_color(slot: u32) -> [f32; 3] {
    let h = crate::rng::derive_seed(0x5107, 0, slot as u64);
    let c = |s: u32| 0.15 + 0.85 * ((h >> s) & 0xff) as f32 / 255.0;
    [c(0), c(8), c(16)]
}

/// Nearest feature slot per pixel at the finest level, shown as a flat
/// color; misses are black.
pub fn render_voronoi(bvh: &Bvh, camera: &Camera, layout: &FeatureLayout) -> Image {
    let level = layout.finest_level();
    let pixels = primary_hits(bvh, camera)
        .into_iter()
        .map(|hit| match hit {
            Some(hit) => {
                let r = layout.resolve(level, &hit.point);
                let mut best = 0;
                for k in 1..3 {
                    let (w, s) = (r.weights[k], r.slots[k]);
                    let (bw, bs) = (r.weights[best], r.slots[best]);
                    if w > bw || (w == bw && s < bs) {
                        best = k;
                    }
                }
                slot_color(r.slots[best])
            }
            None => [0.0; 3],
        })
        .collect();
    Image {
        width: camera.width,
        height: camera.height,
        pixels,
    }
}
