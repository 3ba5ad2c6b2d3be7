use glam::Vec3;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::geometry::{Bvh, Ray, Scene};
use crate::model::Query;
use crate::rng::Rng;
use crate::training::TargetOracle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AoParams {
    /// Occlusion rays per training target.
    pub spp: u32,
    /// Occlusion radius in world units; `None` means 20% of the scene diagonal.
    pub max_dist: Option<f32>,
    /// Occlusion rays per pixel of a reference image.
    pub reference_spp: u32,
}

impl Default for AoParams {
    fn default() -> Self {
        AoParams {
            spp: 16,
            max_dist: None,
            reference_spp: 256,
        }
    }
}

impl AoParams {
    pub fn max_dist(&self, scene: &Scene) -> f32 {
        self.max_dist.unwrap_or(0.2 * scene.aabb().diagonal())
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.spp == 0 || self.reference_spp == 0 || self.max_dist.is_some_and(|d| !(d > 0.0)) {
            return Err(crate::Error::InvalidConfig(format!("invalid AO parameters {self:?}")));
        }
        Ok(())
    }
}

/// Cosine-weighted direction about the unit normal `n`.
pub fn cosine_hemisphere(n: Vec3, u1: f32, u2: f32) -> Vec3 {
    let r = u1.sqrt();
    let phi = std::f32::consts::TAU * u2;
    let local = Vec3::new(r * phi.cos(), r * phi.sin(), (1.0 - u1).max(0.0).sqrt());
    let (t, b) = n.any_orthonormal_pair();
    (local.x * t + local.y * b + local.z * n).normalize()
}

/// Fraction of `spp` cosine-distributed rays that escape within `max_dist`
/// (1 = fully open).
pub fn ao_oracle(bvh: &Bvh, position: Vec3, normal: Vec3, spp: u32, max_dist: f32, epsilon: f32, rng: &mut Rng) -> f32 {
    let origin = position + epsilon * normal;
    let mut open = 0u32;
    for _ in 0..spp {
        let dir = cosine_hemisphere(normal, rng.gen(), rng.gen());
        if !bvh.occluded(&Ray::new(origin, dir, epsilon, max_dist)) {
            open += 1;
        }
    }
    open as f32 / spp as f32
}

/// Noisy low-sample AO targets for online training.
#[derive(Debug, Clone, Copy)]
pub struct AoOracle<'a> {
    pub bvh: &'a Bvh,
    pub spp: u32,
    pub max_dist: f32,
    pub epsilon: f32,
}

impl<'a> AoOracle<'a> {
    pub fn new(scene: &Scene, bvh: &'a Bvh, params: &AoParams) -> Self {
        AoOracle {
            bvh,
            spp: params.spp,
            max_dist: params.max_dist(scene),
            epsilon: scene.ray_epsilon(),
        }
    }
}

impl TargetOracle for AoOracle<'_> {
    fn target(&self, q: &Query, rng: &mut Rng) -> f32 {
        ao_oracle(self.bvh, q.position, q.normal, self.spp, self.max_dist, self.epsilon, rng)
    }
}
