//! Multi-resolution hash-grid encoding over scene-normalized positions.

use glam::Vec3;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::{stream_rng, streams};
use crate::{Error, Real, Result};

pub const HASH_PRIMES: [u32; 3] = [1, 2_654_435_761, 805_459_861];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HashGridConfig {
    pub levels: usize,
    pub features_per_level: usize,
    pub base_resolution: u32,
    pub growth_factor: f32,
    /// Entries per hashed level.
    pub table_size: u32,
}

impl Default for HashGridConfig {
    fn default() -> Self {
        HashGridConfig {
            levels: 8,
            features_per_level: 4,
            base_resolution: 2,
            growth_factor: 2.0,
            table_size: 1 << 14,
        }
    }
}

impl HashGridConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.levels == 0 || self.features_per_level == 0 {
            return bad("hash grid needs at least one level and one feature".into());
        }
        if self.base_resolution == 0 || !(self.growth_factor >= 1.0) {
            return bad(format!(
                "hash grid base resolution {} / growth {} invalid",
                self.base_resolution, self.growth_factor
            ));
        }
        if self.table_size == 0 {
            return bad("hash table size must be positive".into());
        }
        Ok(())
    }

    /// `N_l = floor(base * growth^l)`.
    pub fn resolution(&self, level: usize) -> u32 {
        (self.base_resolution as f64 * (self.growth_factor as f64).powi(level as i32)).floor() as u32
    }

    /// Entries stored for `level`: the dense lattice when it fits, else `T`.
    pub fn level_size(&self, level: usize) -> u32 {
        let n = self.resolution(level) as u64 + 1;
        let dense = n * n * n;
        if dense <= self.table_size as u64 {
            dense as u32
        } else {
            self.table_size
        }
    }

    pub fn param_count(&self) -> usize {
        (0..self.levels).map(|l| self.level_size(l) as usize).sum::<usize>() * self.features_per_level
    }

    pub fn encoding_width(&self) -> usize {
        self.levels * self.features_per_level
    }
}

/// Entry index of lattice vertex `cell` on a level of resolution `n`.
#[inline]
pub fn hash_index(cell: [u32; 3], n: u32, table_size: u32) -> u32 {
    let side = n as u64 + 1;
    if side * side * side <= table_size as u64 {
        (cell[0] as u64 + cell[1] as u64 * side + cell[2] as u64 * side * side) as u32
    } else {
        let h = cell[0].wrapping_mul(HASH_PRIMES[0])
            ^ cell[1].wrapping_mul(HASH_PRIMES[1])
            ^ cell[2].wrapping_mul(HASH_PRIMES[2]);
        h % table_size
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HashGrid<T> {
    pub config: HashGridConfig,
    resolutions: Vec<u32>,
    /// First entry of each level.
    offsets: Vec<usize>,
    pub values: Vec<T>,
    pub adam_m: Vec<T>,
    pub adam_v: Vec<T>,
}

/// The 8 corner entries and trilinear weights of one level.
struct Corners {
    entries: [usize; 8],
    weights: [f32; 8],
}

impl<T: Real> HashGrid<T> {
    /// Entries initialized uniform in `[-1e-4, 1e-4]`.
    pub fn new(config: HashGridConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let resolutions: Vec<u32> = (0..config.levels).map(|l| config.resolution(l)).collect();
        let mut offsets = Vec::with_capacity(config.levels);
        let mut total = 0usize;
        for l in 0..config.levels {
            offsets.push(total);
            total += config.level_size(l) as usize;
        }
        let n = total * config.features_per_level;
        let mut rng = stream_rng(seed, streams::HASH_INIT, 0);
        let values = (0..n).map(|_| T::from_f64_lossy(rng.gen_range(-1e-4..=1e-4))).collect();
        Ok(HashGrid {
            config,
            resolutions,
            offsets,
            values,
            adam_m: vec![T::zero(); n],
            adam_v: vec![T::zero(); n],
        })
    }

    pub fn param_count(&self) -> usize {
        self.values.len()
    }

    pub fn encoding_width(&self) -> usize {
        self.config.encoding_width()
    }

    pub fn resolutions(&self) -> &[u32] {
        &self.resolutions
    }

    fn corners(&self, level: usize, pos: Vec3) -> Corners {
        let n = self.resolutions[level];
        let p = pos.clamp(Vec3::ZERO, Vec3::ONE) * n as f32;
        let mut base = [0u32; 3];
        let mut frac = [0f32; 3];
        for a in 0..3 {
            let c = (p[a].floor() as u32).min(n.saturating_sub(1));
            base[a] = c;
            frac[a] = (p[a] - c as f32).clamp(0.0, 1.0);
        }
        let mut entries = [0usize; 8];
        let mut weights = [0f32; 8];
        for c in 0..8 {
            let mut cell = base;
            let mut w = 1.0;
            for a in 0..3 {
                if c >> a & 1 == 1 {
                    cell[a] += 1;
                    w *= frac[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            entries[c] = self.offsets[level] + hash_index(cell, n, self.config.table_size) as usize;
            weights[c] = w;
        }
        Corners { entries, weights }
    }

    /// Trilinear weights of the 8 corners at `pos` on `level`.
    pub fn trilinear_weights(&self, level: usize, pos: Vec3) -> [f32; 8] {
        self.corners(level, pos).weights
    }

    /// `(entry, weight)` of the 8 corners at `pos` on `level`.
    pub fn level_corners(&self, level: usize, pos: Vec3) -> impl Iterator<Item = (usize, f32)> {
        let c = self.corners(level, pos);
        c.entries.into_iter().zip(c.weights)
    }

    /// `pos` must already be normalized to the unit cube.
    pub fn encode(&self, pos: Vec3, out: &mut [T]) {
        let f = self.config.features_per_level;
        debug_assert_eq!(out.len(), self.encoding_width());
        for (level, seg) in out.chunks_exact_mut(f).enumerate() {
            let c = self.corners(level, pos);
            seg.iter_mut().for_each(|v| *v = T::zero());
            for (&e, &w) in c.entries.iter().zip(&c.weights) {
                let w = T::widen_f32(w);
                for (o, &z) in seg.iter_mut().zip(&self.values[e * f..(e + 1) * f]) {
                    *o += w * z;
                }
            }
        }
    }

    /// Accumulates entry gradients into the dense buffer `grads`.
    pub fn backward(&self, pos: Vec3, dl_dy: &[T], grads: &mut [T]) {
        let f = self.config.features_per_level;
        debug_assert_eq!(dl_dy.len(), self.encoding_width());
        debug_assert_eq!(grads.len(), self.values.len());
        for (level, seg) in dl_dy.chunks_exact(f).enumerate() {
            let c = self.corners(level, pos);
            for (&e, &w) in c.entries.iter().zip(&c.weights) {
                if w == 0.0 {
                    continue;
                }
                let w = T::widen_f32(w);
                for (g, &d) in grads[e * f..(e + 1) * f].iter_mut().zip(seg) {
                    *g += w * d;
                }
            }
        }
    }

    pub fn cast<U: Real>(&self) -> HashGrid<U> {
        let c = |v: &[T]| v.iter().map(|x| U::from_f64_lossy(x.to_f64_lossless())).collect();
        HashGrid {
            config: self.config.clone(),
            resolutions: self.resolutions.clone(),
            offsets: self.offsets.clone(),
            values: c(&self.values),
            adam_m: c(&self.adam_m),
            adam_v: c(&self.adam_v),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_and_hashed_indices() {
        assert_eq!(hash_index([1, 2, 0], 2, 1 << 14), 7);
        assert_eq!(hash_index([0, 0, 0], 256, 1 << 14), 0);
        assert_eq!(
            hash_index([1, 1, 1], 256, 1 << 14),
            (1 ^ 2_654_435_761u32 ^ 805_459_861) % 16384
        );
    }

    #[test]
    fn default_resolutions_double() {
        let c = HashGridConfig::default();
        let r: Vec<u32> = (0..8).map(|l| c.resolution(l)).collect();
        assert_eq!(r, vec![2, 4, 8, 16, 32, 64, 128, 256]);
        // 3^3, 5^3, 9^3 and 17^3 fit a 2^14 table; the rest hash.
        assert_eq!(c.level_size(0), 27);
        assert_eq!(c.level_size(3), 4913);
        assert_eq!(c.level_size(4), 1 << 14);
    }

    #[test]
    fn corner_reproduction_and_cell_center_mean() {
        let cfg = HashGridConfig {
            levels: 1,
            ..Default::default()
        };
        let mut g: HashGrid<f64> = HashGrid::new(cfg, 1).unwrap();
        for (i, v) in g.values.iter_mut().enumerate() {
            *v = i as f64;
        }
        let mut out = [0.0; 4];
        // N = 2, lattice vertex (1, 0, 2) sits at (0.5, 0, 1).
        g.encode(Vec3::new(0.5, 0.0, 1.0), &mut out);
        let e = hash_index([1, 0, 2], 2, 1 << 14) as usize;
        assert_eq!(out.to_vec(), g.values[e * 4..e * 4 + 4].to_vec());

        g.encode(Vec3::splat(0.25), &mut out);
        let mut mean = [0.0; 4];
        for c in 0..8u32 {
            let cell = [c & 1, c >> 1 & 1, c >> 2 & 1];
            let e = hash_index(cell, 2, 1 << 14) as usize;
            for k in 0..4 {
                mean[k] += g.values[e * 4 + k] / 8.0;
            }
        }
        for k in 0..4 {
            assert!((out[k] - mean[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn backward_corner_exact_and_linear() {
        let cfg = HashGridConfig {
            levels: 2,
            ..Default::default()
        };
        let g: HashGrid<f64> = HashGrid::new(cfg, 1).unwrap();
        let mut grads = vec![0.0; g.param_count()];
        let dl = [1.0, 2.0, 3.0, 4.0, 0.0, 0.0, 0.0, 0.0];
        g.backward(Vec3::new(0.5, 0.5, 0.0), &dl, &mut grads);
        let nz: Vec<usize> = (0..grads.len()).filter(|&i| grads[i] != 0.0).collect();
        assert_eq!(nz.len(), 4, "one corner of level 0 receives the full slice");
        g.backward(Vec3::new(0.5, 0.5, 0.0), &dl, &mut grads);
        assert_eq!(nz.iter().map(|&i| grads[i]).collect::<Vec<_>>(), vec![2.0, 4.0, 6.0, 8.0]);
    }
}
