//! GATE forward and backward passes over a [`FeatureLayout`].

use rand::Rng as _;

use super::SlotMap;
use crate::geometry::SurfacePoint;
use crate::mesh_colors::FeatureLayout;
use crate::rng::{stream_rng, streams};
use crate::{Error, Real, Result};

pub const INIT_MAGNITUDE: f64 = 1e-4;

/// Flat trainable feature buffer with sparse-Adam state.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStore<T> {
    pub features_per_level: usize,
    /// `total_slots * L` values, slot-major.
    pub values: Vec<T>,
    pub adam_m: Vec<T>,
    pub adam_v: Vec<T>,
    /// Adam steps applied to each slot.
    pub slot_step_count: Vec<u32>,
    /// First slot of each level.
    pub level_offsets: Vec<u32>,
}

impl<T: Real> FeatureStore<T> {
    pub fn slot_count(&self) -> usize {
        self.slot_step_count.len()
    }

    pub fn feature(&self, slot: u32) -> &[T] {
        let l = self.features_per_level;
        &self.values[slot as usize * l..(slot as usize + 1) * l]
    }

    pub fn feature_mut(&mut self, slot: u32) -> &mut [T] {
        let l = self.features_per_level;
        &mut self.values[slot as usize * l..(slot as usize + 1) * l]
    }

    pub fn param_count(&self) -> usize {
        self.values.len()
    }

    pub fn cast<U: Real>(&self) -> FeatureStore<U> {
        let c = |v: &[T]| v.iter().map(|x| U::from_f64_lossy(x.to_f64_lossless())).collect();
        FeatureStore {
            features_per_level: self.features_per_level,
            values: c(&self.values),
            adam_m: c(&self.adam_m),
            adam_v: c(&self.adam_v),
            slot_step_count: self.slot_step_count.clone(),
            level_offsets: self.level_offsets.clone(),
        }
    }
}

/// Every feature component i.i.d. uniform in `[-1e-4, 1e-4]`.
pub fn init_features<T: Real>(layout: &FeatureLayout, seed: u64) -> FeatureStore<T> {
    let l = layout.features_per_level;
    let n = layout.total_slots as usize * l;
    let mut rng = stream_rng(seed, streams::FEATURE_INIT, 0);
    let values = (0..n)
        .map(|_| T::from_f64_lossy(rng.gen_range(-INIT_MAGNITUDE..=INIT_MAGNITUDE)))
        .collect();
    FeatureStore {
        features_per_level: l,
        values,
        adam_m: vec![T::zero(); n],
        adam_v: vec![T::zero(); n],
        slot_step_count: vec![0; layout.total_slots as usize],
        level_offsets: layout.levels.iter().map(|lv| lv.offset).collect(),
    }
}

/// Writes the concatenated per-level interpolated features of `point` into
/// `out` (length `levels * L`).
pub fn gate_encode<T: Real>(store: &FeatureStore<T>, layout: &FeatureLayout, point: &SurfacePoint, out: &mut [T]) {
    let l = layout.features_per_level;
    debug_assert_eq!(out.len(), layout.encoding_width());
    for (level, seg) in out.chunks_exact_mut(l).enumerate() {
        let lookup = layout.resolve(level, point);
        seg.iter_mut().for_each(|v| *v = T::zero());
        for (&slot, &w) in lookup.slots.iter().zip(&lookup.weights) {
            let w = T::widen_f32(w);
            for (o, &z) in seg.iter_mut().zip(store.feature(slot)) {
                *o += w * z;
            }
        }
    }
}

/// Sparse feature gradients, one record per touched slot.
#[derive(Debug, Clone, Default)]
pub struct GradientRecords<T> {
    width: usize,
    slots: Vec<u32>,
    grads: Vec<T>,
    owners: Vec<(u32, u32)>,
    index: SlotMap<u32>,
}

impl<T: Real> GradientRecords<T> {
    pub fn new(width: usize) -> Self {
        GradientRecords {
            width,
            slots: Vec::new(),
            grads: Vec::new(),
            owners: Vec::new(),
            index: SlotMap::default(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn clear(&mut self) {
        self.slots.clear();
        self.grads.clear();
        self.owners.clear();
        self.index.clear();
    }

    /// Accumulates `scale * grad` into the record of `slot`.
    pub fn add(&mut self, slot: u32, owner: (u32, u32), scale: T, grad: &[T]) {
        debug_assert_eq!(grad.len(), self.width);
        let w = self.width;
        let idx = match self.index.get(&slot) {
            Some(&i) => i as usize,
            None => {
                let i = self.slots.len();
                self.index.insert(slot, i as u32);
                self.slots.push(slot);
                self.owners.push(owner);
                self.grads.extend(std::iter::repeat_n(T::zero(), w));
                i
            }
        };
        for (acc, &g) in self.grads[idx * w..(idx + 1) * w].iter_mut().zip(grad) {
            *acc += scale * g;
        }
    }

    /// Folds `other` in, preserving first-seen order.
    pub fn merge(&mut self, other: &GradientRecords<T>) {
        for (i, &slot) in other.slots.iter().enumerate() {
            self.add(slot, other.owners[i], T::one(), other.grad(i));
        }
    }

    pub fn slot(&self, i: usize) -> u32 {
        self.slots[i]
    }

    pub fn owner(&self, i: usize) -> (u32, u32) {
        self.owners[i]
    }

    pub fn grad(&self, i: usize) -> &[T] {
        &self.grads[i * self.width..(i + 1) * self.width]
    }

    pub fn get(&self, slot: u32) -> Option<&[T]> {
        self.index.get(&slot).map(|&i| self.grad(i as usize))
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &[T])> {
        self.slots.iter().enumerate().map(|(i, &s)| (s, self.grad(i)))
    }

    /// Builds records from raw `(slot, grad)` pairs, rejecting duplicates.
    pub fn from_unique(width: usize, entries: impl IntoIterator<Item = (u32, Vec<T>)>) -> Result<Self> {
        let mut r = GradientRecords::new(width);
        for (slot, g) in entries {
            if r.index.contains_key(&slot) {
                return Err(Error::Contract(format!("duplicate gradient record for slot {slot}")));
            }
            if g.len() != width {
                return Err(Error::DimensionMismatch(format!("record width {} != {width}", g.len())));
            }
            r.add(slot, (0, 0), T::one(), &g);
        }
        Ok(r)
    }
}

/// Feature gradients of one query: each level's slice of `dl_dz` scaled by
/// the interpolation weight of each of its three slots. Zero-weight slots
/// produce no record.
pub fn gate_backward<T: Real>(
    layout: &FeatureLayout,
    point: &SurfacePoint,
    dl_dz: &[T],
    records: &mut GradientRecords<T>,
) {
    let l = layout.features_per_level;
    debug_assert_eq!(dl_dz.len(), layout.encoding_width());
    let owner = (point.mesh_id, point.tri_id);
    for (level, seg) in dl_dz.chunks_exact(l).enumerate() {
        let lookup = layout.resolve(level, point);
        for (&slot, &w) in lookup.slots.iter().zip(&lookup.weights) {
            if w != 0.0 {
                records.add(slot, owner, T::widen_f32(w), seg);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Mesh, Scene};
    use crate::mesh_colors::{build_layout, LevelSpec, ResolutionConfig, StorageMode};
    use glam::Vec3;

    fn single(levels: Vec<LevelSpec>) -> (Scene, FeatureLayout) {
        let s = Scene::new(vec![Mesh::new("t", vec![Vec3::ZERO, Vec3::X, Vec3::Y], vec![[0, 1, 2]]).unwrap()]).unwrap();
        let cfg = ResolutionConfig {
            levels,
            features_per_level: 2,
        };
        let layout = build_layout(&s, &cfg, StorageMode::Shared).unwrap();
        (s, layout)
    }

    #[test]
    fn init_bounds_and_determinism() {
        let (_, layout) = single(vec![LevelSpec::Fixed(8)]);
        let a: FeatureStore<f32> = init_features(&layout, 3);
        let b: FeatureStore<f32> = init_features(&layout, 3);
        assert_eq!(a, b);
        assert!(a.values.iter().all(|v| v.abs() <= 1e-4));
        let c: FeatureStore<f32> = init_features(&layout, 4);
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn vertex_reproduction_and_arithmetic() {
        let (_, layout) = single(vec![LevelSpec::Fixed(1)]);
        let mut store: FeatureStore<f64> = init_features(&layout, 0);
        store.values = vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let mut out = [0.0; 2];
        gate_encode(&store, &layout, &SurfacePoint::new(0, 0, [1.0, 0.0, 0.0]), &mut out);
        assert_eq!(out, [1.0, 0.0]);
        gate_encode(&store, &layout, &SurfacePoint::new(0, 0, [0.5, 0.3, 0.2]), &mut out);
        assert!((out[0] - 0.7).abs() < 1e-7 && (out[1] - 0.5).abs() < 1e-7, "{out:?}");
    }

    #[test]
    fn two_levels_concatenate_in_order() {
        let (_, layout) = single(vec![LevelSpec::Fixed(3), LevelSpec::Fixed(1)]);
        let mut store: FeatureStore<f64> = init_features(&layout, 0);
        let l1 = layout.levels[1].offset as usize;
        for (i, v) in store.values.iter_mut().enumerate() {
            *v = if i >= 2 * l1 { 2.0 } else { -1.0 };
        }
        let mut out = [0.0; 4];
        gate_encode(&store, &layout, &SurfacePoint::new(0, 0, [0.2, 0.3, 0.5]), &mut out);
        for (o, want) in out.iter().zip([-1.0, -1.0, 2.0, 2.0]) {
            assert!((o - want).abs() < 1e-6);
        }
    }

    #[test]
    fn backward_scales_and_dedups() {
        let (_, layout) = single(vec![LevelSpec::Fixed(1)]);
        let mut rec = GradientRecords::<f64>::new(2);
        let p = SurfacePoint::new(0, 0, [0.5, 0.5, 0.0]);
        gate_backward(&layout, &p, &[0.2, -0.4], &mut rec);
        assert_eq!(rec.len(), 2, "zero-weight corner suppressed");
        let g = rec.get(layout.resolve(0, &p).slots[0]).unwrap();
        assert!((g[0] - 0.1).abs() < 1e-12 && (g[1] + 0.2).abs() < 1e-12);

        let vertex = SurfacePoint::new(0, 0, [1.0, 0.0, 0.0]);
        let mut rec = GradientRecords::<f64>::new(2);
        gate_backward(&layout, &vertex, &[1.0, 1.0], &mut rec);
        assert_eq!(rec.len(), 1);
        gate_backward(&layout, &vertex, &[1.0, 2.0], &mut rec);
        assert_eq!(rec.len(), 1);
        assert_eq!(rec.grad(0), &[2.0, 3.0]);
    }

    #[test]
    fn from_unique_rejects_duplicates() {
        let r = GradientRecords::<f32>::from_unique(1, vec![(1, vec![1.0]), (1, vec![2.0])]);
        assert!(matches!(r, Err(Error::Contract(_))));
    }
}
