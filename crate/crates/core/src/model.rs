//! Encoder + MLP bundle with batched gradient computation.

use glam::Vec3;
use serde::{Deserialize, Serialize};

use crate::encoders::{
    dir_to_spherical, gate_backward, gate_encode, init_features, oneblob_encode, oneblob_encode_wrapped, FeatureStore,
    GradientRecords, HashGrid, HashGridConfig,
};
use crate::geometry::{Aabb, Scene, SurfacePoint};
use crate::mesh_colors::{build_layout, FeatureLayout, ResolutionConfig, StorageMode};
use crate::neural::{adam_step_dense, adam_step_sparse, l2_loss, AdamConfig, Mlp};
use crate::{par, Error, Real, Result};

/// Samples per parallel work item.
const CHUNK: usize = 256;

/// Optional MLP inputs next to the positional encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtraInputs {
    pub normal: bool,
    pub albedo: bool,
    pub direction: bool,
    /// One-blob bins per spherical coordinate.
    pub bins: usize,
}

impl Default for ExtraInputs {
    fn default() -> Self {
        ExtraInputs {
            normal: false,
            albedo: false,
            direction: false,
            bins: 4,
        }
    }
}

impl ExtraInputs {
    pub fn width(&self) -> usize {
        let dir = 2 * self.bins;
        self.normal as usize * dir + self.albedo as usize * 3 + self.direction as usize * dir
    }

    fn write(&self, q: &Query, out: &mut [f32]) {
        let k = self.bins;
        let mut at = 0;
        let sph = |v: Vec3, out: &mut [f32], at: &mut usize| {
            let [theta, phi] = dir_to_spherical(v);
            oneblob_encode(theta, &mut out[*at..*at + k]);
            oneblob_encode_wrapped(phi, &mut out[*at + k..*at + 2 * k]);
            *at += 2 * k;
        };
        if self.normal {
            sph(q.normal, out, &mut at);
        }
        if self.albedo {
            out[at..at + 3].copy_from_slice(&q.albedo.to_array());
            at += 3;
        }
        if self.direction {
            sph(q.direction, out, &mut at);
        }
        debug_assert_eq!(at, out.len());
    }
}

/// Everything an encoder may need about a surface query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Query {
    pub point: SurfacePoint,
    pub position: Vec3,
    pub normal: Vec3,
    pub albedo: Vec3,
    /// Direction the point is observed from (unit).
    pub direction: Vec3,
}

impl Query {
    pub fn on_surface(scene: &Scene, point: SurfacePoint, direction: Vec3) -> Query {
        let mesh = scene.mesh(point.mesh_id as usize);
        Query {
            point,
            position: mesh.position(point.tri_id as usize, point.bary),
            normal: mesh.geometric_normal(point.tri_id as usize),
            albedo: mesh.albedo.unwrap_or(Vec3::ONE),
            direction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    Gate,
    Hashgrid,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Encoding<T> {
    Gate { layout: FeatureLayout, store: FeatureStore<T> },
    HashGrid { grid: HashGrid<T>, bounds: Aabb },
}

impl<T: Real> Encoding<T> {
    pub fn gate(scene: &Scene, res: &ResolutionConfig, mode: StorageMode, seed: u64) -> Result<Self> {
        let layout = build_layout(scene, res, mode)?;
        let store = init_features(&layout, seed);
        Ok(Encoding::Gate { layout, store })
    }

    pub fn hashgrid(scene: &Scene, cfg: HashGridConfig, seed: u64) -> Result<Self> {
        Ok(Encoding::HashGrid {
            grid: HashGrid::new(cfg, seed)?,
            bounds: scene.aabb(),
        })
    }

    pub fn kind(&self) -> EncoderKind {
        match self {
            Encoding::Gate { .. } => EncoderKind::Gate,
            Encoding::HashGrid { .. } => EncoderKind::Hashgrid,
        }
    }

    pub fn width(&self) -> usize {
        match self {
            Encoding::Gate { layout, .. } => layout.encoding_width(),
            Encoding::HashGrid { grid, .. } => grid.encoding_width(),
        }
    }

    /// Trainable feature parameters (excluding the MLP).
    pub fn param_count(&self) -> usize {
        match self {
            Encoding::Gate { store, .. } => store.param_count(),
            Encoding::HashGrid { grid, .. } => grid.param_count(),
        }
    }

    pub fn encode(&self, q: &Query, out: &mut [T]) {
        match self {
            Encoding::Gate { layout, store } => gate_encode(store, layout, &q.point, out),
            Encoding::HashGrid { grid, bounds } => grid.encode(bounds.normalize(q.position), out),
        }
    }
}

/// Feature-side gradient of a batch.
#[derive(Debug, Clone)]
pub enum FeatureGrads<T> {
    /// Deduplicated per-slot records (GATE).
    Sparse(GradientRecords<T>),
    /// One entry per grid parameter (hash grid).
    Dense(Vec<T>),
}

#[derive(Debug, Clone)]
pub struct Gradients<T> {
    pub loss: T,
    pub mlp: Vec<T>,
    pub features: FeatureGrads<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    pub encoding: Encoding<T>,
    pub extras: ExtraInputs,
    pub mlp: Mlp<T>,
    pub mlp_m: Vec<T>,
    pub mlp_v: Vec<T>,
    /// Global optimizer steps taken.
    pub step: u64,
    pub adam: AdamConfig,
}

struct ChunkResult<T> {
    loss: T,
    mlp: Vec<T>,
    records: Option<GradientRecords<T>>,
    /// Hash grid: (parameter index, gradient) pairs in visit order.
    dense: Vec<(u32, T)>,
}

impl<T: Real> Model<T> {
    pub fn new(encoding: Encoding<T>, extras: ExtraInputs, adam: AdamConfig, seed: u64) -> Result<Self> {
        adam.validate()?;
        let mlp = Mlp::new(encoding.width() + extras.width(), 1, seed)?;
        let n = mlp.param_count();
        Ok(Model {
            encoding,
            extras,
            mlp,
            mlp_m: vec![T::zero(); n],
            mlp_v: vec![T::zero(); n],
            step: 0,
            adam,
        })
    }

    pub fn input_width(&self) -> usize {
        self.mlp.input_width()
    }

    /// Feature plus MLP parameter count.
    pub fn param_count(&self) -> usize {
        self.encoding.param_count() + self.mlp.param_count()
    }

    pub fn encode_input(&self, q: &Query, out: &mut [T]) {
        let w = self.encoding.width();
        self.encoding.encode(q, &mut out[..w]);
        if self.extras.width() > 0 {
            let mut extra = vec![0f32; self.extras.width()];
            self.extras.write(q, &mut extra);
            for (o, e) in out[w..].iter_mut().zip(extra) {
                *o = T::widen_f32(e);
            }
        }
    }

    fn encode_batch(&self, queries: &[Query]) -> Vec<T> {
        let d = self.input_width();
        let mut inputs = vec![T::zero(); queries.len() * d];
        for (q, row) in queries.iter().zip(inputs.chunks_exact_mut(d)) {
            self.encode_input(q, row);
        }
        inputs
    }

    /// Raw network outputs, one per query.
    pub fn predict(&self, queries: &[Query]) -> Result<Vec<T>> {
        let chunks = queries.len().div_ceil(CHUNK);
        let parts = par::map_indexed(chunks, |c| {
            let qs = &queries[c * CHUNK..((c + 1) * CHUNK).min(queries.len())];
            self.mlp.infer(&self.encode_batch(qs), qs.len())
        });
        let mut out = Vec::with_capacity(queries.len());
        for p in parts {
            out.extend(p?);
        }
        Ok(out)
    }

    fn chunk_gradients(&self, queries: &[Query], targets: &[T], batch: usize) -> Result<ChunkResult<T>> {
        let n = queries.len();
        let inputs = self.encode_batch(queries);
        let (pred, cache) = self.mlp.forward(&inputs, n)?;
        // Scaled by the full batch size so chunk losses and gradients add up.
        let (loss, dl_dpred) = l2_loss(&pred, targets, batch);
        let (mlp, dl_dx) = self.mlp.backward(&cache, &dl_dpred);
        let d = self.input_width();
        let ew = self.encoding.width();
        let mut records = None;
        let mut dense = Vec::new();
        match &self.encoding {
            Encoding::Gate { layout, .. } => {
                let mut rec = GradientRecords::new(layout.features_per_level);
                for (q, row) in queries.iter().zip(dl_dx.chunks_exact(d)) {
                    gate_backward(layout, &q.point, &row[..ew], &mut rec);
                }
                records = Some(rec);
            }
            Encoding::HashGrid { grid, bounds } => {
                let f = grid.config.features_per_level;
                let mut scratch = Vec::new();
                for (q, row) in queries.iter().zip(dl_dx.chunks_exact(d)) {
                    scratch.clear();
                    hash_contributions(grid, bounds.normalize(q.position), &row[..ew], f, &mut scratch);
                    dense.extend_from_slice(&scratch);
                }
            }
        }
        Ok(ChunkResult {
            loss,
            mlp,
            records,
            dense,
        })
    }

    /// Loss and full-batch gradients for `(queries, targets)`.
    pub fn compute_gradients(&self, queries: &[Query], targets: &[T]) -> Result<Gradients<T>> {
        if queries.len() != targets.len() || queries.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{} queries vs {} targets",
                queries.len(),
                targets.len()
            )));
        }
        let batch = queries.len();
        let chunks = batch.div_ceil(CHUNK);
        let parts = par::map_indexed(chunks, |c| {
            let r = c * CHUNK..((c + 1) * CHUNK).min(batch);
            self.chunk_gradients(&queries[r.clone()], &targets[r], batch)
        });
        let mut loss = T::zero();
        let mut mlp = vec![T::zero(); self.mlp.param_count()];
        let mut features = match &self.encoding {
            Encoding::Gate { layout, .. } => FeatureGrads::Sparse(GradientRecords::new(layout.features_per_level)),
            Encoding::HashGrid { grid, .. } => FeatureGrads::Dense(vec![T::zero(); grid.param_count()]),
        };
        for part in parts {
            let part = part?;
            loss += part.loss;
            for (a, b) in mlp.iter_mut().zip(&part.mlp) {
                *a += *b;
            }
            match &mut features {
                FeatureGrads::Sparse(acc) => acc.merge(part.records.as_ref().expect("gate chunk")),
                FeatureGrads::Dense(acc) => {
                    for (i, g) in part.dense {
                        acc[i as usize] += g;
                    }
                }
            }
        }
        Ok(Gradients { loss, mlp, features })
    }

    /// One optimizer step: dense Adam on the MLP (global step count), sparse
    /// Adam on GATE features, dense Adam on every hash-grid entry.
    pub fn apply_gradients(&mut self, grads: &Gradients<T>) -> Result<()> {
        self.step += 1;
        adam_step_dense(&mut self.mlp.params, &grads.mlp, &mut self.mlp_m, &mut self.mlp_v, self.step, &self.adam);
        match (&mut self.encoding, &grads.features) {
            (Encoding::Gate { store, .. }, FeatureGrads::Sparse(rec)) => adam_step_sparse(store, rec, &self.adam)?,
            (Encoding::HashGrid { grid, .. }, FeatureGrads::Dense(g)) => {
                let HashGrid {
                    values, adam_m, adam_v, ..
                } = grid;
                adam_step_dense(values, g, adam_m, adam_v, self.step, &self.adam);
            }
            _ => return Err(Error::Contract("gradient kind does not match the encoder".into())),
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> Model<U> {
        let c = |v: &[T]| v.iter().map(|x| U::from_f64_lossy(x.to_f64_lossless())).collect();
        Model {
            encoding: match &self.encoding {
                Encoding::Gate { layout, store } => Encoding::Gate {
                    layout: layout.clone(),
                    store: store.cast(),
                },
                Encoding::HashGrid { grid, bounds } => Encoding::HashGrid {
                    grid: grid.cast(),
                    bounds: *bounds,
                },
            },
            extras: self.extras,
            mlp: self.mlp.cast(),
            mlp_m: c(&self.mlp_m),
            mlp_v: c(&self.mlp_v),
            step: self.step,
            adam: self.adam,
        }
    }
}

fn hash_contributions<T: Real>(grid: &HashGrid<T>, pos: Vec3, dl: &[T], f: usize, out: &mut Vec<(u32, T)>) {
    let levels = grid.config.levels;
    for level in 0..levels {
        let seg = &dl[level * f..(level + 1) * f];
        for (entry, w) in grid.level_corners(level, pos) {
            if w == 0.0 {
                continue;
            }
            let w = T::widen_f32(w);
            for (k, &d) in seg.iter().enumerate() {
                out.push(((entry * f + k) as u32, w * d));
            }
        }
    }
}
