//! Prioritized batch generation, per-triangle step counters and the online
//! training iteration.

mod sampling;
mod state;

use glam::Vec3;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

pub use sampling::{select_among, select_sample, selection_probabilities, selection_weight, AreaSampler};
pub use state::TriangleTrainState;

use crate::geometry::{sample_surface_point, Scene};
use crate::model::{Model, Query};
use crate::nao::cosine_hemisphere;
use crate::rng::{derive_seed, stream_rng, streams, Rng};
use crate::{par, Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainerConfig {
    pub batch_size: usize,
    /// Candidates per selection round (`M`).
    pub candidates: usize,
    pub count_cap: u32,
    /// Samples drawn from each selected triangle (`G`).
    pub group_size: usize,
    pub seed: u64,
    pub iterations: u64,
    /// Eq. 4 resampling; when off the first candidate is always taken.
    pub prioritized: bool,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            batch_size: 4096,
            candidates: 16,
            count_cap: 512,
            group_size: 4,
            seed: 0,
            iterations: 128,
            prioritized: true,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.candidates == 0 || self.group_size == 0 || self.count_cap == 0 {
            return Err(Error::InvalidConfig(
                "batch size, candidates, group size and count cap must be at least 1".into(),
            ));
        }
        if !self.batch_size.is_multiple_of(self.group_size) {
            return Err(Error::InvalidConfig(format!(
                "group size {} does not divide batch size {}",
                self.group_size, self.batch_size
            )));
        }
        Ok(())
    }

    pub fn rounds(&self) -> usize {
        self.batch_size / self.group_size
    }
}

/// Produces a training target for a surface query.
pub trait TargetOracle: Sync {
    fn target(&self, q: &Query, rng: &mut Rng) -> f32;
}

/// Noise-free target from a function of world position.
pub struct AnalyticOracle<F>(pub F);

impl<F: Fn(Vec3) -> f32 + Sync> TargetOracle for AnalyticOracle<F> {
    fn target(&self, q: &Query, _rng: &mut Rng) -> f32 {
        (self.0)(q.position)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingBatch {
    pub queries: Vec<Query>,
    pub targets: Vec<f32>,
}

impl TrainingBatch {
    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }
}

/// `B/G` selection rounds; each selected point brings `G-1` more fresh points
/// from its triangle. Targets are drawn from the oracle per sample.
pub fn build_batch(
    state: &TriangleTrainState,
    scene: &Scene,
    sampler: &AreaSampler,
    oracle: &dyn TargetOracle,
    cfg: &TrainerConfig,
    iter_id: u64,
) -> TrainingBatch {
    let g = cfg.group_size;
    let round_seed = derive_seed(cfg.seed, streams::BATCH, iter_id);
    let rounds = par::map_indexed(cfg.rounds(), |r| {
        let mut rng = stream_rng(round_seed, 0, r as u64);
        let m = if cfg.prioritized { cfg.candidates } else { 1 };
        let first = select_sample(state, sampler, m, cfg.count_cap, &mut rng);
        let mut out = Vec::with_capacity(g);
        for k in 0..g {
            let point = if k == 0 {
                first
            } else {
                sample_surface_point(first.mesh_id, first.tri_id, rng.gen(), rng.gen())
            };
            let n = scene.normal(&point);
            let dir = cosine_hemisphere(n, rng.gen(), rng.gen());
            let q = Query::on_surface(scene, point, dir);
            let t = oracle.target(&q, &mut rng);
            out.push((q, t));
        }
        out
    });
    let mut batch = TrainingBatch {
        queries: Vec::with_capacity(cfg.batch_size),
        targets: Vec::with_capacity(cfg.batch_size),
    };
    for (q, t) in rounds.into_iter().flatten() {
        batch.queries.push(q);
        batch.targets.push(t);
    }
    batch
}

/// One optimizer step on `batch`, then the counter update. Returns the loss.
pub fn train_iteration<T: Real>(
    model: &mut Model<T>,
    state: &mut TriangleTrainState,
    batch: &TrainingBatch,
    iter_id: u64,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Contract("empty training batch".into()));
    }
    let targets: Vec<T> = batch.targets.iter().map(|&t| T::widen_f32(t)).collect();
    let grads = model.compute_gradients(&batch.queries, &targets)?;
    let loss = grads.loss.to_f64_lossless();
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("loss is {loss} at iteration {iter_id}")));
    }
    model.apply_gradients(&grads)?;
    state.update_counters(batch.queries.iter().map(|q| &q.point), iter_id)?;
    Ok(loss)
}

/// Sampler, counters and iteration id for an online training run.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub config: TrainerConfig,
    pub sampler: AreaSampler,
    pub state: TriangleTrainState,
    /// Iterations completed; the next iteration id is `iter + 1`.
    pub iter: u64,
}

impl Trainer {
    pub fn new(scene: &Scene, config: TrainerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Trainer {
            config,
            sampler: AreaSampler::new(scene)?,
            state: TriangleTrainState::new(scene),
            iter: 0,
        })
    }

    pub fn next_batch(&self, scene: &Scene, oracle: &dyn TargetOracle) -> TrainingBatch {
        build_batch(&self.state, scene, &self.sampler, oracle, &self.config, self.iter + 1)
    }

    pub fn step<T: Real>(&mut self, model: &mut Model<T>, scene: &Scene, oracle: &dyn TargetOracle) -> Result<f64> {
        let batch = self.next_batch(scene, oracle);
        let loss = train_iteration(model, &mut self.state, &batch, self.iter + 1)?;
        self.iter += 1;
        Ok(loss)
    }
}
