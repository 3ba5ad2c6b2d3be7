use crate::geometry::{Scene, SurfacePoint};
use crate::{Error, Result};

/// Per-triangle training-step counters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriangleTrainState {
    /// First flat triangle index of each mesh.
    mesh_offsets: Vec<usize>,
    counts: Vec<u32>,
    /// Iteration that last incremented each counter; 0 means never.
    last_trained_iter: Vec<u64>,
    last_iter: u64,
}

impl TriangleTrainState {
    pub fn new(scene: &Scene) -> Self {
        let mut mesh_offsets = Vec::with_capacity(scene.meshes().len());
        let mut n = 0;
        for m in scene.meshes() {
            mesh_offsets.push(n);
            n += m.triangle_count();
        }
        TriangleTrainState {
            mesh_offsets,
            counts: vec![0; n],
            last_trained_iter: vec![0; n],
            last_iter: 0,
        }
    }

    pub fn index(&self, mesh_id: u32, tri_id: u32) -> usize {
        self.mesh_offsets[mesh_id as usize] + tri_id as usize
    }

    pub fn count(&self, mesh_id: u32, tri_id: u32) -> u32 {
        self.counts[self.index(mesh_id, tri_id)]
    }

    pub fn set_count(&mut self, mesh_id: u32, tri_id: u32, count: u32) {
        let i = self.index(mesh_id, tri_id);
        self.counts[i] = count;
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn last_trained_iter(&self) -> &[u64] {
        &self.last_trained_iter
    }

    pub fn last_iter(&self) -> u64 {
        self.last_iter
    }

    pub fn triangle_count(&self) -> usize {
        self.counts.len()
    }

    /// Bumps `t_T` once for every triangle touched by `points` during
    /// iteration `iter_id`. Returns how many counters changed.
    pub fn update_counters<'a>(&mut self, points: impl IntoIterator<Item = &'a SurfacePoint>, iter_id: u64) -> Result<usize> {
        if iter_id <= self.last_iter {
            return Err(Error::Contract(format!(
                "iteration id {iter_id} is not after {}",
                self.last_iter
            )));
        }
        self.last_iter = iter_id;
        let mut changed = 0;
        for p in points {
            let i = self.index(p.mesh_id, p.tri_id);
            if self.last_trained_iter[i] < iter_id {
                self.counts[i] += 1;
                self.last_trained_iter[i] = iter_id;
                changed += 1;
            }
        }
        Ok(changed)
    }

    /// Raw parts for checkpointing.
    pub fn to_parts(&self) -> (Vec<u32>, Vec<u64>, u64) {
        (self.counts.clone(), self.last_trained_iter.clone(), self.last_iter)
    }

    pub fn from_parts(scene: &Scene, counts: Vec<u32>, last_trained_iter: Vec<u64>, last_iter: u64) -> Result<Self> {
        let mut s = TriangleTrainState::new(scene);
        if counts.len() != s.counts.len() || last_trained_iter.len() != s.counts.len() {
            return Err(Error::DimensionMismatch(format!(
                "counter arrays have {} / {} entries, scene has {} triangles",
                counts.len(),
                last_trained_iter.len(),
                s.counts.len()
            )));
        }
        s.counts = counts;
        s.last_trained_iter = last_trained_iter;
        s.last_iter = last_iter;
        Ok(s)
    }
}
