use serde::{Deserialize, Serialize};

use crate::encoders::{FeatureStore, GradientRecords};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-2,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr > 0.0
            && self.lr.is_finite()
            && self.beta1 > 0.0
            && self.beta1 < 1.0
            && self.beta2 > 0.0
            && self.beta2 < 1.0
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid Adam parameters {self:?}")))
        }
    }
}

/// Precomputed per-step constants: `lr`, `1/(1-b1^t)`, `1/(1-b2^t)`.
struct StepConsts<T> {
    lr: T,
    b1: T,
    b2: T,
    c1: T,
    c2: T,
    eps: T,
}

impl<T: Real> StepConsts<T> {
    fn new(cfg: &AdamConfig, t: u64) -> Self {
        let tf = t as f64;
        StepConsts {
            lr: T::from_f64_lossy(cfg.lr),
            b1: T::from_f64_lossy(cfg.beta1),
            b2: T::from_f64_lossy(cfg.beta2),
            c1: T::from_f64_lossy(1.0 / (1.0 - cfg.beta1.powf(tf))),
            c2: T::from_f64_lossy(1.0 / (1.0 - cfg.beta2.powf(tf))),
            eps: T::from_f64_lossy(cfg.epsilon),
        }
    }

    #[inline]
    fn apply(&self, p: &mut T, g: T, m: &mut T, v: &mut T) {
        *m = self.b1 * *m + (T::one() - self.b1) * g;
        *v = self.b2 * *v + (T::one() - self.b2) * g * g;
        let m_hat = *m * self.c1;
        let v_hat = *v * self.c2;
        *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
    }
}

/// One Adam step over every parameter with global step `t >= 1`.
pub fn adam_step_dense<T: Real>(params: &mut [T], grads: &[T], m: &mut [T], v: &mut [T], t: u64, cfg: &AdamConfig) {
    assert!(t >= 1, "Adam step count starts at 1");
    assert!(params.len() == grads.len() && m.len() == params.len() && v.len() == params.len());
    let k = StepConsts::new(cfg, t);
    for i in 0..params.len() {
        k.apply(&mut params[i], grads[i], &mut m[i], &mut v[i]);
    }
}

/// Adam over the recorded slots only. Each slot's step counter is bumped and
/// then used as its bias-correction exponent; every other slot is untouched.
pub fn adam_step_sparse<T: Real>(store: &mut FeatureStore<T>, records: &GradientRecords<T>, cfg: &AdamConfig) -> Result<()> {
    let l = store.features_per_level;
    if records.width() != l {
        return Err(Error::DimensionMismatch(format!(
            "record width {} != feature length {l}",
            records.width()
        )));
    }
    if let Some((slot, _)) = records.iter().find(|(s, _)| *s as usize >= store.slot_count()) {
        return Err(Error::Contract(format!("record slot {slot} out of range")));
    }
    for (slot, grad) in records.iter() {
        let s = slot as usize;
        store.slot_step_count[s] += 1;
        let k = StepConsts::new(cfg, store.slot_step_count[s] as u64);
        for c in 0..l {
            let i = s * l + c;
            k.apply(&mut store.values[i], grad[c], &mut store.adam_m[i], &mut store.adam_v[i]);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = vec![0.5f64, -1.0];
        let (mut m, mut v) = (vec![0.0; 2], vec![0.0; 2]);
        adam_step_dense(&mut p, &[0.0, 0.0], &mut m, &mut v, 1, &AdamConfig::default());
        assert_eq!(p, vec![0.5, -1.0]);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let cfg = AdamConfig::default();
        let mut p = vec![0.0f64, 0.0];
        let (mut m, mut v) = (vec![0.0; 2], vec![0.0; 2]);
        adam_step_dense(&mut p, &[3.0, -0.01], &mut m, &mut v, 1, &cfg);
        assert!((p[0] + cfg.lr).abs() < 1e-8);
        assert!((p[1] - cfg.lr).abs() < 1e-6);
    }

    #[test]
    fn two_steps_match_hand_iteration() {
        let cfg = AdamConfig::default();
        let g = 0.5f64;
        let mut p = vec![1.0];
        let (mut m, mut v) = (vec![0.0], vec![0.0]);
        adam_step_dense(&mut p, &[g], &mut m, &mut v, 1, &cfg);
        adam_step_dense(&mut p, &[g], &mut m, &mut v, 2, &cfg);
        // Constant gradient: m_hat = g and v_hat = g^2 at every step.
        let step = cfg.lr * g / (g + cfg.epsilon);
        assert!((p[0] - (1.0 - 2.0 * step)).abs() < 1e-12);
    }
}
