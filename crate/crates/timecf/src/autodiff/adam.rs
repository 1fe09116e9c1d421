//! Adam optimizer over a fixed group of parameters.

use serde::{Deserialize, Serialize};

use crate::autodiff::params::{ParamId, ParamSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            ..AdamConfig::default()
        }
    }
}

/// Moment state for one parameter group. Parameters whose gradient is
/// absent in a step are skipped entirely (no moment decay), matching the
/// usual "no gradient, no update" optimizer behavior.
#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    ids: Vec<ParamId>,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl Adam {
    pub fn new(cfg: AdamConfig, ids: Vec<ParamId>, params: &ParamSet) -> Self {
        let m = ids
            .iter()
            .map(|&id| vec![0.0; params.tensor(id).numel()])
            .collect();
        let v = ids
            .iter()
            .map(|&id| vec![0.0; params.tensor(id).numel()])
            .collect();
        Adam {
            cfg,
            ids,
            m,
            v,
            t: 0,
        }
    }

    pub fn ids(&self) -> &[ParamId] {
        &self.ids
    }

    /// Applies one bias-corrected Adam update. `grads` is indexed by
    /// `ParamId` over the whole `ParamSet`.
    pub fn step(&mut self, params: &mut ParamSet, grads: &[Option<Vec<f64>>]) -> Result<()> {
        self.t += 1;
        let bc1 = 1.0 - self.cfg.beta1.powi(self.t);
        let bc2 = 1.0 - self.cfg.beta2.powi(self.t);
        for (slot, &id) in self.ids.iter().enumerate() {
            let Some(grad) = grads.get(id.0).and_then(|g| g.as_ref()) else {
                continue;
            };
            let tensor = params.tensor_mut(id);
            if grad.len() != tensor.numel() {
                return Err(Error::shape(format!(
                    "gradient length {} mismatches parameter {} of {} elements",
                    grad.len(),
                    id.0,
                    tensor.numel()
                )));
            }
            let m = &mut self.m[slot];
            let v = &mut self.v[slot];
            let data = tensor.data_mut();
            for i in 0..grad.len() {
                let g = grad[i];
                m[i] = self.cfg.beta1 * m[i] + (1.0 - self.cfg.beta1) * g;
                v[i] = self.cfg.beta2 * v[i] + (1.0 - self.cfg.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                data[i] -= self.cfg.lr * m_hat / (v_hat.sqrt() + self.cfg.eps);
            }
        }
        Ok(())
    }
}
