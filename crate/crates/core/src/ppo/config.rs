use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// PPO hyperparameters. Defaults are the experiment's training settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub n_envs: usize,
    pub rollout_len: usize,
    pub total_steps: u64,
    pub lr: f64,
    pub minibatch_size: usize,
    pub epochs: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_range: f64,
    pub ent_coef: f64,
    pub vf_coef: f64,
    pub max_grad_norm: f64,
    /// Rollouts between intermediate checkpoints.
    pub checkpoint_every: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            n_envs: 8,
            rollout_len: 512,
            total_steps: 800_000,
            lr: 0.001,
            minibatch_size: 64,
            epochs: 10,
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_range: 0.2,
            ent_coef: 0.01,
            vf_coef: 0.5,
            max_grad_norm: 0.5,
            checkpoint_every: 8,
        }
    }
}

impl PpoConfig {
    pub fn steps_per_rollout(&self) -> usize {
        self.n_envs * self.rollout_len
    }

    /// Rollouts needed to reach or exceed `total_steps`.
    pub fn n_rollouts(&self) -> usize {
        let per = self.steps_per_rollout() as u64;
        self.total_steps.div_ceil(per) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("ppo config: {m}")));
        if self.n_envs == 0 || self.rollout_len == 0 || self.minibatch_size == 0 || self.epochs == 0
        {
            return bad("sizes must be positive");
        }
        if self.steps_per_rollout() % self.minibatch_size != 0 {
            return bad("n_envs * rollout_len must be divisible by minibatch_size");
        }
        if self.total_steps == 0 || self.checkpoint_every == 0 {
            return bad("total_steps and checkpoint_every must be positive");
        }
        let positive = [self.lr, self.clip_range, self.max_grad_norm];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("lr, clip_range and max_grad_norm must be positive");
        }
        if !(self.ent_coef >= 0.0 && self.vf_coef >= 0.0) {
            return bad("loss coefficients must be non-negative");
        }
        for (name, v) in [("gamma", self.gamma), ("gae_lambda", self.gae_lambda)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!(
                    "ppo config: {name} must lie in (0, 1]"
                )));
            }
        }
        Ok(())
    }
}
