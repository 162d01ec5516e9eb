use crate::env::OBS_DIM;
use crate::error::{Error, Result};

/// How an episode ended at a given slot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EpisodeEnd {
    #[default]
    None,
    /// Task completed: bootstrap with zero.
    Terminated,
    /// Step cap reached: bootstrap with the critic's value of the final observation.
    Truncated,
}

/// Fixed-capacity on-policy store, laid out env-major: slot `(env, t)` lives
/// at index `env * rollout_len + t`.
#[derive(Clone, Debug)]
pub struct RolloutBuffer {
    pub n_envs: usize,
    pub rollout_len: usize,
    pub obs: Vec<f64>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    /// Learner reward.
    pub rewards: Vec<f64>,
    /// Robot reward for the same transition, kept for zero-sum audits.
    pub robot_rewards: Vec<f64>,
    pub ends: Vec<EpisodeEnd>,
    /// Critic value of the final observation at truncated slots, zero elsewhere.
    pub boundary_values: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    pub(crate) full: bool,
    pub(crate) advantages_ready: bool,
}

impl RolloutBuffer {
    pub fn new(n_envs: usize, rollout_len: usize) -> Self {
        let n = n_envs * rollout_len;
        RolloutBuffer {
            n_envs,
            rollout_len,
            obs: vec![0.0; n * OBS_DIM],
            actions: vec![0; n],
            log_probs: vec![0.0; n],
            values: vec![0.0; n],
            rewards: vec![0.0; n],
            robot_rewards: vec![0.0; n],
            ends: vec![EpisodeEnd::None; n],
            boundary_values: vec![0.0; n],
            advantages: vec![0.0; n],
            returns: vec![0.0; n],
            full: false,
            advantages_ready: false,
        }
    }

    pub fn capacity(&self) -> usize {
        self.n_envs * self.rollout_len
    }

    pub fn slot(&self, env: usize, t: usize) -> usize {
        env * self.rollout_len + t
    }

    pub fn is_full(&self) -> bool {
        self.full
    }

    pub fn has_advantages(&self) -> bool {
        self.advantages_ready
    }

    /// Declare the buffer filled by hand (tests and tools that bypass collection).
    pub fn mark_full(&mut self) {
        self.full = true;
        self.advantages_ready = false;
    }

    pub(crate) fn begin_fill(&mut self) {
        self.full = false;
        self.advantages_ready = false;
    }

    pub fn observation(&self, i: usize) -> &[f64] {
        &self.obs[i * OBS_DIM..(i + 1) * OBS_DIM]
    }

    pub(crate) fn require_advantages(&self) -> Result<()> {
        if !self.advantages_ready {
            return Err(Error::Usage(
                "buffer has no advantages; run compute_gae first".into(),
            ));
        }
        Ok(())
    }
}
