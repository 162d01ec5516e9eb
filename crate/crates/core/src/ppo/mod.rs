//! On-policy PPO: vectorized rollout collection, GAE, clipped-surrogate
//! updates, and the training loop that ties them to a run directory.

mod buffer;
mod collect;
mod config;
mod gae;
mod train;
mod update;

pub use buffer::{EpisodeEnd, RolloutBuffer};
pub use collect::{collect_rollout, EnvSlot, LearnerRole, RolloutStats, Stepping};
pub use config::PpoConfig;
pub use gae::compute_gae;
pub use train::{
    checkpoint_name, is_complete_run, train, OpponentSpec, TrainOutcome, TrainRequest,
    CHECKPOINT_DIR, CONFIG_FILE, FINAL_FILE, LOG_FILE,
};
pub use update::{normalize_advantages, ppo_update, UpdateStats};
