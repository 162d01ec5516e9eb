//! Observed-adversary experiments on the Blockland `twosides` level.
//!
//! The crate contains everything needed to train robot victims with PPO,
//! train human adversaries against frozen victims, evaluate every pairing,
//! and produce the diagnostics (weight norms, visitation heatmaps, return
//! distributions) used to judge the attacks.

pub mod analysis;
pub mod checkpoint;
pub mod env;
pub mod error;
pub mod harness;
pub mod manifest;
pub mod nn;
pub mod policy;
pub mod ppo;
pub mod rng;
pub mod scripted;

pub use env::{Action, Agent, Blockland, EnvState, LevelSpec, Observation, StepResult};
pub use error::{Error, Result};
pub use nn::{ActorCriticParams, AdamState, Gradients};
pub use ppo::{PpoConfig, RolloutBuffer};
