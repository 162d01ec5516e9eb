//! Fixtures shared by the benchmarks.

use blockland_core::policy::Controller;
use blockland_core::ppo::{collect_rollout, compute_gae, EnvSlot, Stepping};
use blockland_core::{ActorCriticParams, Agent, LevelSpec, PpoConfig, RolloutBuffer};

/// A filled rollout with advantages, collected by a fresh policy against `arand`.
pub fn filled_buffer(config: &PpoConfig, seed: u64) -> (ActorCriticParams, RolloutBuffer) {
    let params = ActorCriticParams::init(seed);
    let level = LevelSpec::twosides();
    let mut slots: Vec<EnvSlot> = (0..config.n_envs)
        .map(|i| EnvSlot::new(&level, Controller::Arand, seed, i).expect("valid level"))
        .collect();
    let mut buffer = RolloutBuffer::new(config.n_envs, config.rollout_len);
    let stats = collect_rollout(
        &mut slots,
        &params,
        Agent::Robot,
        &mut buffer,
        Stepping::Sequential,
    )
    .expect("rollout succeeds");
    compute_gae(
        &mut buffer,
        &stats.bootstrap_values,
        config.gamma,
        config.gae_lambda,
    )
    .expect("buffer is full");
    (params, buffer)
}
