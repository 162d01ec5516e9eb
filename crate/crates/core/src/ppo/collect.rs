use rayon::prelude::*;

use crate::env::{Action, Agent, Blockland, LevelSpec, Observation, OBS_DIM};
use crate::error::{Error, Result};
use crate::nn::{sample_action, ActorCriticParams};
use crate::policy::Controller;
use crate::rng::{self, domain, Stream};

use super::buffer::{EpisodeEnd, RolloutBuffer};

/// The agent being trained.
pub type LearnerRole = Agent;

/// One live environment with its opponent and private random streams.
#[derive(Clone, Debug)]
pub struct EnvSlot {
    env: Blockland,
    opponent: Controller,
    learner_rng: Stream,
    opponent_rng: Stream,
    obs_robot: Observation,
    obs_human: Observation,
    episode_robot_return: f64,
}

impl EnvSlot {
    /// Environment `index` of a run seeded with `seed`.
    pub fn new(spec: &LevelSpec, opponent: Controller, seed: u64, index: usize) -> Result<Self> {
        let mut env = Blockland::new(spec.clone())?;
        let (obs_robot, obs_human) = env.reset(0)?;
        let mut opponent = opponent;
        opponent.begin_episode();
        Ok(EnvSlot {
            env,
            opponent,
            learner_rng: rng::stream(seed, domain::LEARNER, index as u64),
            opponent_rng: rng::stream(seed, domain::OPPONENT, index as u64),
            obs_robot,
            obs_human,
            episode_robot_return: 0.0,
        })
    }

    pub fn env(&self) -> &Blockland {
        &self.env
    }
}

/// How environments are stepped during collection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stepping {
    Sequential,
    Parallel { threads: usize },
}

/// Side products of one rollout.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RolloutStats {
    /// Critic value of each env's observation after its last stored step.
    pub bootstrap_values: Vec<f64>,
    /// Learner returns of episodes that ended during the rollout, env-major.
    pub completed_learner_returns: Vec<f64>,
    /// Robot returns of the same episodes.
    pub completed_robot_returns: Vec<f64>,
}

struct Rows<'a> {
    obs: &'a mut [f64],
    actions: &'a mut [usize],
    log_probs: &'a mut [f64],
    values: &'a mut [f64],
    rewards: &'a mut [f64],
    robot_rewards: &'a mut [f64],
    ends: &'a mut [EpisodeEnd],
    boundary_values: &'a mut [f64],
}

struct EnvOutcome {
    bootstrap: f64,
    learner_returns: Vec<f64>,
    robot_returns: Vec<f64>,
}

fn collect_env(
    slot: &mut EnvSlot,
    params: &ActorCriticParams,
    learner: Agent,
    rows: Rows<'_>,
) -> Result<EnvOutcome> {
    let sign = match learner {
        Agent::Robot => 1.0,
        Agent::Human => -1.0,
    };
    let mut learner_returns = Vec::new();
    let mut robot_returns = Vec::new();
    for t in 0..rows.actions.len() {
        let (own_obs, opp_obs) = match learner {
            Agent::Robot => (slot.obs_robot, slot.obs_human),
            Agent::Human => (slot.obs_human, slot.obs_robot),
        };
        let (logits, value) = params.act_value(&own_obs.0);
        let (a, log_prob) = sample_action(&logits, &mut slot.learner_rng);
        let own_action = Action::ALL[a];
        let opp_action = slot.opponent.act(&opp_obs, &mut slot.opponent_rng);
        let (a_robot, a_human) = match learner {
            Agent::Robot => (own_action, opp_action),
            Agent::Human => (opp_action, own_action),
        };
        let step = slot
            .env
            .step(a_robot, a_human)
            .map_err(|e| Error::Rollout {
                env: usize::MAX,
                t,
                source: Box::new(e),
            })?;

        rows.obs[t * OBS_DIM..(t + 1) * OBS_DIM].copy_from_slice(&own_obs.0);
        rows.actions[t] = a;
        rows.log_probs[t] = log_prob;
        rows.values[t] = value;
        rows.rewards[t] = sign * step.reward_robot;
        rows.robot_rewards[t] = step.reward_robot;
        slot.episode_robot_return += step.reward_robot;

        let next_own = match learner {
            Agent::Robot => step.obs_robot,
            Agent::Human => step.obs_human,
        };
        rows.ends[t] = if step.terminated {
            EpisodeEnd::Terminated
        } else if step.truncated {
            EpisodeEnd::Truncated
        } else {
            EpisodeEnd::None
        };
        rows.boundary_values[t] = if step.truncated {
            params.value(&next_own.0)
        } else {
            0.0
        };

        if step.terminated || step.truncated {
            robot_returns.push(slot.episode_robot_return);
            learner_returns.push(sign * slot.episode_robot_return);
            slot.episode_robot_return = 0.0;
            let (r, h) = slot.env.reset(0)?;
            slot.obs_robot = r;
            slot.obs_human = h;
            slot.opponent.begin_episode();
        } else {
            slot.obs_robot = step.obs_robot;
            slot.obs_human = step.obs_human;
        }
    }
    let own = match learner {
        Agent::Robot => slot.obs_robot,
        Agent::Human => slot.obs_human,
    };
    Ok(EnvOutcome {
        bootstrap: params.value(&own.0),
        learner_returns,
        robot_returns,
    })
}

/// Fill `buffer` with one rollout from every slot.
///
/// The learner samples from its categorical policy; the opponent comes from
/// each slot's controller. Episodes auto-reset. The learner's reward is the
/// robot's reward, negated when the learner is the human. Sequential and
/// parallel stepping give bitwise-identical buffers because every env owns
/// its streams and its buffer rows.
pub fn collect_rollout(
    slots: &mut [EnvSlot],
    params: &ActorCriticParams,
    learner: LearnerRole,
    buffer: &mut RolloutBuffer,
    stepping: Stepping,
) -> Result<RolloutStats> {
    if slots.len() != buffer.n_envs {
        return Err(Error::Usage(format!(
            "{} env slots for a buffer of {} envs",
            slots.len(),
            buffer.n_envs
        )));
    }
    buffer.begin_fill();
    let len = buffer.rollout_len;
    let rows: Vec<Rows<'_>> = buffer
        .obs
        .chunks_mut(len * OBS_DIM)
        .zip(buffer.actions.chunks_mut(len))
        .zip(buffer.log_probs.chunks_mut(len))
        .zip(buffer.values.chunks_mut(len))
        .zip(buffer.rewards.chunks_mut(len))
        .zip(buffer.robot_rewards.chunks_mut(len))
        .zip(buffer.ends.chunks_mut(len))
        .zip(buffer.boundary_values.chunks_mut(len))
        .map(
            |(
                ((((((obs, actions), log_probs), values), rewards), robot_rewards), ends),
                boundary_values,
            )| Rows {
                obs,
                actions,
                log_probs,
                values,
                rewards,
                robot_rewards,
                ends,
                boundary_values,
            },
        )
        .collect();

    let outcomes: Vec<Result<EnvOutcome>> = match stepping {
        Stepping::Sequential => slots
            .iter_mut()
            .zip(rows)
            .map(|(slot, r)| collect_env(slot, params, learner, r))
            .collect(),
        Stepping::Parallel { threads } => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(|| {
                slots
                    .par_iter_mut()
                    .zip(rows.into_par_iter())
                    .map(|(slot, r)| collect_env(slot, params, learner, r))
                    .collect()
            })
        }
    };

    let mut stats = RolloutStats::default();
    for (env, outcome) in outcomes.into_iter().enumerate() {
        let o = outcome.map_err(|e| match e {
            Error::Rollout { t, source, .. } => Error::Rollout { env, t, source },
            other => Error::Rollout {
                env,
                t: 0,
                source: Box::new(other),
            },
        })?;
        stats.bootstrap_values.push(o.bootstrap);
        stats.completed_learner_returns.extend(o.learner_returns);
        stats.completed_robot_returns.extend(o.robot_returns);
    }
    buffer.full = true;
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::log_prob_entropy;

    fn slots(opponent: Controller, seed: u64, n: usize) -> Vec<EnvSlot> {
        (0..n)
            .map(|i| EnvSlot::new(&LevelSpec::twosides(), opponent.clone(), seed, i).unwrap())
            .collect()
    }

    #[test]
    fn fills_every_slot() {
        let params = ActorCriticParams::init(0);
        let mut s = slots(Controller::Arand, 1, 8);
        let mut buf = RolloutBuffer::new(8, 512);
        let stats = collect_rollout(
            &mut s,
            &params,
            Agent::Robot,
            &mut buf,
            Stepping::Sequential,
        )
        .unwrap();
        assert!(buf.is_full());
        assert_eq!(buf.capacity(), 4096);
        assert_eq!(stats.bootstrap_values.len(), 8);
    }

    #[test]
    fn stored_log_probs_recompute() {
        let params = ActorCriticParams::init(2);
        let mut s = slots(Controller::Arand, 3, 2);
        let mut buf = RolloutBuffer::new(2, 64);
        collect_rollout(
            &mut s,
            &params,
            Agent::Robot,
            &mut buf,
            Stepping::Sequential,
        )
        .unwrap();
        for i in 0..buf.capacity() {
            let logits = params.forward_actor(buf.observation(i)).unwrap();
            let (lp, _) = log_prob_entropy(&logits, buf.actions[i]);
            assert!((lp - buf.log_probs[i]).abs() < 1e-12);
            let v = params.forward_critic(buf.observation(i)).unwrap();
            assert!((v - buf.values[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn adversary_rewards_are_negated() {
        let params = ActorCriticParams::init(4);
        let victim = std::sync::Arc::new(ActorCriticParams::init(5));
        let mut s = slots(Controller::Frozen(victim), 6, 2);
        let mut buf = RolloutBuffer::new(2, 600);
        let stats = collect_rollout(
            &mut s,
            &params,
            Agent::Human,
            &mut buf,
            Stepping::Sequential,
        )
        .unwrap();
        for (l, r) in buf.rewards.iter().zip(&buf.robot_rewards) {
            assert_eq!(l + r, 0.0);
        }
        assert!(!stats.completed_learner_returns.is_empty());
        for (l, r) in stats
            .completed_learner_returns
            .iter()
            .zip(&stats.completed_robot_returns)
        {
            assert_eq!(*l, -r);
        }
    }

    #[test]
    fn mismatched_slot_count_is_usage_error() {
        let params = ActorCriticParams::init(0);
        let mut s = slots(Controller::Arand, 1, 3);
        let mut buf = RolloutBuffer::new(2, 4);
        assert!(collect_rollout(
            &mut s,
            &params,
            Agent::Robot,
            &mut buf,
            Stepping::Sequential
        )
        .is_err());
    }
}
