use crate::error::{Error, Result};

use super::buffer::{EpisodeEnd, RolloutBuffer};

/// Generalized advantage estimation, one reverse pass per environment stream.
///
/// ```text
/// δ_t = r_t + γ·V_next − V(s_t)
/// A_t = δ_t + γλ·A_{t+1}          (A_{t+1} = 0 across any episode end)
/// ```
///
/// `V_next` is `0` after termination, the stored final-observation value after
/// truncation, the next slot's value inside an episode, and
/// `bootstrap_values[env]` at the end of the rollout.
#[allow(clippy::needless_range_loop)]
pub fn compute_gae(
    buffer: &mut RolloutBuffer,
    bootstrap_values: &[f64],
    gamma: f64,
    lambda: f64,
) -> Result<()> {
    if !buffer.full {
        return Err(Error::Usage(
            "compute_gae on a buffer that is not full".into(),
        ));
    }
    if buffer.advantages_ready {
        return Err(Error::Usage(
            "advantages already computed for this rollout".into(),
        ));
    }
    if bootstrap_values.len() != buffer.n_envs {
        return Err(Error::Usage(format!(
            "expected {} bootstrap values, got {}",
            buffer.n_envs,
            bootstrap_values.len()
        )));
    }
    let len = buffer.rollout_len;
    for env in 0..buffer.n_envs {
        let mut next_adv = 0.0;
        for t in (0..len).rev() {
            let i = buffer.slot(env, t);
            let next_value = match buffer.ends[i] {
                EpisodeEnd::Terminated => 0.0,
                EpisodeEnd::Truncated => buffer.boundary_values[i],
                EpisodeEnd::None if t + 1 == len => bootstrap_values[env],
                EpisodeEnd::None => buffer.values[i + 1],
            };
            if buffer.ends[i] != EpisodeEnd::None || t + 1 == len {
                next_adv = 0.0;
            }
            let delta = buffer.rewards[i] + gamma * next_value - buffer.values[i];
            let adv = delta + gamma * lambda * next_adv;
            buffer.advantages[i] = adv;
            buffer.returns[i] = adv + buffer.values[i];
            next_adv = adv;
        }
    }
    buffer.advantages_ready = true;
    Ok(())
}
