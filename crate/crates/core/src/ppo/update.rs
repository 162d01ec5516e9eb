use rand::seq::SliceRandom;
use serde::Serialize;

use crate::env::OBS_DIM;
use crate::error::{Error, Result};
use crate::nn::{
    adam_update, backward, clip_global_norm, ActorCriticParams, AdamState, LossSpec, Minibatch,
};
use crate::rng::Stream;

use super::buffer::RolloutBuffer;
use super::config::PpoConfig;

/// Means over every minibatch of one update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub grad_norm: f64,
    pub minibatches: usize,
}

/// `(a - mean) / (std + 1e-8)` with the unbiased standard deviation.
/// Single-element batches are returned unchanged.
pub fn normalize_advantages(adv: &[f64]) -> Vec<f64> {
    let n = adv.len();
    if n < 2 {
        return adv.to_vec();
    }
    let mean = adv.iter().sum::<f64>() / n as f64;
    let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1) as f64;
    let denom = var.sqrt() + 1e-8;
    adv.iter().map(|a| (a - mean) / denom).collect()
}

/// A fresh shuffle of `0..n` for one epoch.
pub(crate) fn epoch_permutation(n: usize, rng: &mut Stream) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx
}

pub(crate) fn gather(buffer: &RolloutBuffer, indices: &[usize]) -> Minibatch {
    let mut mb = Minibatch {
        obs: Vec::with_capacity(indices.len() * OBS_DIM),
        ..Default::default()
    };
    let mut raw_adv = Vec::with_capacity(indices.len());
    for &i in indices {
        mb.obs.extend_from_slice(buffer.observation(i));
        mb.actions.push(buffer.actions[i]);
        mb.old_log_probs.push(buffer.log_probs[i]);
        mb.returns.push(buffer.returns[i]);
        raw_adv.push(buffer.advantages[i]);
    }
    mb.advantages = normalize_advantages(&raw_adv);
    mb
}

/// `epochs` passes over the rollout in shuffled minibatches, each followed by
/// global-norm clipping and one Adam step.
pub fn ppo_update(
    params: &mut ActorCriticParams,
    buffer: &RolloutBuffer,
    adam: &mut AdamState,
    config: &PpoConfig,
    rng: &mut Stream,
) -> Result<UpdateStats> {
    buffer.require_advantages()?;
    let spec = LossSpec {
        clip_range: config.clip_range,
        ent_coef: config.ent_coef,
        vf_coef: config.vf_coef,
        include_policy: true,
    };
    let mut stats = UpdateStats::default();
    let mut index = 0usize;
    for epoch in 0..config.epochs {
        let perm = epoch_permutation(buffer.capacity(), rng);
        for chunk in perm.chunks(config.minibatch_size) {
            let mb = gather(buffer, chunk);
            let (loss, mut grads) = backward(params, &mb, &spec).map_err(|e| match e {
                Error::Numeric(msg) => {
                    Error::Numeric(format!("epoch {epoch}, minibatch {index}: {msg}"))
                }
                other => other,
            })?;
            stats.grad_norm += clip_global_norm(&mut grads, config.max_grad_norm);
            adam_update(params, &grads, adam, config.lr);
            stats.policy_loss += loss.policy_loss;
            stats.value_loss += loss.value_loss;
            stats.entropy += loss.entropy;
            stats.clip_fraction += loss.clip_fraction;
            stats.approx_kl += loss.approx_kl;
            index += 1;
        }
    }
    let n = index as f64;
    stats.minibatches = index;
    for v in [
        &mut stats.policy_loss,
        &mut stats.value_loss,
        &mut stats.entropy,
        &mut stats.clip_fraction,
        &mut stats.approx_kl,
        &mut stats.grad_norm,
    ] {
        *v /= n;
    }
    Ok(stats)
}
