//! PPO minibatch loss and its exact reverse pass.
//!
//! ```text
//! loss = -mean(min(ρ·A, clip(ρ, 1-ε, 1+ε)·A))
//!        + vf_coef · mean((V - R)²)
//!        - ent_coef · mean(H)
//! ```
//!
//! with `ρ = exp(log π(a|s) - log π_old(a|s))`. Advantages are taken as given;
//! normalizing them is the caller's job.

use crate::env::OBS_DIM;
use crate::error::{Error, Result};

use super::{ActorCriticParams, Gradients};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossSpec {
    pub clip_range: f64,
    pub ent_coef: f64,
    pub vf_coef: f64,
    /// Drop the clipped-surrogate term entirely (gradient checks only).
    pub include_policy: bool,
}

impl Default for LossSpec {
    fn default() -> Self {
        LossSpec {
            clip_range: 0.2,
            ent_coef: 0.01,
            vf_coef: 0.5,
            include_policy: true,
        }
    }
}

/// One minibatch, `obs` laid out row-major as `len × 12`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Minibatch {
    pub obs: Vec<f64>,
    pub actions: Vec<usize>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Minibatch {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    fn check(&self) -> Result<()> {
        let n = self.len();
        if n == 0
            || self.obs.len() != n * OBS_DIM
            || self.old_log_probs.len() != n
            || self.advantages.len() != n
            || self.returns.len() != n
        {
            return Err(Error::Usage("inconsistent minibatch fields".into()));
        }
        Ok(())
    }
}

/// Loss value and its components, all as minibatch means.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

struct Forward {
    actor: super::MlpCache,
    critic: super::MlpCache,
    breakdown: LossBreakdown,
    /// Loss gradient with respect to logits (`len × n_actions`) and values.
    d_logits: Vec<f64>,
    d_values: Vec<f64>,
}

fn forward(params: &ActorCriticParams, mb: &Minibatch, spec: &LossSpec) -> Result<Forward> {
    mb.check()?;
    let n = mb.len();
    let inv_n = 1.0 / n as f64;
    let k = params.n_actions();
    let actor = params.actor.forward_batch(&mb.obs);
    let critic = params.critic.forward_batch(&mb.obs);
    let (lo, hi) = (1.0 - spec.clip_range, 1.0 + spec.clip_range);

    let mut policy_sum = 0.0;
    let mut value_sum = 0.0;
    let mut entropy_sum = 0.0;
    let mut clipped = 0usize;
    let mut kl_sum = 0.0;
    let mut d_logits = vec![0.0; n * k];
    let mut d_values = vec![0.0; n];

    for b in 0..n {
        let logits = &actor.output()[b * k..(b + 1) * k];
        let ls = super::log_softmax(logits);
        let probs: Vec<f64> = ls.iter().map(|l| l.exp()).collect();
        let entropy = -probs.iter().zip(&ls).map(|(p, l)| p * l).sum::<f64>();
        let a = mb.actions[b];
        if a >= k {
            return Err(Error::Usage(format!("action {a} out of range")));
        }
        let log_ratio = ls[a] - mb.old_log_probs[b];
        let ratio = log_ratio.exp();
        let adv = mb.advantages[b];
        let unclipped = ratio * adv;
        let clipped_obj = ratio.clamp(lo, hi) * adv;
        let surrogate = unclipped.min(clipped_obj);
        if (ratio - 1.0).abs() > spec.clip_range {
            clipped += 1;
        }
        kl_sum += -log_ratio;
        policy_sum += -surrogate;
        entropy_sum += entropy;
        let v = critic.output()[b];
        let err = v - mb.returns[b];
        value_sum += err * err;

        // d(-surrogate)/d log π: only the unclipped branch carries gradient.
        let g_logp = if spec.include_policy && unclipped <= clipped_obj {
            -adv * ratio
        } else {
            0.0
        };
        let row = &mut d_logits[b * k..(b + 1) * k];
        for (j, d) in row.iter_mut().enumerate() {
            let onehot = if j == a { 1.0 } else { 0.0 };
            // dH/dz_j = -p_j (ln p_j + H); the loss carries -ent_coef · H.
            let d_entropy = -probs[j] * (ls[j] + entropy);
            *d = inv_n * (g_logp * (onehot - probs[j]) - spec.ent_coef * d_entropy);
        }
        d_values[b] = inv_n * spec.vf_coef * 2.0 * err;
    }

    let policy_loss = policy_sum * inv_n;
    let value_loss = value_sum * inv_n;
    let entropy = entropy_sum * inv_n;
    let policy_term = if spec.include_policy {
        policy_loss
    } else {
        0.0
    };
    let total = policy_term + spec.vf_coef * value_loss - spec.ent_coef * entropy;
    let breakdown = LossBreakdown {
        total,
        policy_loss,
        value_loss,
        entropy,
        clip_fraction: clipped as f64 * inv_n,
        approx_kl: kl_sum * inv_n,
    };
    if !total.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite loss: policy {policy_loss}, value {value_loss}, entropy {entropy}"
        )));
    }
    Ok(Forward {
        actor,
        critic,
        breakdown,
        d_logits,
        d_values,
    })
}

/// Loss only, no gradients.
pub fn evaluate_loss(
    params: &ActorCriticParams,
    mb: &Minibatch,
    spec: &LossSpec,
) -> Result<LossBreakdown> {
    forward(params, mb, spec).map(|f| f.breakdown)
}

/// Loss and its exact gradient with respect to every parameter.
pub fn backward(
    params: &ActorCriticParams,
    mb: &Minibatch,
    spec: &LossSpec,
) -> Result<(LossBreakdown, Gradients)> {
    let f = forward(params, mb, spec)?;
    let mut grads = Gradients::zeros_like(params);
    params
        .actor
        .backward_batch(&f.actor, f.d_logits, &mut grads.0.actor);
    params
        .critic
        .backward_batch(&f.critic, f.d_values, &mut grads.0.critic);
    if grads.tensors().flatten().any(|g| !g.is_finite()) {
        return Err(Error::Numeric("non-finite gradient".into()));
    }
    Ok((f.breakdown, grads))
}
