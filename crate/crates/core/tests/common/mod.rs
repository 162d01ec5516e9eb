//! Independent reference implementations shared by the integration tests
//! and the acceptance gate. None of these call into the code they check
//! beyond reading parameters and environment state.

#![allow(dead_code, clippy::needless_range_loop)]

use blockland_core::env::{self, Agent, BoxLocation, EnvState, LevelSpec};
use blockland_core::nn::{Minibatch, Mlp};
use blockland_core::ppo::{EpisodeEnd, RolloutBuffer};
use blockland_core::rng::Stream;
use blockland_core::{Action, ActorCriticParams};
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> Stream {
    Stream::seed_from_u64(seed)
}

/// Straight-line MLP forward: tanh between layers, linear head.
pub fn mlp_forward(net: &Mlp, x: &[f64]) -> Vec<f64> {
    let mut h = x.to_vec();
    for (l, layer) in net.layers.iter().enumerate() {
        let mut out = Vec::with_capacity(layer.n_out);
        for r in 0..layer.n_out {
            let mut s = layer.biases[r];
            for (c, xc) in h.iter().enumerate() {
                s += layer.weights[r * layer.n_in + c] * xc;
            }
            out.push(if l + 1 < net.layers.len() {
                s.tanh()
            } else {
                s
            });
        }
        h = out;
    }
    h
}

/// Clipped-surrogate PPO loss written out directly from its definition.
pub fn oracle_loss(
    p: &ActorCriticParams,
    mb: &Minibatch,
    clip: f64,
    ent_coef: f64,
    vf_coef: f64,
) -> f64 {
    let n = mb.actions.len();
    let (mut pol, mut val, mut ent) = (0.0, 0.0, 0.0);
    for b in 0..n {
        let x = &mb.obs[b * 12..(b + 1) * 12];
        let z = mlp_forward(&p.actor, x);
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        let logp: Vec<f64> = z.iter().map(|v| v - lse).collect();
        let ratio = (logp[mb.actions[b]] - mb.old_log_probs[b]).exp();
        let a = mb.advantages[b];
        let surr = (ratio * a).min(ratio.max(1.0 - clip).min(1.0 + clip) * a);
        pol -= surr;
        ent -= logp.iter().map(|l| l.exp() * l).sum::<f64>();
        let v = mlp_forward(&p.critic, x)[0];
        val += (v - mb.returns[b]).powi(2);
    }
    let n = n as f64;
    pol / n + vf_coef * val / n - ent_coef * ent / n
}

/// Distance of the probability ratio from the clip boundaries.
pub fn min_kink_distance(p: &ActorCriticParams, mb: &Minibatch, clip: f64) -> f64 {
    (0..mb.actions.len())
        .map(|b| {
            let z = mlp_forward(&p.actor, &mb.obs[b * 12..(b + 1) * 12]);
            let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            let ratio = (z[mb.actions[b]] - lse - mb.old_log_probs[b]).exp();
            (ratio - (1.0 - clip))
                .abs()
                .min((ratio - (1.0 + clip)).abs())
        })
        .fold(f64::INFINITY, f64::min)
}

/// Random parameters near a generic point (initialisation plus noise), and
/// a minibatch whose ratios stay at least `margin` from the clip kinks. About
/// a third of the samples sit outside the clip range.
pub fn fd_case(seed: u64, n: usize, clip: f64, margin: f64) -> (ActorCriticParams, Minibatch) {
    let mut r = rng(seed);
    let mut p = ActorCriticParams::init(seed);
    for t in p.tensors_mut() {
        for v in t.iter_mut() {
            *v += r.random_range(-0.15..0.15);
        }
    }
    let mut mb = Minibatch {
        obs: (0..n * 12).map(|_| r.random_range(-1.0..1.0)).collect(),
        ..Default::default()
    };
    for b in 0..n {
        let z = mlp_forward(&p.actor, &mb.obs[b * 12..(b + 1) * 12]);
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        let a = r.random_range(0..6);
        let ratio = loop {
            let q: f64 = r.random_range(0.5..1.6);
            if (q - (1.0 - clip)).abs() > margin && (q - (1.0 + clip)).abs() > margin {
                break q;
            }
        };
        mb.actions.push(a);
        mb.old_log_probs.push(z[a] - lse - ratio.ln());
        mb.advantages.push(r.random_range(-2.0..2.0));
        mb.returns.push(r.random_range(-3.0..3.0));
    }
    (p, mb)
}

/// Central-difference gradient of `f` over every coordinate, in the
/// canonical tensor order.
pub fn fd_gradient(
    p: &ActorCriticParams,
    h: f64,
    f: impl Fn(&ActorCriticParams) -> f64,
) -> Vec<f64> {
    let mut q = p.clone();
    let lens: Vec<usize> = p.tensors().map(<[f64]>::len).collect();
    let mut out = Vec::with_capacity(lens.iter().sum());
    for (ti, &len) in lens.iter().enumerate() {
        for i in 0..len {
            let orig = q.tensors().nth(ti).unwrap()[i];
            q.tensors_mut().nth(ti).unwrap()[i] = orig + h;
            let up = f(&q);
            q.tensors_mut().nth(ti).unwrap()[i] = orig - h;
            let down = f(&q);
            q.tensors_mut().nth(ti).unwrap()[i] = orig;
            out.push((up - down) / (2.0 * h));
        }
    }
    out
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Advantages from the forward-looking sum `A_t = Σ_l (γλ)^l δ_{t+l}`,
/// stopping at the first episode end or the rollout end.
pub fn gae_oracle(buf: &RolloutBuffer, bootstrap: &[f64], gamma: f64, lambda: f64) -> Vec<f64> {
    let len = buf.rollout_len;
    let mut adv = vec![0.0; buf.capacity()];
    for e in 0..buf.n_envs {
        let idx = |t: usize| e * len + t;
        let delta = |t: usize| {
            let i = idx(t);
            let next = match buf.ends[i] {
                EpisodeEnd::Terminated => 0.0,
                EpisodeEnd::Truncated => buf.boundary_values[i],
                EpisodeEnd::None if t + 1 == len => bootstrap[e],
                EpisodeEnd::None => buf.values[i + 1],
            };
            buf.rewards[i] + gamma * next - buf.values[i]
        };
        for t in 0..len {
            let mut sum = 0.0;
            let mut w = 1.0;
            for u in t..len {
                sum += w * delta(u);
                if buf.ends[idx(u)] != EpisodeEnd::None {
                    break;
                }
                w *= gamma * lambda;
            }
            adv[idx(t)] = sum;
        }
    }
    adv
}

/// Discounted return to the episode or rollout end, with the same bootstrap
/// rules; equals the λ = 1 advantage plus the value.
pub fn discounted_return(
    buf: &RolloutBuffer,
    bootstrap: &[f64],
    gamma: f64,
    e: usize,
    t: usize,
) -> f64 {
    let len = buf.rollout_len;
    let mut g = 0.0;
    let mut w = 1.0;
    for u in t..len {
        let i = e * len + u;
        g += w * buf.rewards[i];
        w *= gamma;
        match buf.ends[i] {
            EpisodeEnd::Terminated => return g,
            EpisodeEnd::Truncated => return g + w * buf.boundary_values[i],
            EpisodeEnd::None if u + 1 == len => return g + w * bootstrap[e],
            EpisodeEnd::None => {}
        }
    }
    g
}

/// A random filled buffer with episode ends sprinkled in.
pub fn random_buffer(seed: u64, n_envs: usize, len: usize) -> (RolloutBuffer, Vec<f64>) {
    let mut r = rng(seed);
    let mut b = RolloutBuffer::new(n_envs, len);
    for i in 0..b.capacity() {
        b.rewards[i] = r.random_range(-1.0..2.0);
        b.values[i] = r.random_range(-2.0..2.0);
        b.ends[i] = match r.random_range(0..10) {
            0 => EpisodeEnd::Terminated,
            1 => EpisodeEnd::Truncated,
            _ => EpisodeEnd::None,
        };
        if b.ends[i] == EpisodeEnd::Truncated {
            b.boundary_values[i] = r.random_range(-2.0..2.0);
        }
    }
    b.mark_full();
    let boot = (0..n_envs).map(|_| r.random_range(-2.0..2.0)).collect();
    (b, boot)
}

/// Counters from [`walk_env`].
#[derive(Debug, Default)]
pub struct WalkStats {
    pub steps: u64,
    pub episodes: u64,
    pub max_len: u32,
    pub places: u64,
}

/// Uniform random play for `steps` steps, checking after each step that
/// neither agent is on the open road, that held boxes follow their holder
/// and floor boxes stay put, that each step reward equals its event
/// decomposition, and that an episode's return in step-penalty units equals
/// `200·pickups + 400·places − T` exactly. Returns the first violation.
pub fn walk_env(spec: &LevelSpec, seed: u64, steps: u64) -> Result<WalkStats, String> {
    let mut r = rng(seed);
    let (mut s, _, _) = env::reset(spec, 0).map_err(|e| e.to_string())?;
    let mut stats = WalkStats::default();
    let unit = spec.step_penalty;
    let (mut pick_units, mut penalty_units, mut ret_units) = (0i64, 0i64, 0i64);
    while stats.steps < steps {
        let ar = Action::ALL[r.random_range(0..6)];
        let ah = Action::ALL[r.random_range(0..6)];
        let (next, res) = env::step(&s, spec, ar, ah).map_err(|e| e.to_string())?;
        stats.steps += 1;
        check_state(spec, &s, &next)?;
        let ev = res.events;
        let expect = f64::from(ev.robot_pickups) * spec.reward_pickup
            + f64::from(ev.robot_places) * spec.reward_place
            - spec.step_penalty;
        if res.reward_robot.to_bits() != expect.to_bits() {
            return Err(format!(
                "step reward {} != decomposition {expect}",
                res.reward_robot
            ));
        }
        pick_units += i64::from(ev.robot_pickups) * (spec.reward_pickup / unit).round() as i64
            + i64::from(ev.robot_places) * (spec.reward_place / unit).round() as i64;
        penalty_units += 1;
        ret_units += (res.reward_robot / unit).round() as i64;
        let places_now = next
            .boxes
            .iter()
            .filter(|b| b.location == BoxLocation::OnCart)
            .count() as u64;
        if res.terminated || res.truncated {
            if ret_units != pick_units - penalty_units {
                return Err(format!(
                    "return decomposition broke: {ret_units} vs {pick_units} - {penalty_units}"
                ));
            }
            if next.t > spec.max_steps {
                return Err(format!("episode ran {} steps", next.t));
            }
            if res.terminated != (places_now == 2) {
                return Err("termination flag disagrees with the cart".into());
            }
            stats.max_len = stats.max_len.max(next.t);
            stats.places += places_now;
            stats.episodes += 1;
            (pick_units, penalty_units, ret_units) = (0, 0, 0);
            s = env::reset(spec, 0).map_err(|e| e.to_string())?.0;
        } else {
            s = next;
        }
    }
    Ok(stats)
}

fn held_by(agent: Agent) -> BoxLocation {
    match agent {
        Agent::Robot => BoxLocation::HeldByRobot,
        Agent::Human => BoxLocation::HeldByHuman,
    }
}

fn check_state(spec: &LevelSpec, prev: &EnvState, s: &EnvState) -> Result<(), String> {
    if s.robot_pos.x > spec.road_x_range[0] || s.human_pos.x < spec.road_x_range[1] {
        return Err(format!(
            "road incursion: robot {:?} human {:?}",
            s.robot_pos, s.human_pos
        ));
    }
    for (agent, pos) in [(Agent::Robot, s.robot_pos), (Agent::Human, s.human_pos)] {
        if !(0.0..=spec.world_extent.x).contains(&pos.x)
            || !(0.0..=spec.world_extent.y).contains(&pos.y)
        {
            return Err(format!("{agent} left the world at {pos:?}"));
        }
        let held: Vec<usize> = (0..2)
            .filter(|&i| s.boxes[i].location == held_by(agent))
            .collect();
        if held.len() > 1 {
            return Err(format!("{agent} holds two boxes"));
        }
        if let Some(&i) = held.first() {
            if s.boxes[i].pos != pos {
                return Err(format!(
                    "box {i} at {:?} but holder {agent} at {pos:?}",
                    s.boxes[i].pos
                ));
            }
        }
    }
    for (b, pb) in s.boxes.iter().zip(&prev.boxes) {
        match b.location {
            BoxLocation::OnFloor if b.pos != pb.pos => return Err("a floor box moved".into()),
            BoxLocation::OnCart if b.pos != spec.cart_pos => {
                return Err("a carted box is off the cart".into())
            }
            _ if pb.location == BoxLocation::OnCart && b.location != BoxLocation::OnCart => {
                return Err("a box left the cart".into())
            }
            _ => {}
        }
    }
    Ok(())
}
