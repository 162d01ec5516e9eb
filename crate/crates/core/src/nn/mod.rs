//! Fixed-architecture actor-critic networks.
//!
//! Two separate tanh MLPs read the same 12-dimensional observation: the actor
//! maps it to 6 action logits, the critic to a scalar value. Gradients are
//! computed by a hand-written reverse pass (see [`loss`]), not by a general
//! autodiff graph.
//!
//! All arithmetic is `f64` and every reduction runs in a fixed sequential
//! order. The single-sample and batched forward passes perform the same
//! floating-point operations in the same order, so they agree bit for bit.

mod adam;
pub mod categorical;
pub mod loss;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::env::{N_ACTIONS, OBS_DIM};
use crate::error::{Error, Result};
use crate::rng::{self, domain};

pub use adam::{adam_update, clip_global_norm, global_norm, AdamState};
pub use categorical::{log_prob_entropy, log_softmax, sample_action, softmax};
pub use loss::{backward, evaluate_loss, LossBreakdown, LossSpec, Minibatch};

pub const HIDDEN: usize = 64;

/// 12·64+64 + 64·64+64 + 64·6+6
pub const ACTOR_PARAM_COUNT: usize = 5_382;
/// 12·64+64 + 64·64+64 + 64·1+1
pub const CRITIC_PARAM_COUNT: usize = 5_057;

pub const HIDDEN_GAIN: f64 = std::f64::consts::SQRT_2;
pub const ACTOR_OUTPUT_GAIN: f64 = 0.01;
pub const CRITIC_OUTPUT_GAIN: f64 = 1.0;

/// Human-readable architecture tag recorded in checkpoints.
pub const ARCHITECTURE: &str =
    "actor mlp 12-64-64-6, critic mlp 12-64-64-1, tanh hidden, linear heads, \
     orthogonal init gains (sqrt2, 0.01, 1.0), zero biases";

/// Dense layer `y = W x + b` with `W` stored row-major as `out × in`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        DenseLayer {
            n_in,
            n_out,
            weights: vec![0.0; n_in * n_out],
            biases: vec![0.0; n_out],
        }
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.n_in + col]
    }

    /// Orthogonal weights scaled by `gain`, zero biases.
    pub fn orthogonal<R: Rng + ?Sized>(n_in: usize, n_out: usize, gain: f64, rng: &mut R) -> Self {
        let mut layer = Self::zeros(n_in, n_out);
        layer.weights = orthogonal_matrix(n_out, n_in, gain, rng);
        layer
    }

    fn forward_one(&self, x: &[f64], y: &mut [f64]) {
        for (i, out) in y.iter_mut().enumerate() {
            let row = &self.weights[i * self.n_in..(i + 1) * self.n_in];
            let mut acc = self.biases[i];
            for (w, xj) in row.iter().zip(x) {
                acc += xj * w;
            }
            *out = acc;
        }
    }

    /// `in × out` copy of the weights, used by the batched pass.
    fn transposed(&self) -> Vec<f64> {
        let mut t = vec![0.0; self.weights.len()];
        for i in 0..self.n_out {
            for j in 0..self.n_in {
                t[j * self.n_out + i] = self.weights[i * self.n_in + j];
            }
        }
        t
    }

    fn forward_batch(&self, wt: &[f64], x: &[f64], y: &mut [f64]) {
        let (n_in, n_out) = (self.n_in, self.n_out);
        for (xb, yb) in x.chunks_exact(n_in).zip(y.chunks_exact_mut(n_out)) {
            yb.copy_from_slice(&self.biases);
            for (j, &xj) in xb.iter().enumerate() {
                let col = &wt[j * n_out..(j + 1) * n_out];
                for (yi, w) in yb.iter_mut().zip(col) {
                    *yi += xj * w;
                }
            }
        }
    }

    fn check(&self, field: &str) -> Result<()> {
        if self.weights.len() != self.n_in * self.n_out || self.biases.len() != self.n_out {
            return Err(Error::shape(field, "inconsistent layer dimensions"));
        }
        if self
            .weights
            .iter()
            .chain(&self.biases)
            .any(|v| !v.is_finite())
        {
            return Err(Error::shape(field, "non-finite entry"));
        }
        Ok(())
    }
}

/// Gaussian matrix → QR → `Q` with positive-diagonal `R`, times `gain`.
#[allow(clippy::needless_range_loop)]
fn orthogonal_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    gain: f64,
    rng: &mut R,
) -> Vec<f64> {
    let flat: Vec<f64> = (0..rows * cols)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    // Work on a tall matrix (n ≥ m), stored column-major as m columns of length n.
    let (n, m, tall_cols): (usize, usize, Vec<Vec<f64>>) = if rows >= cols {
        let c = (0..cols)
            .map(|j| (0..rows).map(|i| flat[i * cols + j]).collect())
            .collect();
        (rows, cols, c)
    } else {
        let c = (0..rows)
            .map(|i| flat[i * cols..(i + 1) * cols].to_vec())
            .collect();
        (cols, rows, c)
    };
    let mut q = tall_cols;
    for _pass in 0..2 {
        for k in 0..m {
            for p in 0..k {
                let dot: f64 = (0..n).map(|i| q[p][i] * q[k][i]).sum();
                for i in 0..n {
                    q[k][i] -= dot * q[p][i];
                }
            }
            let norm = q[k].iter().map(|v| v * v).sum::<f64>().sqrt();
            for v in &mut q[k] {
                *v /= norm;
            }
        }
    }
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = gain * if rows >= cols { q[c][r] } else { q[r][c] };
        }
    }
    out
}

/// Activations kept by a batched forward pass for the reverse pass.
#[derive(Debug)]
pub struct MlpCache {
    /// `acts[l]` is the input to layer `l`; the last entry is the output.
    pub acts: Vec<Vec<f64>>,
    pub batch: usize,
}

impl MlpCache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("non-empty cache")
    }
}

/// Multi-layer perceptron with tanh between layers and a linear head.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
}

impl Mlp {
    pub fn zeros(widths: &[usize]) -> Self {
        Mlp {
            layers: widths
                .windows(2)
                .map(|w| DenseLayer::zeros(w[0], w[1]))
                .collect(),
        }
    }

    pub fn n_in(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn n_out(&self) -> usize {
        self.layers.last().expect("non-empty mlp").n_out
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    pub fn first_layer(&self) -> &DenseLayer {
        &self.layers[0]
    }

    pub fn forward_one(&self, x: &[f64], out: &mut [f64]) {
        let mut cur = x.to_vec();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut next = vec![0.0; layer.n_out];
            layer.forward_one(&cur, &mut next);
            if l < last {
                next.iter_mut().for_each(|v| *v = v.tanh());
            }
            cur = next;
        }
        out.copy_from_slice(&cur);
    }

    /// Batched forward over `x` laid out row-major as `batch × n_in`.
    pub fn forward_batch(&self, x: &[f64]) -> MlpCache {
        let batch = x.len() / self.n_in();
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let wt = layer.transposed();
            let mut y = vec![0.0; batch * layer.n_out];
            layer.forward_batch(&wt, &acts[l], &mut y);
            if l < last {
                y.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(y);
        }
        MlpCache { acts, batch }
    }

    /// Accumulate parameter gradients into `grads` given `d_out`
    /// (`batch × n_out`), the loss gradient at the linear output.
    pub fn backward_batch(&self, cache: &MlpCache, d_out: Vec<f64>, grads: &mut Mlp) {
        let mut delta = d_out;
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let (n_in, n_out) = (layer.n_in, layer.n_out);
            let input = &cache.acts[l];
            let g = &mut grads.layers[l];
            for (db, xb) in delta.chunks_exact(n_out).zip(input.chunks_exact(n_in)) {
                for (i, &d) in db.iter().enumerate() {
                    g.biases[i] += d;
                    let row = &mut g.weights[i * n_in..(i + 1) * n_in];
                    for (gw, x) in row.iter_mut().zip(xb) {
                        *gw += d * x;
                    }
                }
            }
            if l == 0 {
                break;
            }
            let mut dx = vec![0.0; cache.batch * n_in];
            for (db, dxb) in delta.chunks_exact(n_out).zip(dx.chunks_exact_mut(n_in)) {
                for (i, &d) in db.iter().enumerate() {
                    let row = &layer.weights[i * n_in..(i + 1) * n_in];
                    for (v, w) in dxb.iter_mut().zip(row) {
                        *v += d * w;
                    }
                }
            }
            // Input to layer l is tanh output a; d tanh = 1 - a².
            for (v, a) in dx.iter_mut().zip(input) {
                *v *= 1.0 - a * a;
            }
            delta = dx;
        }
    }

    fn tensors(&self) -> impl Iterator<Item = &[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.biases.as_slice()])
    }

    fn tensors_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.biases.as_mut_slice()])
    }
}

/// Parameters of the separate actor and critic networks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActorCriticParams {
    pub actor: Mlp,
    pub critic: Mlp,
}

impl ActorCriticParams {
    pub fn zeros() -> Self {
        let p = ActorCriticParams {
            actor: Mlp::zeros(&[OBS_DIM, HIDDEN, HIDDEN, N_ACTIONS]),
            critic: Mlp::zeros(&[OBS_DIM, HIDDEN, HIDDEN, 1]),
        };
        assert_eq!(p.actor.param_count(), ACTOR_PARAM_COUNT);
        assert_eq!(p.critic.param_count(), CRITIC_PARAM_COUNT);
        p
    }

    /// Orthogonal initialization from a seed.
    pub fn init(seed: u64) -> Self {
        let mut rng = rng::stream(seed, domain::PARAM_INIT, 0);
        let mut p = Self::zeros();
        for net in [&mut p.actor, &mut p.critic] {
            let out_gain = if net.n_out() == 1 {
                CRITIC_OUTPUT_GAIN
            } else {
                ACTOR_OUTPUT_GAIN
            };
            let last = net.layers.len() - 1;
            for (l, layer) in net.layers.iter_mut().enumerate() {
                let gain = if l == last { out_gain } else { HIDDEN_GAIN };
                *layer = DenseLayer::orthogonal(layer.n_in, layer.n_out, gain, &mut rng);
            }
        }
        p
    }

    pub fn param_count(&self) -> usize {
        self.actor.param_count() + self.critic.param_count()
    }

    pub fn n_actions(&self) -> usize {
        self.actor.n_out()
    }

    pub fn forward_actor(&self, obs: &[f64]) -> Result<Vec<f64>> {
        self.check_obs(obs)?;
        let mut out = vec![0.0; self.actor.n_out()];
        self.actor.forward_one(obs, &mut out);
        Ok(out)
    }

    pub fn forward_critic(&self, obs: &[f64]) -> Result<f64> {
        self.check_obs(obs)?;
        let mut out = [0.0];
        self.critic.forward_one(obs, &mut out);
        Ok(out[0])
    }

    /// Logits and value for one canonical observation.
    pub fn act_value(&self, obs: &[f64; OBS_DIM]) -> ([f64; N_ACTIONS], f64) {
        let mut logits = [0.0; N_ACTIONS];
        let mut value = [0.0];
        self.actor.forward_one(obs, &mut logits);
        self.critic.forward_one(obs, &mut value);
        (logits, value[0])
    }

    pub fn logits(&self, obs: &[f64; OBS_DIM]) -> [f64; N_ACTIONS] {
        let mut logits = [0.0; N_ACTIONS];
        self.actor.forward_one(obs, &mut logits);
        logits
    }

    pub fn value(&self, obs: &[f64; OBS_DIM]) -> f64 {
        let mut value = [0.0];
        self.critic.forward_one(obs, &mut value);
        value[0]
    }

    fn check_obs(&self, obs: &[f64]) -> Result<()> {
        if obs.len() != self.actor.n_in() {
            return Err(Error::Usage(format!(
                "observation has {} components, network expects {}",
                obs.len(),
                self.actor.n_in()
            )));
        }
        Ok(())
    }

    /// Checks the 12-input / 6-action / scalar-value contract and finiteness.
    pub fn validate(&self) -> Result<()> {
        for (name, net, widths) in [
            ("actor", &self.actor, [OBS_DIM, HIDDEN, HIDDEN, N_ACTIONS]),
            ("critic", &self.critic, [OBS_DIM, HIDDEN, HIDDEN, 1]),
        ] {
            if net.layers.len() != 3 {
                return Err(Error::shape(
                    name,
                    format!("expected 3 layers, found {}", net.layers.len()),
                ));
            }
            for (l, layer) in net.layers.iter().enumerate() {
                let field = format!("{name}[{l}]");
                layer.check(&field)?;
                if (layer.n_in, layer.n_out) != (widths[l], widths[l + 1]) {
                    return Err(Error::shape(
                        field,
                        format!(
                            "expected {}x{} (out x in), found {}x{}",
                            widths[l + 1],
                            widths[l],
                            layer.n_out,
                            layer.n_in
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    /// All parameter tensors in canonical order: actor layers then critic
    /// layers, each as weights then biases.
    pub fn tensors(&self) -> impl Iterator<Item = &[f64]> {
        self.actor.tensors().chain(self.critic.tensors())
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.actor.tensors_mut().chain(self.critic.tensors_mut())
    }

    pub fn zeros_like(&self) -> Self {
        let zero = |m: &Mlp| Mlp {
            layers: m
                .layers
                .iter()
                .map(|l| DenseLayer::zeros(l.n_in, l.n_out))
                .collect(),
        };
        ActorCriticParams {
            actor: zero(&self.actor),
            critic: zero(&self.critic),
        }
    }
}

/// Parameter-shaped gradient container.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients(pub ActorCriticParams);

impl Gradients {
    pub fn zeros_like(params: &ActorCriticParams) -> Self {
        Gradients(params.zeros_like())
    }

    pub fn tensors(&self) -> impl Iterator<Item = &[f64]> {
        self.0.tensors()
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.0.tensors_mut()
    }

    pub fn flat(&self) -> Vec<f64> {
        self.tensors().flatten().copied().collect()
    }
}

// Checkpoint representation: nested rows for weights.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerRepr {
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

impl Serialize for DenseLayer {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LayerRepr {
            weights: self
                .weights
                .chunks(self.n_in.max(1))
                .map(<[f64]>::to_vec)
                .collect(),
            biases: self.biases.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DenseLayer {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = LayerRepr::deserialize(d)?;
        let n_out = repr.weights.len();
        let n_in = repr.weights.first().map_or(0, Vec::len);
        if repr.weights.iter().any(|r| r.len() != n_in) {
            return Err(D::Error::custom("ragged weight rows"));
        }
        Ok(DenseLayer {
            n_in,
            n_out,
            weights: repr.weights.into_iter().flatten().collect(),
            biases: repr.biases,
        })
    }
}

impl Serialize for Mlp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.layers.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mlp {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(Mlp {
            layers: Vec::deserialize(d)?,
        })
    }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;

    fn gram_error(layer: &DenseLayer, gain: f64) -> f64 {
        // W Wᵀ if rows ≤ cols, else Wᵀ W.
        let (r, c) = (layer.n_out, layer.n_in);
        let w = |i: usize, j: usize| layer.weight(i, j);
        let small = r.min(c);
        let mut worst: f64 = 0.0;
        for a in 0..small {
            for b in 0..small {
                let g: f64 = if r <= c {
                    (0..c).map(|k| w(a, k) * w(b, k)).sum()
                } else {
                    (0..r).map(|k| w(k, a) * w(k, b)).sum()
                };
                let target = if a == b { gain * gain } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    #[test]
    fn parameter_counts() {
        let p = ActorCriticParams::zeros();
        assert_eq!(p.actor.param_count(), 5_382);
        assert_eq!(p.critic.param_count(), 5_057);
        assert_eq!(p.param_count(), 10_439);
    }

    #[test]
    fn orthogonal_init_gains() {
        let p = ActorCriticParams::init(11);
        let gains = [HIDDEN_GAIN, HIDDEN_GAIN];
        for net in [&p.actor, &p.critic] {
            for (l, layer) in net.layers.iter().enumerate() {
                let gain = if l < 2 {
                    gains[l]
                } else if net.n_out() == 1 {
                    CRITIC_OUTPUT_GAIN
                } else {
                    ACTOR_OUTPUT_GAIN
                };
                assert!(gram_error(layer, gain) < 1e-6, "layer {l}");
                assert!(layer.biases.iter().all(|&b| b == 0.0));
            }
        }
    }

    #[test]
    fn init_is_deterministic() {
        assert_eq!(ActorCriticParams::init(3), ActorCriticParams::init(3));
        assert_ne!(ActorCriticParams::init(3), ActorCriticParams::init(4));
    }

    #[test]
    fn zero_params_give_zero_outputs() {
        let p = ActorCriticParams::zeros();
        let obs = [0.3; OBS_DIM];
        assert_eq!(p.forward_actor(&obs).unwrap(), vec![0.0; 6]);
        assert_eq!(p.forward_critic(&obs).unwrap(), 0.0);
    }

    #[test]
    fn forward_rejects_wrong_dimension() {
        let p = ActorCriticParams::zeros();
        assert!(matches!(p.forward_actor(&[0.0; 11]), Err(Error::Usage(_))));
        assert!(matches!(p.forward_critic(&[0.0; 13]), Err(Error::Usage(_))));
    }

    /// Straight-line re-implementation with explicit index arithmetic.
    fn oracle_forward(net: &Mlp, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        for (l, layer) in net.layers.iter().enumerate() {
            let mut z = Vec::new();
            for i in 0..layer.n_out {
                let mut s = 0.0;
                for j in 0..layer.n_in {
                    s += layer.weights[i * layer.n_in + j] * a[j];
                }
                z.push(s + layer.biases[i]);
            }
            if l + 1 < net.layers.len() {
                z = z.into_iter().map(f64::tanh).collect();
            }
            a = z;
        }
        a
    }

    #[test]
    fn forward_matches_straight_line_oracle() {
        let mut rng = rng::stream(99, 0, 0);
        for seed in 0..10 {
            let mut p = ActorCriticParams::init(seed);
            for t in p.tensors_mut() {
                for v in t.iter_mut() {
                    *v += rng.random_range(-0.1..0.1);
                }
            }
            let obs: Vec<f64> = (0..OBS_DIM).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v = p.forward_critic(&obs).unwrap();
            assert!((v - oracle_forward(&p.critic, &obs)[0]).abs() < 1e-12);
            let logits = p.forward_actor(&obs).unwrap();
            for (a, b) in logits.iter().zip(oracle_forward(&p.actor, &obs)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn batch_forward_is_bitwise_single_forward() {
        let p = ActorCriticParams::init(5);
        let mut rng = rng::stream(5, 0, 1);
        let x: Vec<f64> = (0..7 * OBS_DIM)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let cache = p.actor.forward_batch(&x);
        for b in 0..7 {
            let single = p.forward_actor(&x[b * OBS_DIM..(b + 1) * OBS_DIM]).unwrap();
            assert_eq!(&cache.output()[b * 6..(b + 1) * 6], single.as_slice());
        }
    }

    #[test]
    fn serde_shape_roundtrip() {
        let p = ActorCriticParams::init(1);
        let text = serde_json::to_string(&p.actor).unwrap();
        let back: Mlp = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p.actor);
    }
}
