use serde::{Deserialize, Serialize};

use super::{ActorCriticParams, Gradients};

/// Adam moment accumulators with bias-correction step count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step_count: u64,
    pub first_moment: ActorCriticParams,
    pub second_moment: ActorCriticParams,
}

impl AdamState {
    pub fn new(params: &ActorCriticParams) -> Self {
        AdamState {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-5,
            step_count: 0,
            first_moment: params.zeros_like(),
            second_moment: params.zeros_like(),
        }
    }
}

/// One bias-corrected Adam step, in place.
pub fn adam_update(
    params: &mut ActorCriticParams,
    grads: &Gradients,
    state: &mut AdamState,
    lr: f64,
) {
    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let tensors = params.tensors_mut().zip(grads.tensors()).zip(
        state
            .first_moment
            .tensors_mut()
            .zip(state.second_moment.tensors_mut()),
    );
    for ((p, g), (m, v)) in tensors {
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

/// L2 norm over every gradient component, summed in canonical order.
pub fn global_norm(grads: &Gradients) -> f64 {
    grads.tensors().flatten().map(|g| g * g).sum::<f64>().sqrt()
}

/// Rescale so the global norm is at most `max_norm`. Returns the pre-clip norm.
pub fn clip_global_norm(grads: &mut Gradients, max_norm: f64) -> f64 {
    let norm = global_norm(grads);
    if norm > max_norm {
        let scale = max_norm / norm;
        for t in grads.tensors_mut() {
            t.iter_mut().for_each(|g| *g *= scale);
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand::Rng;

    fn filled(params: &ActorCriticParams, f: impl FnMut() -> f64) -> Gradients {
        let mut g = Gradients::zeros_like(params);
        let mut f = f;
        for t in g.tensors_mut() {
            t.iter_mut().for_each(|v| *v = f());
        }
        g
    }

    #[test]
    fn first_step_closed_form() {
        let mut params = ActorCriticParams::zeros();
        let grads = filled(&params, || 1.0);
        let mut state = AdamState::new(&params);
        adam_update(&mut params, &grads, &mut state, 0.001);
        let expected = -0.001 / (1.0 + 1e-5);
        assert!(params
            .tensors()
            .flatten()
            .all(|&p| (p - expected).abs() < 1e-15));
        assert!((expected + 9.99990e-4).abs() < 1e-9);
        assert_eq!(state.step_count, 1);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut params = ActorCriticParams::init(1);
        let before = params.clone();
        let grads = Gradients::zeros_like(&params);
        let mut state = AdamState::new(&params);
        adam_update(&mut params, &grads, &mut state, 0.001);
        assert_eq!(params, before);
        assert_eq!(state.step_count, 1);
    }

    /// Scalar Adam written from the textbook recurrences.
    fn scalar_adam(theta0: f64, grad: impl Fn(f64) -> f64, steps: usize, lr: f64) -> Vec<f64> {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-5);
        let (mut m, mut v, mut theta) = (0.0, 0.0, theta0);
        let mut out = Vec::new();
        for t in 1..=steps {
            let g = grad(theta);
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t as i32));
            let vh = v / (1.0 - b2.powi(t as i32));
            theta -= lr * mh / (vh.sqrt() + eps);
            out.push(theta);
        }
        out
    }

    #[test]
    fn quadratic_trajectory_matches_scalar_oracle() {
        // f(θ) = 1.5 (θ - 0.3)², applied independently to every coordinate.
        let grad = |th: f64| 3.0 * (th - 0.3);
        let mut params = ActorCriticParams::zeros();
        for t in params.tensors_mut() {
            t.iter_mut().for_each(|p| *p = 2.0);
        }
        let mut state = AdamState::new(&params);
        let oracle = scalar_adam(2.0, grad, 10, 0.05);
        for expected in oracle {
            let g = {
                let mut g = Gradients::zeros_like(&params);
                for (gt, pt) in g.tensors_mut().zip(params.tensors()) {
                    for (gi, pi) in gt.iter_mut().zip(pt) {
                        *gi = grad(*pi);
                    }
                }
                g
            };
            adam_update(&mut params, &g, &mut state, 0.05);
            for p in params.tensors().flatten() {
                assert!((p - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn clip_halves_unit_norm() {
        let params = ActorCriticParams::zeros();
        let n = params.param_count() as f64;
        let mut g = filled(&params, || 1.0 / n.sqrt());
        let before = g.flat();
        let norm = clip_global_norm(&mut g, 0.5);
        assert!((norm - 1.0).abs() < 1e-12);
        for (a, b) in g.flat().iter().zip(&before) {
            assert!((a - 0.5 * b).abs() < 1e-15);
        }
    }

    #[test]
    fn clip_leaves_small_norm() {
        let params = ActorCriticParams::zeros();
        let n = params.param_count() as f64;
        let mut g = filled(&params, || 0.3 / n.sqrt());
        let before = g.clone();
        clip_global_norm(&mut g, 0.5);
        assert_eq!(g, before);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn clipped_norm_bounded(seed in 0u64..10_000, scale in 0.01f64..100.0) {
            let params = ActorCriticParams::zeros();
            let mut rng = stream(seed, 0, 0);
            let mut g = filled(&params, || scale * rng.random_range(-1.0..1.0));
            clip_global_norm(&mut g, 0.5);
            let recomputed = g.flat().iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(recomputed <= 0.5 * (1.0 + 1e-12));
        }
    }
}
