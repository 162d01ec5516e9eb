use std::hint::black_box;

use blockland_bench::filled_buffer;
use blockland_core::env;
use blockland_core::nn::{backward, LossSpec, Minibatch};
use blockland_core::ppo::{compute_gae, ppo_update};
use blockland_core::rng::stream;
use blockland_core::{Action, AdamState, LevelSpec, PpoConfig};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

fn env_step(c: &mut Criterion) {
    let spec = LevelSpec::twosides();
    let (start, _, _) = env::reset(&spec, 0).unwrap();
    let mut state = start.clone();
    let mut k = 0usize;
    c.bench_function("env_step", |b| {
        b.iter(|| {
            k = k.wrapping_add(1);
            let (next, res) =
                env::step(&state, &spec, Action::ALL[k % 6], Action::ALL[(k / 6) % 6]).unwrap();
            state = if next.is_done() { start.clone() } else { next };
            black_box(res.reward_robot)
        })
    });
}

fn forward(c: &mut Criterion) {
    let config = PpoConfig::default();
    let (params, buffer) = filled_buffer(&config, 0);
    let obs: [f64; 12] = buffer.observation(0).try_into().unwrap();
    c.bench_function("actor_critic_forward", |b| {
        b.iter(|| black_box(params.act_value(black_box(&obs))))
    });
}

fn minibatch_backward(c: &mut Criterion) {
    let config = PpoConfig::default();
    let (params, buffer) = filled_buffer(&config, 1);
    let n = config.minibatch_size;
    let mb = Minibatch {
        obs: buffer.obs[..n * 12].to_vec(),
        actions: buffer.actions[..n].to_vec(),
        old_log_probs: buffer.log_probs[..n].to_vec(),
        advantages: buffer.advantages[..n].to_vec(),
        returns: buffer.returns[..n].to_vec(),
    };
    let spec = LossSpec::default();
    c.bench_function("backward_minibatch_64", |b| {
        b.iter(|| black_box(backward(&params, &mb, &spec).unwrap()))
    });
}

fn gae(c: &mut Criterion) {
    let config = PpoConfig::default();
    let (_, buffer) = filled_buffer(&config, 2);
    let boot = vec![0.0; config.n_envs];
    c.bench_function("gae_4096", |b| {
        b.iter_batched(
            || {
                let mut buf = buffer.clone();
                buf.mark_full();
                buf
            },
            |mut buf| compute_gae(&mut buf, &boot, config.gamma, config.gae_lambda).unwrap(),
            BatchSize::LargeInput,
        )
    });
}

fn update(c: &mut Criterion) {
    let config = PpoConfig::default();
    let (params, buffer) = filled_buffer(&config, 3);
    let mut group = c.benchmark_group("ppo_update");
    group.sample_size(10);
    group.bench_function("4096_steps_10_epochs", |b| {
        b.iter_batched(
            || (params.clone(), AdamState::new(&params), stream(3, 2, 0)),
            |(mut p, mut adam, mut rng)| {
                ppo_update(&mut p, &buffer, &mut adam, &config, &mut rng).unwrap()
            },
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

criterion_group!(benches, env_step, forward, minibatch_backward, gae, update);
criterion_main!(benches);
