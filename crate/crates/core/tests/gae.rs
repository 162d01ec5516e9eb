mod common;

use blockland_core::ppo::{compute_gae, EpisodeEnd, RolloutBuffer};
use proptest::prelude::*;

proptest! {
    #[test]
    fn matches_forward_sum(seed in 0u64..100_000, n_envs in 1usize..4, len in 1usize..30,
                           gamma in 0.5f64..1.0, lambda in 0.0f64..=1.0) {
        let (mut buf, boot) = common::random_buffer(seed, n_envs, len);
        let want = common::gae_oracle(&buf, &boot, gamma, lambda);
        let values = buf.values.clone();
        compute_gae(&mut buf, &boot, gamma, lambda).unwrap();
        for i in 0..buf.capacity() {
            prop_assert!((buf.advantages[i] - want[i]).abs() < 1e-10);
            prop_assert!((buf.returns[i] - values[i] - buf.advantages[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn lambda_one_gives_discounted_returns(seed in 0u64..100_000, len in 1usize..30, gamma in 0.5f64..1.0) {
        let (mut buf, boot) = common::random_buffer(seed, 2, len);
        compute_gae(&mut buf, &boot, gamma, 1.0).unwrap();
        for e in 0..2 {
            for t in 0..len {
                let g = common::discounted_return(&buf, &boot, gamma, e, t);
                prop_assert!((buf.returns[e * len + t] - g).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn truncation_bootstraps_and_termination_does_not() {
    let build = |end| {
        let mut b = RolloutBuffer::new(1, 1);
        b.rewards[0] = 1.0;
        b.values[0] = 0.25;
        b.ends[0] = end;
        b.boundary_values[0] = if end == EpisodeEnd::Truncated {
            2.0
        } else {
            0.0
        };
        b.mark_full();
        b
    };
    let mut term = build(EpisodeEnd::Terminated);
    let mut trunc = build(EpisodeEnd::Truncated);
    compute_gae(&mut term, &[100.0], 0.9, 0.95).unwrap();
    compute_gae(&mut trunc, &[100.0], 0.9, 0.95).unwrap();
    assert_eq!(term.advantages[0], 1.0 - 0.25);
    assert_eq!(trunc.advantages[0], 1.0 + 0.9 * 2.0 - 0.25);
}

#[test]
fn refuses_unfilled_or_repeated_computation() {
    let mut b = RolloutBuffer::new(1, 4);
    assert!(compute_gae(&mut b, &[0.0], 0.99, 0.95).is_err());
    b.mark_full();
    assert!(compute_gae(&mut b, &[0.0, 1.0], 0.99, 0.95).is_err());
    compute_gae(&mut b, &[0.0], 0.99, 0.95).unwrap();
    assert!(compute_gae(&mut b, &[0.0], 0.99, 0.95).is_err());
}
