mod common;

use blockland_core::nn::{backward, evaluate_loss, LossSpec};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn loss_matches_straight_line_oracle(seed in 0u64..10_000, n in 1usize..24) {
        let spec = LossSpec::default();
        let (p, mb) = common::fd_case(seed, n, spec.clip_range, 0.0);
        let got = evaluate_loss(&p, &mb, &spec).unwrap().total;
        let want = common::oracle_loss(&p, &mb, spec.clip_range, spec.ent_coef, spec.vf_coef);
        prop_assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn clip_fraction_is_a_fraction(seed in 0u64..10_000, n in 1usize..24) {
        let spec = LossSpec::default();
        let (p, mb) = common::fd_case(seed, n, spec.clip_range, 0.0);
        let l = evaluate_loss(&p, &mb, &spec).unwrap();
        prop_assert!((0.0..=1.0).contains(&l.clip_fraction));
        let k = l.clip_fraction * n as f64;
        prop_assert!((k - k.round()).abs() < 1e-9);
    }
}

#[test]
fn finite_differences_on_a_small_batch() {
    let spec = LossSpec::default();
    let (p, mb) = common::fd_case(99, 3, spec.clip_range, 1e-2);
    let (_, g) = backward(&p, &mb, &spec).unwrap();
    let fd = common::fd_gradient(&p, 1e-5, |q| {
        common::oracle_loss(q, &mb, spec.clip_range, spec.ent_coef, spec.vf_coef)
    });
    let worst = g
        .flat()
        .iter()
        .zip(&fd)
        .map(|(a, n)| common::rel_err(*a, *n, 1e-6))
        .fold(0.0, f64::max);
    assert!(worst < 1e-4, "max relative error {worst}");
}

#[test]
fn clipped_samples_carry_no_policy_gradient() {
    // Every ratio far above 1 + ε with positive advantage: the policy term is
    // flat, so with no entropy or value term the actor gradient vanishes.
    let spec = LossSpec {
        ent_coef: 0.0,
        vf_coef: 0.0,
        ..LossSpec::default()
    };
    let (p, mut mb) = common::fd_case(5, 6, spec.clip_range, 0.0);
    for b in 0..mb.actions.len() {
        mb.old_log_probs[b] -= 2.0;
        mb.advantages[b] = mb.advantages[b].abs() + 0.1;
    }
    let (l, g) = backward(&p, &mb, &spec).unwrap();
    assert_eq!(l.clip_fraction, 1.0);
    assert!(g.flat().iter().all(|&v| v == 0.0));
}
