mod common;

use blockland_core::env::{self, LevelSpec};
use blockland_core::{Action, Agent};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_play_keeps_invariants(seed in any::<u64>()) {
        let stats = common::walk_env(&LevelSpec::twosides(), seed, 5_000);
        prop_assert!(stats.is_ok(), "{:?}", stats.err());
    }

    #[test]
    fn observations_stay_in_unit_box(actions in prop::collection::vec((0usize..6, 0usize..6), 1..400)) {
        let spec = LevelSpec::twosides();
        let (mut s, _, _) = env::reset(&spec, 0).unwrap();
        for (r, h) in actions {
            let (next, res) = env::step(&s, &spec, Action::ALL[r], Action::ALL[h]).unwrap();
            for o in [res.obs_robot, res.obs_human] {
                prop_assert!(o.0.iter().all(|v| (-1.0..=1.0).contains(v)));
            }
            // Each agent sees the other's position where the other sees its own.
            prop_assert_eq!(&res.obs_robot.0[2..4], &res.obs_human.0[0..2]);
            prop_assert_eq!(res.obs_robot.0[10], res.obs_human.0[11]);
            if next.is_done() {
                break;
            }
            s = next;
        }
    }
}

#[test]
fn stepping_after_the_end_is_refused() {
    let spec = LevelSpec::twosides();
    let (mut s, _, _) = env::reset(&spec, 0).unwrap();
    for _ in 0..spec.max_steps {
        s = env::step(&s, &spec, Action::NoOp, Action::NoOp).unwrap().0;
    }
    assert!(s.truncated && !s.terminated);
    assert!(env::step(&s, &spec, Action::NoOp, Action::NoOp)
        .unwrap_err()
        .is_usage());
}

#[test]
fn human_cannot_reach_the_boxes() {
    let spec = LevelSpec::twosides();
    let stats = common::walk_env(&spec, 17, 50_000).unwrap();
    assert!(stats.episodes > 0);
    let (s, _, _) = env::reset(&spec, 0).unwrap();
    let reach = spec.x_bounds(Agent::Human).0;
    for b in s.boxes {
        assert!(reach - b.pos.x > spec.interact_radius);
    }
}
