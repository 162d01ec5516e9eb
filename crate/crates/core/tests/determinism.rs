use std::path::Path;

use blockland_core::policy::ScriptedKind;
use blockland_core::ppo::{train, OpponentSpec, Stepping, TrainRequest};
use blockland_core::{Agent, LevelSpec, PpoConfig};

fn tiny_config() -> PpoConfig {
    PpoConfig {
        n_envs: 4,
        rollout_len: 128,
        total_steps: 1024,
        minibatch_size: 64,
        epochs: 2,
        checkpoint_every: 1,
        ..PpoConfig::default()
    }
}

fn request(dir: &Path, seed: u64, stepping: Stepping) -> TrainRequest {
    TrainRequest {
        level: LevelSpec::twosides(),
        learner: Agent::Robot,
        opponent: OpponentSpec::Scripted(ScriptedKind::Natural),
        config: tiny_config(),
        seed,
        run_dir: dir.to_path_buf(),
        stepping,
        command: "test".into(),
        labels: Default::default(),
    }
}

fn outputs(dir: &Path) -> (Vec<u8>, Vec<u8>) {
    (
        std::fs::read(dir.join("final.json")).unwrap(),
        std::fs::read(dir.join("training_log.csv")).unwrap(),
    )
}

#[test]
fn same_seed_same_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    let oa = train(&request(&a, 7, Stepping::Sequential)).unwrap();
    let ob = train(&request(&b, 7, Stepping::Sequential)).unwrap();
    train(&request(&c, 8, Stepping::Sequential)).unwrap();
    assert_eq!(oa.final_digest, ob.final_digest);
    assert_eq!(outputs(&a), outputs(&b));
    assert_ne!(outputs(&a).0, outputs(&c).0);
    assert_eq!(oa.rollouts, 2);
    assert_eq!(oa.checkpoints.len(), 3);
}

#[test]
fn parallel_collection_matches_sequential() {
    let tmp = tempfile::tempdir().unwrap();
    let seq = tmp.path().join("seq");
    let par = tmp.path().join("par");
    train(&request(&seq, 11, Stepping::Sequential)).unwrap();
    train(&request(&par, 11, Stepping::Parallel { threads: 8 })).unwrap();
    assert_eq!(outputs(&seq), outputs(&par));
}
