use blockland_core::checkpoint::{
    digest_bytes, load_checkpoint, save_checkpoint, Checkpoint, CheckpointMeta,
};
use blockland_core::nn::AdamState;
use blockland_core::{ActorCriticParams, Agent, Error};
use proptest::prelude::*;

fn bits(p: &ActorCriticParams) -> Vec<u64> {
    p.tensors().flatten().map(|v| v.to_bits()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn round_trip_is_bitwise(seed in any::<u64>(), values in prop::collection::vec(any::<f64>(), 64)) {
        let mut p = ActorCriticParams::init(seed);
        let finite: Vec<f64> = values.into_iter().filter(|v| v.is_finite()).collect();
        for (slot, v) in p.tensors_mut().flatten().zip(finite.iter().cycle()) {
            *slot = *v;
        }
        let ckpt = Checkpoint::new(CheckpointMeta::new(seed, Agent::Human, "v01"), p.clone(), None);
        let back = Checkpoint::from_bytes(&ckpt.to_bytes()).unwrap();
        prop_assert_eq!(bits(&back.params()), bits(&p));
        // Re-serialising the loaded checkpoint reproduces the bytes and the digest.
        prop_assert_eq!(digest_bytes(&back.to_bytes()), digest_bytes(&ckpt.to_bytes()));
    }
}

#[test]
fn optimizer_state_survives_a_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = ActorCriticParams::init(8);
    let mut adam = AdamState::new(&p);
    adam.step_count = 17;
    for (i, v) in adam.second_moment.tensors_mut().flatten().enumerate() {
        *v = (i as f64).sqrt() * 1e-7;
    }
    let ckpt = Checkpoint::new(CheckpointMeta::new(8, Agent::Robot, "arand"), p, Some(adam));
    let path = dir.path().join("c.json");
    let digest = save_checkpoint(&path, &ckpt).unwrap();
    assert_eq!(digest, digest_bytes(&std::fs::read(&path).unwrap()));
    assert_eq!(load_checkpoint(&path).unwrap(), ckpt);
}

#[test]
fn wrong_shapes_and_missing_files_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let ckpt = Checkpoint::new(
        CheckpointMeta::new(1, Agent::Robot, "arand"),
        ActorCriticParams::init(1),
        None,
    );
    let mut json: serde_json::Value = serde_json::from_slice(&ckpt.to_bytes()).unwrap();
    json["critic"][0]["biases"].as_array_mut().unwrap().pop();
    std::fs::write(&path, serde_json::to_vec(&json).unwrap()).unwrap();
    match load_checkpoint(&path).unwrap_err() {
        Error::Shape { field, .. } | Error::Format { what: field, .. } => {
            assert!(field.contains("critic"), "{field}")
        }
        other => panic!("unexpected {other}"),
    }
    assert!(matches!(
        load_checkpoint(&dir.path().join("none.json")),
        Err(Error::Io { .. })
    ));
}
