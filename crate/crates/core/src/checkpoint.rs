//! Checkpoint files: one JSON document holding metadata, both networks, and
//! optionally the optimizer state.
//!
//! Floats are written in shortest round-trip decimal form and parsed back
//! exactly, so `load(save(p)) == p` bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::Agent;
use crate::error::{Error, Result};
use crate::nn::{ActorCriticParams, AdamState, Mlp, ARCHITECTURE};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointMeta {
    pub architecture: String,
    pub seed: u64,
    pub trained_env_steps: u64,
    pub opponent_tag: String,
    pub role: Agent,
    pub rollout: usize,
}

impl CheckpointMeta {
    pub fn new(seed: u64, role: Agent, opponent_tag: impl Into<String>) -> Self {
        CheckpointMeta {
            architecture: ARCHITECTURE.to_string(),
            seed,
            trained_env_steps: 0,
            opponent_tag: opponent_tag.into(),
            role,
            rollout: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub actor: Mlp,
    pub critic: Mlp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<AdamState>,
}

impl Checkpoint {
    pub fn new(
        meta: CheckpointMeta,
        params: ActorCriticParams,
        optimizer: Option<AdamState>,
    ) -> Self {
        Checkpoint {
            meta,
            actor: params.actor,
            critic: params.critic,
            optimizer,
        }
    }

    pub fn params(&self) -> ActorCriticParams {
        ActorCriticParams {
            actor: self.actor.clone(),
            critic: self.critic.clone(),
        }
    }

    pub fn into_params(self) -> ActorCriticParams {
        ActorCriticParams {
            actor: self.actor,
            critic: self.critic,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("checkpoint serializes")
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let ckpt: Checkpoint =
            serde_json::from_slice(bytes).map_err(|e| Error::format("checkpoint", e))?;
        ckpt.params().validate()?;
        if let Some(opt) = &ckpt.optimizer {
            let shape = |p: &ActorCriticParams| p.tensors().map(<[f64]>::len).collect::<Vec<_>>();
            let expect = shape(&ckpt.params());
            if shape(&opt.first_moment) != expect || shape(&opt.second_moment) != expect {
                return Err(Error::shape(
                    "optimizer",
                    "moment shapes differ from parameters",
                ));
            }
        }
        Ok(ckpt)
    }
}

/// Hex SHA-256 of a byte string.
pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(digest_bytes(&bytes))
}

/// Write the checkpoint and return the digest of the written bytes.
pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<String> {
    ckpt.params().validate()?;
    let bytes = ckpt.to_bytes();
    write_atomic(path, &bytes)?;
    Ok(digest_bytes(&bytes))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes).map_err(|e| match e {
        Error::Format { what, detail } => Error::Format {
            what: format!("{what} {}", path.display()),
            detail,
        },
        other => other,
    })
}

/// Write via a temporary sibling and rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
