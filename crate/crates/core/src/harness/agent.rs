use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::checkpoint::{file_digest, load_checkpoint};
use crate::env::Agent;
use crate::error::{Error, Result};
use crate::policy::{Controller, ScriptedKind};
use crate::ppo::FINAL_FILE;

/// Something that can play one side of an episode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AgentRef {
    Scripted(ScriptedKind),
    Checkpoint { path: PathBuf, role: Agent },
}

impl AgentRef {
    /// `arand` and `natural` name the scripted walkers; anything else is a
    /// checkpoint path. A run directory stands for its `final.json`.
    pub fn parse(text: &str, role: Agent) -> Self {
        if let Ok(kind) = text.parse::<ScriptedKind>() {
            return AgentRef::Scripted(kind);
        }
        let path = PathBuf::from(text);
        let path = if path.is_dir() {
            path.join(FINAL_FILE)
        } else {
            path
        };
        AgentRef::Checkpoint { path, role }
    }

    /// Short identifier: the scripted tag, or the run directory name for a
    /// `final.json`, or the file stem otherwise.
    pub fn id(&self) -> String {
        match self {
            AgentRef::Scripted(k) => k.tag().to_string(),
            AgentRef::Checkpoint { path, .. } => checkpoint_id(path),
        }
    }

    /// Load into a controller. Checkpoints must carry the expected role.
    pub fn resolve(&self) -> Result<ResolvedAgent> {
        match self {
            AgentRef::Scripted(k) => Ok(ResolvedAgent {
                id: self.id(),
                controller: Controller::scripted(*k),
                digest: None,
            }),
            AgentRef::Checkpoint { path, role } => {
                if !path.is_file() {
                    return Err(Error::Usage(format!("no checkpoint at {}", path.display())));
                }
                let ckpt = load_checkpoint(path)?;
                if ckpt.meta.role != *role {
                    return Err(Error::Usage(format!(
                        "{} was trained as the {}, expected a {} policy",
                        path.display(),
                        ckpt.meta.role,
                        role
                    )));
                }
                Ok(ResolvedAgent {
                    id: self.id(),
                    controller: Controller::Frozen(Arc::new(ckpt.into_params())),
                    digest: Some(file_digest(path)?),
                })
            }
        }
    }
}

impl fmt::Display for AgentRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentRef::Scripted(k) => write!(f, "{k}"),
            AgentRef::Checkpoint { path, .. } => write!(f, "{}", path.display()),
        }
    }
}

pub(crate) fn checkpoint_id(path: &Path) -> String {
    let is_final = path.file_name().is_some_and(|n| n == FINAL_FILE);
    let named = if is_final {
        path.parent().and_then(Path::file_name)
    } else {
        path.file_stem()
    };
    named.map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    )
}

#[derive(Clone, Debug)]
pub struct ResolvedAgent {
    pub id: String,
    pub controller: Controller,
    pub digest: Option<String>,
}
