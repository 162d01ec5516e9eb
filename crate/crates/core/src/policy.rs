//! Action sources that are not being trained: scripted walkers, frozen
//! checkpoints, and an idle stub.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;

use crate::env::{Action, Observation};
use crate::error::Error;
use crate::nn::{sample_action, ActorCriticParams};
use crate::scripted::{arand_action, natural_walk_action, NaturalWalkState};

/// Built-in scripted human behaviours.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScriptedKind {
    Arand,
    Natural,
}

impl ScriptedKind {
    pub fn tag(self) -> &'static str {
        match self {
            ScriptedKind::Arand => "arand",
            ScriptedKind::Natural => "natural",
        }
    }
}

impl fmt::Display for ScriptedKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ScriptedKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "arand" => Ok(ScriptedKind::Arand),
            "natural" => Ok(ScriptedKind::Natural),
            other => Err(Error::Usage(format!(
                "unknown scripted policy `{other}` (expected arand or natural)"
            ))),
        }
    }
}

/// A non-learning agent controller with per-episode state.
#[derive(Clone, Debug)]
pub enum Controller {
    Arand,
    Natural(NaturalWalkState),
    /// Samples stochastically from a frozen actor.
    Frozen(Arc<ActorCriticParams>),
    /// Always `NoOp`.
    Idle,
}

impl Controller {
    pub fn scripted(kind: ScriptedKind) -> Self {
        match kind {
            ScriptedKind::Arand => Controller::Arand,
            ScriptedKind::Natural => Controller::Natural(NaturalWalkState::default()),
        }
    }

    pub fn begin_episode(&mut self) {
        if let Controller::Natural(state) = self {
            *state = NaturalWalkState::default();
        }
    }

    pub fn act<R: Rng + ?Sized>(&mut self, obs: &Observation, rng: &mut R) -> Action {
        match self {
            Controller::Arand => arand_action(rng),
            Controller::Natural(state) => {
                let (a, next) = natural_walk_action(*state, rng);
                *state = next;
                a
            }
            Controller::Frozen(params) => {
                let logits = params.logits(&obs.0);
                let (a, _) = sample_action(&logits, rng);
                Action::ALL[a]
            }
            Controller::Idle => Action::NoOp,
        }
    }
}
