//! Non-learned human policies: uniform random walk (`arand`) and natural walk.

use rand::Rng;

use crate::env::{Action, N_ACTIONS};

/// Uniform over all six actions.
pub fn arand_action<R: Rng + ?Sized>(rng: &mut R) -> Action {
    Action::ALL[rng.random_range(0..N_ACTIONS)]
}

/// Shortest and longest leg of a natural walk, inclusive.
pub const LEG_MIN: u32 = 5;
pub const LEG_MAX: u32 = 15;

/// Current leg of a natural walk.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NaturalWalkState {
    pub current_direction: Action,
    pub remaining: u32,
}

impl Default for NaturalWalkState {
    /// Expired leg, so the first call draws a fresh direction.
    fn default() -> Self {
        NaturalWalkState {
            current_direction: Action::MoveUp,
            remaining: 0,
        }
    }
}

/// Walk in one direction for 5..=15 steps, then redraw. Never idles or interacts.
pub fn natural_walk_action<R: Rng + ?Sized>(
    state: NaturalWalkState,
    rng: &mut R,
) -> (Action, NaturalWalkState) {
    let mut state = state;
    if state.remaining == 0 {
        state.current_direction = Action::MOVES[rng.random_range(0..Action::MOVES.len())];
        state.remaining = rng.random_range(LEG_MIN..=LEG_MAX);
    }
    state.remaining -= 1;
    (state.current_direction, state)
}
