//! The Blockland `twosides` level.
//!
//! Two agents share a rectangular world split by a vertical road that neither
//! may cross. The robot lives on the low-x side together with two boxes and a
//! cart; the human lives on the high-x side. Positions are continuous, actions
//! are discrete, and every transition is a pure function of the current state
//! and the two chosen actions.
//!
//! Action encoding (fixed):
//!
//! | index | action     | effect              |
//! |-------|------------|---------------------|
//! | 0     | `MoveUp`   | `y += move_step`    |
//! | 1     | `MoveDown` | `y -= move_step`    |
//! | 2     | `MoveLeft` | `x -= move_step`    |
//! | 3     | `MoveRight`| `x += move_step`    |
//! | 4     | `NoOp`     | nothing             |
//! | 5     | `Interact` | pick up / place     |
//!
//! Within one step the robot's action is resolved before the human's.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Length of every observation vector.
pub const OBS_DIM: usize = 12;
/// Number of discrete actions.
pub const N_ACTIONS: usize = 6;

/// Default level document shipped with the crate.
pub const TWOSIDES_JSON: &str = include_str!("../levels/twosides.json");

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Immutable geometry, reward constants and episode limit of a level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSpec {
    pub name: String,
    /// Upper corner of the world; the lower corner is the origin.
    pub world_extent: Point,
    /// Closed x-interval neither agent may enter the interior of.
    pub road_x_range: [f64; 2],
    pub robot_spawn: Point,
    pub human_spawn: Point,
    pub box_spawns: [Point; 2],
    pub cart_pos: Point,
    pub move_step: f64,
    pub interact_radius: f64,
    pub max_steps: u32,
    pub reward_pickup: f64,
    pub reward_place: f64,
    pub step_penalty: f64,
}

impl LevelSpec {
    /// The canonical `twosides` level.
    pub fn twosides() -> Self {
        LevelSpec {
            name: "twosides".to_string(),
            world_extent: Point::new(12.0, 8.0),
            road_x_range: [5.0, 7.0],
            robot_spawn: Point::new(2.5, 4.0),
            human_spawn: Point::new(9.5, 4.0),
            box_spawns: [Point::new(1.0, 1.0), Point::new(4.0, 7.0)],
            cart_pos: Point::new(1.0, 7.0),
            move_step: 0.25,
            interact_radius: 1.0,
            max_steps: 500,
            reward_pickup: 1.0,
            reward_place: 2.0,
            step_penalty: 0.005,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: LevelSpec =
            serde_json::from_str(text).map_err(|e| Error::format("level spec", e))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("level spec serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Maximum episodic return before step penalties.
    pub fn max_task_return(&self) -> f64 {
        2.0 * (self.reward_pickup + self.reward_place)
    }

    pub fn road_low(&self) -> f64 {
        self.road_x_range[0]
    }

    pub fn road_high(&self) -> f64 {
        self.road_x_range[1]
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("level `{}`: {msg}", self.name)));
        let [lo, hi] = self.road_x_range;
        let ext = self.world_extent;
        let finite = [
            ext.x,
            ext.y,
            lo,
            hi,
            self.move_step,
            self.interact_radius,
            self.reward_pickup,
            self.reward_place,
            self.step_penalty,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("non-finite constant".into());
        }
        if !(ext.x > 0.0 && ext.y > 0.0) {
            return bad("world extent must be positive".into());
        }
        if !(0.0 < lo && lo < hi && hi < ext.x) {
            return bad(format!(
                "road [{lo}, {hi}] must lie strictly inside the world"
            ));
        }
        if !(self.move_step > 0.0 && self.interact_radius > 0.0) {
            return bad("move_step and interact_radius must be positive".into());
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        let in_world = |p: Point| p.x >= 0.0 && p.x <= ext.x && p.y >= 0.0 && p.y <= ext.y;
        let mut robot_side = vec![
            ("robot_spawn", self.robot_spawn),
            ("cart_pos", self.cart_pos),
        ];
        robot_side.push(("box_spawns[0]", self.box_spawns[0]));
        robot_side.push(("box_spawns[1]", self.box_spawns[1]));
        for (name, p) in robot_side {
            if !in_world(p) || p.x >= lo {
                return bad(format!(
                    "{name} ({}, {}) must lie on the robot side",
                    p.x, p.y
                ));
            }
        }
        let h = self.human_spawn;
        if !in_world(h) || h.x <= hi {
            return bad(format!(
                "human_spawn ({}, {}) must lie on the human side",
                h.x, h.y
            ));
        }
        Ok(())
    }

    /// Affine map of a world position onto `[-1, 1]^2`.
    pub fn scale(&self, p: Point) -> (f64, f64) {
        (
            2.0 * p.x / self.world_extent.x - 1.0,
            2.0 * p.y / self.world_extent.y - 1.0,
        )
    }

    /// Legal x-interval for an agent.
    pub fn x_bounds(&self, agent: Agent) -> (f64, f64) {
        match agent {
            Agent::Robot => (0.0, self.road_low()),
            Agent::Human => (self.road_high(), self.world_extent.x),
        }
    }
}

impl Default for LevelSpec {
    fn default() -> Self {
        Self::twosides()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Agent {
    Robot,
    Human,
}

impl Agent {
    pub fn other(self) -> Agent {
        match self {
            Agent::Robot => Agent::Human,
            Agent::Human => Agent::Robot,
        }
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Agent::Robot => f.write_str("robot"),
            Agent::Human => f.write_str("human"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Action {
    MoveUp = 0,
    MoveDown = 1,
    MoveLeft = 2,
    MoveRight = 3,
    NoOp = 4,
    Interact = 5,
}

impl Action {
    pub const ALL: [Action; N_ACTIONS] = [
        Action::MoveUp,
        Action::MoveDown,
        Action::MoveLeft,
        Action::MoveRight,
        Action::NoOp,
        Action::Interact,
    ];

    pub const MOVES: [Action; 4] = [
        Action::MoveUp,
        Action::MoveDown,
        Action::MoveLeft,
        Action::MoveRight,
    ];

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_move(self) -> bool {
        self.index() < 4
    }

    fn displacement(self, step: f64) -> (f64, f64) {
        match self {
            Action::MoveUp => (0.0, step),
            Action::MoveDown => (0.0, -step),
            Action::MoveLeft => (-step, 0.0),
            Action::MoveRight => (step, 0.0),
            Action::NoOp | Action::Interact => (0.0, 0.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoxLocation {
    OnFloor,
    HeldByRobot,
    HeldByHuman,
    OnCart,
}

impl BoxLocation {
    fn held_by(agent: Agent) -> Self {
        match agent {
            Agent::Robot => BoxLocation::HeldByRobot,
            Agent::Human => BoxLocation::HeldByHuman,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxState {
    pub pos: Point,
    pub location: BoxLocation,
}

/// Full world state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub t: u32,
    pub robot_pos: Point,
    pub human_pos: Point,
    pub boxes: [BoxState; 2],
    pub terminated: bool,
    pub truncated: bool,
}

impl EnvState {
    pub fn pos(&self, agent: Agent) -> Point {
        match agent {
            Agent::Robot => self.robot_pos,
            Agent::Human => self.human_pos,
        }
    }

    fn pos_mut(&mut self, agent: Agent) -> &mut Point {
        match agent {
            Agent::Robot => &mut self.robot_pos,
            Agent::Human => &mut self.human_pos,
        }
    }

    /// Index of the box `agent` is holding, if any.
    pub fn held_box(&self, agent: Agent) -> Option<usize> {
        let loc = BoxLocation::held_by(agent);
        self.boxes.iter().position(|b| b.location == loc)
    }

    pub fn is_done(&self) -> bool {
        self.terminated || self.truncated
    }
}

/// Egocentric 12-component observation:
/// `[self_x, self_y, other_x, other_y, box1_x, box1_y, box2_x, box2_y,
///   cart_x, cart_y, self_held, other_held]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation(pub [f64; OBS_DIM]);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Index<usize> for Observation {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Reward-bearing events of one step, split by agent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepEvents {
    pub robot_pickups: u8,
    pub robot_places: u8,
    pub human_pickups: u8,
    pub human_places: u8,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub obs_robot: Observation,
    pub obs_human: Observation,
    pub reward_robot: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub events: StepEvents,
}

/// Initial state and both observations. The state does not depend on `seed`;
/// the seed only names the episode for downstream random streams.
pub fn reset(spec: &LevelSpec, _seed: u64) -> Result<(EnvState, Observation, Observation)> {
    spec.validate()?;
    let state = EnvState {
        t: 0,
        robot_pos: spec.robot_spawn,
        human_pos: spec.human_spawn,
        boxes: spec.box_spawns.map(|pos| BoxState {
            pos,
            location: BoxLocation::OnFloor,
        }),
        terminated: false,
        truncated: false,
    };
    let obs_r = observe(&state, spec, Agent::Robot);
    let obs_h = observe(&state, spec, Agent::Human);
    Ok((state, obs_r, obs_h))
}

pub fn observe(state: &EnvState, spec: &LevelSpec, agent: Agent) -> Observation {
    let (sx, sy) = spec.scale(state.pos(agent));
    let (ox, oy) = spec.scale(state.pos(agent.other()));
    let (b1x, b1y) = spec.scale(state.boxes[0].pos);
    let (b2x, b2y) = spec.scale(state.boxes[1].pos);
    let (cx, cy) = spec.scale(spec.cart_pos);
    let held = |a: Agent| {
        if state.held_box(a).is_some() {
            1.0
        } else {
            0.0
        }
    };
    Observation([
        sx,
        sy,
        ox,
        oy,
        b1x,
        b1y,
        b2x,
        b2y,
        cx,
        cy,
        held(agent),
        held(agent.other()),
    ])
}

/// What one agent's interaction produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Interaction {
    None,
    Pickup,
    Place,
}

fn apply_action(
    state: &mut EnvState,
    spec: &LevelSpec,
    agent: Agent,
    action: Action,
) -> Interaction {
    match action {
        Action::NoOp => Interaction::None,
        Action::Interact => interact(state, spec, agent),
        _ => {
            let (dx, dy) = action.displacement(spec.move_step);
            let (x_lo, x_hi) = spec.x_bounds(agent);
            let p = state.pos_mut(agent);
            p.x = (p.x + dx).clamp(x_lo, x_hi);
            p.y = (p.y + dy).clamp(0.0, spec.world_extent.y);
            let p = *p;
            if let Some(i) = state.held_box(agent) {
                state.boxes[i].pos = p;
            }
            Interaction::None
        }
    }
}

fn interact(state: &mut EnvState, spec: &LevelSpec, agent: Agent) -> Interaction {
    let me = state.pos(agent);
    if let Some(i) = state.held_box(agent) {
        if me.distance(spec.cart_pos) <= spec.interact_radius {
            state.boxes[i] = BoxState {
                pos: spec.cart_pos,
                location: BoxLocation::OnCart,
            };
            return Interaction::Place;
        }
        return Interaction::None;
    }
    // Nearest floor box in reach; ties go to the lower index.
    let mut best: Option<(usize, f64)> = None;
    for (i, b) in state.boxes.iter().enumerate() {
        if b.location != BoxLocation::OnFloor {
            continue;
        }
        let d = me.distance(b.pos);
        if d <= spec.interact_radius && best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    match best {
        Some((i, _)) => {
            state.boxes[i] = BoxState {
                pos: me,
                location: BoxLocation::held_by(agent),
            };
            Interaction::Pickup
        }
        None => Interaction::None,
    }
}

/// Advance the world by one step. Pure: the input state is left untouched.
pub fn step(
    state: &EnvState,
    spec: &LevelSpec,
    a_robot: Action,
    a_human: Action,
) -> Result<(EnvState, StepResult)> {
    if state.is_done() {
        return Err(Error::Usage("step called after the episode ended".into()));
    }
    let mut next = state.clone();
    let mut events = StepEvents::default();
    match apply_action(&mut next, spec, Agent::Robot, a_robot) {
        Interaction::Pickup => events.robot_pickups += 1,
        Interaction::Place => events.robot_places += 1,
        Interaction::None => {}
    }
    match apply_action(&mut next, spec, Agent::Human, a_human) {
        Interaction::Pickup => events.human_pickups += 1,
        Interaction::Place => events.human_places += 1,
        Interaction::None => {}
    }
    next.t += 1;
    let reward_robot = f64::from(events.robot_pickups) * spec.reward_pickup
        + f64::from(events.robot_places) * spec.reward_place
        - spec.step_penalty;
    next.terminated = next.boxes.iter().all(|b| b.location == BoxLocation::OnCart);
    next.truncated = !next.terminated && next.t >= spec.max_steps;
    let result = StepResult {
        obs_robot: observe(&next, spec, Agent::Robot),
        obs_human: observe(&next, spec, Agent::Human),
        reward_robot,
        terminated: next.terminated,
        truncated: next.truncated,
        events,
    };
    Ok((next, result))
}

/// Robot's accumulated reward over one episode's trace.
pub fn episode_return(trace: &[StepResult]) -> f64 {
    trace.iter().map(|s| s.reward_robot).sum()
}

/// Owning wrapper around a level and its live state.
#[derive(Clone, Debug)]
pub struct Blockland {
    spec: LevelSpec,
    state: EnvState,
}

impl Blockland {
    pub fn new(spec: LevelSpec) -> Result<Self> {
        let (state, _, _) = reset(&spec, 0)?;
        Ok(Blockland { spec, state })
    }

    pub fn spec(&self) -> &LevelSpec {
        &self.spec
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn reset(&mut self, seed: u64) -> Result<(Observation, Observation)> {
        let (state, r, h) = reset(&self.spec, seed)?;
        self.state = state;
        Ok((r, h))
    }

    pub fn step(&mut self, a_robot: Action, a_human: Action) -> Result<StepResult> {
        let (next, result) = step(&self.state, &self.spec, a_robot, a_human)?;
        self.state = next;
        Ok(result)
    }

    pub fn observe(&self, agent: Agent) -> Observation {
        observe(&self.state, &self.spec, agent)
    }
}
