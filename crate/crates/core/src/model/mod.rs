//! The parametric hybrid game automaton of the vehicle: dynamics, scopes,
//! goal and unsafe predicates, costs and mode transitions.

mod game;
mod params;
mod task;

use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::geom::{Box3, Box6, GridVec, StateVec};

pub use game::{stage_cost, terminal_cost, ModalGame};
pub use params::{quadratic, ControlSet, DisturbanceSet, GameParams, Padding};
pub use task::{unsafe_static, Grid, SafetyRadius, Task};

/// Gravity of the full flow. The isolated dynamics used for synthesis drop
/// it; lower-level stability control compensates.
pub const GRAVITY: GridVec = GridVec::new(0, 0, -10);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("grid has a zero dimension")]
    EmptyGrid,
    #[error("grid exceeds 2^31 cells")]
    GridTooLarge,
    #[error("safety radius needs a non-zero denominator")]
    InvalidSafetyRadius,
    #[error("obstacle {0} lies outside the grid")]
    ObstacleOutsideGrid(GridVec),
    #[error("invalid game parameters: {0}")]
    InvalidParams(&'static str),
    #[error("waypoint index {0} is outside the route")]
    WaypointOutOfRange(u32),
    #[error("scope is empty after intersecting with the grid")]
    DegenerateScope,
    #[error("mode {0} has no successor mode to derive a goal from")]
    NoSuccessorMode(Mode),
    #[error("goal region minus unsafe set is empty")]
    EmptyGoal,
    #[error("cost weights may overflow 32-bit values over the horizon")]
    CostOverflow,
    #[error("event {event} is not enabled in mode {mode}")]
    EventNotEnabled { mode: Mode, event: Event },
}

/// Discrete modes of the tactical controller.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Standby,
    Depart,
    Cruise,
    Arrive,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Standby, Mode::Depart, Mode::Cruise, Mode::Arrive];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Standby => "standby",
            Mode::Depart => "depart",
            Mode::Cruise => "cruise",
            Mode::Arrive => "arrive",
        }
    }

    pub fn from_name(s: &str) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Modes governed by the flying dynamics; standby is stationary.
    pub fn is_flying(self) -> bool {
        !matches!(self, Mode::Standby)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Jumps of the automaton.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Event {
    /// standby → depart, globally enabled.
    Start,
    /// depart → cruise once the first segment's cuboid is entered.
    ToCruise,
    /// cruise → cruise on segment completion.
    Advance,
    /// cruise → arrive once the landing column is entered.
    ToArrive,
    /// arrive → standby on touchdown.
    Land,
}

impl Event {
    pub const ALL: [Event; 5] = [
        Event::Start,
        Event::ToCruise,
        Event::Advance,
        Event::ToArrive,
        Event::Land,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Event::Start => "start",
            Event::ToCruise => "to_cruise",
            Event::Advance => "advance",
            Event::ToArrive => "to_arrive",
            Event::Land => "land",
        }
    }

    pub fn from_name(s: &str) -> Option<Event> {
        Event::ALL.into_iter().find(|e| e.name() == s)
    }

    pub fn target(self) -> Mode {
        match self {
            Event::Start => Mode::Depart,
            Event::ToCruise | Event::Advance => Mode::Cruise,
            Event::ToArrive => Mode::Arrive,
            Event::Land => Mode::Standby,
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `s = (q, x)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HybridState {
    pub q: Mode,
    pub x: StateVec,
}

impl HybridState {
    pub fn new(q: Mode, x: StateVec) -> Self {
        HybridState { q, x }
    }

    /// The initial state: standby on `p_1`, at rest, heading for waypoint 1.
    pub fn initial(task: &Task) -> Option<Self> {
        let p1 = task.waypoint(1)?;
        Some(HybridState::new(
            Mode::Standby,
            StateVec::new(p1, GridVec::ZERO, 1),
        ))
    }
}

/// State space of one modal game: a position × velocity box with the
/// waypoint index fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Scope {
    pub bounds: Box6,
    pub waypoint: u32,
}

impl Scope {
    pub fn contains(&self, x: &StateVec) -> bool {
        x.i == self.waypoint && self.bounds.contains(x.p, x.v)
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    /// Position box grown by `delta` and clipped to the grid.
    pub fn extended(&self, delta: i32, grid: &Grid) -> Scope {
        Scope {
            bounds: Box6 {
                p: self.bounds.p.pad(delta).intersect(&grid.bounds()),
                v: self.bounds.v,
            },
            waypoint: self.waypoint,
        }
    }
}

/// Goal region `ρ` of a modal game as a position × velocity box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GoalRegion {
    pub position: Box3,
    pub velocity: Box3,
}

impl GoalRegion {
    pub fn contains(&self, x: &StateVec) -> bool {
        self.position.contains(x.p) && self.velocity.contains(x.v)
    }
}

/// One forward-Euler step of the isolated flying dynamics with unit time step:
/// `p' = p + v`, `v' = v + u + d`, index unchanged.
#[inline]
pub fn step_dynamics(x: StateVec, u: GridVec, d: GridVec) -> StateVec {
    StateVec::new(x.p + x.v, x.v + u + d, x.i)
}

fn route_len(task: &Task) -> u32 {
    task.route().len() as u32
}

/// Transition cuboid of `s`: a vertical column over `p_i` for depart, arrive
/// and standby, and the padded bounding box of `(p, p_i)` for cruise. Clipped
/// to the grid and to `[±v_max]^3`.
pub fn compute_scope(
    s: &HybridState,
    task: &Task,
    params: &GameParams,
) -> Result<Scope, ModelError> {
    let i = s.x.i;
    let target = task.waypoint(i).ok_or(ModelError::WaypointOutOfRange(i))?;
    let pad = params.padding(s.q);
    let p = s.x.p;
    let position = match s.q {
        Mode::Depart | Mode::Arrive | Mode::Standby => Box3::new(
            GridVec::new(target.x - pad.position, target.y - pad.position, 0),
            GridVec::new(
                target.x + pad.position,
                target.y + pad.position,
                p.z.max(target.z) + pad.position,
            ),
        ),
        Mode::Cruise => Box3::spanning(p, target).pad(pad.position),
    };
    let velocity = Box3::cube(GridVec::ZERO, pad.velocity)
        .intersect(&Box3::cube(GridVec::ZERO, params.v_max));
    let bounds = Box6 {
        p: position.intersect(&task.grid().bounds()),
        v: velocity,
    };
    if bounds.is_empty() {
        return Err(ModelError::DegenerateScope);
    }
    Ok(Scope {
        bounds,
        waypoint: i,
    })
}

/// Mode entered when the modal game of `s` is won, if any.
pub fn successor_mode(s: &HybridState, task: &Task) -> Option<Mode> {
    let n = route_len(task);
    match s.q {
        Mode::Depart if s.x.i < n => Some(Mode::Cruise),
        Mode::Cruise if s.x.i + 1 < n => Some(Mode::Cruise),
        Mode::Cruise if s.x.i + 1 == n => Some(Mode::Arrive),
        _ => None,
    }
}

/// `ρ` for depart and cruise: the scope of the jump target
/// `s⁺⁺ = (q', (p_i, 0, i + 1))`, i.e. the cuboid of the next segment (or the
/// landing column before arrival).
pub fn goal_region(
    s: &HybridState,
    task: &Task,
    params: &GameParams,
) -> Result<GoalRegion, ModelError> {
    let next = successor_mode(s, task).ok_or(ModelError::NoSuccessorMode(s.q))?;
    let here = task
        .waypoint(s.x.i)
        .ok_or(ModelError::WaypointOutOfRange(s.x.i))?;
    let target = HybridState::new(next, StateVec::new(here, GridVec::ZERO, s.x.i + 1));
    let scope = compute_scope(&target, task, params)?;
    Ok(GoalRegion {
        position: scope.bounds.p,
        velocity: scope.bounds.v,
    })
}

/// Touchdown region of the arrive game: ground level inside the landing
/// column with zero vertical speed.
pub fn landing_region(
    s: &HybridState,
    task: &Task,
    params: &GameParams,
) -> Result<GoalRegion, ModelError> {
    let scope = compute_scope(s, task, params)?;
    let mut position = scope.bounds.p;
    let mut velocity = scope.bounds.v;
    position.lo.z = 0;
    position.hi.z = 0;
    velocity.lo.z = 0;
    velocity.hi.z = 0;
    Ok(GoalRegion { position, velocity })
}

/// Goal of the modal game played in `s`.
pub fn modal_goal(
    s: &HybridState,
    task: &Task,
    params: &GameParams,
) -> Result<GoalRegion, ModelError> {
    match s.q {
        Mode::Arrive => landing_region(s, task, params),
        _ => goal_region(s, task, params),
    }
}

fn landed(x: &StateVec) -> bool {
    x.p.z == 0 && x.v.z == 0
}

/// Guard-satisfied jumps out of `s`, in priority order. Guards act as
/// triggers: a flying mode's exit is enabled as soon as its goal region is
/// entered.
pub fn enabled_events(s: &HybridState, task: &Task, params: &GameParams) -> Vec<Event> {
    let mut out = Vec::new();
    match s.q {
        Mode::Standby => out.push(Event::Start),
        Mode::Depart | Mode::Cruise => {
            if let Ok(goal) = goal_region(s, task, params) {
                if goal.contains(&s.x) {
                    out.push(match successor_mode(s, task) {
                        Some(Mode::Arrive) => Event::ToArrive,
                        _ if s.q == Mode::Depart => Event::ToCruise,
                        _ => Event::Advance,
                    });
                }
            }
        }
        Mode::Arrive => {
            if landed(&s.x) {
                out.push(Event::Land);
            }
        }
    }
    out
}

/// Applies an enabled jump. Every jump except landing increments the
/// waypoint index; position and velocity carry over.
pub fn apply_jump(
    s: &HybridState,
    e: Event,
    task: &Task,
    params: &GameParams,
) -> Result<HybridState, ModelError> {
    if !enabled_events(s, task, params).contains(&e) {
        return Err(ModelError::EventNotEnabled { mode: s.q, event: e });
    }
    let mut x = s.x;
    if e != Event::Land {
        x.i += 1;
        if x.i > route_len(task) {
            return Err(ModelError::WaypointOutOfRange(x.i));
        }
    }
    Ok(HybridState::new(e.target(), x))
}

/// `Inv(q)`: the state lies in the current scope (flying modes) and respects
/// the global speed limit.
pub fn invariant_holds(s: &HybridState, scope: &Scope, params: &GameParams) -> bool {
    if s.x.v.chebyshev() > params.v_max {
        return false;
    }
    !s.q.is_flying() || scope.contains(&s.x)
}

#[cfg(test)]
mod tests;
