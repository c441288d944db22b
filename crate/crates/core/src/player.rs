//! The hybrid game player: jumps between modes, synthesizes a controller for
//! every modal game it enters and plays it against a wind adversary.

use alloc::collections::BTreeMap;
use alloc::collections::VecDeque;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cost::Cost;
use crate::geom::{GridVec, StateVec};
use crate::model::{
    apply_jump, enabled_events, invariant_holds, DisturbanceSet, Event, GameParams,
    HybridState, ModalGame, ModelError, Mode, Task,
};
use crate::scenario::{validate_route, check_perforation, NotPerforated, RouteViolation};
use crate::solver::{
    policy_action, quasi_stationary, solve_ddp, solve_with_extension_by, stop_early, deepen,
    worst_disturbance, Policy, PolicyFlavor, Solution, SolveError, SolveOptions, SolvedGame,
};

/// Wind directions of the adversary; `N` points along `+y`, `E` along `+x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Wind {
    N,
    W,
    S,
    E,
    Calm,
}

impl Wind {
    pub const ALL: [Wind; 5] = [Wind::N, Wind::W, Wind::S, Wind::E, Wind::Calm];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn vector(self, magnitude: i32) -> GridVec {
        match self {
            Wind::N => GridVec::new(0, magnitude, 0),
            Wind::W => GridVec::new(-magnitude, 0, 0),
            Wind::S => GridVec::new(0, -magnitude, 0),
            Wind::E => GridVec::new(magnitude, 0, 0),
            Wind::Calm => GridVec::ZERO,
        }
    }
}

/// Semi-Markov wind: a direction is held for a random dwell time, then the
/// next one is drawn from the row of the transition weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindModel {
    /// `weights[from][to]`, indexed by [`Wind::index`].
    pub weights: [[u32; 5]; 5],
    /// Inclusive dwell interval in steps.
    pub dwell: (u32, u32),
    pub magnitude: i32,
}

impl Default for WindModel {
    /// Gradual change: same direction 4, a quarter turn 2, reversal 1,
    /// calm 2; from calm, staying calm 4 and every direction 2.
    fn default() -> Self {
        let mut weights = [[0; 5]; 5];
        for (a, row) in weights.iter_mut().enumerate().take(4) {
            for (b, w) in row.iter_mut().enumerate().take(4) {
                *w = match (a + 4 - b) % 4 {
                    0 => 4,
                    2 => 1,
                    _ => 2,
                };
            }
            row[Wind::Calm.index()] = 2;
        }
        weights[Wind::Calm.index()] = [2, 2, 2, 2, 4];
        WindModel {
            weights,
            dwell: (3, 8),
            magnitude: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindState {
    pub model: WindModel,
    pub current: Wind,
    pub remaining: u32,
}

impl WindState {
    /// Calm with an expired dwell: the first draw picks a fresh direction.
    pub fn new(model: WindModel) -> Self {
        WindState {
            model,
            current: Wind::Calm,
            remaining: 0,
        }
    }
}

/// Next gust and the successor wind state.
pub fn gen_dist<R: Rng>(w: WindState, rng: &mut R) -> (GridVec, WindState) {
    let mut next = w;
    if w.remaining == 0 {
        let row = &w.model.weights[w.current.index()];
        let total: u32 = row.iter().sum();
        let mut pick = rng.gen_range(0..total.max(1));
        next.current = Wind::ALL
            .into_iter()
            .find(|d| {
                if pick < row[d.index()] {
                    true
                } else {
                    pick -= row[d.index()];
                    false
                }
            })
            .unwrap_or(w.current);
        let (lo, hi) = w.model.dwell;
        next.remaining = rng.gen_range(lo.max(1)..=hi.max(lo).max(1));
    }
    next.remaining -= 1;
    (next.current.vector(w.model.magnitude), next)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DisturbanceMode {
    None,
    RandomWind,
    /// The maximising disturbance of the solved game at every step.
    WorstCase,
}

impl DisturbanceMode {
    pub fn name(self) -> &'static str {
        match self {
            DisturbanceMode::None => "none",
            DisturbanceMode::RandomWind => "wind",
            DisturbanceMode::WorstCase => "worst",
        }
    }
}

/// A restricted task update, applied when the player reaches waypoint
/// `at_waypoint`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskUpdate {
    pub at_waypoint: u32,
    pub obstacles: Vec<GridVec>,
    /// Replacement waypoints starting at 1-based position `from`.
    pub route: Option<(u32, Vec<GridVec>)>,
}

#[derive(Clone, Debug)]
pub struct PlayConfig {
    pub seed: u64,
    pub disturbance: DisturbanceMode,
    pub flavor: PolicyFlavor,
    pub wind: WindModel,
    /// Termination predicate; the default terminates in standby.
    pub omega: fn(&HybridState) -> bool,
    pub updates: Vec<TaskUpdate>,
}

fn in_standby(s: &HybridState) -> bool {
    s.q == Mode::Standby
}

impl PlayConfig {
    pub fn new(seed: u64, disturbance: DisturbanceMode) -> Self {
        PlayConfig {
            seed,
            disturbance,
            flavor: PolicyFlavor::NonStationary,
            wind: WindModel::default(),
            omega: in_standby,
            updates: Vec::new(),
        }
    }

    pub fn with_flavor(mut self, flavor: PolicyFlavor) -> Self {
        self.flavor = flavor;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Terminated,
    Failure,
    Timeout,
    InvariantViolation,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Terminated => "terminated",
            Outcome::Failure => "failure",
            Outcome::Timeout => "timeout",
            Outcome::InvariantViolation => "invariant-violation",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One visited hybrid state. `input` is what was applied from it; `event` is
/// the jump that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Row {
    pub mode: Mode,
    pub x: StateVec,
    pub k: u32,
    pub input: Option<(GridVec, GridVec)>,
    pub event: Option<Event>,
}

/// Synthesis and play statistics of one modal game.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentStats {
    pub mode: Mode,
    pub waypoint: u32,
    pub x0: StateVec,
    pub first_stage: u32,
    pub k_fp: Option<u32>,
    pub horizon: u32,
    pub states: usize,
    pub backups: u64,
    pub extensions: u32,
    pub wall_ns: Option<u64>,
    /// `V(x_0, first_stage)`.
    pub value: Cost,
    /// Accumulated stage cost of the played steps.
    pub cost: u64,
    pub steps: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    Unsolvable(SolveError),
    Model(ModelError),
    UpdateRejected(u32, UpdateRejected),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlayRecord {
    pub rows: Vec<Row>,
    pub outcome: Outcome,
    pub segments: Vec<SegmentStats>,
    pub diagnostics: Vec<Diagnostic>,
    /// Waypoint indices whose updates were accepted.
    pub accepted_updates: Vec<u32>,
}

impl PlayRecord {
    pub fn events(&self) -> impl Iterator<Item = (usize, Event)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.event.map(|e| (i, e)))
    }

    /// Number of dynamics steps played.
    pub fn step_count(&self) -> usize {
        self.rows.iter().filter(|r| r.input.is_some()).count()
    }

    pub fn total_cost(&self) -> u64 {
        self.segments.iter().map(|s| s.cost).sum()
    }
}

/// Exit status of a modal game in state `s` at stage `k`, `elapsed` steps
/// after the game started, or `None` while it keeps running.
///
/// Precedence: termination, failure (leaving the winning region), timeout
/// (the horizon is used up), invariant violation.
pub fn classify(
    s: &HybridState,
    k: u32,
    elapsed: u32,
    solved: &SolvedGame<'_>,
    policy: &Policy,
    omega: fn(&HybridState) -> bool,
) -> Option<Outcome> {
    if omega(s) {
        return Some(Outcome::Terminated);
    }
    let game = &solved.game;
    let stage = solved.solution.table.clamp_stage(policy.stage_for(k));
    if solved.solution.table.value_of(game, &s.x, stage).is_top() {
        return Some(Outcome::Failure);
    }
    if elapsed >= game.horizon() {
        return Some(Outcome::Timeout);
    }
    if !invariant_holds(s, game.scope(), game.params()) {
        return Some(Outcome::InvariantViolation);
    }
    None
}

/// Collision with moving obstacles. The fixed-obstacle setting has none; the
/// hook is where a supervisor would interrupt tactical control.
pub fn unsafe_moving(_p: GridVec, _step: usize) -> bool {
    false
}

/// Why a task update was refused; the task stays unchanged.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum UpdateRejected {
    #[error("suffix-only update: waypoint {0} is already flown")]
    PrefixChanged(u32),
    #[error("valid route: {0:?}")]
    InvalidRoute(Vec<RouteViolation>),
    #[error("δ-perforation: {0}")]
    NotPerforated(NotPerforated),
    #[error(transparent)]
    Model(ModelError),
}

impl UpdateRejected {
    /// Name of the violated predicate.
    pub fn name(&self) -> &'static str {
        match self {
            UpdateRejected::PrefixChanged(_) => "suffix-only update",
            UpdateRejected::InvalidRoute(_) => "valid route",
            UpdateRejected::NotPerforated(_) => "δ-perforation",
            UpdateRejected::Model(_) => "task structure",
        }
    }
}

/// Restricted task update at waypoint `p_{at_waypoint}`: extra obstacles and
/// optionally new waypoints from 1-based position `from > at_waypoint` on.
pub fn upd_task(
    task: &Task,
    at_waypoint: u32,
    new_obstacles: &[GridVec],
    new_route_suffix: Option<(u32, &[GridVec])>,
) -> Result<Task, UpdateRejected> {
    let mut route = task.route().to_vec();
    if let Some((from, suffix)) = new_route_suffix {
        if from <= at_waypoint || from == 0 {
            return Err(UpdateRejected::PrefixChanged(from));
        }
        route.truncate(from as usize - 1);
        route.extend_from_slice(suffix);
    }
    validate_route(&route, task.grid(), task.z_min()).map_err(UpdateRejected::InvalidRoute)?;
    let next = task
        .with_changes(route, new_obstacles.iter().copied())
        .map_err(UpdateRejected::Model)?;
    check_perforation(&next).map_err(UpdateRejected::NotPerforated)?;
    Ok(next)
}

/// Controller synthesis for one modal game from start `x0`: returns the
/// early-stopped solution.
pub trait Synthesizer {
    fn synthesize(&mut self, game: &ModalGame<'_>, x0: &StateVec) -> Solution;
}

/// Solves every game afresh.
#[derive(Clone, Copy, Debug, Default)]
pub struct DirectSynthesizer;

impl Synthesizer for DirectSynthesizer {
    fn synthesize(&mut self, game: &ModalGame<'_>, x0: &StateVec) -> Solution {
        solve_ddp(game, SolveOptions::from_start(*x0))
    }
}

type GameKey = (usize, [i32; 12], u32, u32);

fn game_key(game: &ModalGame<'_>) -> GameKey {
    let b = game.scope().bounds;
    let mut bounds = [0; 12];
    for (i, v) in [b.p.lo, b.p.hi, b.v.lo, b.v.hi].into_iter().enumerate() {
        bounds[3 * i..3 * i + 3].copy_from_slice(&v.to_array());
    }
    (game.mode().index(), bounds, game.scope().waypoint, game.horizon())
}

/// Keeps solutions of recently played games and cuts the early-stopped
/// solution for each start out of them, deepening a stored solution only
/// when a start needs more stages. Valid for one task and parameter set; the
/// cache is bounded by retained table cells.
#[derive(Debug)]
pub struct CachedSynthesizer {
    entries: BTreeMap<GameKey, Solution>,
    order: VecDeque<GameKey>,
    cells: usize,
    max_cells: usize,
    pub hits: u64,
    pub misses: u64,
}

impl CachedSynthesizer {
    pub fn new(max_cells: usize) -> Self {
        CachedSynthesizer {
            entries: BTreeMap::new(),
            order: VecDeque::new(),
            cells: 0,
            max_cells,
            hits: 0,
            misses: 0,
        }
    }

    fn evict_for(&mut self, size: usize, keep: &GameKey) {
        while self.cells + size > self.max_cells {
            let Some(old) = self.order.iter().position(|k| k != keep).and_then(|i| self.order.remove(i)) else {
                break;
            };
            if let Some(e) = self.entries.remove(&old) {
                self.cells -= e.table.cell_count();
            }
        }
    }
}

impl Synthesizer for CachedSynthesizer {
    fn synthesize(&mut self, game: &ModalGame<'_>, x0: &StateVec) -> Solution {
        let key = game_key(game);
        let Some(mut sol) = self.entries.remove(&key) else {
            self.misses += 1;
            let sol = solve_ddp(game, SolveOptions::from_start(*x0));
            let size = sol.table.cell_count();
            self.evict_for(size, &key);
            if size <= self.max_cells {
                self.cells += size;
                self.order.push_back(key);
                self.entries.insert(key, sol.clone());
            }
            return sol;
        };
        self.hits += 1;
        self.cells -= sol.table.cell_count();
        let out = loop {
            if let Some(out) = stop_early(&sol, game, x0) {
                break out;
            }
            let to = sol.table.first_stage() - 1;
            deepen(&mut sol, game, to);
        };
        let size = sol.table.cell_count();
        self.evict_for(size, &key);
        if size <= self.max_cells {
            self.cells += size;
            self.entries.insert(key, sol);
        } else if let Some(i) = self.order.iter().position(|k| *k == key) {
            self.order.remove(i);
        }
        out
    }
}

struct Adversary {
    mode: DisturbanceMode,
    rng: ChaCha8Rng,
    wind: WindState,
}

impl Adversary {
    fn draw(&mut self, solved: &SolvedGame<'_>, x: &StateVec, stage: u32, u: GridVec) -> GridVec {
        match self.mode {
            DisturbanceMode::None => GridVec::ZERO,
            DisturbanceMode::RandomWind => {
                let (d, next) = gen_dist(self.wind, &mut self.rng);
                self.wind = next;
                if solved.game.disturbances().contains(&d) {
                    d
                } else {
                    GridVec::ZERO
                }
            }
            DisturbanceMode::WorstCase => {
                worst_disturbance(&solved.solution.table, &solved.game, x, stage, u)
            }
        }
    }
}

fn wind_magnitude(params: &GameParams) -> i32 {
    match &params.disturbances {
        DisturbanceSet::Calm => 0,
        DisturbanceSet::Wind { magnitude } => *magnitude,
        DisturbanceSet::Custom(_) => 1,
    }
}

/// Plays the hybrid game once from standby on `p_1`, solving every modal game
/// afresh.
pub fn play(task: &Task, params: &GameParams, cfg: &PlayConfig) -> PlayRecord {
    play_with(task, params, cfg, &mut DirectSynthesizer)
}

/// [`play`] with a caller-supplied synthesizer.
pub fn play_with<S: Synthesizer + ?Sized>(
    task: &Task,
    params: &GameParams,
    cfg: &PlayConfig,
    synth: &mut S,
) -> PlayRecord {
    let mut task = task.clone();
    let mut record = PlayRecord {
        rows: Vec::new(),
        outcome: Outcome::Failure,
        segments: Vec::new(),
        diagnostics: Vec::new(),
        accepted_updates: Vec::new(),
    };
    let Some(mut s) = HybridState::initial(&task) else {
        record.diagnostics.push(Diagnostic::Model(ModelError::WaypointOutOfRange(1)));
        return record;
    };
    let mut wind = cfg.wind;
    wind.magnitude = wind_magnitude(params);
    let mut adversary = Adversary {
        mode: cfg.disturbance,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        wind: WindState::new(wind),
    };
    record.rows.push(Row {
        mode: s.q,
        x: s.x,
        k: 0,
        input: None,
        event: None,
    });
    let mut started = false;

    loop {
        // Take enabled jumps until a mode with a game to play is reached.
        loop {
            if started && (cfg.omega)(&s) {
                record.outcome = Outcome::Terminated;
                return record;
            }
            let Some(&e) = enabled_events(&s, &task, params).first() else {
                break;
            };
            s = match apply_jump(&s, e, &task, params) {
                Ok(next) => next,
                Err(err) => {
                    record.diagnostics.push(Diagnostic::Model(err));
                    record.outcome = Outcome::Failure;
                    return record;
                }
            };
            started = true;
            record.rows.push(Row {
                mode: s.q,
                x: s.x,
                k: 0,
                input: None,
                event: Some(e),
            });
            if e != Event::Land && e != Event::Start {
                apply_updates(&mut task, s.x.i - 1, cfg, &mut record);
            }
        }

        let solved = match solve_with_extension_by(&s, &task, params, |g, x0| {
            synth.synthesize(g, x0)
        }) {
            Ok(solved) => solved,
            Err(err) => {
                record.diagnostics.push(Diagnostic::Unsolvable(err));
                record.outcome = Outcome::Failure;
                return record;
            }
        };
        let policy = match cfg.flavor {
            PolicyFlavor::NonStationary => solved.solution.policy.clone(),
            PolicyFlavor::QuasiStationary => match quasi_stationary(&solved.solution) {
                Ok(p) => p,
                Err(err) => {
                    record.diagnostics.push(Diagnostic::Unsolvable(err));
                    record.outcome = Outcome::Failure;
                    return record;
                }
            },
        };
        let sol = &solved.solution;
        let first = sol.first_stage();
        let mut seg = SegmentStats {
            mode: s.q,
            waypoint: s.x.i,
            x0: s.x,
            first_stage: first,
            k_fp: sol.k_fp,
            horizon: solved.game.horizon(),
            states: sol.stats.states,
            backups: sol.stats.backups,
            extensions: sol.stats.extensions,
            wall_ns: sol.stats.wall_ns,
            value: sol.table.value_of(&solved.game, &s.x, first),
            cost: 0,
            steps: 0,
        };
        if let Some(last) = record.rows.last_mut() {
            last.k = first;
        }

        let mut k = first;
        loop {
            if !enabled_events(&s, &task, params).is_empty() {
                break;
            }
            if let Some(outcome) = classify(&s, k, seg.steps, &solved, &policy, cfg.omega) {
                record.outcome = outcome;
                record.segments.push(seg);
                return record;
            }
            let Ok(u) = policy_action(&policy, &solved.game, &s.x, k) else {
                record.outcome = Outcome::Failure;
                record.segments.push(seg);
                return record;
            };
            let stage = policy.stage_for(k);
            let d = adversary.draw(&solved, &s.x, stage, u);
            seg.cost += solved.game.lambda(u, d, &s.x);
            if let Some(last) = record.rows.last_mut() {
                last.input = Some((u, d));
            }
            s.x = crate::model::step_dynamics(s.x, u, d);
            k += 1;
            seg.steps += 1;
            record.rows.push(Row {
                mode: s.q,
                x: s.x,
                k,
                input: None,
                event: None,
            });
            if unsafe_moving(s.x.p, record.rows.len()) {
                // A supervisor would take over here.
                record.outcome = Outcome::InvariantViolation;
                record.segments.push(seg);
                return record;
            }
        }
        record.segments.push(seg);
    }
}

fn apply_updates(task: &mut Task, reached: u32, cfg: &PlayConfig, record: &mut PlayRecord) {
    for up in cfg.updates.iter().filter(|u| u.at_waypoint == reached) {
        let suffix = up.route.as_ref().map(|(from, w)| (*from, w.as_slice()));
        match upd_task(task, reached, &up.obstacles, suffix) {
            Ok(next) => {
                *task = next;
                record.accepted_updates.push(reached);
            }
            Err(err) => record.diagnostics.push(Diagnostic::UpdateRejected(reached, err)),
        }
    }
}
