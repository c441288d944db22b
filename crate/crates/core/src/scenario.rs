//! Task construction and validation: route validity, tube perforation,
//! built-in fixtures and seeded random scenarios.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use fixedbitset::FixedBitSet;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geom::{Box3, GridVec};
use crate::model::{ControlSet, GameParams, Grid, ModelError, Mode, SafetyRadius, Task};

/// One violated clause of route validity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RouteViolation {
    TooShort(usize),
    /// Waypoints at the two (0-based) positions coincide.
    Duplicate(usize, usize),
    OutsideGrid(usize),
    EndpointOffGround(usize),
    TakeoffNotVertical,
    LandingNotVertical,
    BelowMinAltitude(usize),
}

impl RouteViolation {
    /// Name of the violated predicate.
    pub fn name(&self) -> &'static str {
        match self {
            RouteViolation::TooShort(_) => "n ≥ 4",
            RouteViolation::Duplicate(..) => "distinct waypoints",
            RouteViolation::OutsideGrid(_) => "inside grid",
            RouteViolation::EndpointOffGround(_) => "endpoint on ground",
            RouteViolation::TakeoffNotVertical => "vertical takeoff",
            RouteViolation::LandingNotVertical => "vertical landing",
            RouteViolation::BelowMinAltitude(_) => "minimum altitude",
        }
    }
}

impl fmt::Display for RouteViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RouteViolation::TooShort(n) => write!(f, "{}: route has {n} waypoints", self.name()),
            RouteViolation::Duplicate(a, b) => {
                write!(f, "{}: p_{} equals p_{}", self.name(), a + 1, b + 1)
            }
            RouteViolation::OutsideGrid(i)
            | RouteViolation::EndpointOffGround(i)
            | RouteViolation::BelowMinAltitude(i) => write!(f, "{}: p_{}", self.name(), i + 1),
            RouteViolation::TakeoffNotVertical => {
                write!(f, "{}: p_2 is not above p_1", self.name())
            }
            RouteViolation::LandingNotVertical => {
                write!(f, "{}: p_(n-1) is not above p_n", self.name())
            }
        }
    }
}

/// Checks every clause of route validity and reports all violations.
pub fn validate_route(
    route: &[GridVec],
    grid: &Grid,
    z_min: i32,
) -> Result<(), Vec<RouteViolation>> {
    let mut out = Vec::new();
    let n = route.len();
    if n < 4 {
        out.push(RouteViolation::TooShort(n));
    }
    for (i, a) in route.iter().enumerate() {
        if let Some(j) = route[..i].iter().position(|b| b == a) {
            out.push(RouteViolation::Duplicate(j, i));
        }
    }
    for (i, p) in route.iter().enumerate() {
        if !grid.contains(*p) {
            out.push(RouteViolation::OutsideGrid(i));
        }
    }
    if n >= 2 {
        for i in [0, n - 1] {
            if route[i].z != 0 {
                out.push(RouteViolation::EndpointOffGround(i));
            }
        }
    }
    if n >= 4 {
        let xy = |p: GridVec| (p.x, p.y);
        if xy(route[1]) != xy(route[0]) {
            out.push(RouteViolation::TakeoffNotVertical);
        }
        if xy(route[n - 2]) != xy(route[n - 1]) {
            out.push(RouteViolation::LandingNotVertical);
        }
        for (i, p) in route.iter().enumerate().take(n - 1).skip(1) {
            if p.z < z_min {
                out.push(RouteViolation::BelowMinAltitude(i));
            }
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// No tube of clear cells visits the neighbourhood of waypoint `p_{waypoint}`
/// after those of all earlier waypoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
#[error("not δ-perforated: no obstacle-free tube reaches p_{waypoint}")]
pub struct NotPerforated {
    /// 1-based index of the first unreachable waypoint.
    pub waypoint: usize,
}

/// Cells whose `[±delta_tube]^3` cube holds no obstacle.
fn clear_cells(task: &Task) -> FixedBitSet {
    let grid = task.grid();
    let r = task.delta_tube() as i32;
    let mut blocked = FixedBitSet::with_capacity(grid.cell_count());
    for o in task.obstacles() {
        for p in Box3::cube(o, r).intersect(&grid.bounds()).iter() {
            blocked.insert(grid.index(p));
        }
    }
    blocked.toggle_range(..);
    blocked
}

fn neighbours(grid: &Grid, idx: usize) -> impl Iterator<Item = usize> + '_ {
    let c = grid.point(idx);
    Box3::cube(c, 1)
        .intersect(&grid.bounds())
        .iter()
        .filter(move |&p| p != c)
        .map(|p| grid.index(p))
}

fn near_cells<'a>(
    grid: &'a Grid,
    clear: &'a FixedBitSet,
    w: GridVec,
    r: i32,
) -> impl Iterator<Item = usize> + 'a {
    Box3::cube(w, r)
        .intersect(&grid.bounds())
        .iter()
        .map(|p| grid.index(p))
        .filter(|&i| clear.contains(i))
}

const UNSEEN: u32 = u32::MAX;

/// Component labels of clear cells under 26-neighbourhood moves.
fn label_components(grid: &Grid, clear: &FixedBitSet) -> Vec<u32> {
    let mut label = vec![UNSEEN; grid.cell_count()];
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in clear.ones() {
        if label[start] != UNSEEN {
            continue;
        }
        label[start] = next;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            for j in neighbours(grid, i) {
                if clear.contains(j) && label[j] == UNSEEN {
                    label[j] = next;
                    queue.push_back(j);
                }
            }
        }
        next += 1;
    }
    label
}

/// Breadth-first search over clear cells from `from` to the nearest cell in
/// `targets`; returns the path including both ends.
fn bfs_path(
    grid: &Grid,
    clear: &FixedBitSet,
    parent: &mut [u32],
    from: usize,
    targets: &FixedBitSet,
) -> Option<Vec<usize>> {
    parent.fill(UNSEEN);
    parent[from] = from as u32;
    let mut queue = VecDeque::from([from]);
    while let Some(i) = queue.pop_front() {
        if targets.contains(i) {
            let mut path = vec![i];
            let mut c = i;
            while parent[c] as usize != c {
                c = parent[c] as usize;
                path.push(c);
            }
            path.reverse();
            return Some(path);
        }
        for j in neighbours(grid, i) {
            if clear.contains(j) && parent[j] == UNSEEN {
                parent[j] = i as u32;
                queue.push_back(j);
            }
        }
    }
    None
}

/// Searches for a tube: a path of unit moves through clear cells that passes
/// within `delta_tube` (Chebyshev) of every waypoint in order. Returns the
/// path as witness.
///
/// Reachability is decided on connected components of clear cells; the
/// witness is then assembled by one breadth-first search per segment.
pub fn check_perforation(task: &Task) -> Result<Vec<GridVec>, NotPerforated> {
    let grid = task.grid();
    let r = task.delta_tube() as i32;
    let route = task.route();
    if route.is_empty() {
        return Err(NotPerforated { waypoint: 1 });
    }
    let clear = clear_cells(task);
    let label = label_components(grid, &clear);

    // Components that have visited every waypoint so far.
    let mut alive: Vec<u32> = near_cells(grid, &clear, route[0], r)
        .map(|i| label[i])
        .collect();
    alive.sort_unstable();
    alive.dedup();
    for (j, &w) in route.iter().enumerate().skip(1) {
        let mut here: Vec<u32> = near_cells(grid, &clear, w, r).map(|i| label[i]).collect();
        here.sort_unstable();
        alive.retain(|c| here.binary_search(c).is_ok());
        if alive.is_empty() {
            return Err(NotPerforated { waypoint: j + 1 });
        }
    }
    if alive.is_empty() {
        return Err(NotPerforated { waypoint: 1 });
    }
    let comp = alive[0];

    let mut parent = vec![UNSEEN; grid.cell_count()];
    let mut at = near_cells(grid, &clear, route[0], r)
        .find(|&i| label[i] == comp)
        .expect("component touches p_1");
    let mut witness = vec![grid.point(at)];
    for &w in &route[1..] {
        let mut targets = FixedBitSet::with_capacity(grid.cell_count());
        for i in near_cells(grid, &clear, w, r) {
            targets.insert(i);
        }
        let path = bfs_path(grid, &clear, &mut parent, at, &targets)
            .expect("same component reaches the next waypoint");
        witness.extend(path[1..].iter().map(|&i| grid.point(i)));
        at = *path.last().expect("non-empty path");
    }
    Ok(witness)
}

/// Why a task cannot be used for play.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("invalid route: {}", join(.0))]
    InvalidRoute(Vec<RouteViolation>),
    #[error(transparent)]
    NotPerforated(#[from] NotPerforated),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("unknown scenario {0:?}")]
    UnknownScenario(alloc::string::String),
    #[error("cannot place a valid route in a {0}x{1}x{2} grid")]
    NoRoom(u32, u32, u32),
    #[error("obstacle density must lie in [0, 1)")]
    InvalidDensity,
}

fn join(v: &[RouteViolation]) -> alloc::string::String {
    use alloc::string::ToString;
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// Both validators; returns the perforation witness.
pub fn validate_task(task: &Task) -> Result<Vec<GridVec>, ScenarioError> {
    validate_route(task.route(), task.grid(), task.z_min()).map_err(ScenarioError::InvalidRoute)?;
    Ok(check_perforation(task)?)
}

/// A named fixture: task, game parameters and a provenance note.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub name: &'static str,
    pub task: Task,
    pub params: GameParams,
    pub note: &'static str,
}

pub const BUILTIN_NAMES: [&str; 5] = ["yard", "industrial", "streets", "random-fixture", "mini-yard"];

const RECONSTRUCTION: &str = "reconstruction: schematic layout preserving footprint, waypoint count \
                              and qualitative features; the original obstacle map is not available";

pub fn builtin_scenario(name: &str) -> Result<Scenario, ScenarioError> {
    match name {
        "yard" => yard(),
        "industrial" => industrial(),
        "streets" => streets(),
        "random-fixture" => random_fixture(),
        "mini-yard" => mini_yard(),
        _ => Err(ScenarioError::UnknownScenario(name.into())),
    }
}

fn gv(x: i32, y: i32, z: i32) -> GridVec {
    GridVec::new(x, y, z)
}

/// Cells of axis-aligned boxes given as inclusive `(lo, hi)` corners.
pub fn expand_boxes(boxes: &[(GridVec, GridVec)]) -> impl Iterator<Item = GridVec> + '_ {
    boxes.iter().flat_map(|&(lo, hi)| Box3::new(lo, hi).iter())
}

/// Wind-capable parameters. A gust is chosen after the control, so a unit
/// gust cancels any unit acceleration, and with speeds capped at 2 it can
/// pin the vehicle in place. Accelerations of 2 and speed room of at least 3
/// in every flying mode keep robust progress possible. Speed is weighted
/// above position so that the vehicle enters each next game slowly enough to
/// absorb gusts near the edge of its scope.
pub fn windy_params(v_max: i32, horizon: u32) -> GameParams {
    let mut p = GameParams::new(v_max, horizon);
    p.controls = ControlSet::Cube { radius: 2 };
    for q in [Mode::Depart, Mode::Arrive, Mode::Standby] {
        p.padding[q.index()].velocity = v_max.min(3);
    }
    for j in 3..6 {
        p.state_weight[j][j] = 4;
    }
    p
}

/// Desk-scale yard: a short L-shaped route past a house, sized so that
/// every modal game solves in a fraction of a second. Legs of five cells keep
/// entry speeds low enough for every hop to stay robust under wind.
fn mini_yard() -> Result<Scenario, ScenarioError> {
    let grid = Grid::new(30, 30, 12)?;
    let route = vec![
        gv(7, 7, 0),
        gv(7, 7, 5),
        gv(12, 7, 5),
        gv(12, 12, 5),
        gv(12, 12, 0),
    ];
    let obstacles = [
        // House beside the take-off pad.
        (gv(2, 10, 0), gv(4, 14, 7)),
        // Tree and fence away from the route.
        (gv(22, 6, 0), gv(22, 6, 6)),
        (gv(21, 5, 5), gv(23, 7, 7)),
        (gv(0, 25, 0), gv(29, 25, 2)),
    ];
    let task = Task::new(
        grid,
        route,
        expand_boxes(&obstacles),
        3,
        SafetyRadius::default(),
        1,
    )?;
    validate_task(&task)?;
    Ok(Scenario {
        name: "mini-yard",
        task,
        params: windy_params(3, 12),
        note: "desk-scale fixture for acceptance runs",
    })
}

/// Small domestic yard with a house, trees and a dogleg that invites
/// skipping a waypoint.
fn yard() -> Result<Scenario, ScenarioError> {
    let grid = Grid::new(40, 30, 15)?;
    let route = vec![
        gv(4, 4, 0),
        gv(4, 4, 6),
        gv(20, 4, 6),
        gv(22, 10, 6),
        gv(21, 12, 6),
        gv(34, 22, 8),
        gv(34, 22, 0),
    ];
    let obstacles = [
        (gv(8, 10, 0), gv(16, 22, 9)),
        (gv(26, 4, 0), gv(27, 5, 7)),
        (gv(25, 3, 4), gv(28, 6, 8)),
        (gv(30, 14, 0), gv(30, 14, 5)),
        (gv(29, 13, 4), gv(31, 15, 7)),
        (gv(0, 28, 0), gv(39, 28, 2)),
    ];
    let task = Task::new(grid, route, expand_boxes(&obstacles), 3, SafetyRadius::default(), 1)?;
    validate_task(&task)?;
    Ok(Scenario {
        name: "yard",
        task,
        params: windy_params(5, 30),
        note: RECONSTRUCTION,
    })
}

/// 200×250 industrial area: rows of halls, a tank farm and chimneys; route
/// with n = 13 targets after takeoff.
fn industrial() -> Result<Scenario, ScenarioError> {
    let grid = Grid::new(200, 250, 40)?;
    let mut obstacles = Vec::new();
    // Halls in three rows, 20 m wide aisles.
    for row in 0..3 {
        for col in 0..4 {
            let x0 = 15 + col * 45;
            let y0 = 20 + row * 75;
            let h = 10 + ((row * 4 + col) % 3) * 4;
            obstacles.push((gv(x0, y0, 0), gv(x0 + 24, y0 + 44, h)));
        }
    }
    // Tank farm.
    for k in 0..4 {
        let x = 30 + k * 40;
        obstacles.push((gv(x, 232, 0), gv(x + 8, 240, 12)));
    }
    // Chimneys rising above the flight level.
    obstacles.push((gv(62, 100, 0), gv(64, 102, 35)));
    obstacles.push((gv(152, 175, 0), gv(154, 177, 35)));

    let route = vec![
        gv(5, 5, 0),
        gv(5, 5, 20),
        gv(50, 10, 20),
        gv(100, 12, 22),
        gv(150, 12, 22),
        gv(190, 40, 20),
        gv(190, 110, 20),
        gv(140, 105, 24),
        gv(90, 108, 24),
        gv(50, 180, 22),
        gv(100, 185, 22),
        gv(160, 190, 20),
        gv(185, 245, 18),
        gv(185, 245, 0),
    ];
    let task = Task::new(grid, route, expand_boxes(&obstacles), 5, SafetyRadius::default(), 1)?;
    validate_task(&task)?;
    Ok(Scenario {
        name: "industrial",
        task,
        params: windy_params(10, 40),
        note: RECONSTRUCTION,
    })
}

/// 400×450 neighbourhood of building blocks separated by street canyons;
/// route with n = 11 targets after takeoff, flown mostly inside the canyons.
fn streets() -> Result<Scenario, ScenarioError> {
    let grid = Grid::new(400, 450, 30)?;
    let mut obstacles = Vec::new();
    // 6 × 6 blocks of 50 × 55 m with 16 m wide streets.
    for bx in 0..6 {
        for by in 0..6 {
            let x0 = 16 + bx * 64;
            let y0 = 16 + by * 71;
            let h = 12 + ((bx * 7 + by * 3) % 5) * 3;
            obstacles.push((gv(x0, y0, 0), gv(x0 + 49, y0 + 54, h)));
        }
    }
    // Street centrelines: x = 8 + 64k, y = 8 + 71k.
    let route = vec![
        gv(8, 8, 0),
        gv(8, 8, 10),
        gv(8, 150, 10),
        gv(136, 150, 10),
        gv(136, 292, 12),
        gv(264, 292, 12),
        gv(264, 150, 10),
        gv(392, 150, 10),
        gv(392, 363, 10),
        gv(200, 363, 28),
        gv(200, 434, 12),
        gv(200, 434, 0),
    ];
    let task = Task::new(grid, route, expand_boxes(&obstacles), 5, SafetyRadius::default(), 1)?;
    validate_task(&task)?;
    Ok(Scenario {
        name: "streets",
        task,
        params: windy_params(10, 40),
        note: RECONSTRUCTION,
    })
}

fn random_fixture() -> Result<Scenario, ScenarioError> {
    let task = gen_random_scenario(11, [20, 20, 10], 0.03, 4)?;
    Ok(Scenario {
        name: "random-fixture",
        task,
        params: windy_params(3, 16),
        note: "random obstacle cloud, seed 11, density 0.03, carved along the route",
    })
}

/// Draws a valid route of `n` waypoints: vertical takeoff and landing, the
/// interior at altitudes in `[z_min, nz - 1]`.
pub fn sample_route<R: Rng>(rng: &mut R, grid: &Grid, z_min: i32, n: usize) -> Option<Vec<GridVec>> {
    let [nx, ny, nz] = grid.dims().map(|d| d as i32);
    if n < 4 || nz - 1 < z_min.max(1) {
        return None;
    }
    let lo = z_min.max(1);
    for _ in 0..100 {
        let mut route = Vec::with_capacity(n);
        let a = gv(rng.gen_range(0..nx), rng.gen_range(0..ny), 0);
        let b = gv(rng.gen_range(0..nx), rng.gen_range(0..ny), 0);
        route.push(a);
        route.push(gv(a.x, a.y, rng.gen_range(lo..nz)));
        for _ in 0..n - 4 {
            route.push(gv(rng.gen_range(0..nx), rng.gen_range(0..ny), rng.gen_range(lo..nz)));
        }
        route.push(gv(b.x, b.y, rng.gen_range(lo..nz)));
        route.push(b);
        if validate_route(&route, grid, z_min).is_ok() {
            return Some(route);
        }
    }
    None
}

/// Independent obstacle cells at the given density, in grid order.
pub fn sample_cloud<R: Rng>(rng: &mut R, grid: &Grid, density: f64) -> Vec<GridVec> {
    (0..grid.cell_count())
        .filter(|_| rng.gen_bool(density))
        .map(|i| grid.point(i))
        .collect()
}

/// The per-axis staircase from `a` to `b`: every step moves each coordinate
/// one unit towards `b`.
pub fn staircase(a: GridVec, b: GridVec) -> Vec<GridVec> {
    let mut out = vec![a];
    let mut c = a;
    while c != b {
        let s = |from: i32, to: i32| (to - from).signum();
        c = c + gv(s(c.x, b.x), s(c.y, b.y), s(c.z, b.z));
        out.push(c);
    }
    out
}

/// Seeded random obstacle cloud around a random route. Obstacles are sampled
/// first; those within `delta_tube` plus the safety reach of the staircase
/// through the waypoints are then carved away, so the result is always
/// perforated.
pub fn gen_random_scenario(
    seed: u64,
    dims: [u32; 3],
    density: f64,
    n_waypoints: usize,
) -> Result<Task, ScenarioError> {
    if !(0.0..1.0).contains(&density) {
        return Err(ScenarioError::InvalidDensity);
    }
    let grid = Grid::new(dims[0], dims[1], dims[2])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z_min = (dims[2] as i32 / 4).max(1);
    let route = sample_route(&mut rng, &grid, z_min, n_waypoints)
        .ok_or(ScenarioError::NoRoom(dims[0], dims[1], dims[2]))?;
    let delta_tube = 1;
    let delta_safe = SafetyRadius::default();
    // Clear the tube and the safety margin around it, so that the whole
    // tube is safe and not merely obstacle-free.
    let reach = delta_safe.offsets().iter().map(|o| o.chebyshev()).max().unwrap_or(0);
    let mut carve = FixedBitSet::with_capacity(grid.cell_count());
    for w in route.windows(2) {
        for c in staircase(w[0], w[1]) {
            for p in Box3::cube(c, delta_tube + reach).intersect(&grid.bounds()).iter() {
                carve.insert(grid.index(p));
            }
        }
    }
    let obstacles = sample_cloud(&mut rng, &grid, density)
        .into_iter()
        .filter(|&o| !carve.contains(grid.index(o)));
    let task = Task::new(
        grid,
        route,
        obstacles,
        z_min,
        delta_safe,
        delta_tube as u32,
    )?;
    validate_task(&task)?;
    Ok(task)
}

/// The mode that flies towards waypoint `p_i` in a nominal run.
pub fn mode_towards(i: u32, task: &Task) -> Mode {
    let n = task.route().len() as u32;
    match i {
        0 | 1 => Mode::Standby,
        2 => Mode::Depart,
        i if i >= n => Mode::Arrive,
        _ => Mode::Cruise,
    }
}

#[cfg(test)]
mod tests;
