//! Backup throughput on synthetic obstacle-free scopes.

use std::time::Instant;

use reachgrid_core::model::{ControlSet, DisturbanceSet, GoalRegion};
use reachgrid_core::solver::solve_ddp;
use reachgrid_core::{Box3, Box6, GameParams, Grid, GridVec, ModalGame, Mode, SafetyRadius, Scope, SolveOptions, Task};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BenchConfig {
    /// Requested state count; the scope is the smallest box with at least
    /// this many states.
    pub cells: usize,
    pub stages: u32,
    pub reps: u32,
    /// `U = [±control_radius]^3`.
    pub control_radius: i32,
    /// Four-direction wind of this magnitude plus calm.
    pub wind: i32,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            cells: 1_000_000,
            stages: 1,
            reps: 1,
            control_radius: 1,
            wind: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub states: usize,
    pub controls: usize,
    pub disturbances: usize,
    pub backups: u64,
    pub peak_cells: usize,
    /// Wall time of each repetition, in seconds.
    pub times: Vec<f64>,
}

impl BenchReport {
    pub fn min(&self) -> f64 {
        self.times.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn median(&self) -> f64 {
        let mut t = self.times.clone();
        t.sort_by(f64::total_cmp);
        match t.len() {
            0 => 0.0,
            n if n % 2 == 1 => t[n / 2],
            n => (t[n / 2 - 1] + t[n / 2]) / 2.0,
        }
    }

    pub fn backups_per_sec(&self) -> f64 {
        let m = self.min();
        if m > 0.0 {
            self.backups as f64 / m
        } else {
            f64::INFINITY
        }
    }

    /// Seconds per 10^6 state backups, from the fastest repetition.
    pub fn secs_per_million(&self) -> f64 {
        if self.backups == 0 {
            0.0
        } else {
            self.min() * 1e6 / self.backups as f64
        }
    }
}

/// Position box dimensions with at least `positions` cells, close to a cube.
fn box_dims(positions: usize) -> [u32; 3] {
    let side = (positions as f64).cbrt().ceil().max(1.0) as usize;
    let z = positions.div_ceil(side * side).max(1);
    [side as u32, side as u32, z as u32]
}

/// `None` when no states were requested.
pub fn run(cfg: &BenchConfig) -> Option<BenchReport> {
    if cfg.cells == 0 || cfg.stages == 0 || cfg.reps == 0 {
        return None;
    }
    let mut params = GameParams::new(1, cfg.stages);
    params.controls = ControlSet::Cube {
        radius: cfg.control_radius,
    };
    params.disturbances = if cfg.wind == 0 {
        DisturbanceSet::Calm
    } else {
        DisturbanceSet::Wind { magnitude: cfg.wind }
    };
    let velocity = Box3::cube(GridVec::ZERO, params.v_max);
    let [nx, ny, nz] = box_dims(cfg.cells.div_ceil(velocity.volume()));
    let grid = Grid::new(nx, ny, nz).ok()?;
    let task = Task::new(grid, Vec::new(), [], 0, SafetyRadius::from_milli(1000), 1).ok()?;
    let scope = Scope {
        bounds: Box6 {
            p: grid.bounds(),
            v: velocity,
        },
        waypoint: 1,
    };
    // Every position is a goal at rest, so every row of the successor slice
    // is live and no backup short-circuits.
    let goal = GoalRegion {
        position: grid.bounds(),
        velocity: Box3::cube(GridVec::ZERO, 0),
    };
    let origin = GridVec::new(nx as i32 / 2, ny as i32 / 2, nz as i32 / 2);
    let game = ModalGame::new(&task, &params, Mode::Cruise, scope, goal, origin).ok()?;
    let mut times = Vec::new();
    let mut last = None;
    for _ in 0..cfg.reps {
        let t0 = Instant::now();
        let sol = solve_ddp(&game, SolveOptions::full());
        times.push(t0.elapsed().as_secs_f64());
        last = Some(sol);
    }
    let sol = last?;
    Some(BenchReport {
        states: game.state_count(),
        controls: game.controls().len(),
        disturbances: game.disturbances().len(),
        backups: sol.stats.backups,
        peak_cells: sol.stats.peak_cells,
        times,
    })
}
