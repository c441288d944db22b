use alloc::vec::Vec;

use fixedbitset::FixedBitSet;

use crate::cost::Cost;
use crate::geom::{GridVec, StateVec};

use super::params::quadratic;
use super::{
    compute_scope, modal_goal, unsafe_static, GameParams, GoalRegion, HybridState, Mode,
    ModelError, Scope, Task,
};

/// A reach-avoid integer difference game over one scope.
///
/// Unsafe flags of the scope's positions are computed once on construction.
/// States are indexed row-major over `(p, v)` with velocity varying fastest.
#[derive(Clone, Debug)]
pub struct ModalGame<'a> {
    task: &'a Task,
    params: &'a GameParams,
    mode: Mode,
    scope: Scope,
    goal: GoalRegion,
    origin: GridVec,
    horizon: u32,
    controls: Vec<GridVec>,
    disturbances: Vec<GridVec>,
    unsafe_cells: FixedBitSet,
    velocity_cells: usize,
}

impl<'a> ModalGame<'a> {
    pub fn new(
        task: &'a Task,
        params: &'a GameParams,
        mode: Mode,
        scope: Scope,
        goal: GoalRegion,
        origin: GridVec,
    ) -> Result<Self, ModelError> {
        params.validate()?;
        if scope.is_empty() {
            return Err(ModelError::DegenerateScope);
        }
        let positions = scope.bounds.p;
        let mut unsafe_cells = FixedBitSet::with_capacity(positions.volume());
        if mode.is_flying() {
            for (idx, p) in positions.iter().enumerate() {
                if unsafe_static(p, task) {
                    unsafe_cells.insert(idx);
                }
            }
        }
        let game = ModalGame {
            task,
            params,
            mode,
            scope,
            goal,
            origin,
            horizon: params.horizon,
            controls: params.control_vectors(),
            disturbances: params.disturbance_vectors(),
            unsafe_cells,
            velocity_cells: scope.bounds.v.volume(),
        };
        game.check_goal()?;
        game.check_cost_bound()?;
        Ok(game)
    }

    /// The game induced at hybrid state `s`: scope from [`compute_scope`],
    /// goal from [`modal_goal`], costs centred on the next waypoint.
    pub fn for_state(
        s: &HybridState,
        task: &'a Task,
        params: &'a GameParams,
    ) -> Result<Self, ModelError> {
        let scope = compute_scope(s, task, params)?;
        let goal = modal_goal(s, task, params)?;
        let origin = task
            .waypoint(s.x.i)
            .ok_or(ModelError::WaypointOutOfRange(s.x.i))?;
        ModalGame::new(task, params, s.q, scope, goal, origin)
    }

    /// Same game with a different horizon.
    pub fn with_horizon(mut self, horizon: u32) -> Result<Self, ModelError> {
        if horizon == 0 {
            return Err(ModelError::InvalidParams("horizon must be at least 1"));
        }
        self.horizon = horizon;
        self.check_cost_bound()?;
        Ok(self)
    }

    /// Same game over a different scope (goal and origin unchanged).
    pub fn with_scope(&self, scope: Scope) -> Result<Self, ModelError> {
        ModalGame::new(self.task, self.params, self.mode, scope, self.goal, self.origin)?
            .with_horizon(self.horizon)
    }

    fn check_goal(&self) -> Result<(), ModelError> {
        let p = self.goal.position.intersect(&self.scope.bounds.p);
        let v = self.goal.velocity.intersect(&self.scope.bounds.v);
        if v.is_empty() || p.is_empty() || p.iter().all(|p| self.is_unsafe(p)) {
            return Err(ModelError::EmptyGoal);
        }
        Ok(())
    }

    fn check_cost_bound(&self) -> Result<(), ModelError> {
        let b = self.scope.bounds;
        let far = |lo: i32, hi: i32, o: i32| ((lo - o).abs()).max((hi - o).abs()) as i64;
        let xs = [
            far(b.p.lo.x, b.p.hi.x, self.origin.x),
            far(b.p.lo.y, b.p.hi.y, self.origin.y),
            far(b.p.lo.z, b.p.hi.z, self.origin.z),
            far(b.v.lo.x, b.v.hi.x, 0),
            far(b.v.lo.y, b.v.hi.y, 0),
            far(b.v.lo.z, b.v.hi.z, 0),
        ];
        let bound = |w: &[[i64; 6]; 6]| -> i128 {
            let mut acc: i128 = 0;
            for i in 0..6 {
                for j in 0..6 {
                    acc += (w[i][j] as i128) * (xs[i] as i128) * (xs[j] as i128);
                }
            }
            acc
        };
        let max_u = self.controls.iter().map(|&u| self.control_cost_of(u)).max();
        let max_d = self.disturbances.iter().map(|&d| self.disturbance_cost_of(d)).max();
        let per_stage = bound(&self.params.state_weight)
            + max_u.unwrap_or(0) as i128
            + max_d.unwrap_or(0) as i128;
        if per_stage * (self.horizon as i128 + 1) >= u32::MAX as i128 {
            return Err(ModelError::CostOverflow);
        }
        Ok(())
    }

    pub fn task(&self) -> &'a Task {
        self.task
    }

    pub fn params(&self) -> &'a GameParams {
        self.params
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn scope(&self) -> &Scope {
        &self.scope
    }

    pub fn goal(&self) -> &GoalRegion {
        &self.goal
    }

    /// Waypoint the costs are centred on.
    pub fn origin(&self) -> GridVec {
        self.origin
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    /// Control alphabet in lexicographic order.
    pub fn controls(&self) -> &[GridVec] {
        &self.controls
    }

    pub fn disturbances(&self) -> &[GridVec] {
        &self.disturbances
    }

    pub fn state_count(&self) -> usize {
        self.scope.len()
    }

    pub fn velocity_count(&self) -> usize {
        self.velocity_cells
    }

    pub fn contains(&self, x: &StateVec) -> bool {
        self.scope.contains(x)
    }

    pub fn index_of(&self, x: &StateVec) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        Some(self.index_unchecked(x.p, x.v))
    }

    #[inline]
    pub(crate) fn index_unchecked(&self, p: GridVec, v: GridVec) -> usize {
        self.scope.bounds.p.index_of(p) * self.velocity_cells + self.scope.bounds.v.index_of(v)
    }

    pub fn state_at(&self, idx: usize) -> StateVec {
        let p = self.scope.bounds.p.point_at(idx / self.velocity_cells);
        let v = self.scope.bounds.v.point_at(idx % self.velocity_cells);
        StateVec::new(p, v, self.scope.waypoint)
    }

    /// `α`: static collision. Never true in standby.
    #[inline]
    pub fn is_unsafe(&self, p: GridVec) -> bool {
        if !self.mode.is_flying() {
            return false;
        }
        if self.scope.bounds.p.contains(p) {
            self.unsafe_cells.contains(self.scope.bounds.p.index_of(p))
        } else {
            unsafe_static(p, self.task)
        }
    }

    #[inline]
    pub(crate) fn position_unsafe(&self, position_index: usize) -> bool {
        self.unsafe_cells.contains(position_index)
    }

    /// `ρ`, restricted to the scope.
    #[inline]
    pub fn in_goal(&self, x: &StateVec) -> bool {
        self.goal.contains(x) && self.contains(x)
    }

    /// `ρ ∧ ¬α`.
    #[inline]
    pub fn is_won(&self, x: &StateVec) -> bool {
        self.in_goal(x) && !self.is_unsafe(x.p)
    }

    /// `(p - p_i, v)ᵀ P (p - p_i, v)`.
    #[inline]
    pub fn state_cost(&self, x: &StateVec) -> u64 {
        let d = x.p - self.origin;
        let w = [
            d.x as i64, d.y as i64, d.z as i64, x.v.x as i64, x.v.y as i64, x.v.z as i64,
        ];
        quadratic(&self.params.state_weight, &w) as u64
    }

    pub fn control_cost_of(&self, u: GridVec) -> u64 {
        quadratic(&self.params.control_weight, &[u.x as i64, u.y as i64, u.z as i64]) as u64
    }

    pub fn disturbance_cost_of(&self, d: GridVec) -> u64 {
        quadratic(
            &self.params.disturbance_weight,
            &[d.x as i64, d.y as i64, d.z as i64],
        ) as u64
    }

    /// `λ(u, d; x, k) = x_isoᵀ P x_iso + uᵀ Q u + dᵀ R d`.
    pub fn lambda(&self, u: GridVec, d: GridVec, x: &StateVec) -> u64 {
        self.state_cost(x) + self.control_cost_of(u) + self.disturbance_cost_of(d)
    }
}

/// Stage cost `L`: zero on `ρ ∧ ¬α`, `TOP` on `α`, `λ` otherwise.
pub fn stage_cost(u: GridVec, d: GridVec, s: &HybridState, _k: u32, game: &ModalGame<'_>) -> Cost {
    if game.is_unsafe(s.x.p) {
        Cost::Top
    } else if game.in_goal(&s.x) {
        Cost::ZERO
    } else {
        Cost::Finite(game.lambda(u, d, &s.x) as u32)
    }
}

/// Terminal cost `Φ`: zero on `ρ ∧ ¬α`, `TOP` otherwise.
pub fn terminal_cost(s: &HybridState, game: &ModalGame<'_>) -> Cost {
    if game.is_won(&s.x) {
        Cost::ZERO
    } else {
        Cost::Top
    }
}
