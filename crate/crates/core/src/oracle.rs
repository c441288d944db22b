//! Slow reference implementations for cross-checking the solver and the
//! perforation search. Nothing here shares code with [`crate::solver`] or
//! [`crate::scenario`] beyond the game-model predicates.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::cost::Cost;
use crate::geom::{GridVec, StateVec};
use crate::model::{stage_cost, step_dynamics, HybridState, ModalGame, Task};
use crate::solver::{Policy, Solution};

/// Default cap on `|scope| × N`.
pub const DEFAULT_CAP: usize = 50_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{pairs} state-stage pairs exceed the oracle cap of {cap}")]
    CapExceeded { pairs: usize, cap: usize },
}

/// Exact values over the full horizon, `values[k - 1][state index]` for
/// `k = 1..=N + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    pub horizon: u32,
    pub values: Vec<Vec<Cost>>,
}

impl OracleResult {
    pub fn value(&self, idx: usize, k: u32) -> Cost {
        self.values[(k - 1) as usize][idx]
    }
}

struct Minimax<'g, 'a> {
    game: &'g ModalGame<'a>,
    memo: Vec<Option<Cost>>,
    states: usize,
}

impl Minimax<'_, '_> {
    fn value(&mut self, x: &StateVec, k: u32) -> Cost {
        let Some(idx) = self.game.index_of(x) else {
            return Cost::Top;
        };
        let slot = (k as usize - 1) * self.states + idx;
        if let Some(c) = self.memo[slot] {
            return c;
        }
        let s = HybridState::new(self.game.mode(), *x);
        let c = if self.game.is_unsafe(x.p) {
            Cost::Top
        } else if self.game.is_won(x) {
            Cost::ZERO
        } else if k == self.game.horizon() + 1 {
            Cost::Top
        } else {
            let mut best = Cost::Top;
            for &u in self.game.controls() {
                let mut worst = Cost::ZERO;
                for &d in self.game.disturbances() {
                    let next = step_dynamics(*x, u, d);
                    let here = stage_cost(u, d, &s, k, self.game) + self.value(&next, k + 1);
                    worst = worst.max(here);
                }
                best = best.min(worst);
            }
            best
        };
        self.memo[slot] = Some(c);
        c
    }
}

/// Exhaustive min-max recursion with memoisation on `(x, k)`, no early stop
/// and no scope extension.
pub fn oracle_value(game: &ModalGame<'_>, cap: usize) -> Result<OracleResult, OracleError> {
    let states = game.state_count();
    let n = game.horizon();
    let pairs = states * n as usize;
    if pairs > cap {
        return Err(OracleError::CapExceeded { pairs, cap });
    }
    let mut mm = Minimax {
        game,
        memo: vec![None; states * (n as usize + 1)],
        states,
    };
    let mut values = Vec::with_capacity(n as usize + 1);
    for k in 1..=n + 1 {
        let slice = (0..states)
            .map(|idx| mm.value(&game.state_at(idx), k))
            .collect();
        values.push(slice);
    }
    Ok(OracleResult { horizon: n, values })
}

/// Worst-case accumulated cost of following `policy` from `(x, k)`:
/// `TOP` if some disturbance sequence leads to a collision, out of the
/// scope, or past the horizon without winning.
pub fn policy_cost(game: &ModalGame<'_>, policy: &Policy, x: &StateVec, k: u32) -> Cost {
    let mut memo = BTreeMap::new();
    policy_cost_rec(game, policy, x, k, &mut memo)
}

fn policy_cost_rec(
    game: &ModalGame<'_>,
    policy: &Policy,
    x: &StateVec,
    k: u32,
    memo: &mut BTreeMap<(StateVec, u32), Cost>,
) -> Cost {
    let Some(idx) = game.index_of(x) else {
        return Cost::Top;
    };
    if game.is_unsafe(x.p) {
        return Cost::Top;
    }
    if game.is_won(x) {
        return Cost::ZERO;
    }
    if k > game.horizon() {
        return Cost::Top;
    }
    if let Some(&c) = memo.get(&(*x, k)) {
        return c;
    }
    let c = match policy.action(idx, k) {
        None => Cost::Top,
        Some(u) => {
            let s = HybridState::new(game.mode(), *x);
            let mut worst = Cost::ZERO;
            for &d in game.disturbances() {
                let next = step_dynamics(*x, u, d);
                let c = stage_cost(u, d, &s, k, game) + policy_cost_rec(game, policy, &next, k + 1, memo);
                worst = worst.max(c);
            }
            worst
        }
    };
    memo.insert((*x, k), c);
    c
}

/// Single-player cheapest `λ`-cost of reaching `ρ ∧ ¬α` from `x0` within
/// `steps` moves with zero disturbance, by layered label correction.
pub fn shortest_cost(game: &ModalGame<'_>, x0: &StateVec, steps: u32) -> Cost {
    if !game.contains(x0) || game.is_unsafe(x0.p) {
        return Cost::Top;
    }
    let mut best: Option<u64> = None;
    let mut layer: BTreeMap<StateVec, u64> = BTreeMap::new();
    layer.insert(*x0, 0);
    for t in 0..=steps {
        let mut next: BTreeMap<StateVec, u64> = BTreeMap::new();
        for (x, &c) in &layer {
            if game.is_won(x) {
                best = Some(best.map_or(c, |b| b.min(c)));
                continue;
            }
            if t == steps {
                continue;
            }
            for &u in game.controls() {
                let y = step_dynamics(*x, u, GridVec::ZERO);
                if !game.contains(&y) || game.is_unsafe(y.p) {
                    continue;
                }
                let cy = c + game.lambda(u, GridVec::ZERO, x);
                let e = next.entry(y).or_insert(u64::MAX);
                if cy < *e {
                    *e = cy;
                }
            }
        }
        layer = next;
    }
    match best {
        Some(c) => Cost::Finite(c as u32),
        None => Cost::Top,
    }
}

/// A disturbance sequence defeating a policy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub disturbances: Vec<GridVec>,
    /// Last state of the losing playout.
    pub state: StateVec,
}

/// Plays `policy` from `(x0, k0)` against every disturbance sequence up to
/// the terminal stage. Succeeds iff every playout stays safe and inside the
/// scope and wins by stage `N + 1`. Subtrees already proven are pruned via
/// memoisation on `(x, k)`.
pub fn adversarial_verify(
    sol: &Solution,
    policy: &Policy,
    game: &ModalGame<'_>,
    x0: &StateVec,
    k0: u32,
) -> Result<(), Counterexample> {
    let stage = policy.stage_for(k0);
    if sol.table.value_of(game, x0, stage).is_top() {
        return Err(Counterexample {
            disturbances: Vec::new(),
            state: *x0,
        });
    }
    let mut proven = BTreeSet::new();
    match explore(game, policy, *x0, k0, &mut proven) {
        None => Ok(()),
        Some((mut seq, state)) => {
            seq.reverse();
            Err(Counterexample {
                disturbances: seq,
                state,
            })
        }
    }
}

fn explore(
    game: &ModalGame<'_>,
    policy: &Policy,
    x: StateVec,
    k: u32,
    proven: &mut BTreeSet<(StateVec, u32)>,
) -> Option<(Vec<GridVec>, StateVec)> {
    let Some(idx) = game.index_of(&x) else {
        return Some((Vec::new(), x));
    };
    if game.is_unsafe(x.p) {
        return Some((Vec::new(), x));
    }
    if game.is_won(&x) {
        return None;
    }
    if k > game.horizon() || proven.contains(&(x, k)) {
        return if k > game.horizon() {
            Some((Vec::new(), x))
        } else {
            None
        };
    }
    let Some(u) = policy.action(idx, k) else {
        return Some((Vec::new(), x));
    };
    for &d in game.disturbances() {
        if let Some((mut seq, last)) = explore(game, policy, step_dynamics(x, u, d), k + 1, proven) {
            seq.push(d);
            return Some((seq, last));
        }
    }
    proven.insert((x, k));
    None
}

/// Naive tube reachability: flood fill over cells whose `δ_tube` cube holds
/// no obstacle, visiting the waypoint neighbourhoods in route order.
pub fn tube_oracle(task: &Task) -> bool {
    let grid = task.grid();
    let r = task.delta_tube() as i32;
    let obstacles: Vec<GridVec> = task.obstacles().collect();
    let cells = grid.cell_count();
    let clear: Vec<bool> = (0..cells)
        .map(|i| {
            let c = grid.point(i);
            obstacles.iter().all(|&o| (o - c).chebyshev() > r)
        })
        .collect();
    let near = |c: GridVec, w: GridVec| (c - w).chebyshev() <= r;

    let route = task.route();
    let Some(&first) = route.first() else {
        return false;
    };
    let mut reached: Vec<usize> = (0..cells)
        .filter(|&i| clear[i] && near(grid.point(i), first))
        .collect();
    for &w in &route[1..] {
        if reached.is_empty() {
            return false;
        }
        let mut seen = vec![false; cells];
        let mut stack = Vec::new();
        for &i in &reached {
            seen[i] = true;
            stack.push(i);
        }
        while let Some(i) = stack.pop() {
            let c = grid.point(i);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        let n = c + GridVec::new(dx, dy, dz);
                        if grid.contains(n) {
                            let j = grid.index(n);
                            if clear[j] && !seen[j] {
                                seen[j] = true;
                                stack.push(j);
                            }
                        }
                    }
                }
            }
        }
        reached = (0..cells)
            .filter(|&i| seen[i] && near(grid.point(i), w))
            .collect();
    }
    !reached.is_empty()
}
