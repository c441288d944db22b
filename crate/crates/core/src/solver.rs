//! Step-pre-shielded backward dynamic programming over a modal game.
//!
//! Stages run `1..=N`; stage `N + 1` holds the terminal cost. A backup at
//! stage `k` computes
//!
//! ```text
//! V(x, k) = min_u max_d [ λ(u, d; x) ⊕ V(x^{ud}, k + 1) ]
//! ```
//!
//! where successors leaving the scope count as `TOP`, so a control admitting
//! any losing disturbance is rejected. Won states are absorbing with value 0
//! and unsafe states are `TOP`.
//!
//! Because `λ` is a sum of separate quadratic forms in `x`, `u` and `d`, and
//! the successor position `p + v` does not depend on the inputs, the inner
//! maximum only depends on `(p + v, v + u)`. Each backup first tabulates that
//! maximum over the successor positions and the velocities reachable before
//! the disturbance, then takes the minimum over controls.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::cost::Cost;
use crate::geom::{Box3, GridVec, StateVec};
use crate::model::{GameParams, HybridState, ModalGame, ModelError, Scope, Task};

const TOP: u32 = u32::MAX;
const NO_ACTION: u8 = u8::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("modal game unsolvable after {extensions} scope extensions ({winning_states} winning states at the first stage)")]
    Unsolvable {
        extensions: u32,
        winning_states: usize,
    },
    #[error("solution has no fixpoint stage")]
    NoFixpoint,
    #[error("state {0} is outside the policy domain")]
    OutOfDomain(StateVec),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    /// Stop at the first stage where the fixpoint approximation holds.
    pub early_stop: bool,
    /// Initial state `x_0` for the robust-membership conjunct of the
    /// fixpoint test.
    pub start: Option<StateVec>,
}

impl SolveOptions {
    pub fn full() -> Self {
        SolveOptions {
            early_stop: false,
            start: None,
        }
    }

    pub fn from_start(x0: StateVec) -> Self {
        SolveOptions {
            early_stop: true,
            start: Some(x0),
        }
    }
}

/// Values over `(state index, stage)` for the realized stages
/// `first_stage..=N + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValueTable {
    scope: Scope,
    horizon: u32,
    first_stage: u32,
    states: usize,
    // slices[k - first_stage]
    slices: Vec<Vec<u32>>,
}

impl ValueTable {
    pub fn scope(&self) -> &Scope {
        &self.scope
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    /// Earliest realized stage (the fixpoint stage after an early stop).
    pub fn first_stage(&self) -> u32 {
        self.first_stage
    }

    /// The terminal stage `N + 1`.
    pub fn last_stage(&self) -> u32 {
        self.horizon + 1
    }

    pub fn state_count(&self) -> usize {
        self.states
    }

    pub fn is_realized(&self, k: u32) -> bool {
        k >= self.first_stage && k <= self.last_stage()
    }

    /// Clamps a stage into the realized range.
    pub fn clamp_stage(&self, k: u32) -> u32 {
        k.clamp(self.first_stage, self.last_stage())
    }

    /// Raw packed cells of a realized stage, `u32::MAX` standing for `TOP`.
    pub fn stage_cells(&self, k: u32) -> &[u32] {
        &self.slices[(k - self.first_stage) as usize]
    }

    pub fn value(&self, idx: usize, k: u32) -> Cost {
        Cost::unpack(self.stage_cells(k)[idx])
    }

    /// Value of `x` at stage `k` (clamped); `TOP` outside the scope.
    pub fn value_of(&self, game: &ModalGame<'_>, x: &StateVec, k: u32) -> Cost {
        match game.index_of(x) {
            Some(idx) => self.value(idx, self.clamp_stage(k)),
            None => Cost::Top,
        }
    }

    pub fn cell_count(&self) -> usize {
        self.slices.len() * self.states
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PolicyFlavor {
    /// One action slice per stage.
    NonStationary,
    /// The fixpoint-stage slice reused for all stages.
    QuasiStationary,
}

/// Control table defined exactly where the value is finite. Won states map to
/// the zero control.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Policy {
    flavor: PolicyFlavor,
    first_stage: u32,
    last_stage: u32,
    controls: Vec<GridVec>,
    // slices[k - first_stage] for k in first_stage..=last_stage
    slices: Vec<Vec<u8>>,
}

impl Policy {
    pub fn flavor(&self) -> PolicyFlavor {
        self.flavor
    }

    /// Stage whose slice answers a query at stage `k`.
    pub fn stage_for(&self, k: u32) -> u32 {
        match self.flavor {
            PolicyFlavor::QuasiStationary => self.first_stage,
            PolicyFlavor::NonStationary => k.clamp(self.first_stage, self.last_stage),
        }
    }

    /// Control index at a state index, if defined.
    pub fn action_index(&self, idx: usize, k: u32) -> Option<u8> {
        let k = self.stage_for(k);
        let a = self.slices[(k - self.first_stage) as usize][idx];
        (a != NO_ACTION).then_some(a)
    }

    pub fn action(&self, idx: usize, k: u32) -> Option<GridVec> {
        self.action_index(idx, k).map(|a| self.controls[a as usize])
    }

    pub fn first_stage(&self) -> u32 {
        self.first_stage
    }

    pub fn last_stage(&self) -> u32 {
        self.last_stage
    }

    pub fn controls(&self) -> &[GridVec] {
        &self.controls
    }

    /// Overwrites one entry. Meant for mutation tests of verifiers.
    pub fn set_action(&mut self, idx: usize, k: u32, control: GridVec) {
        let k = self.stage_for(k);
        let a = self
            .controls
            .iter()
            .position(|&u| u == control)
            .expect("control not in alphabet") as u8;
        self.slices[(k - self.first_stage) as usize][idx] = a;
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub states: usize,
    /// State backups performed (states × computed stages).
    pub backups: u64,
    /// Winning-region sizes for stages `first_stage..=N + 1`.
    pub winning_sizes: Vec<usize>,
    /// Cells of all retained value slices.
    pub peak_cells: usize,
    /// Scope-extension retries used.
    pub extensions: u32,
    /// The requested start state was not winning at the first realized stage.
    pub start_lost: bool,
    pub wall_ns: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub table: ValueTable,
    pub policy: Policy,
    /// Stage at which the fixpoint approximation stopped the recursion.
    pub k_fp: Option<u32>,
    pub stats: SolveStats,
}

impl Solution {
    pub fn first_stage(&self) -> u32 {
        self.table.first_stage()
    }

    pub fn winning_size(&self, k: u32) -> usize {
        self.stats.winning_sizes[(self.table.clamp_stage(k) - self.table.first_stage()) as usize]
    }
}

/// A solution together with the game it solves.
#[derive(Clone, Debug)]
pub struct SolvedGame<'a> {
    pub game: ModalGame<'a>,
    pub solution: Solution,
}

/// Maximum over disturbances of `dᵀRd + V_next(p', w + d)`, tabulated over
/// successor positions and pre-disturbance velocities `w`.
struct Dilation {
    wbox: Box3,
    wcells: usize,
    cells: Vec<u32>,
}

fn control_bounds(controls: &[GridVec]) -> (GridVec, GridVec) {
    controls.iter().fold(
        (GridVec::ZERO, GridVec::ZERO),
        |(lo, hi), &u| (lo.min(u), hi.max(u)),
    )
}

fn dilate(next: &[u32], game: &ModalGame<'_>) -> Dilation {
    let pbox = game.scope().bounds.p;
    let vbox = game.scope().bounds.v;
    let nv = vbox.volume();
    let (ulo, uhi) = control_bounds(game.controls());
    let wbox = Box3::new(vbox.lo + ulo, vbox.hi + uhi);
    let wcells = wbox.volume();
    let dist: Vec<(GridVec, u64)> = game
        .disturbances()
        .iter()
        .map(|&d| (d, game.disturbance_cost_of(d)))
        .collect();

    let mut cells = vec![TOP; pbox.volume() * wcells];
    for pos in 0..pbox.volume() {
        let row = &next[pos * nv..(pos + 1) * nv];
        if row.iter().all(|&c| c == TOP) {
            continue;
        }
        let out = &mut cells[pos * wcells..(pos + 1) * wcells];
        for (wi, w) in wbox.iter().enumerate() {
            let mut worst: u64 = 0;
            for &(d, dc) in &dist {
                let v = w + d;
                if !vbox.contains(v) {
                    worst = u64::MAX;
                    break;
                }
                let c = row[vbox.index_of(v)];
                if c == TOP {
                    worst = u64::MAX;
                    break;
                }
                worst = worst.max(c as u64 + dc);
            }
            out[wi] = if worst >= TOP as u64 { TOP } else { worst as u32 };
        }
    }
    Dilation {
        wbox,
        wcells,
        cells,
    }
}

/// `U = U_x × U_y × U_z` with a diagonal control weight: the minimum over
/// controls splits into three one-axis passes.
struct Separable {
    axes: [Vec<i32>; 3],
    costs: [Vec<u64>; 3],
}

fn separable(game: &ModalGame<'_>) -> Option<Separable> {
    let r = &game.params().control_weight;
    if (0..3).any(|i| (0..3).any(|j| i != j && r[i][j] != 0)) {
        return None;
    }
    let controls = game.controls();
    let axis = |f: fn(&GridVec) -> i32| {
        let mut a: Vec<i32> = controls.iter().map(f).collect();
        a.sort_unstable();
        a.dedup();
        a
    };
    let axes = [axis(|u| u.x), axis(|u| u.y), axis(|u| u.z)];
    // `controls` is sorted and deduplicated, so a full product set has
    // exactly this many elements.
    if axes.iter().map(Vec::len).product::<usize>() != controls.len() {
        return None;
    }
    let costs = [0, 1, 2].map(|i| axes[i].iter().map(|&c| (r[i][i] * c as i64 * c as i64) as u64).collect());
    Some(Separable { axes, costs })
}

const INF: u64 = u64::MAX;

/// One-axis min-plus pass. `src` has extent `src_len` along the pass axis,
/// `dst` has extent `dst_len`; `stride` is the axis stride (identical in both)
/// and `outer`/`inner` the sizes of the slower and faster axes. `lo` is the
/// offset of `dst` coordinate 0 in `src` coordinates. Ties keep the smallest
/// axis value, which makes the nested passes lexicographic on `u`.
#[allow(clippy::too_many_arguments)]
fn min_pass(
    src: &[(u64, u16)],
    src_len: usize,
    dst: &mut Vec<(u64, u16)>,
    dst_len: usize,
    outer: usize,
    inner: usize,
    axis: &[i32],
    cost: &[u64],
    lo: i32,
    radix: u16,
) {
    dst.clear();
    dst.resize(outer * dst_len * inner, (INF, 0));
    for o in 0..outer {
        for t in 0..dst_len {
            for n in 0..inner {
                let mut best = (INF, 0u16);
                for (a, (&u, &c)) in axis.iter().zip(cost).enumerate() {
                    let w = t as i32 + u - lo;
                    debug_assert!(w >= 0 && (w as usize) < src_len);
                    let (m, arg) = src[(o * src_len + w as usize) * inner + n];
                    if m == INF {
                        continue;
                    }
                    if m + c < best.0 {
                        best = (m + c, a as u16 * radix + arg);
                    }
                }
                dst[(o * dst_len + t) * inner + n] = best;
            }
        }
    }
}

/// One backward step: values and argmin controls at stage `k` from the
/// complete slice at `k + 1`. Ties go to the lexicographically smallest
/// control.
pub fn bellman_backup(next: &[u32], game: &ModalGame<'_>, _k: u32) -> (Vec<u32>, Vec<u8>) {
    let dil = dilate(next, game);
    match separable(game) {
        Some(sep) => backup_separable(&dil, game, &sep),
        None => backup_direct(&dil, game),
    }
}

/// Goal states, and everything that is `TOP` regardless of the controls.
fn backup_frame(game: &ModalGame<'_>) -> (Vec<u32>, Vec<u8>) {
    let scope = game.scope().bounds;
    let nv = scope.v.volume();
    let goal = *game.goal();
    let zero = game
        .controls()
        .iter()
        .position(|u| u.is_zero())
        .expect("validated: 0 ∈ U") as u8;
    let mut values = vec![TOP; scope.p.volume() * nv];
    let mut actions = vec![NO_ACTION; scope.p.volume() * nv];
    for (pos, p) in scope.p.iter().enumerate() {
        if game.position_unsafe(pos) || !goal.position.contains(p) {
            continue;
        }
        for (vi, v) in scope.v.iter().enumerate() {
            if goal.velocity.contains(v) {
                values[pos * nv + vi] = 0;
                actions[pos * nv + vi] = zero;
            }
        }
    }
    (values, actions)
}

fn is_goal_state(game: &ModalGame<'_>, p: GridVec, v: GridVec) -> bool {
    let goal = game.goal();
    goal.position.contains(p) && goal.velocity.contains(v)
}

fn settle(values: &mut [u32], actions: &mut [u8], idx: usize, game: &ModalGame<'_>, p: GridVec, v: GridVec, best: u64, arg: u8) {
    let x = StateVec::new(p, v, game.scope().waypoint);
    let total = best + game.state_cost(&x);
    if total < TOP as u64 {
        values[idx] = total as u32;
        actions[idx] = arg;
    }
}

fn backup_direct(dil: &Dilation, game: &ModalGame<'_>) -> (Vec<u32>, Vec<u8>) {
    let scope = game.scope().bounds;
    let pbox = scope.p;
    let vbox = scope.v;
    let nv = vbox.volume();
    let controls = game.controls();
    let [_, wy, wz] = dil.wbox.dims();
    let offsets: Vec<isize> = controls
        .iter()
        .map(|u| (u.x as isize * wy as isize + u.y as isize) * wz as isize + u.z as isize)
        .collect();
    let ucost: Vec<u64> = controls.iter().map(|&u| game.control_cost_of(u)).collect();

    let (mut values, mut actions) = backup_frame(game);
    for (pos, p) in pbox.iter().enumerate() {
        if game.position_unsafe(pos) {
            continue;
        }
        for (vi, v) in vbox.iter().enumerate() {
            let succ = p + v;
            if is_goal_state(game, p, v) || !pbox.contains(succ) {
                continue;
            }
            let row = &dil.cells[pbox.index_of(succ) * dil.wcells..][..dil.wcells];
            let base = dil.wbox.index_of(v) as isize;
            let mut best = u64::MAX;
            let mut arg = NO_ACTION;
            for (a, (&off, &uc)) in offsets.iter().zip(&ucost).enumerate() {
                let m = row[(base + off) as usize];
                if m == TOP {
                    continue;
                }
                let c = m as u64 + uc;
                if c < best {
                    best = c;
                    arg = a as u8;
                }
            }
            if arg != NO_ACTION {
                settle(&mut values, &mut actions, pos * nv + vi, game, p, v, best, arg);
            }
        }
    }
    (values, actions)
}

/// Same result as [`backup_direct`], organised by successor position: for
/// each `p'` the minimum over `u` of `uᵀQu + M(p', v + u)` is computed for
/// every `v` at once with one pass per axis, then handed to the state
/// `(p' - v, v)`.
fn backup_separable(dil: &Dilation, game: &ModalGame<'_>, sep: &Separable) -> (Vec<u32>, Vec<u8>) {
    let scope = game.scope().bounds;
    let pbox = scope.p;
    let vbox = scope.v;
    let nv = vbox.volume();
    let [wx, wy, wz] = dil.wbox.dims();
    let [vx, vy, vz] = vbox.dims();
    let lo = dil.wbox.lo - vbox.lo;
    let [ny, nz] = [sep.axes[1].len() as u16, sep.axes[2].len() as u16];

    let (mut values, mut actions) = backup_frame(game);
    let mut m: Vec<(u64, u16)> = Vec::with_capacity(dil.wcells);
    let (mut a, mut b, mut c) = (Vec::new(), Vec::new(), Vec::new());
    for succ_pos in 0..pbox.volume() {
        let row = &dil.cells[succ_pos * dil.wcells..][..dil.wcells];
        if row.iter().all(|&x| x == TOP) {
            continue;
        }
        m.clear();
        m.extend(row.iter().map(|&x| (if x == TOP { INF } else { x as u64 }, 0)));
        // z, then y, then x: the outermost pass decides the most significant
        // component of the tie-break.
        min_pass(&m, wz, &mut a, vz, wx * wy, 1, &sep.axes[2], &sep.costs[2], lo.z, 1);
        min_pass(&a, wy, &mut b, vy, wx, vz, &sep.axes[1], &sep.costs[1], lo.y, nz);
        min_pass(&b, wx, &mut c, vx, 1, vy * vz, &sep.axes[0], &sep.costs[0], lo.x, ny * nz);
        let succ = pbox.point_at(succ_pos);
        for (vi, v) in vbox.iter().enumerate() {
            let (best, arg) = c[vi];
            if best == INF {
                continue;
            }
            let p = succ - v;
            if !pbox.contains(p) || is_goal_state(game, p, v) {
                continue;
            }
            let pos = pbox.index_of(p);
            if game.position_unsafe(pos) {
                continue;
            }
            settle(&mut values, &mut actions, pos * nv + vi, game, p, v, best, arg as u8);
        }
    }
    (values, actions)
}

fn terminal_slice(game: &ModalGame<'_>) -> Vec<u32> {
    (0..game.state_count())
        .map(|idx| {
            if game.is_won(&game.state_at(idx)) {
                0
            } else {
                TOP
            }
        })
        .collect()
}

fn finite_count(slice: &[u32]) -> usize {
    slice.iter().filter(|&&c| c != TOP).count()
}

/// Robust membership of the position cube `x ⊕ [±δ_tube]^3` (same velocity
/// and index, clipped to the grid) in one value slice. The clipped cube must
/// lie inside the scope.
fn cube_finite(game: &ModalGame<'_>, slice: &[u32], x: &StateVec) -> bool {
    let r = game.task().delta_tube() as i32;
    let cube = Box3::cube(x.p, r).intersect(&game.task().grid().bounds());
    if cube.is_empty() || !game.scope().bounds.p.contains_box(&cube) {
        return false;
    }
    cube.iter().all(|p| {
        let y = StateVec::new(p, x.v, x.i);
        match game.index_of(&y) {
            Some(idx) => slice[idx] != TOP,
            None => false,
        }
    })
}

/// `fp_U`: some realized stage `k' ≥ k` has every state of the robustness
/// cube around `x` finite.
pub fn fp_u(table: &ValueTable, game: &ModalGame<'_>, x: &StateVec, k: u32) -> bool {
    let from = table.clamp_stage(k);
    (from..=table.last_stage()).any(|kk| cube_finite(game, table.stage_cells(kk), x))
}

/// Fixpoint approximation at stage `k`: equal winning-region sizes at `k`
/// and `k + 1`, or `fp_U`.
pub fn fp_ddp(table: &ValueTable, game: &ModalGame<'_>, k: u32, x0: Option<&StateVec>) -> bool {
    if k + 1 > table.last_stage() || !table.is_realized(k) {
        return false;
    }
    let now = finite_count(table.stage_cells(k));
    let next = finite_count(table.stage_cells(k + 1));
    now == next || x0.is_some_and(|x| fp_u(table, game, x, k))
}

/// `W(X_s, k)` as state indices.
pub fn winning_region(table: &ValueTable, k: u32) -> Vec<usize> {
    table
        .stage_cells(table.clamp_stage(k))
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != TOP)
        .map(|(i, _)| i)
        .collect()
}

/// A stage pair breaking `W(k) ⊇ W(k + 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MonotonicityViolation {
    pub stage: u32,
    /// A state finite at `k + 1` but `TOP` at `k`, if the sizes alone do
    /// not already disagree.
    pub state: Option<usize>,
}

/// Checks that the winning region only grows as stages are added: sizes are
/// non-increasing in `k` and every state finite at `k + 1` is finite at `k`.
pub fn check_monotonicity(sol: &Solution) -> Result<(), MonotonicityViolation> {
    let t = &sol.table;
    for k in t.first_stage()..t.last_stage() {
        let (now, next) = (t.stage_cells(k), t.stage_cells(k + 1));
        if finite_count(now) < finite_count(next) {
            return Err(MonotonicityViolation { stage: k, state: None });
        }
        if let Some(idx) = (0..t.states).find(|&i| next[i] != TOP && now[i] == TOP) {
            return Err(MonotonicityViolation {
                stage: k,
                state: Some(idx),
            });
        }
    }
    Ok(())
}

#[cfg(feature = "std")]
fn now() -> Option<std::time::Instant> {
    Some(std::time::Instant::now())
}

#[cfg(feature = "std")]
fn elapsed_ns(t: Option<std::time::Instant>) -> Option<u64> {
    t.map(|t| t.elapsed().as_nanos() as u64)
}

#[cfg(not(feature = "std"))]
fn now() -> Option<()> {
    None
}

#[cfg(not(feature = "std"))]
fn elapsed_ns(_: Option<()>) -> Option<u64> {
    None
}

/// Backward recursion from the terminal stage, optionally stopping at the
/// first stage where the fixpoint approximation holds.
pub fn solve_ddp(game: &ModalGame<'_>, opts: SolveOptions) -> Solution {
    let t0 = now();
    let n = game.horizon();
    let states = game.state_count();

    let mut values = vec![terminal_slice(game)];
    let mut actions: Vec<Vec<u8>> = Vec::new();
    let mut sizes = vec![finite_count(&values[0])];
    let mut k_fp = None;
    let mut backups = 0u64;

    let start = opts.start.filter(|x| game.contains(x));
    let mut k = n;
    while k >= 1 {
        let (v, a) = bellman_backup(values.last().expect("terminal slice"), game, k);
        backups += states as u64;
        let w = finite_count(&v);
        let w_next = *sizes.last().expect("terminal size");
        let robust = start.is_some_and(|x| cube_finite(game, &v, &x));
        values.push(v);
        actions.push(a);
        sizes.push(w);
        if opts.early_stop && (w == w_next || robust) {
            k_fp = Some(k);
            break;
        }
        k -= 1;
    }
    let first_stage = k_fp.unwrap_or(1);

    values.reverse();
    actions.reverse();
    sizes.reverse();
    // The terminal stage has no decisions; won states keep the zero control.
    let zero = game
        .controls()
        .iter()
        .position(|u| u.is_zero())
        .expect("validated: 0 ∈ U") as u8;
    let terminal_actions = values
        .last()
        .expect("terminal slice")
        .iter()
        .map(|&c| if c == TOP { NO_ACTION } else { zero })
        .collect();
    actions.push(terminal_actions);

    let table = ValueTable {
        scope: *game.scope(),
        horizon: n,
        first_stage,
        states,
        slices: values,
    };
    let start_lost = opts
        .start
        .is_some_and(|x| table.value_of(game, &x, first_stage).is_top());
    let stats = SolveStats {
        states,
        backups,
        peak_cells: table.cell_count(),
        winning_sizes: sizes,
        extensions: 0,
        start_lost,
        wall_ns: elapsed_ns(t0),
    };
    Solution {
        policy: Policy {
            flavor: PolicyFlavor::NonStationary,
            first_stage,
            last_stage: n + 1,
            controls: game.controls().to_vec(),
            slices: actions,
        },
        table,
        k_fp,
        stats,
    }
}

/// Scope-extended synthesis: solve the game of `s`; while `x_0` is not
/// robustly winning at the first realized stage, pad the scope by `Δ_X` (and
/// the horizon by `δ_I`) and retry, up to the configured number of retries.
pub fn solve_with_extension<'a>(
    s: &HybridState,
    task: &'a Task,
    params: &'a GameParams,
) -> Result<SolvedGame<'a>, SolveError> {
    solve_with_extension_by(s, task, params, |game, x0| {
        solve_ddp(game, SolveOptions::from_start(*x0))
    })
}

/// [`solve_with_extension`] with a caller-supplied early-stopping solver,
/// e.g. one that memoizes full tables.
pub fn solve_with_extension_by<'a, F>(
    s: &HybridState,
    task: &'a Task,
    params: &'a GameParams,
    mut solve: F,
) -> Result<SolvedGame<'a>, SolveError>
where
    F: FnMut(&ModalGame<'a>, &StateVec) -> Solution,
{
    let base = ModalGame::for_state(s, task, params)?;
    let mut winning_states = 0;
    for attempt in 0..=params.max_extensions {
        let scope = base
            .scope()
            .extended(params.extension_padding * attempt as i32, task.grid());
        let horizon = params.horizon + params.temporal_extension * attempt;
        let game = base.with_scope(scope)?.with_horizon(horizon)?;
        let mut solution = solve(&game, &s.x);
        if fp_u(&solution.table, &game, &s.x, solution.first_stage()) {
            solution.stats.extensions = attempt;
            return Ok(SolvedGame { game, solution });
        }
        winning_states = solution.winning_size(solution.first_stage());
    }
    Err(SolveError::Unsolvable {
        extensions: params.max_extensions,
        winning_states,
    })
}

/// The early-stopped solution for start `x0`, cut out of a deeper solution
/// of the same game. Equal to `solve_ddp(game, SolveOptions::from_start(x0))`
/// apart from timing. `None` when the stopping stage lies below the realized
/// stages of `sol`; [`deepen`] it and retry.
pub fn stop_early(sol: &Solution, game: &ModalGame<'_>, x0: &StateVec) -> Option<Solution> {
    let n = game.horizon();
    let start = Some(*x0).filter(|x| game.contains(x));
    let t = &sol.table;
    let k_fp = (t.first_stage..=n).rev().find(|&k| {
        let v = t.stage_cells(k);
        finite_count(v) == finite_count(t.stage_cells(k + 1))
            || start.is_some_and(|x| cube_finite(game, v, &x))
    });
    if k_fp.is_none() && t.first_stage > 1 {
        return None;
    }
    let first = k_fp.unwrap_or(1);
    let skip = (first - t.first_stage) as usize;
    let table = ValueTable {
        scope: t.scope,
        horizon: n,
        first_stage: first,
        states: t.states,
        slices: t.slices[skip..].to_vec(),
    };
    let policy = Policy {
        first_stage: first,
        slices: sol.policy.slices[skip..].to_vec(),
        ..sol.policy.clone()
    };
    let stats = SolveStats {
        states: t.states,
        backups: t.states as u64 * u64::from(n + 1 - first),
        winning_sizes: sol.stats.winning_sizes[skip..].to_vec(),
        peak_cells: table.cell_count(),
        extensions: 0,
        start_lost: table.value_of(game, x0, first).is_top(),
        wall_ns: None,
    };
    Some(Solution {
        table,
        policy,
        k_fp,
        stats,
    })
}

/// Continues the backward recursion of `sol` down to stage `to` (at least 1).
/// `k_fp` and `start_lost` keep describing the original stop.
pub fn deepen(sol: &mut Solution, game: &ModalGame<'_>, to: u32) {
    let t0 = now();
    let to = to.max(1);
    while sol.table.first_stage > to {
        let k = sol.table.first_stage - 1;
        let (v, a) = bellman_backup(&sol.table.slices[0], game, k);
        sol.stats.winning_sizes.insert(0, finite_count(&v));
        sol.table.slices.insert(0, v);
        sol.policy.slices.insert(0, a);
        sol.table.first_stage = k;
        sol.policy.first_stage = k;
        sol.stats.backups += sol.table.states as u64;
    }
    sol.stats.peak_cells = sol.stats.peak_cells.max(sol.table.cell_count());
    if let (Some(a), Some(b)) = (sol.stats.wall_ns, elapsed_ns(t0)) {
        sol.stats.wall_ns = Some(a + b);
    }
}

/// The fixpoint-stage control slice, reused at every stage.
pub fn quasi_stationary(sol: &Solution) -> Result<Policy, SolveError> {
    let k = sol.k_fp.ok_or(SolveError::NoFixpoint)?;
    let slice = sol.policy.slices[(k - sol.policy.first_stage) as usize].clone();
    Ok(Policy {
        flavor: PolicyFlavor::QuasiStationary,
        first_stage: k,
        last_stage: k,
        controls: sol.policy.controls.clone(),
        slices: vec![slice],
    })
}

/// Control for `x` at stage `k`. Stages before the first realized one use
/// its slice.
pub fn policy_action(
    policy: &Policy,
    game: &ModalGame<'_>,
    x: &StateVec,
    k: u32,
) -> Result<GridVec, SolveError> {
    let idx = game.index_of(x).ok_or(SolveError::OutOfDomain(*x))?;
    policy.action(idx, k).ok_or(SolveError::OutOfDomain(*x))
}

/// The maximising disturbance against control `u` at `(x, k)`: the first
/// `d` (lexicographically) attaining `max_d dᵀRd + V(x^{ud}, k + 1)`.
pub fn worst_disturbance(
    table: &ValueTable,
    game: &ModalGame<'_>,
    x: &StateVec,
    k: u32,
    u: GridVec,
) -> GridVec {
    let next = table.clamp_stage(k + 1);
    let mut best: Option<(Cost, GridVec)> = None;
    for &d in game.disturbances() {
        let succ = crate::model::step_dynamics(*x, u, d);
        let c = Cost::Finite(game.disturbance_cost_of(d) as u32) + table.value_of(game, &succ, next);
        if best.is_none_or(|(b, _)| c > b) {
            best = Some((c, d));
        }
    }
    best.map(|(_, d)| d).unwrap_or(GridVec::ZERO)
}
