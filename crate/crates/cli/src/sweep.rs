//! Seed sweeps: many independent plays fanned out over worker threads.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;

use reachgrid_core::model::unsafe_static;
use reachgrid_core::player::{play_with, CachedSynthesizer, DisturbanceMode, Outcome, PlayConfig, PlayRecord};
use reachgrid_core::solver::PolicyFlavor;
use reachgrid_core::{GameParams, Task};

use crate::export::Summary;

/// Memoized table budget per worker, in value cells.
pub const CACHE_CELLS: usize = 40_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedResult {
    pub seed: u64,
    pub outcome: Outcome,
    pub steps: usize,
    pub cost: u64,
    pub unsafe_visits: usize,
    pub reached_goals: usize,
}

/// Positions inside the static unsafe set visited by a play.
pub fn unsafe_visits(task: &Task, rec: &PlayRecord) -> usize {
    rec.rows
        .iter()
        .filter(|r| r.mode.is_flying() && unsafe_static(r.x.p, task))
        .count()
}

fn summarize(task: &Task, seed: u64, rec: &PlayRecord) -> SeedResult {
    SeedResult {
        seed,
        outcome: rec.outcome,
        steps: rec.step_count(),
        cost: rec.total_cost(),
        unsafe_visits: unsafe_visits(task, rec),
        reached_goals: rec.events().count(),
    }
}

/// Plays seeds `first..first + count` and returns results in seed order.
/// `inspect` sees every full record (on the worker thread).
pub fn sweep<F>(
    task: &Task,
    params: &GameParams,
    disturbance: DisturbanceMode,
    flavor: PolicyFlavor,
    first: u64,
    count: u64,
    jobs: usize,
    inspect: F,
) -> Vec<SeedResult>
where
    F: Fn(u64, &PlayRecord) + Sync,
{
    let jobs = jobs.clamp(1, count.max(1) as usize);
    let next = AtomicUsize::new(0);
    let mut results: Vec<SeedResult> = thread::scope(|s| {
        let workers: Vec<_> = (0..jobs)
            .map(|_| {
                s.spawn(|| {
                    let mut cache = CachedSynthesizer::new(CACHE_CELLS / jobs);
                    let mut out = Vec::new();
                    loop {
                        let n = next.fetch_add(1, Ordering::Relaxed) as u64;
                        if n >= count {
                            break;
                        }
                        let seed = first + n;
                        let cfg = PlayConfig::new(seed, disturbance).with_flavor(flavor);
                        let rec = play_with(task, params, &cfg, &mut cache);
                        inspect(seed, &rec);
                        out.push(summarize(task, seed, &rec));
                    }
                    out
                })
            })
            .collect();
        workers
            .into_iter()
            .flat_map(|w| w.join().expect("sweep worker panicked"))
            .collect()
    });
    results.sort_by_key(|r| r.seed);
    results
}

pub fn sweep_summary(results: &[SeedResult]) -> Summary {
    let mut s = Summary::new();
    let count = |o: Outcome| results.iter().filter(|r| r.outcome == o).count();
    let terminated = count(Outcome::Terminated);
    s.set("plays", results.len())
        .set("terminated", terminated)
        .set("failure", count(Outcome::Failure))
        .set("timeout", count(Outcome::Timeout))
        .set("invariant_violation", count(Outcome::InvariantViolation))
        .set(
            "terminated_pct",
            format!("{:.1}", 100.0 * terminated as f64 / results.len().max(1) as f64),
        )
        .set("unsafe_visits", results.iter().map(|r| r.unsafe_visits).sum::<usize>())
        .set("max_steps", results.iter().map(|r| r.steps).max().unwrap_or(0));
    if let Some(r) = results.iter().find(|r| r.outcome != Outcome::Terminated) {
        s.set("first_non_terminated_seed", r.seed);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use reachgrid_core::model::DisturbanceSet;
    use reachgrid_core::scenario::builtin_scenario;
    use std::sync::Mutex;

    #[test]
    fn results_are_in_seed_order_and_independent_of_jobs() {
        let mut s = builtin_scenario("mini-yard").unwrap();
        s.params.disturbances = DisturbanceSet::Calm;
        let seen = Mutex::new(Vec::new());
        let a = sweep(&s.task, &s.params, DisturbanceMode::None, PolicyFlavor::NonStationary, 10, 4, 3, |seed, _| {
            seen.lock().unwrap().push(seed)
        });
        let b = sweep(&s.task, &s.params, DisturbanceMode::None, PolicyFlavor::NonStationary, 10, 4, 1, |_, _| {});
        assert_eq!(a, b);
        assert_eq!(a.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![10, 11, 12, 13]);
        let mut seen = seen.into_inner().unwrap();
        seen.sort();
        assert_eq!(seen, vec![10, 11, 12, 13]);
        let sum = sweep_summary(&a);
        assert_eq!(sum.get("terminated_pct"), Some("100.0"));
        assert_eq!(sum.get("unsafe_visits"), Some("0"));
    }
}
