use reachgrid_core::model::{DisturbanceSet, Event};
use reachgrid_core::player::{play, play_with, CachedSynthesizer, DisturbanceMode, Outcome, PlayConfig};
use reachgrid_core::scenario::{builtin_scenario, validate_task, BUILTIN_NAMES};
use reachgrid_core::solver::{check_monotonicity, solve_with_extension};
use reachgrid_core::{Cost, GridVec, HybridState, Mode, StateVec};

#[test]
fn every_builtin_is_valid() {
    for name in BUILTIN_NAMES {
        let s = builtin_scenario(name).unwrap();
        assert!(validate_task(&s.task).is_ok(), "{name}");
        assert!(!s.note.is_empty());
    }
}

#[test]
fn calm_plays_visit_every_goal_in_order() {
    for name in ["mini-yard", "random-fixture"] {
        let mut s = builtin_scenario(name).unwrap();
        s.params.disturbances = DisturbanceSet::Calm;
        let rec = play(&s.task, &s.params, &PlayConfig::new(0, DisturbanceMode::None));
        assert_eq!(rec.outcome, Outcome::Terminated, "{name}: {:?}", rec.diagnostics);
        let events: Vec<Event> = rec.events().map(|(_, e)| e).collect();
        assert_eq!(events.first(), Some(&Event::Start));
        assert_eq!(events.last(), Some(&Event::Land));
        assert_eq!(rec.segments.len(), s.task.route().len() - 1);
        for seg in &rec.segments {
            assert_eq!(Cost::Finite(seg.cost as u32), seg.value, "{name}: {seg:?}");
        }
    }
}

#[test]
fn cached_windy_plays_match_direct_ones() {
    let s = builtin_scenario("mini-yard").unwrap();
    let mut cache = CachedSynthesizer::new(30_000_000);
    for seed in [7, 8, 7] {
        let cfg = PlayConfig::new(seed, DisturbanceMode::RandomWind);
        let mut a = play(&s.task, &s.params, &cfg);
        let mut b = play_with(&s.task, &s.params, &cfg, &mut cache);
        for seg in a.segments.iter_mut().chain(b.segments.iter_mut()) {
            seg.wall_ns = None;
        }
        assert_eq!(a, b);
        assert_eq!(a.outcome, Outcome::Terminated);
    }
    assert!(cache.hits > 0);
}

#[test]
fn nominal_games_of_the_mini_yard_are_monotone() {
    let s = builtin_scenario("mini-yard").unwrap();
    let route = s.task.route();
    for (i, mode) in [(2, Mode::Depart), (3, Mode::Cruise), (4, Mode::Cruise), (5, Mode::Arrive)] {
        let from = route[i as usize - 2];
        let h = HybridState::new(mode, StateVec::new(from, GridVec::ZERO, i));
        let solved = solve_with_extension(&h, &s.task, &s.params).unwrap();
        assert_eq!(check_monotonicity(&solved.solution), Ok(()));
        assert!(solved.solution.k_fp.is_some());
    }
}
