use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::oracle::tube_oracle;

fn grid(nx: u32, ny: u32, nz: u32) -> Grid {
    Grid::new(nx, ny, nz).unwrap()
}

fn names(r: Result<(), Vec<RouteViolation>>) -> Vec<&'static str> {
    r.err().unwrap_or_default().iter().map(|v| v.name()).collect()
}

#[test]
fn route_examples() {
    let g = grid(10, 10, 10);
    let ok = [gv(0, 0, 0), gv(0, 0, 5), gv(9, 9, 5), gv(9, 9, 0)];
    assert_eq!(validate_route(&ok, &g, 3), Ok(()));

    let short = [gv(0, 0, 0), gv(0, 0, 5), gv(0, 0, 6)];
    assert!(names(validate_route(&short, &g, 3)).contains(&"n ≥ 4"));

    let lifted = [gv(0, 0, 2), gv(0, 0, 5), gv(9, 9, 5), gv(9, 9, 0)];
    assert_eq!(names(validate_route(&lifted, &g, 3)), ["endpoint on ground"]);
}

#[test]
fn every_clause_is_reported_by_name() {
    let g = grid(10, 10, 10);
    let bad = [gv(0, 0, 0), gv(1, 0, 2), gv(1, 0, 2), gv(12, 3, 4), gv(9, 9, 0)];
    let got = names(validate_route(&bad, &g, 3));
    for n in ["distinct waypoints", "inside grid", "vertical takeoff", "vertical landing", "minimum altitude"] {
        assert!(got.contains(&n), "{n} missing from {got:?}");
    }
}

fn open_task(route: Vec<GridVec>, obstacles: Vec<GridVec>, tube: u32) -> Task {
    Task::new(grid(12, 12, 8), route, obstacles, 2, SafetyRadius::default(), tube).unwrap()
}

fn l_route() -> Vec<GridVec> {
    vec![gv(1, 1, 0), gv(1, 1, 4), gv(10, 6, 4), gv(10, 6, 0)]
}

fn check_witness(task: &Task, w: &[GridVec]) {
    let r = task.delta_tube() as i32;
    for pair in w.windows(2) {
        assert_eq!((pair[1] - pair[0]).chebyshev(), 1);
    }
    for &c in w {
        for p in Box3::cube(c, r).iter() {
            assert!(!task.is_obstacle(p), "obstacle {p} in the cube of {c}");
        }
    }
    // Waypoint neighbourhoods are visited in order.
    let mut at = 0;
    for &p in task.route() {
        let off = w[at..].iter().position(|&c| (c - p).chebyshev() <= r).expect("visited");
        at += off;
    }
}

#[test]
fn empty_cloud_is_perforated() {
    let t = open_task(l_route(), vec![], 1);
    let w = check_perforation(&t).unwrap();
    check_witness(&t, &w);
    // Shortest tube: at most the staircase lengths between the waypoints.
    let stair: usize = t.route().windows(2).map(|p| staircase(p[0], p[1]).len() - 1).sum();
    assert!(w.len() - 1 <= stair);
}

#[test]
fn full_wall_blocks_the_tube() {
    let mut wall = Vec::new();
    for y in 0..12 {
        for z in 0..8 {
            wall.push(gv(6, y, z));
        }
    }
    let t = open_task(l_route(), wall, 0);
    assert_eq!(check_perforation(&t), Err(NotPerforated { waypoint: 3 }));
    assert!(!tube_oracle(&t));
}

#[test]
fn wall_with_a_hole_needs_a_clear_cube() {
    let wall = |hole: bool| {
        let mut w = Vec::new();
        for y in 0..12 {
            for z in 0..8 {
                let in_hole = hole && (4..=6).contains(&y) && (3..=5).contains(&z);
                if !in_hole {
                    w.push(gv(6, y, z));
                }
            }
        }
        w
    };
    // A single free cell is not enough for delta_tube = 1, but is for 0.
    let pinhole: Vec<GridVec> = {
        let mut w = wall(false);
        w.retain(|&c| c != gv(6, 5, 4));
        w
    };
    assert!(check_perforation(&open_task(l_route(), pinhole.clone(), 1)).is_err());
    assert!(check_perforation(&open_task(l_route(), pinhole, 0)).is_ok());
    // A 3×3 hole only admits the centre cell at delta_tube = 1.
    let t = open_task(l_route(), wall(true), 1);
    let w = check_perforation(&t).unwrap();
    assert!(w.contains(&gv(6, 5, 4)));
    check_witness(&t, &w);
}

#[test]
fn builtins_pass_both_validators() {
    for name in BUILTIN_NAMES {
        let s = builtin_scenario(name).unwrap();
        assert_eq!(s.name, name);
        let w = validate_task(&s.task).unwrap();
        check_witness(&s.task, &w);
        assert!(s.params.validate().is_ok());
    }
    assert!(matches!(
        builtin_scenario("harbour"),
        Err(ScenarioError::UnknownScenario(_))
    ));
}

#[test]
fn builtin_footprints_and_route_lengths() {
    let ind = builtin_scenario("industrial").unwrap();
    assert_eq!(&ind.task.grid().dims()[..2], &[200, 250]);
    // n counts the targets after takeoff.
    assert_eq!(ind.task.route().len(), 13 + 1);
    let st = builtin_scenario("streets").unwrap();
    assert_eq!(&st.task.grid().dims()[..2], &[400, 450]);
    assert_eq!(st.task.route().len(), 11 + 1);
    let mini = builtin_scenario("mini-yard").unwrap();
    assert_eq!(mini.task.grid().dims(), [30, 30, 12]);
    assert!(ind.note.starts_with("reconstruction"));
}

#[test]
fn random_generation() {
    let a = gen_random_scenario(3, [20, 20, 10], 0.1, 4).unwrap();
    let b = gen_random_scenario(3, [20, 20, 10], 0.1, 4).unwrap();
    assert_eq!(a, b);
    assert!(a.obstacle_count() > 0);
    assert!(check_perforation(&a).is_ok());
    let empty = gen_random_scenario(3, [20, 20, 10], 0.0, 6).unwrap();
    assert_eq!(empty.obstacle_count(), 0);
    assert_eq!(empty.route().len(), 6);
    assert_eq!(gen_random_scenario(3, [20, 20, 10], 1.0, 4), Err(ScenarioError::InvalidDensity));
    assert!(matches!(gen_random_scenario(3, [5, 5, 1], 0.1, 4), Err(ScenarioError::NoRoom(..))));
}

#[test]
fn mode_towards_follows_the_route() {
    let t = open_task(l_route(), vec![], 1);
    assert_eq!(mode_towards(2, &t), Mode::Depart);
    assert_eq!(mode_towards(3, &t), Mode::Cruise);
    assert_eq!(mode_towards(4, &t), Mode::Arrive);
}

fn raw_task(seed: u64, density: f64, tube: u32) -> Task {
    let g = grid(10, 9, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let route = sample_route(&mut rng, &g, 2, 4).unwrap();
    let cloud = sample_cloud(&mut rng, &g, density);
    Task::new(g, route, cloud, 2, SafetyRadius::default(), tube).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn perforation_agrees_with_flood_fill(seed in any::<u64>(), density in 0.0f64..0.12, tube in 0u32..2) {
        let t = raw_task(seed, density, tube);
        let got = check_perforation(&t);
        prop_assert_eq!(got.is_ok(), tube_oracle(&t));
        if let Ok(w) = got {
            check_witness(&t, &w);
        }
    }

    #[test]
    fn removing_obstacles_keeps_perforation(seed in any::<u64>(), density in 0.0f64..0.12, keep in 0usize..4) {
        let t = raw_task(seed, density, 1);
        if check_perforation(&t).is_ok() {
            let fewer: Vec<GridVec> = t.obstacles().enumerate().filter(|(i, _)| i % 4 != keep).map(|(_, o)| o).collect();
            let t2 = Task::new(*t.grid(), t.route().to_vec(), fewer, 2, SafetyRadius::default(), 1).unwrap();
            prop_assert!(check_perforation(&t2).is_ok());
        }
    }

    #[test]
    fn generated_tasks_are_valid(seed in any::<u64>(), n in 4usize..7) {
        let t = gen_random_scenario(seed, [16, 14, 8], 0.15, n).unwrap();
        prop_assert_eq!(t.route().len(), n);
        prop_assert!(validate_task(&t).is_ok());
    }
}
