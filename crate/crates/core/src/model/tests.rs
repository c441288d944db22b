use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;

use super::*;
use crate::cost::Cost;

fn gv(x: i32, y: i32, z: i32) -> GridVec {
    GridVec::new(x, y, z)
}

fn task(route: Vec<GridVec>, obstacles: Vec<GridVec>) -> Task {
    Task::new(
        Grid::new(30, 30, 12).unwrap(),
        route,
        obstacles,
        3,
        SafetyRadius::default(),
        1,
    )
    .unwrap()
}

fn yard_route() -> Vec<GridVec> {
    vec![
        gv(5, 5, 0),
        gv(5, 5, 8),
        gv(15, 5, 5),
        gv(15, 15, 5),
        gv(22, 15, 5),
        gv(22, 15, 0),
    ]
}

fn params() -> GameParams {
    GameParams::new(2, 20)
}

#[test]
fn step_fixed_point_and_hand_example() {
    let x = StateVec::new(GridVec::ZERO, GridVec::ZERO, 1);
    assert_eq!(step_dynamics(x, GridVec::ZERO, GridVec::ZERO), x);

    let x = StateVec::new(gv(0, 0, 5), gv(1, 0, 0), 3);
    let next = step_dynamics(x, gv(0, 1, 0), gv(-1, 0, 0));
    assert_eq!(next, StateVec::new(gv(1, 0, 5), gv(0, 1, 0), 3));
    assert_eq!(GRAVITY, gv(0, 0, -10));
}

#[test]
fn cruise_scope_is_padded_segment_box() {
    let t = task(
        vec![gv(5, 5, 0), gv(5, 5, 5), gv(15, 5, 5), gv(15, 5, 0)],
        vec![],
    );
    let s = HybridState::new(Mode::Cruise, StateVec::new(gv(5, 5, 5), GridVec::ZERO, 3));
    let scope = compute_scope(&s, &t, &params()).unwrap();
    assert_eq!(scope.bounds.p, Box3::new(gv(3, 3, 3), gv(17, 7, 7)));
    assert_eq!(scope.bounds.v, Box3::cube(GridVec::ZERO, 2));
    assert_eq!(scope.waypoint, 3);
}

#[test]
fn depart_scope_is_column_from_ground() {
    let t = task(
        vec![gv(5, 5, 0), gv(5, 5, 8), gv(15, 5, 8), gv(15, 5, 0)],
        vec![],
    );
    let s = HybridState::new(Mode::Depart, StateVec::new(gv(5, 5, 0), GridVec::ZERO, 2));
    let scope = compute_scope(&s, &t, &params()).unwrap();
    assert_eq!(scope.bounds.p, Box3::new(gv(3, 3, 0), gv(7, 7, 10)));
    assert_eq!(scope.bounds.v, Box3::cube(GridVec::ZERO, 2));
}

#[test]
fn zero_padding_collapses_to_column() {
    let t = task(
        vec![gv(5, 5, 0), gv(5, 5, 8), gv(15, 5, 8), gv(15, 5, 0)],
        vec![],
    );
    let mut p = params();
    p.padding = [Padding {
        position: 0,
        velocity: 0,
    }; 4];
    let s = HybridState::new(Mode::Depart, StateVec::new(gv(5, 5, 8), GridVec::ZERO, 2));
    let scope = compute_scope(&s, &t, &p).unwrap();
    assert_eq!(scope.bounds.p, Box3::new(gv(5, 5, 0), gv(5, 5, 8)));
    assert_eq!(scope.bounds.v.volume(), 1);
}

#[test]
fn scope_is_clipped_to_grid() {
    let t = task(
        vec![gv(0, 0, 0), gv(0, 0, 5), gv(10, 0, 5), gv(10, 0, 0)],
        vec![],
    );
    let s = HybridState::new(Mode::Cruise, StateVec::new(gv(0, 0, 5), GridVec::ZERO, 3));
    let scope = compute_scope(&s, &t, &params()).unwrap();
    assert_eq!(scope.bounds.p, Box3::new(gv(0, 0, 3), gv(12, 2, 7)));
}

#[test]
fn bad_waypoint_index_is_rejected() {
    let t = task(yard_route(), vec![]);
    let s = HybridState::new(Mode::Cruise, StateVec::new(gv(5, 5, 5), GridVec::ZERO, 9));
    assert_eq!(
        compute_scope(&s, &t, &params()),
        Err(ModelError::WaypointOutOfRange(9))
    );
}

#[test]
fn cruise_goal_is_next_segment_cuboid() {
    let t = task(
        vec![gv(10, 5, 0), gv(10, 5, 5), gv(10, 5, 6), gv(10, 15, 5), gv(10, 15, 0)],
        vec![],
    );
    // Heading for p_3 = (10,5,6): the goal is segment (p_3, p_4) padded by 2.
    let s = HybridState::new(Mode::Cruise, StateVec::new(gv(10, 5, 5), GridVec::ZERO, 3));
    let goal = goal_region(&s, &t, &params()).unwrap();
    assert_eq!(goal.position, Box3::new(gv(8, 3, 3), gv(12, 17, 8)));

    let t = task(
        vec![gv(5, 5, 0), gv(5, 5, 5), gv(10, 5, 5), gv(10, 15, 5), gv(10, 15, 0)],
        vec![],
    );
    let s = HybridState::new(Mode::Cruise, StateVec::new(gv(5, 5, 5), GridVec::ZERO, 3));
    let goal = goal_region(&s, &t, &params()).unwrap();
    assert_eq!(goal.position, Box3::new(gv(8, 3, 3), gv(12, 17, 7)));
}

#[test]
fn depart_goal_is_first_cruise_cuboid() {
    let t = task(yard_route(), vec![]);
    let s = HybridState::new(Mode::Depart, StateVec::new(gv(5, 5, 0), GridVec::ZERO, 2));
    let goal = goal_region(&s, &t, &params()).unwrap();
    // Segment (p_2, p_3) = ((5,5,8), (15,5,5)) padded by 2, not the column.
    assert_eq!(goal.position, Box3::new(gv(3, 3, 3), gv(17, 7, 10)));
    let column = compute_scope(&s, &t, &params()).unwrap().bounds.p;
    assert_ne!(goal.position, column);
}

#[test]
fn arrive_has_no_successor_goal() {
    let t = task(yard_route(), vec![]);
    let s = HybridState::new(Mode::Arrive, StateVec::new(gv(22, 15, 5), GridVec::ZERO, 6));
    assert_eq!(
        goal_region(&s, &t, &params()),
        Err(ModelError::NoSuccessorMode(Mode::Arrive))
    );
    let landing = modal_goal(&s, &t, &params()).unwrap();
    assert_eq!(landing.position, Box3::new(gv(20, 13, 0), gv(24, 17, 0)));
    assert_eq!(landing.velocity, Box3::new(gv(-2, -2, 0), gv(2, 2, 0)));
}

#[test]
fn goal_fully_inside_unsafe_set_is_rejected() {
    // Obstacles covering the whole depart goal slab near p_2.
    let mut obstacles = Vec::new();
    for x in 0..30 {
        for y in 0..30 {
            for z in 3..=10 {
                obstacles.push(gv(x, y, z));
            }
        }
    }
    let t = task(yard_route(), obstacles);
    let s = HybridState::new(Mode::Depart, StateVec::new(gv(5, 5, 0), GridVec::ZERO, 2));
    assert!(matches!(
        ModalGame::for_state(&s, &t, &params()),
        Err(ModelError::EmptyGoal)
    ));
}

fn cruise_game<'a>(t: &'a Task, p: &'a GameParams) -> ModalGame<'a> {
    let s = HybridState::new(Mode::Cruise, StateVec::new(gv(5, 5, 8), GridVec::ZERO, 3));
    ModalGame::for_state(&s, t, p).unwrap()
}

#[test]
fn stage_and_terminal_costs() {
    let t = task(yard_route(), vec![gv(9, 5, 6)]);
    let p = params();
    let g = cruise_game(&t, &p);
    let origin = g.origin();
    assert_eq!(origin, gv(15, 5, 5));

    // In goal and safe.
    let won = HybridState::new(Mode::Cruise, StateVec::new(origin, GridVec::ZERO, 3));
    assert_eq!(stage_cost(gv(1, 1, 1), GridVec::ZERO, &won, 1, &g), Cost::ZERO);
    assert_eq!(terminal_cost(&won, &g), Cost::ZERO);

    // Unsafe.
    let hit = HybridState::new(Mode::Cruise, StateVec::new(gv(9, 5, 7), GridVec::ZERO, 3));
    assert_eq!(stage_cost(GridVec::ZERO, GridVec::ZERO, &hit, 1, &g), Cost::Top);
    assert_eq!(terminal_cost(&hit, &g), Cost::Top);

    // x_iso = ((1,0,0), 0) relative to a waypoint outside the goal:
    // λ = |x|² + |u|² = 2 for any d (R = 0).
    let params_far = params();
    let g2 = ModalGame::new(
        &t,
        &params_far,
        Mode::Cruise,
        *g.scope(),
        *g.goal(),
        gv(4, 5, 8),
    )
    .unwrap();
    let s = HybridState::new(Mode::Cruise, StateVec::new(gv(5, 5, 8), GridVec::ZERO, 3));
    assert!(!g2.in_goal(&s.x));
    for d in g2.disturbances().to_vec() {
        assert_eq!(stage_cost(gv(1, 0, 0), d, &s, 1, &g2), Cost::Finite(2));
    }
    // Non-goal, safe: terminal TOP.
    assert_eq!(terminal_cost(&s, &g2), Cost::Top);
}

#[test]
fn goal_and_unsafe_is_top() {
    // Obstacle next to the cruise target: the target cell is in ρ and in α.
    let t = task(yard_route(), vec![gv(15, 5, 6)]);
    let p = params();
    let g = cruise_game(&t, &p);
    let s = HybridState::new(Mode::Cruise, StateVec::new(gv(15, 5, 5), GridVec::ZERO, 3));
    assert!(g.in_goal(&s.x));
    assert_eq!(terminal_cost(&s, &g), Cost::Top);
    assert_eq!(stage_cost(GridVec::ZERO, GridVec::ZERO, &s, 1, &g), Cost::Top);
}

#[test]
fn waypoint_at_rest_costs_nothing() {
    let t = task(yard_route(), vec![]);
    let p = params();
    let g = cruise_game(&t, &p);
    let x = StateVec::new(g.origin(), GridVec::ZERO, 3);
    assert_eq!(g.lambda(GridVec::ZERO, GridVec::ZERO, &x), 0);
}

#[test]
fn standby_enables_start() {
    let t = task(yard_route(), vec![]);
    let s = HybridState::initial(&t).unwrap();
    assert_eq!(enabled_events(&s, &t, &params()), vec![Event::Start]);
    let next = apply_jump(&s, Event::Start, &t, &params()).unwrap();
    assert_eq!(next.q, Mode::Depart);
    assert_eq!(next.x.i, 2);
    assert_eq!(next.x.p, s.x.p);
}

#[test]
fn cruise_last_segment_jumps_to_arrive() {
    let t = task(yard_route(), vec![]);
    // n = 6, i = n - 1 = 5, heading for (22,15,5). Goal: landing column.
    let s = HybridState::new(Mode::Cruise, StateVec::new(gv(21, 15, 6), gv(1, 0, 0), 5));
    assert_eq!(enabled_events(&s, &t, &params()), vec![Event::ToArrive]);
    let a = apply_jump(&s, Event::ToArrive, &t, &params()).unwrap();
    assert_eq!(a.q, Mode::Arrive);
    assert_eq!(a.x.i, 6);

    let far = HybridState::new(Mode::Cruise, StateVec::new(gv(15, 15, 5), GridVec::ZERO, 5));
    assert!(enabled_events(&far, &t, &params()).is_empty());
    assert!(matches!(
        apply_jump(&far, Event::ToArrive, &t, &params()),
        Err(ModelError::EventNotEnabled { .. })
    ));
}

#[test]
fn cruise_advances_index_only() {
    let t = task(yard_route(), vec![]);
    let s = HybridState::new(Mode::Cruise, StateVec::new(gv(15, 6, 5), gv(0, 1, 0), 3));
    assert_eq!(enabled_events(&s, &t, &params()), vec![Event::Advance]);
    let next = apply_jump(&s, Event::Advance, &t, &params()).unwrap();
    assert_eq!(next, HybridState::new(Mode::Cruise, StateVec::new(s.x.p, s.x.v, 4)));
}

#[test]
fn landing_preserves_state() {
    let t = task(yard_route(), vec![]);
    let s = HybridState::new(Mode::Arrive, StateVec::new(gv(22, 15, 0), GridVec::ZERO, 6));
    assert_eq!(enabled_events(&s, &t, &params()), vec![Event::Land]);
    let landed = apply_jump(&s, Event::Land, &t, &params()).unwrap();
    assert_eq!(landed, HybridState::new(Mode::Standby, s.x));

    let hovering = HybridState::new(Mode::Arrive, StateVec::new(gv(22, 15, 1), GridVec::ZERO, 6));
    assert!(enabled_events(&hovering, &t, &params()).is_empty());
}

#[test]
fn guards_chain_through_the_whole_route() {
    // Snapping through every waypoint at rest walks standby → depart →
    // cruise* → arrive → standby.
    let t = task(yard_route(), vec![]);
    let p = params();
    let mut s = HybridState::initial(&t).unwrap();
    let mut modes = vec![s.q];
    for _ in 0..16 {
        let events = enabled_events(&s, &t, &p);
        if let Some(&e) = events.first() {
            if s.q == Mode::Arrive || (s.q == Mode::Standby && !modes.is_empty() && modes.len() > 1) {
                s = apply_jump(&s, e, &t, &p).unwrap();
                modes.push(s.q);
                break;
            }
            s = apply_jump(&s, e, &t, &p).unwrap();
            modes.push(s.q);
        } else {
            // Fly to the waypoint the current game is centred on.
            let target = if s.q == Mode::Arrive {
                t.waypoint(s.x.i).unwrap()
            } else {
                t.waypoint(s.x.i).unwrap()
            };
            s.x.p = target;
            s.x.v = GridVec::ZERO;
        }
    }
    assert_eq!(
        modes,
        vec![
            Mode::Standby,
            Mode::Depart,
            Mode::Cruise,
            Mode::Cruise,
            Mode::Cruise,
            Mode::Arrive,
            Mode::Standby
        ]
    );
}

fn small_vec() -> impl Strategy<Value = GridVec> {
    (-3i32..=3, -3i32..=3, -3i32..=3).prop_map(|(x, y, z)| GridVec::new(x, y, z))
}

proptest! {
    #[test]
    fn dynamics_are_linear_in_control(
        p in small_vec(), v in small_vec(), u1 in small_vec(), u2 in small_vec(), d in small_vec()
    ) {
        let x = StateVec::new(p, v, 2);
        let a = step_dynamics(x, u1 + u2, d);
        let b = step_dynamics(x, u1, d);
        prop_assert_eq!(a.p, b.p);
        prop_assert_eq!(a.v - b.v, u2);
        prop_assert_eq!(a.i, b.i);
    }

    #[test]
    fn unsafe_is_monotone_in_obstacles(
        cells in proptest::collection::vec((0i32..8, 0i32..8, 0i32..8), 0..12),
        extra in proptest::collection::vec((0i32..8, 0i32..8, 0i32..8), 0..6),
        probe in (0i32..8, 0i32..8, 0i32..8),
    ) {
        let mk = |c: &[(i32, i32, i32)]| Task::new(
            Grid::new(8, 8, 8).unwrap(),
            Vec::new(),
            c.iter().map(|&(x, y, z)| GridVec::new(x, y, z)),
            3,
            SafetyRadius::default(),
            1,
        ).unwrap();
        let small = mk(&cells);
        let mut all = cells.clone();
        all.extend(extra);
        let big = mk(&all);
        let p = GridVec::new(probe.0, probe.1, probe.2);
        if unsafe_static(p, &small) {
            prop_assert!(unsafe_static(p, &big));
        }
    }

    #[test]
    fn cruise_scope_contains_generating_state(
        px in 0i32..30, py in 0i32..30, pz in 0i32..12,
        vx in -2i32..=2, vy in -2i32..=2, vz in -2i32..=2,
    ) {
        let t = task(yard_route(), vec![]);
        let x = StateVec::new(GridVec::new(px, py, pz), GridVec::new(vx, vy, vz), 3);
        let s = HybridState::new(Mode::Cruise, x);
        let scope = compute_scope(&s, &t, &params()).unwrap();
        prop_assert!(!scope.is_empty());
        prop_assert!(scope.contains(&x));
        prop_assert!(scope.bounds.p.contains(t.waypoint(3).unwrap()));
    }
}
