use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use prrt_connect::connect::TreeRole;
use prrt_connect::harness::{render_svg, Settings};
use prrt_connect::world::{clearance, Bounds};
use prrt_connect::{
    plan, track, EgoParams, ObstacleId, PlanResult, Point2, Scenario, VehicleState,
};

fn load(name: &str) -> Scenario {
    Scenario::load(
        Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("scenarios")
            .join(name),
    )
    .unwrap()
}

fn plan_seed(sc: &Scenario, seed: u64) -> PlanResult {
    let params = Settings::default().for_scenario(sc).connect;
    plan(sc, &params, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn open_field() -> Scenario {
    Scenario {
        name: "open".into(),
        bounds: Bounds::new(0.0, 0.0, 30.0, 20.0),
        obstacles: Vec::new(),
        start: VehicleState::new(3.0, 3.0, 0.5, 0.0),
        goal: Point2::new(25.0, 15.0),
        ego: EgoParams::default(),
        lanes: Vec::new(),
    }
}

#[test]
fn open_field_uses_one_tree() {
    let sc = open_field();
    let result = plan_seed(&sc, 1);
    assert_eq!(result.trees.len(), 1);
    assert_eq!(result.trees[0].role, TreeRole::Initial);
    assert!(result.hindering_ids.is_empty());
    assert!(result.goals_used.is_empty());
    assert_eq!(result.total_iterations, result.trees[0].iterations);

    let svg = render_svg(&sc, Some(&result), None).unwrap();
    assert_eq!(svg.matches("<g class=\"tree ").count(), 1);
    assert_eq!(svg.matches("class=\"intermediate-goal\"").count(), 0);
}

#[test]
fn left_turn_detours_around_the_vehicle() {
    let sc = load("left_turn_vehicle.json");
    let result = plan_seed(&sc, 0);
    assert_eq!(result.hindering_ids, vec![ObstacleId(1)]);
    assert_eq!(result.partial_trees().count(), 2);
    assert_eq!(result.goals_used.len(), 1);
    let roles: Vec<TreeRole> = result.trees.iter().map(|t| t.role).collect();
    assert_eq!(
        roles,
        vec![
            TreeRole::Initial,
            TreeRole::FromStart,
            TreeRole::FromDestination
        ]
    );

    let svg = render_svg(&sc, Some(&result), None).unwrap();
    assert_eq!(svg.matches("<g class=\"tree partial\"").count(), 2);
    assert_eq!(svg.matches("<g class=\"tree initial\"").count(), 1);
    assert_eq!(svg.matches("class=\"intermediate-goal\"").count(), 1);
    assert_eq!(svg, render_svg(&sc, Some(&result), None).unwrap());
}

#[test]
fn pothole_scenarios_detour() {
    for name in ["left_turn_pothole.json", "straight_pothole.json"] {
        let sc = load(name);
        let result = plan_seed(&sc, 0);
        assert_eq!(result.hindering_ids, vec![ObstacleId(1)], "{name}");
        let first = result.path[0];
        let last = *result.path.last().unwrap();
        assert!(first.distance(sc.start.position()) < 1e-9, "{name}");
        assert!(
            last.distance(sc.goal) <= sc.ego.goal_radius + 1e-9,
            "{name}"
        );
    }
}

#[test]
fn multiple_obstacles_are_both_repaired() {
    let sc = load("straight_two_obstacles.json");
    let result = plan_seed(&sc, 0);
    let mut ids = result.hindering_ids.clone();
    ids.sort();
    assert_eq!(ids, vec![ObstacleId(1), ObstacleId(2)]);
    assert!(result.goals_used.len() >= 2);
}

#[test]
fn left_turn_is_tracked_without_contact() {
    let sc = load("left_turn_vehicle.json");
    let settings = Settings::default().for_scenario(&sc);
    let result = plan_seed(&sc, 0);
    let traj = track(
        &result.smooth_path(),
        sc.start,
        &sc.ego,
        &settings.mpc,
        settings.stanley_gain,
    )
    .unwrap();
    let last = traj.records.last().unwrap().state.position();
    assert!(last.distance(*result.path.last().unwrap()) <= sc.ego.goal_radius + 1e-9);
    for r in &traj.records {
        assert!(clearance(r.state.position(), &sc.obstacles) > 0.0);
    }
}

#[test]
fn plan_survives_json_round_trip() {
    let result = plan_seed(&load("straight_pothole.json"), 3);
    assert_eq!(PlanResult::from_json(&result.to_json()).unwrap(), result);
}
