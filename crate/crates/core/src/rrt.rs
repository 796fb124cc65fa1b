//! Search tree and the goal-biased probabilistic RRT. Plain RRT is the same
//! loop over a uniform map (`bias = 0`).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{PositionProbabilityMap, DEFAULT_CELL_SIZE};
use crate::vehicle::{control_grid, integrate, rollout, steer_toward, ControlInput, VehicleState};
use crate::world::{Bounds, EgoParams, Obstacle, Point2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: usize,
    pub state: VehicleState,
    /// Control that produced this node from its parent; zero at the root.
    pub control: ControlInput,
    pub parent: Option<usize>,
}

/// Append-only tree rooted at `nodes[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn new(root: VehicleState) -> Self {
        Self {
            nodes: vec![TreeNode {
                id: 0,
                state: root,
                control: ControlInput::ZERO,
                parent: None,
            }],
        }
    }

    pub fn root_state(&self) -> &VehicleState {
        &self.nodes[0].state
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    /// Appends a child and returns its id.
    pub fn push(&mut self, parent: usize, state: VehicleState, control: ControlInput) -> usize {
        assert!(parent < self.nodes.len(), "parent {parent} not in tree");
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            id,
            state,
            control,
            parent: Some(parent),
        });
        id
    }

    /// Node ids from the root down to `id`.
    pub fn path_to(&self, id: usize) -> Vec<usize> {
        let mut ids = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            ids.push(p);
            cur = p;
        }
        ids.reverse();
        ids
    }

    pub fn states(&self, ids: &[usize]) -> Vec<VehicleState> {
        ids.iter().map(|&i| self.nodes[i].state).collect()
    }

    /// Parent-child position pairs, for drawing.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        self.nodes.iter().filter_map(|n| {
            n.parent
                .map(|p| (self.nodes[p].state.position(), n.state.position()))
        })
    }
}

/// Index of the node nearest to `point` by position; lowest id wins ties.
pub fn nearest_node(tree: &Tree, point: Point2) -> usize {
    let mut best = 0;
    let mut best_d2 = f64::INFINITY;
    for node in &tree.nodes {
        let d = node.state.position() - point;
        let d2 = d.dot(d);
        if d2 < best_d2 {
            best_d2 = d2;
            best = node.id;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerParams {
    /// Goal bias of the probability map; 0 gives plain RRT.
    pub bias: f64,
    /// Spread of the goal peak as a fraction of the world diagonal.
    pub spread: f64,
    pub max_iterations: usize,
    /// Extension horizon per tree edge, seconds.
    pub extend_time: f64,
    /// Integration substep, seconds.
    pub dt: f64,
    pub goal_radius: f64,
    pub cell_size: f64,
    /// Whether collision-rejected samples count toward the reported iterations.
    pub count_rejected: bool,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            bias: 1e3,
            spread: 0.05,
            max_iterations: 3000,
            extend_time: 0.5,
            dt: 0.1,
            goal_radius: 1.0,
            cell_size: DEFAULT_CELL_SIZE,
            count_rejected: true,
        }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be at least 1".into(),
            ));
        }
        let positive = [
            ("spread", self.spread),
            ("extend_time", self.extend_time),
            ("dt", self.dt),
            ("goal_radius", self.goal_radius),
            ("cell_size", self.cell_size),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.bias >= 0.0 && self.bias.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bias must be non-negative, got {}",
                self.bias
            )));
        }
        if self.extend_time < self.dt {
            return Err(Error::InvalidParameter(
                "extend_time must be at least dt".into(),
            ));
        }
        Ok(())
    }
}

/// The world a tree grows in: extensions must stay inside `bounds` and keep
/// half the ego width away from every obstacle listed here.
#[derive(Debug, Clone, Copy)]
pub struct PlanningContext<'a> {
    pub bounds: &'a Bounds,
    pub obstacles: &'a [&'a Obstacle],
    pub ego: &'a EgoParams,
}

impl PlanningContext<'_> {
    /// True if the swept polyline stays in bounds with enough clearance.
    pub fn is_free(&self, polyline: &[Point2]) -> bool {
        if !polyline.iter().all(|&p| self.bounds.contains(p)) {
            return false;
        }
        let hw = self.ego.half_width();
        self.obstacles
            .iter()
            .all(|o| o.path_distance(polyline) >= hw)
    }
}

fn swept_path(
    from: &VehicleState,
    u: &ControlInput,
    params: &PlannerParams,
    ego: &EgoParams,
) -> Vec<Point2> {
    let mut swept = Vec::with_capacity(8);
    swept.push(from.position());
    swept.extend(
        rollout(from, u, params.extend_time, params.dt, ego)
            .iter()
            .map(|s| s.position()),
    );
    swept
}

/// Whether some chain of `steps` collision-free extensions from the steering
/// grid leaves `state`. A tree rooted where this fails is boxed in and can
/// only grow a few nodes before every extension is rejected.
pub fn can_extend(
    state: &VehicleState,
    steps: usize,
    params: &PlannerParams,
    ctx: &PlanningContext,
) -> bool {
    fn search(
        state: &VehicleState,
        steps: usize,
        grid: &[ControlInput],
        params: &PlannerParams,
        ctx: &PlanningContext,
    ) -> bool {
        if steps == 0 {
            return true;
        }
        grid.iter().any(|u| {
            let swept = swept_path(state, u, params, ctx.ego);
            if !ctx.is_free(&swept) {
                return false;
            }
            let next = integrate(state, u, params.extend_time, params.dt, ctx.ego);
            search(&next, steps - 1, grid, params, ctx)
        })
    }
    search(state, steps, &control_grid(ctx.ego), params, ctx)
}

/// Outcome of one pRRT call. `path` is `None` when the iteration budget ran out.
#[derive(Debug, Clone)]
pub struct PrrtRun {
    pub tree: Tree,
    pub path: Option<Vec<usize>>,
    pub iterations: usize,
}

impl PrrtRun {
    pub fn succeeded(&self) -> bool {
        self.path.is_some()
    }

    pub fn path_states(&self) -> Option<Vec<VehicleState>> {
        self.path.as_ref().map(|ids| self.tree.states(ids))
    }
}

/// Goal-biased RRT with kinematic best-of-grid extensions.
///
/// Each iteration draws one sample from `ppm`, extends the nearest node
/// toward it and rejects the extension if its swept substeps leave the free
/// space of `ctx`. Stops as soon as a node lands within `goal_radius` of
/// `goal`.
pub fn prrt<R: Rng + ?Sized>(
    start: VehicleState,
    goal: Point2,
    ppm: &PositionProbabilityMap,
    params: &PlannerParams,
    ctx: &PlanningContext<'_>,
    rng: &mut R,
) -> PrrtRun {
    let mut tree = Tree::new(start);
    if start.position().distance(goal) <= params.goal_radius {
        return PrrtRun {
            tree,
            path: Some(vec![0]),
            iterations: 0,
        };
    }
    let mut iterations = 0;
    for _ in 0..params.max_iterations {
        let target = ppm.sample(rng);
        let near = nearest_node(&tree, target);
        let near_state = tree.node(near).state;
        let (new_state, u) =
            steer_toward(&near_state, target, ctx.ego, params.extend_time, params.dt);

        if !ctx.is_free(&swept_path(&near_state, &u, params, ctx.ego)) {
            if params.count_rejected {
                iterations += 1;
            }
            continue;
        }
        iterations += 1;
        let id = tree.push(near, new_state, u);
        if new_state.position().distance(goal) <= params.goal_radius {
            let path = tree.path_to(id);
            return PrrtRun {
                tree,
                path: Some(path),
                iterations,
            };
        }
    }
    PrrtRun {
        tree,
        path: None,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::generate_ppm;
    use crate::vehicle::integrate;
    use crate::world::{ObstacleId, ObstacleKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn empty_ctx<'a>(bounds: &'a Bounds, ego: &'a EgoParams) -> PlanningContext<'a> {
        PlanningContext {
            bounds,
            obstacles: &[],
            ego,
        }
    }

    #[test]
    fn nearest_single_and_pair() {
        let mut t = Tree::new(VehicleState::default());
        assert_eq!(nearest_node(&t, Point2::new(5.0, 5.0)), 0);
        t.push(
            0,
            VehicleState::new(10.0, 0.0, 0.0, 0.0),
            ControlInput::ZERO,
        );
        assert_eq!(nearest_node(&t, Point2::new(1.0, 0.0)), 0);
        assert_eq!(nearest_node(&t, Point2::new(9.0, 0.0)), 1);
        // Equidistant: lowest id.
        assert_eq!(nearest_node(&t, Point2::new(5.0, 0.0)), 0);
    }

    #[test]
    fn path_to_walks_parents() {
        let mut t = Tree::new(VehicleState::default());
        let a = t.push(0, VehicleState::new(1.0, 0.0, 0.0, 0.0), ControlInput::ZERO);
        let _b = t.push(0, VehicleState::new(0.0, 1.0, 0.0, 0.0), ControlInput::ZERO);
        let c = t.push(a, VehicleState::new(2.0, 0.0, 0.0, 0.0), ControlInput::ZERO);
        assert_eq!(t.path_to(c), vec![0, a, c]);
        assert_eq!(t.edges().count(), 3);
    }

    #[test]
    fn start_within_goal_radius_succeeds_immediately() {
        let bounds = Bounds::new(0.0, 0.0, 20.0, 20.0);
        let ego = EgoParams::default();
        let params = PlannerParams::default();
        let goal = Point2::new(5.5, 5.0);
        let ppm = generate_ppm(goal, 1e3, 0.05, &bounds, &[], 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let run = prrt(
            VehicleState::new(5.0, 5.0, 0.0, 0.0),
            goal,
            &ppm,
            &params,
            &empty_ctx(&bounds, &ego),
            &mut rng,
        );
        assert_eq!(run.iterations, 0);
        assert_eq!(run.path, Some(vec![0]));
    }

    #[test]
    fn single_iteration_budget_exhausts() {
        let bounds = Bounds::new(0.0, 0.0, 50.0, 50.0);
        let ego = EgoParams::default();
        let params = PlannerParams {
            max_iterations: 1,
            ..PlannerParams::default()
        };
        let goal = Point2::new(45.0, 45.0);
        let ppm = generate_ppm(goal, 1e3, 0.05, &bounds, &[], 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let run = prrt(
            VehicleState::new(2.0, 2.0, 0.0, 0.0),
            goal,
            &ppm,
            &params,
            &empty_ctx(&bounds, &ego),
            &mut rng,
        );
        assert!(run.path.is_none());
        assert_eq!(run.iterations, 1);
    }

    #[test]
    fn empty_world_edges_are_reachable() {
        let bounds = Bounds::new(0.0, 0.0, 40.0, 30.0);
        let ego = EgoParams::default();
        let params = PlannerParams::default();
        let goal = Point2::new(35.0, 22.0);
        let ppm = generate_ppm(goal, 1e3, 0.05, &bounds, &[], params.cell_size).unwrap();
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let run = prrt(
                VehicleState::new(3.0, 4.0, 0.0, 0.0),
                goal,
                &ppm,
                &params,
                &empty_ctx(&bounds, &ego),
                &mut rng,
            );
            let states = run.path_states().expect("empty world is solvable");
            assert!(states.last().unwrap().position().distance(goal) <= params.goal_radius);
            for s in &states {
                assert!(bounds.contains(s.position()));
            }
            for w in states.windows(2) {
                assert!(
                    w[0].position().distance(w[1].position())
                        <= ego.v_max * params.extend_time + 1e-9
                );
            }
            // Stored controls regenerate every child from its parent.
            for node in run.tree.nodes().iter().skip(1) {
                let parent = run.tree.node(node.parent.unwrap());
                assert!(parent.id < node.id);
                let again = integrate(
                    &parent.state,
                    &node.control,
                    params.extend_time,
                    params.dt,
                    &ego,
                );
                assert!(again.position().distance(node.state.position()) < 1e-9);
                assert!((again.psi - node.state.psi).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn accepted_nodes_keep_clearance() {
        let bounds = Bounds::new(0.0, 0.0, 30.0, 20.0);
        let ego = EgoParams::default();
        let params = PlannerParams::default();
        let wall = Obstacle::rectangle(
            ObstacleId(1),
            ObstacleKind::Other,
            Point2::new(15.0, 8.0),
            2.0,
            12.0,
            0.0,
        )
        .unwrap();
        let obstacles = [&wall];
        let ctx = PlanningContext {
            bounds: &bounds,
            obstacles: &obstacles,
            ego: &ego,
        };
        let goal = Point2::new(27.0, 8.0);
        let ppm = generate_ppm(
            goal,
            1e3,
            0.05,
            &bounds,
            std::slice::from_ref(&wall),
            params.cell_size,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let run = prrt(
            VehicleState::new(3.0, 8.0, 0.0, 0.0),
            goal,
            &ppm,
            &params,
            &ctx,
            &mut rng,
        );
        for node in run.tree.nodes() {
            assert!(wall.distance_to(node.state.position()) >= ego.half_width());
        }
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let bounds = Bounds::new(0.0, 0.0, 40.0, 30.0);
        let ego = EgoParams::default();
        let params = PlannerParams {
            bias: 0.0,
            ..PlannerParams::default()
        };
        let goal = Point2::new(35.0, 22.0);
        let ppm = generate_ppm(goal, params.bias, 0.05, &bounds, &[], params.cell_size).unwrap();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = prrt(
                VehicleState::new(3.0, 4.0, 0.0, 0.0),
                goal,
                &ppm,
                &params,
                &empty_ctx(&bounds, &ego),
                &mut rng,
            );
            (r.iterations, r.tree)
        };
        assert_eq!(run(11), run(11));
    }

    #[test]
    fn param_validation() {
        assert!(PlannerParams::default().validate().is_ok());
        let bad = PlannerParams {
            max_iterations: 0,
            ..PlannerParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = PlannerParams {
            dt: 1.0,
            ..PlannerParams::default()
        };
        assert!(bad.validate().is_err());
    }
}
