//! Probabilistic RRT-Connect with intermediate goals.
//!
//! A single high-bias pRRT tree is first grown from start to goal in an
//! empty world. Whenever the (smoothed) path comes within half the ego width
//! of an obstacle, that obstacle is marked hindering and the offending path
//! segment is replaced: a safety circle of radius `W` is placed on each of
//! the obstacle's interest points, the start-side and destination-side
//! tangents to it are intersected to give two intermediate goals, and two
//! partial trees are grown toward one of them (one from each end of the
//! segment) with the hindering obstacles known. The first goal both trees
//! reach is spliced in and the path is checked again.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rrt::{can_extend, prrt, PlannerParams, PlanningContext, PrrtRun, Tree};
use crate::sampling::generate_ppm;
use crate::smoothing::{connect_and_smooth, SmoothPath};
use crate::vehicle::{normalize_angle, VehicleState};
use crate::world::{
    discretize_outline, path_collides, select_interest_points, Obstacle, ObstacleId, Point2,
    Scenario, DEFAULT_OUTLINE_SPACING,
};

/// Relative cross-product threshold below which two tangents are treated as parallel.
const PARALLEL_EPS: f64 = 1e-12;
/// Extension depth a repair tree root must be able to reach.
const ESCAPE_STEPS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyCircle {
    pub center: Point2,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntermediateGoalPair {
    /// The goal nearer to the start.
    pub g1: Point2,
    pub g2: Point2,
}

/// Tangency points on the circle `(center, r)` seen from `p`.
///
/// The first point lies to the right of the ray `p -> center`, the second
/// to the left.
pub fn tangent_points(p: Point2, center: Point2, r: f64) -> Result<(Point2, Point2)> {
    let dist = p.distance(center);
    if !(dist > r) {
        return Err(Error::InsideSafetyCircle {
            distance: dist,
            radius: r,
        });
    }
    let h = (dist * dist - r * r).sqrt();
    let beta = (center - p).angle();
    let alpha = r.atan2(h);
    let right = p + Point2::new((beta - alpha).cos(), (beta - alpha).sin()) * h;
    let left = p + Point2::new((beta + alpha).cos(), (beta + alpha).sin()) * h;
    Ok((right, left))
}

fn line_intersection(p: Point2, dp: Point2, q: Point2, dq: Point2) -> Option<Point2> {
    let denom = dp.cross(dq);
    if denom.abs() <= PARALLEL_EPS * dp.norm() * dq.norm() {
        return None;
    }
    let a = (q - p).cross(dq) / denom;
    Some(p + dp * a)
}

/// Intersections of the start-side and goal-side tangents that pass the
/// circle on the same side, nearest-to-start first.
///
/// If a tangent pair is parallel, both goals fall back to points `2r` from
/// the center, perpendicular to the start-goal line.
pub fn intermediate_goals(
    start: Point2,
    goal: Point2,
    circle: &SafetyCircle,
) -> Result<IntermediateGoalPair> {
    let (s_right, s_left) = tangent_points(start, circle.center, circle.radius)?;
    let (g_right, g_left) = tangent_points(goal, circle.center, circle.radius)?;
    // Passing left of the center from the start means passing to the right
    // of it as seen from the goal.
    let left = line_intersection(start, s_left - start, goal, g_right - goal);
    let right = line_intersection(start, s_right - start, goal, g_left - goal);
    let (left, right) = match (left, right) {
        (Some(l), Some(r)) => (l, r),
        _ => {
            let axis = if goal.distance(start) > 0.0 {
                goal - start
            } else {
                circle.center - start
            };
            let normal = Point2::new(-axis.y, axis.x) * (1.0 / axis.norm());
            let offset = normal * (2.0 * circle.radius);
            (circle.center + offset, circle.center - offset)
        }
    };
    let (g1, g2) = if right.distance(start) < left.distance(start) {
        (right, left)
    } else {
        (left, right)
    };
    Ok(IntermediateGoalPair { g1, g2 })
}

/// Joins a start-rooted and a destination-rooted tree path that both end
/// near the same intermediate goal. The shared end points are merged (their
/// midpoint) and the destination branch is reversed.
pub fn connect(t1: &[Point2], t2: &[Point2], goal_radius: f64) -> Result<Vec<Point2>> {
    let (first, second) = connect_split(t1, t2, goal_radius)?;
    let mut joined = first;
    joined.extend_from_slice(&second[1..]);
    Ok(joined)
}

fn connect_split(
    t1: &[Point2],
    t2: &[Point2],
    goal_radius: f64,
) -> Result<(Vec<Point2>, Vec<Point2>)> {
    let (Some(&e1), Some(&e2)) = (t1.last(), t2.last()) else {
        return Err(Error::EndpointMismatch {
            gap: f64::INFINITY,
            limit: 2.0 * goal_radius,
        });
    };
    let gap = e1.distance(e2);
    if gap > 2.0 * goal_radius {
        return Err(Error::EndpointMismatch {
            gap,
            limit: 2.0 * goal_radius,
        });
    }
    let joint = if gap == 0.0 { e1 } else { e1.midpoint(e2) };
    let mut first = t1.to_vec();
    *first.last_mut().unwrap() = joint;
    let mut second: Vec<Point2> = t2.iter().rev().copied().collect();
    second[0] = joint;
    Ok((first, second))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeRole {
    /// The obstacle-free start-to-goal tree.
    Initial,
    /// Partial tree grown from a segment's start toward an intermediate goal.
    FromStart,
    /// Partial tree grown from a segment's destination toward an intermediate goal.
    FromDestination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrownTree {
    pub role: TreeRole,
    pub target: Point2,
    pub reached: bool,
    pub iterations: usize,
    pub tree: Tree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    /// Smoothed path samples, start first.
    pub path: Vec<Point2>,
    /// Control polygons (tree-node positions) of the final path segments.
    pub segments: Vec<Vec<Point2>>,
    /// Every tree grown, in growth order, including failed attempts.
    pub trees: Vec<GrownTree>,
    pub goals_used: Vec<Point2>,
    pub total_iterations: usize,
    pub hindering_ids: Vec<ObstacleId>,
}

impl PlanResult {
    pub fn smooth_path(&self) -> SmoothPath {
        SmoothPath::from_samples(self.path.clone())
    }

    pub fn partial_trees(&self) -> impl Iterator<Item = &GrownTree> {
        self.trees.iter().filter(|t| t.role != TreeRole::Initial)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectParams {
    pub planner: PlannerParams,
    /// Maximum nesting of segment repairs.
    pub max_depth: usize,
    pub outline_spacing: f64,
    /// Fixed per-curve sample count; `None` uses the length-based default.
    pub smoothing_samples: Option<usize>,
}

impl Default for ConnectParams {
    fn default() -> Self {
        Self {
            planner: PlannerParams::default(),
            max_depth: 8,
            outline_spacing: DEFAULT_OUTLINE_SPACING,
            smoothing_samples: None,
        }
    }
}

/// A stretch of the current path backed by one tree branch, stored in travel
/// order with travel-direction headings.
#[derive(Debug, Clone)]
struct Segment {
    states: Vec<VehicleState>,
    depth: usize,
}

impl Segment {
    fn points(&self) -> Vec<Point2> {
        self.states.iter().map(|s| s.position()).collect()
    }

    /// Concatenation with the following segment; the shared joint is kept once.
    fn merged(&self, next: &Segment) -> Segment {
        let mut states = self.states.clone();
        states.extend(next.states.iter().skip(1).copied());
        Segment {
            states,
            depth: self.depth.min(next.depth),
        }
    }
}

struct Planner<'a, R: ?Sized> {
    scenario: &'a Scenario,
    params: &'a ConnectParams,
    rng: &'a mut R,
    hindering: Vec<ObstacleId>,
    trees: Vec<GrownTree>,
    goals_used: Vec<Point2>,
    total_iterations: usize,
}

/// Plans a collision-free smoothed path for `scenario`.
pub fn plan<R: Rng + ?Sized>(
    scenario: &Scenario,
    params: &ConnectParams,
    rng: &mut R,
) -> Result<PlanResult> {
    scenario.validate()?;
    params.planner.validate()?;
    let planner = Planner {
        scenario,
        params,
        rng,
        hindering: Vec::new(),
        trees: Vec::new(),
        goals_used: Vec::new(),
        total_iterations: 0,
    };
    planner.run()
}

impl<R: Rng + ?Sized> Planner<'_, R> {
    fn half_width(&self) -> f64 {
        self.scenario.ego.half_width()
    }

    fn hindering_obstacles(&self) -> Vec<&Obstacle> {
        self.hindering
            .iter()
            .filter_map(|&id| self.scenario.obstacle(id))
            .collect()
    }

    fn grow(
        &mut self,
        root: VehicleState,
        target: Point2,
        role: TreeRole,
        obstacles: &[&Obstacle],
        ppm: &crate::sampling::PositionProbabilityMap,
    ) -> PrrtRun {
        let ctx = PlanningContext {
            bounds: &self.scenario.bounds,
            obstacles,
            ego: &self.scenario.ego,
        };
        let run = prrt(root, target, ppm, &self.params.planner, &ctx, self.rng);
        self.total_iterations += run.iterations;
        self.trees.push(GrownTree {
            role,
            target,
            reached: run.succeeded(),
            iterations: run.iterations,
            tree: run.tree.clone(),
        });
        run
    }

    fn smooth(&self, segment: &Segment) -> Result<SmoothPath> {
        connect_and_smooth(&[segment.points()], self.params.smoothing_samples)
    }

    fn run(mut self) -> Result<PlanResult> {
        let p = self.params.planner;
        let scenario = self.scenario;
        let ppm = generate_ppm(
            scenario.goal,
            p.bias,
            p.spread,
            &scenario.bounds,
            &[],
            p.cell_size,
        )?;
        let initial = self.grow(scenario.start, scenario.goal, TreeRole::Initial, &[], &ppm);
        let Some(states) = initial.path_states() else {
            return Err(Error::PlanningFailed {
                stage: "initial tree",
                obstacle: None,
            });
        };
        let mut segments = vec![Segment { states, depth: 0 }];

        loop {
            let curves = segments
                .iter()
                .map(|s| self.smooth(s))
                .collect::<Result<Vec<_>>>()?;
            let joined: Vec<Point2> = curves
                .iter()
                .flat_map(|c| c.samples().iter().copied())
                .collect();
            let Some(id) = path_collides(&joined, &scenario.obstacles, self.half_width()) else {
                break;
            };
            let obstacle = scenario.obstacle(id).expect("reported id exists");
            let hw = self.half_width();
            let mut index = curves
                .iter()
                .position(|c| obstacle.path_distance(c.samples()) < hw)
                .expect("some segment collides");
            let contact = curves[index]
                .samples()
                .iter()
                .copied()
                .min_by(|a, b| {
                    obstacle
                        .distance_to(*a)
                        .total_cmp(&obstacle.distance_to(*b))
                })
                .unwrap();

            if segments[index].depth >= self.params.max_depth {
                return Err(Error::PlanningFailed {
                    stage: "repair depth limit",
                    obstacle: Some(id),
                });
            }
            if !self.hindering.contains(&id) {
                self.hindering.push(id);
            }
            let pieces = loop {
                match self.repair(&segments[index], obstacle, contact) {
                    Ok(pieces) => break pieces,
                    Err(Error::PlanningFailed { .. }) if segments.len() > 1 => {
                        // A joint state can leave no forward way out; retry
                        // over the span including the neighbouring segment.
                        let j = index.saturating_sub(1);
                        let merged = segments[j].merged(&segments[j + 1]);
                        segments.splice(j..=j + 1, [merged]);
                        index = j;
                    }
                    Err(e) => return Err(e),
                }
            };
            segments.splice(index..=index, pieces);
        }

        let control: Vec<Vec<Point2>> = segments.iter().map(|s| s.points()).collect();
        let path = connect_and_smooth(&control, self.params.smoothing_samples)?;
        Ok(PlanResult {
            path: path.samples().to_vec(),
            segments: control,
            trees: self.trees,
            goals_used: self.goals_used,
            total_iterations: self.total_iterations,
            hindering_ids: self.hindering,
        })
    }

    /// Candidate intermediate goals around `obstacle` for the segment from
    /// `a` to `b`, in trial order.
    fn candidate_goals(
        &self,
        a: Point2,
        b: Point2,
        obstacle: &Obstacle,
        contact: Point2,
    ) -> Result<Vec<Point2>> {
        let hw = self.half_width();
        let outline = discretize_outline(obstacle, self.params.outline_spacing)?;
        let mut centers = select_interest_points(&outline, hw);
        centers.sort_by(|p, q| p.distance(contact).total_cmp(&q.distance(contact)));

        let collect = |radius: f64| -> Vec<Point2> {
            centers
                .iter()
                .filter_map(|&center| {
                    intermediate_goals(a, b, &SafetyCircle { center, radius }).ok()
                })
                .flat_map(|pair| [pair.g1, pair.g2])
                .collect()
        };
        let mut goals = collect(self.scenario.ego.width);
        if goals.is_empty() && !centers.is_empty() {
            let nearest = centers
                .iter()
                .map(|c| c.distance(a).min(c.distance(b)))
                .fold(f64::INFINITY, f64::min);
            goals = collect(hw.max(0.9 * nearest));
        }

        // Screening uses every detected obstacle; only tree growth is limited to
        // the hindering set.
        let known = &self.scenario.obstacles;
        let bounds = &self.scenario.bounds;
        goals.retain(|&g| bounds.contains(g) && known.iter().all(|o| o.distance_to(g) >= hw));
        // Goals with a full safety radius of room go first, then goals reachable
        // along straight legs; order is otherwise kept.
        let roomy = |g: Point2| {
            known
                .iter()
                .all(|o| o.distance_to(g) >= self.scenario.ego.width)
        };
        let clear = |p: Point2, q: Point2| known.iter().all(|o| o.segment_distance(p, q) >= hw);
        let rank = |g: Point2| u8::from(!roomy(g)) * 2 + u8::from(!(clear(a, g) && clear(g, b)));
        goals.sort_by_key(|&g| rank(g));
        Ok(goals)
    }

    /// Replaces `segment` by a detour around `obstacle`. Returns the pieces to
    /// splice in, in travel order.
    fn repair(
        &mut self,
        segment: &Segment,
        obstacle: &Obstacle,
        contact: Point2,
    ) -> Result<Vec<Segment>> {
        let p = self.params.planner;
        let scenario = self.scenario;
        let known: Vec<Obstacle> = self.hindering_obstacles().into_iter().cloned().collect();
        let known_refs: Vec<&Obstacle> = known.iter().collect();
        let ctx = PlanningContext {
            bounds: &scenario.bounds,
            obstacles: &known_refs,
            ego: &scenario.ego,
        };
        let boxed_in = Error::PlanningFailed {
            stage: "segment endpoint boxed in",
            obstacle: Some(obstacle.id),
        };

        // Tree roots must have a way out; otherwise the replanned span starts
        // later or ends earlier and the rest of the segment is kept.
        let states = &segment.states;
        let flipped = |s: &VehicleState| VehicleState {
            psi: normalize_angle(s.psi + std::f64::consts::PI),
            ..*s
        };
        let Some(i0) = (0..states.len()).find(|&i| can_extend(&states[i], ESCAPE_STEPS, &p, &ctx))
        else {
            return Err(boxed_in);
        };
        let Some(i1) = (i0 + 1..states.len())
            .rev()
            .find(|&i| can_extend(&flipped(&states[i]), ESCAPE_STEPS, &p, &ctx))
        else {
            return Err(boxed_in);
        };
        let start = states[i0];
        let dest_root = flipped(&states[i1]);
        let goals =
            self.candidate_goals(start.position(), states[i1].position(), obstacle, contact)?;

        for goal in goals {
            let ppm = match generate_ppm(
                goal,
                p.bias,
                p.spread,
                &scenario.bounds,
                &known,
                p.cell_size,
            ) {
                Ok(ppm) => ppm,
                Err(Error::NoFreeSpace) => continue,
                Err(e) => return Err(e),
            };
            let t1 = self.grow(start, goal, TreeRole::FromStart, &known_refs, &ppm);
            let Some(from_start) = t1.path_states() else {
                continue;
            };
            let t2 = self.grow(
                dest_root,
                goal,
                TreeRole::FromDestination,
                &known_refs,
                &ppm,
            );
            let Some(from_dest) = t2.path_states() else {
                continue;
            };

            let first_pts: Vec<Point2> = from_start.iter().map(|s| s.position()).collect();
            let second_pts: Vec<Point2> = from_dest.iter().map(|s| s.position()).collect();
            let (first_pts, second_pts) = connect_split(&first_pts, &second_pts, p.goal_radius)?;

            let mut first = from_start;
            let joint = first_pts.last().copied().unwrap();
            if let Some(last) = first.last_mut() {
                last.px = joint.x;
                last.py = joint.y;
            }
            let mut second: Vec<VehicleState> = from_dest
                .iter()
                .rev()
                .map(|s| VehicleState {
                    psi: normalize_angle(s.psi + std::f64::consts::PI),
                    ..*s
                })
                .collect();
            second[0].px = second_pts[0].x;
            second[0].py = second_pts[0].y;

            self.goals_used.push(goal);
            let depth = segment.depth + 1;
            let mut pieces = Vec::with_capacity(4);
            if i0 > 0 {
                pieces.push(Segment {
                    states: states[..=i0].to_vec(),
                    depth: segment.depth,
                });
            }
            pieces.push(Segment {
                states: first,
                depth,
            });
            pieces.push(Segment {
                states: second,
                depth,
            });
            if i1 + 1 < states.len() {
                pieces.push(Segment {
                    states: states[i1..].to_vec(),
                    depth: segment.depth,
                });
            }
            return Ok(pieces);
        }
        Err(Error::PlanningFailed {
            stage: "intermediate goals exhausted",
            obstacle: Some(obstacle.id),
        })
    }
}
