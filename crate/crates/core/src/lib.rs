//! Goal-biased probabilistic RRT planning for car-like vehicles in the plane.
//!
//! * [`world`]: scenarios, polygonal obstacles, collision and clearance queries.
//! * [`vehicle`]: kinematic bicycle model and best-of-grid tree extension.
//! * [`sampling`]: the goal-biased position probability map.
//! * [`rrt`]: search tree and the pRRT loop (plain RRT at zero bias).
//! * [`connect`]: intermediate goals from safety-circle tangents and the
//!   multi-tree plan/repair loop.
//! * [`smoothing`]: Bezier smoothing of tree paths.
//! * [`tracking`]: MPC speed control with Stanley steering.
//! * [`harness`]: benchmark runner, CSV export and SVG rendering.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod connect;
pub mod error;
pub mod harness;
pub mod rrt;
pub mod sampling;
pub mod smoothing;
pub mod tracking;
pub mod vehicle;
pub mod world;

pub use connect::{plan, ConnectParams, PlanResult};
pub use error::{Error, Result};
pub use rrt::{prrt, PlannerParams, Tree};
pub use tracking::{track, MpcParams, Trajectory};
pub use vehicle::{ControlInput, VehicleState};
pub use world::{EgoParams, Obstacle, ObstacleId, Point2, Scenario};
