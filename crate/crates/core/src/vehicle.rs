//! Rear-axle kinematic bicycle model.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::world::{EgoParams, Point2};

/// Number of steering angles in the extension control grid.
pub const STEERING_SAMPLES: usize = 9;

/// Ego pose and speed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    #[serde(rename = "x")]
    pub px: f64,
    #[serde(rename = "y")]
    pub py: f64,
    /// Heading, radians in (-pi, pi].
    pub psi: f64,
    /// Speed, m/s.
    pub v: f64,
}

impl VehicleState {
    pub fn new(px: f64, py: f64, psi: f64, v: f64) -> Self {
        Self {
            px,
            py,
            psi: normalize_angle(psi),
            v: v.max(0.0),
        }
    }

    pub fn at(position: Point2, psi: f64) -> Self {
        Self::new(position.x, position.y, psi, 0.0)
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.px, self.py)
    }
}

/// Steering angle and speed command.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    pub delta: f64,
    pub v_cmd: f64,
}

impl ControlInput {
    pub const ZERO: Self = Self {
        delta: 0.0,
        v_cmd: 0.0,
    };

    pub fn new(delta: f64, v_cmd: f64) -> Self {
        Self { delta, v_cmd }
    }
}

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// One forward-Euler step. The speed is set directly to the clamped command
/// before integrating; steering is clamped to the ego limit.
pub fn step(state: &VehicleState, u: &ControlInput, dt: f64, ego: &EgoParams) -> VehicleState {
    let v = u.v_cmd.clamp(0.0, ego.v_max);
    let delta = u.delta.clamp(-ego.delta_max, ego.delta_max);
    let (sin, cos) = state.psi.sin_cos();
    VehicleState {
        px: state.px + v * cos * dt,
        py: state.py + v * sin * dt,
        psi: normalize_angle(state.psi + v / ego.wheelbase * delta.tan() * dt),
        v,
    }
}

fn substeps(horizon: f64, dt: f64) -> (usize, f64) {
    let n = (horizon / dt).round().max(1.0) as usize;
    (n, horizon / n as f64)
}

/// Holds `u` for `horizon` seconds; returns every intermediate state,
/// excluding `state` itself and ending with the final state.
pub fn rollout(
    state: &VehicleState,
    u: &ControlInput,
    horizon: f64,
    dt: f64,
    ego: &EgoParams,
) -> Vec<VehicleState> {
    let (n, h) = substeps(horizon, dt);
    let mut states = Vec::with_capacity(n);
    let mut s = *state;
    for _ in 0..n {
        s = step(&s, u, h, ego);
        states.push(s);
    }
    states
}

pub fn integrate(
    state: &VehicleState,
    u: &ControlInput,
    horizon: f64,
    dt: f64,
    ego: &EgoParams,
) -> VehicleState {
    let (n, h) = substeps(horizon, dt);
    (0..n).fold(*state, |s, _| step(&s, u, h, ego))
}

/// Extension candidates: `STEERING_SAMPLES` angles uniform in
/// `[-delta_max, delta_max]` crossed with speeds `{v_max / 2, v_max}`.
pub fn control_grid(ego: &EgoParams) -> Vec<ControlInput> {
    let half = (STEERING_SAMPLES / 2) as f64;
    let mut grid = Vec::with_capacity(STEERING_SAMPLES * 2);
    for speed in [0.5 * ego.v_max, ego.v_max] {
        for k in 0..STEERING_SAMPLES {
            // Written as a scaled integer so the grid is exactly sign-symmetric.
            let delta = ego.delta_max * (k as f64 - half) / half;
            grid.push(ControlInput::new(delta, speed));
        }
    }
    grid
}

/// Best-of-grid extension from `x_near` toward `target` over `horizon`.
pub fn steer_toward(
    x_near: &VehicleState,
    target: Point2,
    ego: &EgoParams,
    horizon: f64,
    dt: f64,
) -> (VehicleState, ControlInput) {
    steer_toward_with(&control_grid(ego), x_near, target, ego, horizon, dt)
}

/// Picks the candidate whose end state lands closest to `target`; ties go to
/// the smaller `|delta|`, then to the earlier candidate.
///
/// Panics if `candidates` is empty.
pub fn steer_toward_with(
    candidates: &[ControlInput],
    x_near: &VehicleState,
    target: Point2,
    ego: &EgoParams,
    horizon: f64,
    dt: f64,
) -> (VehicleState, ControlInput) {
    assert!(!candidates.is_empty(), "empty control candidate set");
    let mut best: Option<(f64, f64, VehicleState, ControlInput)> = None;
    for u in candidates {
        let end = integrate(x_near, u, horizon, dt, ego);
        let d = end.position().distance(target);
        let better = match &best {
            None => true,
            Some((bd, bdelta, _, _)) => d < *bd || (d == *bd && u.delta.abs() < *bdelta),
        };
        if better {
            best = Some((d, u.delta.abs(), end, *u));
        }
    }
    let (_, _, state, u) = best.unwrap();
    (state, u)
}
