//! Closed-loop path tracking: a receding-horizon speed MPC for the
//! longitudinal command and a Stanley law for steering.
//!
//! The MPC uses an arc-length progress model: the vehicle is assumed to stay
//! on the path, so predicted position `j` is the path point at
//! `s0 + dt * (v_1 + ... + v_j)` (speeds past the control horizon hold the
//! last value). Measuring position error along the path makes the cost
//!
//! ```text
//! J(v) = w1 * sum_j (s_j - s_ref_j)^2 + w2 * sum_i K_i v_i^2 + w3 * sum_i (v_i - v_max)^2
//! ```
//!
//! a convex quadratic over the box `[0, v_max]^Nc`, solved by projected
//! coordinate descent. The reference advances at `v_max` and stops at the
//! path end; `K_i` is the path curvature at the reference position.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smoothing::SmoothPath;
use crate::vehicle::{normalize_angle, step, ControlInput, VehicleState};
use crate::world::{EgoParams, Point2};

/// Speed softening term of the Stanley law, m/s.
pub const STANLEY_SOFTENING: f64 = 0.1;
pub const DEFAULT_STANLEY_GAIN: f64 = 2.5;

const SOLVER_TOLERANCE: f64 = 1e-6;
const SOLVER_MAX_SWEEPS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpcParams {
    /// Prediction horizon, steps.
    pub prediction_horizon: usize,
    /// Control horizon, steps.
    pub control_horizon: usize,
    pub dt: f64,
    /// Position error weight.
    pub w_position: f64,
    /// Curvature-speed weight.
    pub w_curvature: f64,
    /// Speed-cap attraction weight.
    pub w_speed: f64,
    pub v_max: f64,
}

impl Default for MpcParams {
    fn default() -> Self {
        Self {
            prediction_horizon: 20,
            control_horizon: 15,
            dt: 0.1,
            w_position: 1.0,
            w_curvature: 0.5,
            w_speed: 0.2,
            v_max: EgoParams::default().v_max,
        }
    }
}

impl MpcParams {
    pub fn validate(&self) -> Result<()> {
        if self.control_horizon == 0 || self.control_horizon > self.prediction_horizon {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= control horizon ({}) <= prediction horizon ({})",
                self.control_horizon, self.prediction_horizon
            )));
        }
        if !(self.dt > 0.0) || !(self.v_max > 0.0) {
            return Err(Error::InvalidParameter(
                "dt and v_max must be positive".into(),
            ));
        }
        if [self.w_position, self.w_curvature, self.w_speed]
            .iter()
            .any(|w| !(*w >= 0.0))
        {
            return Err(Error::InvalidParameter(
                "MPC weights must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// One horizon's speed optimization with the path data already sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedProblem {
    /// `s_ref_j - s0` for `j = 1..=Np`.
    pub reference_progress: Vec<f64>,
    /// `|K_i|` for `i = 1..=Nc`.
    pub curvature: Vec<f64>,
    pub dt: f64,
    pub w_position: f64,
    pub w_curvature: f64,
    pub w_speed: f64,
    pub v_max: f64,
}

impl SpeedProblem {
    /// Horizon data for a vehicle at arc length `s0` on `path`.
    pub fn from_path(path: &SmoothPath, s0: f64, params: &MpcParams) -> Self {
        let len = path.length();
        let reference: Vec<f64> = (1..=params.prediction_horizon)
            .map(|j| (s0 + j as f64 * params.v_max * params.dt).min(len))
            .collect();
        let curvature = reference[..params.control_horizon]
            .iter()
            .map(|&s| path.curvature_at(s).abs())
            .collect();
        Self {
            reference_progress: reference.iter().map(|s| s - s0).collect(),
            curvature,
            dt: params.dt,
            w_position: params.w_position,
            w_curvature: params.w_curvature,
            w_speed: params.w_speed,
            v_max: params.v_max,
        }
    }

    fn control_horizon(&self) -> usize {
        self.curvature.len()
    }

    /// Coefficient of `v_i` in the predicted progress after step `j`
    /// (both zero-based).
    fn progress_coeff(&self, j: usize, i: usize) -> f64 {
        let nc = self.control_horizon();
        if i + 1 < nc {
            if i <= j {
                1.0
            } else {
                0.0
            }
        } else if j + 1 >= nc {
            (j + 2 - nc) as f64
        } else {
            0.0
        }
    }

    /// Hessian `Q` and linear term `c` of `J / 2`, whose gradient is `Q v - c`.
    fn quadratic(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let nc = self.control_horizon();
        let np = self.reference_progress.len();
        let a: Vec<Vec<f64>> = (0..np)
            .map(|j| (0..nc).map(|i| self.progress_coeff(j, i)).collect())
            .collect();
        let w1 = self.w_position * self.dt * self.dt;
        let mut q = vec![vec![0.0; nc]; nc];
        let mut c = vec![0.0; nc];
        for i in 0..nc {
            for k in 0..nc {
                q[i][k] = w1 * (0..np).map(|j| a[j][i] * a[j][k]).sum::<f64>();
            }
            q[i][i] += self.w_curvature * self.curvature[i] + self.w_speed;
            c[i] = self.w_position
                * self.dt
                * (0..np)
                    .map(|j| a[j][i] * self.reference_progress[j])
                    .sum::<f64>()
                + self.w_speed * self.v_max;
        }
        (q, c)
    }

    pub fn cost(&self, v: &[f64]) -> f64 {
        let nc = self.control_horizon();
        let position: f64 = self
            .reference_progress
            .iter()
            .enumerate()
            .map(|(j, r)| {
                let s: f64 = (0..nc)
                    .map(|i| self.progress_coeff(j, i) * v[i])
                    .sum::<f64>()
                    * self.dt;
                (s - r).powi(2)
            })
            .sum();
        let curvature: f64 = v.iter().zip(&self.curvature).map(|(v, k)| k * v * v).sum();
        let speed: f64 = v.iter().map(|v| (v - self.v_max).powi(2)).sum();
        self.w_position * position + self.w_curvature * curvature + self.w_speed * speed
    }

    /// Minimizes the cost over `[0, v_max]^Nc`.
    pub fn solve(&self) -> Vec<f64> {
        let nc = self.control_horizon();
        let (q, c) = self.quadratic();
        let mut v = vec![self.v_max; nc];
        for _ in 0..SOLVER_MAX_SWEEPS {
            for i in 0..nc {
                if q[i][i] <= 0.0 {
                    continue;
                }
                let off: f64 = (0..nc).filter(|&k| k != i).map(|k| q[i][k] * v[k]).sum();
                v[i] = ((c[i] - off) / q[i][i]).clamp(0.0, self.v_max);
            }
            let stationary = (0..nc).all(|i| {
                let g: f64 = (0..nc).map(|k| q[i][k] * v[k]).sum::<f64>() - c[i];
                let projected = if v[i] <= 0.0 {
                    g.min(0.0)
                } else if v[i] >= self.v_max {
                    g.max(0.0)
                } else {
                    g
                };
                projected.abs() <= SOLVER_TOLERANCE
            });
            if stationary {
                break;
            }
        }
        v
    }
}

/// Speed sequence over the control horizon for the vehicle at `state`.
pub fn mpc_speed(state: &VehicleState, path: &SmoothPath, params: &MpcParams) -> Vec<f64> {
    let s0 = path.project(state.position()).s;
    SpeedProblem::from_path(path, s0, params).solve()
}

/// `heading_error - atan2(k e, v + softening)`, with `e` positive when the
/// vehicle is left of the path.
pub fn stanley_law(heading_error: f64, cross_track: f64, speed: f64, gain: f64) -> f64 {
    heading_error - (gain * cross_track).atan2(speed + STANLEY_SOFTENING)
}

fn front_axle(state: &VehicleState, ego: &EgoParams) -> Point2 {
    state.position() + Point2::new(state.psi.cos(), state.psi.sin()) * ego.wheelbase
}

fn stanley_from_projection(
    state: &VehicleState,
    heading: f64,
    lateral: f64,
    gain: f64,
    ego: &EgoParams,
) -> f64 {
    let heading_error = normalize_angle(heading - state.psi);
    stanley_law(heading_error, lateral, state.v, gain).clamp(-ego.delta_max, ego.delta_max)
}

/// Stanley steering command, evaluated at the front axle and clamped to the
/// steering limit.
pub fn stanley_steer(state: &VehicleState, path: &SmoothPath, gain: f64, ego: &EgoParams) -> f64 {
    let proj = path.project(front_axle(state, ego));
    stanley_from_projection(state, proj.heading, proj.lateral, gain, ego)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub state: VehicleState,
    /// Control that produced `state` from the previous record.
    pub control: ControlInput,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn positions(&self) -> Vec<Point2> {
        self.records.iter().map(|r| r.state.position()).collect()
    }
}

/// Time budget for tracking a path of `length` meters.
pub fn time_cap(length: f64, v_max: f64) -> f64 {
    3.0 * length / (0.25 * v_max)
}

/// Simulates the closed loop from `start` until it is within the goal radius
/// of the path end.
pub fn track(
    path: &SmoothPath,
    start: VehicleState,
    ego: &EgoParams,
    mpc: &MpcParams,
    stanley_gain: f64,
) -> Result<Trajectory> {
    mpc.validate()?;
    let offset = path
        .project(start.position())
        .distance
        .min(start.position().distance(path.start()));
    if offset > 2.0 {
        return Err(Error::StartOffPath { distance: offset });
    }
    let mut trajectory = Trajectory {
        records: vec![TrajectoryRecord {
            t: 0.0,
            state: start,
            control: ControlInput::ZERO,
        }],
    };
    let end = path.end();
    if path.length() == 0.0 || start.position().distance(end) <= ego.goal_radius {
        return Ok(trajectory);
    }
    let v_max = mpc.v_max.min(ego.v_max);
    let mpc = MpcParams { v_max, ..*mpc };
    let cap = time_cap(path.length(), v_max);
    // Projections are searched near the previous foot point so that paths
    // passing close to themselves do not make the reference jump.
    const BACK: f64 = 2.0;
    const AHEAD: f64 = 10.0;
    let mut state = start;
    let mut s_rear = path.project(state.position()).s;
    let mut s_front = path.project(front_axle(&state, ego)).s;
    let mut k = 0usize;
    loop {
        let front = path.project_within(front_axle(&state, ego), s_front - BACK, s_front + AHEAD);
        s_front = front.s;
        let delta =
            stanley_from_projection(&state, front.heading, front.lateral, stanley_gain, ego);
        let rear = path.project_within(state.position(), s_rear - BACK, s_rear + AHEAD);
        s_rear = rear.s;
        let speeds = SpeedProblem::from_path(path, s_rear, &mpc).solve();
        let control = ControlInput::new(delta, speeds[0]);
        state = step(&state, &control, mpc.dt, ego);
        k += 1;
        let t = k as f64 * mpc.dt;
        trajectory
            .records
            .push(TrajectoryRecord { t, state, control });
        if state.position().distance(end) <= ego.goal_radius {
            return Ok(trajectory);
        }
        if t > cap {
            return Err(Error::TimeCapExceeded {
                cap,
                partial: Box::new(trajectory),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight(len: f64) -> SmoothPath {
        let n = (len / 0.2) as usize;
        SmoothPath::from_samples(
            (0..=n)
                .map(|i| Point2::new(len * i as f64 / n as f64, 0.0))
                .collect(),
        )
    }

    #[test]
    fn stanley_on_path_is_zero() {
        let path = straight(20.0);
        let state = VehicleState::new(3.0, 0.0, 0.0, 2.0);
        assert_eq!(
            stanley_steer(&state, &path, 2.5, &EgoParams::default()),
            0.0
        );
    }

    #[test]
    fn stanley_heading_term_only() {
        assert!((stanley_law(0.2, 0.0, 3.0, 2.5) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn stanley_cross_track_term() {
        // Vehicle 1 m right of the path, v + softening = 2: steer left by atan(1/2).
        let d = stanley_law(0.0, -1.0, 1.9, 1.0);
        assert!((d - 0.5f64.atan()).abs() < 1e-12);
        assert!((d - 0.4636).abs() < 1e-4);
    }

    #[test]
    fn stanley_signs_and_mirror() {
        let path = straight(30.0);
        let ego = EgoParams::default();
        let left = VehicleState::new(5.0, 0.8, 0.05, 2.0);
        let right = VehicleState::new(5.0, -0.8, -0.05, 2.0);
        let dl = stanley_steer(&left, &path, 2.5, &ego);
        let dr = stanley_steer(&right, &path, 2.5, &ego);
        assert!(dl < 0.0, "left of path must steer right, got {dl}");
        assert!((dl + dr).abs() < 1e-12);
    }

    #[test]
    fn stanley_is_clamped() {
        let path = straight(30.0);
        let ego = EgoParams::default();
        let far = VehicleState::new(5.0, 1.9, 0.0, 0.0);
        assert_eq!(stanley_steer(&far, &path, 2.5, &ego), -ego.delta_max);
    }

    fn scalar(w1: f64, w2: f64, k: f64, w3: f64, v_max: f64) -> SpeedProblem {
        SpeedProblem {
            reference_progress: vec![v_max * 0.1],
            curvature: vec![k],
            dt: 0.1,
            w_position: w1,
            w_curvature: w2,
            w_speed: w3,
            v_max,
        }
    }

    #[test]
    fn scalar_closed_form() {
        // dJ/dv = 2 w2 K v + 2 w3 (v - v_max) = 0.
        let v = scalar(0.0, 1.0, 1.0, 1.0, 4.0).solve();
        assert!((v[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn no_tracking_or_curvature_gives_cap() {
        let path = straight(30.0);
        let params = MpcParams {
            w_position: 0.0,
            w_curvature: 0.0,
            ..MpcParams::default()
        };
        let v = mpc_speed(&VehicleState::new(1.0, 0.0, 0.0, 0.0), &path, &params);
        assert_eq!(v.len(), 15);
        assert!(v.iter().all(|&x| (x - params.v_max).abs() < 1e-9));
    }

    #[test]
    fn first_speed_can_rise_with_curvature_weight() {
        // Values from an exact active-set solve of the same quadratic.
        let problem = |w2| SpeedProblem {
            reference_progress: vec![0.113, 0.199, 0.455],
            curvature: vec![0.01, 1.29],
            dt: 0.1,
            w_position: 3.6,
            w_curvature: w2,
            w_speed: 4.18,
            v_max: 4.0,
        };
        let low = problem(0.5).solve()[0];
        let high = problem(2.0).solve()[0];
        assert!((low - 3.875_086_091_833_866).abs() < 1e-5, "{low}");
        assert!((high - 3.884_921_177_429_217).abs() < 1e-5, "{high}");
        assert!(high > low);
    }

    #[test]
    fn pure_curvature_penalty_stops() {
        let circle = SmoothPath::from_samples(
            (0..=200)
                .map(|k| {
                    let a = k as f64 / 200.0 * std::f64::consts::PI;
                    Point2::new(5.0 * a.cos(), 5.0 * a.sin())
                })
                .collect(),
        );
        let params = MpcParams {
            w_position: 0.0,
            w_speed: 0.0,
            ..MpcParams::default()
        };
        let v = mpc_speed(&VehicleState::new(5.0, 0.0, 1.57, 0.0), &circle, &params);
        assert!(v.iter().all(|&x| x.abs() < 1e-9), "{v:?}");
    }

    #[test]
    fn solver_matches_brute_force_on_small_horizon() {
        let problem = SpeedProblem {
            reference_progress: vec![0.3, 0.6, 0.8],
            curvature: vec![0.4, 0.1],
            dt: 0.1,
            w_position: 5.0,
            w_curvature: 1.5,
            w_speed: 0.2,
            v_max: 4.0,
        };
        let v = problem.solve();
        let best = problem.cost(&v);
        // Grid search over the box.
        let n = 400;
        let mut grid_best = f64::INFINITY;
        for a in 0..=n {
            for b in 0..=n {
                let x = [4.0 * a as f64 / n as f64, 4.0 * b as f64 / n as f64];
                grid_best = grid_best.min(problem.cost(&x));
            }
        }
        assert!(best <= grid_best + 1e-9, "{best} vs {grid_best}");
    }

    #[test]
    fn zero_length_path_is_immediate() {
        let path = SmoothPath::from_samples(vec![Point2::new(1.0, 1.0)]);
        let traj = track(
            &path,
            VehicleState::new(1.0, 1.0, 0.0, 0.0),
            &EgoParams::default(),
            &MpcParams::default(),
            2.5,
        )
        .unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.records[0].t, 0.0);
    }

    #[test]
    fn far_start_is_rejected() {
        let path = straight(20.0);
        let err = track(
            &path,
            VehicleState::new(0.0, 5.0, 0.0, 0.0),
            &EgoParams::default(),
            &MpcParams::default(),
            2.5,
        )
        .unwrap_err();
        assert!(matches!(err, Error::StartOffPath { .. }));
    }

    #[test]
    fn curved_path_is_followed() {
        // Quarter circle of radius 12 m after a straight lead-in.
        let mut pts: Vec<Point2> = (0..=50).map(|i| Point2::new(i as f64 * 0.2, 0.0)).collect();
        pts.extend((1..=100).map(|k| {
            let a = k as f64 / 100.0 * std::f64::consts::FRAC_PI_2;
            Point2::new(10.0 + 12.0 * a.sin(), 12.0 - 12.0 * a.cos())
        }));
        let path = SmoothPath::from_samples(pts);
        let ego = EgoParams::default();
        let traj = track(
            &path,
            VehicleState::new(0.0, 0.0, 0.0, 0.0),
            &ego,
            &MpcParams::default(),
            DEFAULT_STANLEY_GAIN,
        )
        .unwrap();
        let worst = traj
            .positions()
            .iter()
            .map(|&p| path.project(p).distance)
            .fold(0.0, f64::max);
        assert!(worst < 0.5, "max deviation {worst}");
        for r in &traj.records {
            assert!(r.control.v_cmd >= 0.0 && r.control.v_cmd <= ego.v_max);
        }
    }
}
