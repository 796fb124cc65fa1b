use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Bounds, Obstacle, ObstacleId, ObstacleKind, Point2};
use crate::error::{Error, Result};
use crate::vehicle::VehicleState;

/// Ego vehicle geometry and limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoParams {
    /// Vehicle width `W`, meters.
    pub width: f64,
    pub wheelbase: f64,
    /// Speed cap, m/s.
    pub v_max: f64,
    /// Steering limit, radians.
    pub delta_max: f64,
    pub goal_radius: f64,
}

impl Default for EgoParams {
    fn default() -> Self {
        Self {
            width: 1.8,
            wheelbase: 2.7,
            // 10 mph
            v_max: 4.47,
            delta_max: 0.6,
            goal_radius: 1.0,
        }
    }
}

impl EgoParams {
    pub fn half_width(&self) -> f64 {
        0.5 * self.width
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("width", self.width),
            ("wheelbase", self.wheelbase),
            ("v_max", self.v_max),
            ("delta_max", self.delta_max),
            ("goal_radius", self.goal_radius),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidScenario(format!(
                    "ego.{name} must be positive, got {value}"
                )));
            }
        }
        if self.delta_max >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::InvalidScenario(format!(
                "ego.delta_max must be below pi/2, got {}",
                self.delta_max
            )));
        }
        Ok(())
    }
}

/// A planning problem: world bounds, static obstacles, start state and goal.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub bounds: Bounds,
    pub obstacles: Vec<Obstacle>,
    pub start: VehicleState,
    pub goal: Point2,
    pub ego: EgoParams,
    /// Lane polylines, drawn only.
    pub lanes: Vec<Vec<Point2>>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.ego.validate()?;
        if !self.bounds.is_valid() {
            return Err(Error::InvalidScenario(format!(
                "bad bounds {:?}",
                self.bounds
            )));
        }
        let start = self.start.position();
        if !self.bounds.contains(start) {
            return Err(Error::InvalidScenario(format!(
                "start {start:?} outside bounds"
            )));
        }
        if !self.bounds.contains(self.goal) {
            return Err(Error::InvalidScenario(format!(
                "goal {:?} outside bounds",
                self.goal
            )));
        }
        let mut ids: Vec<_> = self.obstacles.iter().map(|o| o.id).collect();
        ids.sort();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidScenario("duplicate obstacle id".into()));
        }
        for o in &self.obstacles {
            if o.distance_to(start) == 0.0 {
                return Err(Error::InvalidScenario(format!(
                    "start lies inside obstacle {}",
                    o.id
                )));
            }
            if o.distance_to(self.goal) == 0.0 {
                return Err(Error::InvalidScenario(format!(
                    "goal lies inside obstacle {}",
                    o.id
                )));
            }
        }
        Ok(())
    }

    pub fn obstacle(&self, id: ObstacleId) -> Option<&Obstacle> {
        self.obstacles.iter().find(|o| o.id == id)
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        file.into_scenario().map_err(|e| e.to_string())
    }

    /// Loads and validates a scenario file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ScenarioFile = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        let mut scenario = file.into_scenario()?;
        if scenario.name.is_empty() {
            scenario.name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        let file = ScenarioFile {
            name: self.name.clone(),
            bounds: self.bounds,
            start: self.start,
            goal: self.goal,
            ego: self.ego,
            obstacles: self
                .obstacles
                .iter()
                .map(|o| ObstacleFile {
                    id: o.id,
                    kind: o.kind,
                    outline: o.outline().iter().map(|&p| p.into()).collect(),
                })
                .collect(),
            lanes: self
                .lanes
                .iter()
                .map(|l| l.iter().map(|&p| p.into()).collect())
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("scenario serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    #[serde(default)]
    name: String,
    bounds: Bounds,
    start: VehicleState,
    goal: Point2,
    #[serde(default)]
    ego: EgoParams,
    #[serde(default)]
    obstacles: Vec<ObstacleFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    lanes: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize)]
struct ObstacleFile {
    id: ObstacleId,
    #[serde(default = "default_kind")]
    kind: ObstacleKind,
    outline: Vec<[f64; 2]>,
}

fn default_kind() -> ObstacleKind {
    ObstacleKind::Other
}

impl ScenarioFile {
    fn into_scenario(self) -> Result<Scenario> {
        let obstacles = self
            .obstacles
            .into_iter()
            .map(|o| {
                Obstacle::new(
                    o.id,
                    o.kind,
                    o.outline.into_iter().map(Point2::from).collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Scenario {
            name: self.name,
            bounds: self.bounds,
            obstacles,
            start: VehicleState::new(self.start.px, self.start.py, self.start.psi, self.start.v),
            goal: self.goal,
            ego: self.ego,
            lanes: self
                .lanes
                .into_iter()
                .map(|l| l.into_iter().map(Point2::from).collect())
                .collect(),
        })
    }
}
