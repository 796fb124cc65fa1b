use crate::connect::ConnectParams;
use crate::error::{Error, Result};
use crate::tracking::{MpcParams, DEFAULT_STANLEY_GAIN};
use crate::world::Scenario;

/// Every tunable the CLI exposes through `--param key=value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub connect: ConnectParams,
    pub mpc: MpcParams,
    pub stanley_gain: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            connect: ConnectParams::default(),
            mpc: MpcParams::default(),
            stanley_gain: DEFAULT_STANLEY_GAIN,
        }
    }
}

pub const PARAM_KEYS: &[&str] = &[
    "lambda",
    "sigma",
    "n",
    "extend_time",
    "dt",
    "cell_size",
    "count_rejected",
    "max_depth",
    "outline_spacing",
    "w1",
    "w2",
    "w3",
    "np",
    "nc",
    "mpc_dt",
    "stanley_k",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("cannot parse `{value}` for `{key}`")))
}

impl Settings {
    /// Applies one `key=value` override.
    pub fn apply(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| {
            Error::InvalidParameter(format!("expected key=value, got `{assignment}`"))
        })?;
        let key = key.trim().to_ascii_lowercase();
        let planner = &mut self.connect.planner;
        match key.as_str() {
            "lambda" | "bias" => planner.bias = parse(&key, value)?,
            "sigma" | "spread" => planner.spread = parse(&key, value)?,
            "n" | "max_iterations" => planner.max_iterations = parse(&key, value)?,
            "extend_time" | "delta_t" => planner.extend_time = parse(&key, value)?,
            "dt" => planner.dt = parse(&key, value)?,
            "cell_size" => planner.cell_size = parse(&key, value)?,
            "count_rejected" => planner.count_rejected = parse(&key, value)?,
            "max_depth" => self.connect.max_depth = parse(&key, value)?,
            "outline_spacing" => self.connect.outline_spacing = parse(&key, value)?,
            "w1" => self.mpc.w_position = parse(&key, value)?,
            "w2" => self.mpc.w_curvature = parse(&key, value)?,
            "w3" => self.mpc.w_speed = parse(&key, value)?,
            "np" | "prediction_horizon" => self.mpc.prediction_horizon = parse(&key, value)?,
            "nc" | "control_horizon" => self.mpc.control_horizon = parse(&key, value)?,
            "mpc_dt" => self.mpc.dt = parse(&key, value)?,
            "stanley_k" | "stanley_gain" => self.stanley_gain = parse(&key, value)?,
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown parameter `{key}` (known: {})",
                    PARAM_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    pub fn with_overrides<S: AsRef<str>>(overrides: &[S]) -> Result<Self> {
        let mut settings = Self::default();
        for o in overrides {
            settings.apply(o.as_ref())?;
        }
        settings.connect.planner.validate()?;
        settings.mpc.validate()?;
        Ok(settings)
    }

    /// Copies the scenario's ego limits into the planner and MPC settings.
    pub fn for_scenario(mut self, scenario: &Scenario) -> Self {
        self.connect.planner.goal_radius = scenario.ego.goal_radius;
        self.mpc.v_max = scenario.ego.v_max;
        self
    }
}
