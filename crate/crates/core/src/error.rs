use std::path::PathBuf;

use crate::tracking::Trajectory;
use crate::world::ObstacleId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate obstacle outline: {0}")]
    DegenerateOutline(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("position probability map has no free cell")]
    NoFreeSpace,

    #[error("point inside or on safety circle (distance {distance:.6} <= radius {radius:.6})")]
    InsideSafetyCircle { distance: f64, radius: f64 },

    #[error("bernstein index {i} exceeds degree {n}")]
    BernsteinIndex { n: usize, i: usize },

    #[error("no segments to smooth")]
    EmptySegments,

    #[error("tree endpoints do not meet: gap {gap:.3} m exceeds {limit:.3} m")]
    EndpointMismatch { gap: f64, limit: f64 },

    #[error("planning failed at stage `{stage}`{}", obstacle.map(|id| format!(" (obstacle {id})")).unwrap_or_default())]
    PlanningFailed {
        stage: &'static str,
        obstacle: Option<ObstacleId>,
    },

    #[error("tracking start is {distance:.3} m from the path head (limit 2 m)")]
    StartOffPath { distance: f64 },

    #[error("tracking time cap of {cap:.1} s exceeded before reaching the path end")]
    TimeCapExceeded { cap: f64, partial: Box<Trajectory> },

    #[error("trajectory is empty")]
    EmptyTrajectory,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
