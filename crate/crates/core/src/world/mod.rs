//! Scenario representation, obstacle discretization and collision queries.

pub mod geometry;
mod scenario;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use geometry::Point2;
use geometry::{is_simple_polygon, perimeter, point_polygon_distance, segment_polygon_distance};
pub use scenario::{EgoParams, Scenario};

/// Default spacing between discretized outline points, in meters.
pub const DEFAULT_OUTLINE_SPACING: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObstacleId(pub u32);

impl fmt::Display for ObstacleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObstacleKind {
    Vehicle,
    Pothole,
    Other,
}

/// Axis-aligned world rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Bounds {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Self {
        Self {
            xmin,
            ymin,
            xmax,
            ymax,
        }
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    pub fn is_valid(&self) -> bool {
        [self.xmin, self.ymin, self.xmax, self.ymax]
            .iter()
            .all(|v| v.is_finite())
            && self.xmax > self.xmin
            && self.ymax > self.ymin
    }
}

/// A static polygonal obstacle described by its outline vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    pub id: ObstacleId,
    pub kind: ObstacleKind,
    outline: Vec<Point2>,
}

impl Obstacle {
    /// Builds an obstacle, rejecting outlines with fewer than three points,
    /// zero perimeter or self-intersections.
    pub fn new(id: ObstacleId, kind: ObstacleKind, outline: Vec<Point2>) -> Result<Self> {
        if outline.len() < 3 {
            return Err(Error::DegenerateOutline(format!(
                "obstacle {id} has {} outline points, need at least 3",
                outline.len()
            )));
        }
        if !outline.iter().all(|p| p.is_finite()) {
            return Err(Error::DegenerateOutline(format!(
                "obstacle {id} has non-finite coordinates"
            )));
        }
        if perimeter(&outline) <= 0.0 {
            return Err(Error::DegenerateOutline(format!(
                "obstacle {id} has zero perimeter"
            )));
        }
        if !is_simple_polygon(&outline) {
            return Err(Error::DegenerateOutline(format!(
                "obstacle {id} outline self-intersects"
            )));
        }
        Ok(Self { id, kind, outline })
    }

    /// Axis-aligned box obstacle centered at `center`, rotated by `heading`.
    pub fn rectangle(
        id: ObstacleId,
        kind: ObstacleKind,
        center: Point2,
        length: f64,
        width: f64,
        heading: f64,
    ) -> Result<Self> {
        let (s, c) = heading.sin_cos();
        let corners = [(0.5, 0.5), (-0.5, 0.5), (-0.5, -0.5), (0.5, -0.5)]
            .iter()
            .map(|&(fx, fy)| {
                let (lx, ly) = (fx * length, fy * width);
                center + Point2::new(c * lx - s * ly, s * lx + c * ly)
            })
            .collect();
        Self::new(id, kind, corners)
    }

    pub fn outline(&self) -> &[Point2] {
        &self.outline
    }

    pub fn contains(&self, p: Point2) -> bool {
        geometry::point_in_polygon(p, &self.outline)
    }

    /// Distance from `p` to the filled polygon (zero inside).
    pub fn distance_to(&self, p: Point2) -> f64 {
        point_polygon_distance(p, &self.outline)
    }

    pub fn segment_distance(&self, a: Point2, b: Point2) -> f64 {
        segment_polygon_distance(a, b, &self.outline)
    }

    /// Distance from a polyline to the filled polygon.
    pub fn path_distance(&self, path: &[Point2]) -> f64 {
        match path {
            [] => f64::INFINITY,
            [p] => self.distance_to(*p),
            _ => path
                .windows(2)
                .map(|w| self.segment_distance(w[0], w[1]))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

/// Points along the closed outline, at most `spacing` apart, including
/// every original vertex. Edges are split into equal pieces.
pub fn discretize_outline(obstacle: &Obstacle, spacing: f64) -> Result<Vec<Point2>> {
    if !(spacing > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "outline spacing must be positive, got {spacing}"
        )));
    }
    discretize_polygon(obstacle.outline(), spacing)
}

pub(crate) fn discretize_polygon(outline: &[Point2], spacing: f64) -> Result<Vec<Point2>> {
    if outline.len() < 3 || perimeter(outline) <= 0.0 {
        return Err(Error::DegenerateOutline(format!(
            "{} outline points with perimeter {}",
            outline.len(),
            perimeter(outline)
        )));
    }
    let mut points = Vec::new();
    for (a, b) in geometry::edges(outline) {
        let pieces = (a.distance(b) / spacing).ceil().max(1.0) as usize;
        points.extend((0..pieces).map(|k| a.lerp(b, k as f64 / pieces as f64)));
    }
    Ok(points)
}

/// Greedy subsample: keeps the first point, then every point farther than
/// `half_width` from the last kept one.
pub fn select_interest_points(outline_points: &[Point2], half_width: f64) -> Vec<Point2> {
    let mut kept: Vec<Point2> = Vec::new();
    for &p in outline_points {
        match kept.last() {
            Some(&last) if p.distance(last) <= half_width => {}
            _ => kept.push(p),
        }
    }
    kept
}

/// Id of the first obstacle (in slice order) that comes closer than
/// `half_width` to the polyline.
pub fn path_collides(
    path: &[Point2],
    obstacles: &[Obstacle],
    half_width: f64,
) -> Option<ObstacleId> {
    obstacles
        .iter()
        .find(|o| o.path_distance(path) < half_width)
        .map(|o| o.id)
}

/// Minimum distance from `point` to any obstacle; zero inside one and
/// infinite with no obstacles.
pub fn clearance(point: Point2, obstacles: &[Obstacle]) -> f64 {
    obstacles
        .iter()
        .map(|o| o.distance_to(point))
        .fold(f64::INFINITY, f64::min)
}

/// Minimum clearance along a polyline.
pub fn path_clearance(path: &[Point2], obstacles: &[Obstacle]) -> f64 {
    obstacles
        .iter()
        .map(|o| o.path_distance(path))
        .fold(f64::INFINITY, f64::min)
}
