//! Position probability map (PPM): a gridded, goal-biased sampling
//! distribution over free space.

use std::io::Write;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::world::{Bounds, Obstacle, Point2};

pub const DEFAULT_CELL_SIZE: f64 = 0.25;

#[derive(Debug, Clone)]
pub struct PositionProbabilityMap {
    origin: Point2,
    cell_size: f64,
    nx: usize,
    ny: usize,
    /// Clip rectangle for samples drawn from partial edge cells.
    bounds: Bounds,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

/// Builds the PPM for `goal`.
///
/// Each cell gets `1 + bias * exp(-d^2 / (2 (spread * D)^2))`, where `d` is
/// the distance from the cell center to the goal and `D` the bounds
/// diagonal, so `bias = 0` is exactly uniform. Cells whose center lies inside
/// an obstacle get zero weight.
pub fn generate_ppm(
    goal: Point2,
    bias: f64,
    spread: f64,
    bounds: &Bounds,
    obstacles: &[Obstacle],
    cell_size: f64,
) -> Result<PositionProbabilityMap> {
    if !(cell_size > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cell_size must be positive, got {cell_size}"
        )));
    }
    if !(bias >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bias must be non-negative, got {bias}"
        )));
    }
    if !bounds.is_valid() {
        return Err(Error::InvalidParameter(format!("bad bounds {bounds:?}")));
    }
    if !bounds.contains(goal) {
        return Err(Error::InvalidParameter(format!(
            "goal {goal:?} outside bounds"
        )));
    }
    let nx = (bounds.width() / cell_size).ceil().max(1.0) as usize;
    let ny = (bounds.height() / cell_size).ceil().max(1.0) as usize;
    let origin = Point2::new(bounds.xmin, bounds.ymin);
    let sigma = spread * bounds.diagonal();
    let two_var = 2.0 * sigma * sigma;

    let mut weights = Vec::with_capacity(nx * ny);
    for row in 0..ny {
        for col in 0..nx {
            let center = origin
                + Point2::new(
                    (col as f64 + 0.5) * cell_size,
                    (row as f64 + 0.5) * cell_size,
                );
            if obstacles.iter().any(|o| o.contains(center)) {
                weights.push(0.0);
                continue;
            }
            let peak = if bias == 0.0 {
                0.0
            } else if two_var > 0.0 {
                let d2 = (center - goal).dot(center - goal);
                bias * (-d2 / two_var).exp()
            } else {
                0.0
            };
            weights.push(1.0 + peak);
        }
    }
    PositionProbabilityMap::from_weights(origin, cell_size, nx, ny, *bounds, weights)
}

impl PositionProbabilityMap {
    /// Builds a map from raw row-major weights (`ny` rows of `nx`).
    /// Weights are normalized here.
    pub fn from_weights(
        origin: Point2,
        cell_size: f64,
        nx: usize,
        ny: usize,
        bounds: Bounds,
        mut weights: Vec<f64>,
    ) -> Result<Self> {
        if weights.len() != nx * ny || nx == 0 || ny == 0 {
            return Err(Error::InvalidParameter(format!(
                "expected {nx}x{ny} weights, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::NoFreeSpace);
        }
        weights.iter_mut().for_each(|w| *w /= total);
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        // Pin the tail so inverse-CDF lookups of u in [0, 1) always land.
        let last_free = weights.iter().rposition(|&w| w > 0.0).expect("total > 0");
        for c in &mut cumulative[last_free..] {
            *c = 1.0;
        }
        Ok(Self {
            origin,
            cell_size,
            nx,
            ny,
            bounds,
            weights,
            cumulative,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn weight(&self, col: usize, row: usize) -> f64 {
        self.weights[row * self.nx + col]
    }

    /// Grid cell containing `p`, if any.
    pub fn cell_of(&self, p: Point2) -> Option<(usize, usize)> {
        let col = ((p.x - self.origin.x) / self.cell_size).floor();
        let row = ((p.y - self.origin.y) / self.cell_size).floor();
        if col < 0.0 || row < 0.0 {
            return None;
        }
        let (col, row) = (col as usize, row as usize);
        (col < self.nx && row < self.ny).then_some((col, row))
    }

    /// Draws a cell by inverse CDF, then a uniform point inside it.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point2 {
        let u: f64 = rng.random();
        let idx = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(self.weights.len() - 1);
        let (col, row) = (idx % self.nx, idx / self.nx);
        let x0 = self.origin.x + col as f64 * self.cell_size;
        let y0 = self.origin.y + row as f64 * self.cell_size;
        let x1 = (x0 + self.cell_size).min(self.bounds.xmax);
        let y1 = (y0 + self.cell_size).min(self.bounds.ymax);
        let fx: f64 = rng.random();
        let fy: f64 = rng.random();
        Point2::new(x0 + fx * (x1 - x0), y0 + fy * (y1 - y0))
    }

    /// Row-major CSV dump of the weights, `ny` rows of `nx` columns.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for row in self.weights.chunks(self.nx) {
            let line: Vec<String> = row.iter().map(|w| format!("{w:.12e}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}
