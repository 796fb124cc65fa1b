//! Bezier smoothing of tree-node control polygons.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::Point2;

/// Longest control polygon fitted with a single curve.
pub const MAX_CONTROL_POINTS: usize = 25;
/// Target spacing of curve samples, meters.
pub const SAMPLE_SPACING: f64 = 0.2;
pub const MIN_SAMPLES: usize = 20;

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Bernstein basis polynomial `C(n, i) (1 - t)^(n - i) t^i`.
pub fn bernstein(n: usize, i: usize, t: f64) -> Result<f64> {
    if i > n {
        return Err(Error::BernsteinIndex { n, i });
    }
    Ok(binomial(n, i) * (1.0 - t).powi((n - i) as i32) * t.powi(i as i32))
}

/// Control points `P_0 ..= P_n` of one Bezier curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPolygon(Vec<Point2>);

impl ControlPolygon {
    pub fn new(points: Vec<Point2>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "control polygon needs at least 2 points, got {}",
                points.len()
            )));
        }
        Ok(Self(points))
    }

    pub fn points(&self) -> &[Point2] {
        &self.0
    }

    /// Degree `n`.
    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn length(&self) -> f64 {
        polyline_length(&self.0)
    }

    /// Curve point `P(t) = sum_i B_i^n(t) P_i`.
    pub fn eval(&self, t: f64) -> Point2 {
        let n = self.degree();
        if t <= 0.0 {
            return self.0[0];
        }
        if t >= 1.0 {
            return self.0[n];
        }
        self.0
            .iter()
            .enumerate()
            .fold(Point2::default(), |acc, (i, &p)| {
                acc + p * bernstein(n, i, t).expect("i <= n")
            })
    }
}

pub fn polyline_length(points: &[Point2]) -> f64 {
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Default sample count for a control polygon of the given length.
pub fn default_sample_count(length: f64) -> usize {
    ((length / SAMPLE_SPACING).ceil() as usize).max(MIN_SAMPLES)
}

/// Where a query point projects onto a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Arc length of the foot point.
    pub s: f64,
    pub point: Point2,
    /// Tangent heading at the foot point.
    pub heading: f64,
    /// Signed lateral offset of the query point, positive to the left.
    pub lateral: f64,
    pub distance: f64,
}

/// A sampled curve with arc-length and curvature tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothPath {
    samples: Vec<Point2>,
    arc_length: Vec<f64>,
    curvature: Vec<f64>,
}

impl SmoothPath {
    /// Wraps an arbitrary polyline, computing the arc-length and curvature
    /// tables. Panics on an empty polyline.
    pub fn from_samples(samples: Vec<Point2>) -> Self {
        assert!(!samples.is_empty(), "path needs at least one sample");
        let mut arc_length = Vec::with_capacity(samples.len());
        let mut acc = 0.0;
        arc_length.push(0.0);
        for w in samples.windows(2) {
            acc += w[0].distance(w[1]);
            arc_length.push(acc);
        }
        let curvature = three_point_curvature(&samples);
        Self {
            samples,
            arc_length,
            curvature,
        }
    }

    pub fn samples(&self) -> &[Point2] {
        &self.samples
    }

    pub fn arc_length(&self) -> &[f64] {
        &self.arc_length
    }

    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }

    pub fn length(&self) -> f64 {
        *self.arc_length.last().unwrap()
    }

    pub fn start(&self) -> Point2 {
        self.samples[0]
    }

    pub fn end(&self) -> Point2 {
        *self.samples.last().unwrap()
    }

    /// Index `i` of the sample interval `[s_i, s_{i+1}]` containing `s`.
    fn interval(&self, s: f64) -> usize {
        let n = self.samples.len();
        if n < 2 {
            return 0;
        }
        let idx = self.arc_length.partition_point(|&a| a <= s);
        idx.saturating_sub(1).min(n - 2)
    }

    /// Point at arc length `s`, clamped to the path ends.
    pub fn point_at(&self, s: f64) -> Point2 {
        if self.samples.len() < 2 || s <= 0.0 {
            return self.start();
        }
        if s >= self.length() {
            return self.end();
        }
        let i = self.interval(s);
        let span = self.arc_length[i + 1] - self.arc_length[i];
        if span <= 0.0 {
            return self.samples[i];
        }
        self.samples[i].lerp(self.samples[i + 1], (s - self.arc_length[i]) / span)
    }

    /// Linearly interpolated curvature at arc length `s`.
    pub fn curvature_at(&self, s: f64) -> f64 {
        if self.samples.len() < 2 {
            return 0.0;
        }
        let s = s.clamp(0.0, self.length());
        let i = self.interval(s);
        let span = self.arc_length[i + 1] - self.arc_length[i];
        if span <= 0.0 {
            return self.curvature[i];
        }
        let f = (s - self.arc_length[i]) / span;
        self.curvature[i] * (1.0 - f) + self.curvature[i + 1] * f
    }

    /// Nearest point on the polyline to `p`; earliest segment wins ties.
    pub fn project(&self, p: Point2) -> Projection {
        self.project_within(p, f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Like [`SmoothPath::project`], restricted to the segments overlapping
    /// the arc-length window `[s_min, s_max]`.
    pub fn project_within(&self, p: Point2, s_min: f64, s_max: f64) -> Projection {
        if self.samples.len() < 2 || self.length() == 0.0 {
            let q = self.start();
            return Projection {
                s: 0.0,
                point: q,
                heading: 0.0,
                lateral: 0.0,
                distance: p.distance(q),
            };
        }
        let mut best: Option<Projection> = None;
        for i in 0..self.samples.len() - 1 {
            if self.arc_length[i + 1] < s_min || self.arc_length[i] > s_max {
                continue;
            }
            let (a, b) = (self.samples[i], self.samples[i + 1]);
            let ab = b - a;
            let len2 = ab.dot(ab);
            if len2 == 0.0 {
                continue;
            }
            let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
            let foot = a + ab * t;
            let d = p.distance(foot);
            if best.as_ref().is_none_or(|b| d < b.distance) {
                let len = len2.sqrt();
                best = Some(Projection {
                    s: self.arc_length[i] + t * len,
                    point: foot,
                    heading: ab.angle(),
                    lateral: ab.cross(p - a) / len,
                    distance: d,
                });
            }
        }
        best.unwrap_or_else(|| {
            let s = s_min.clamp(0.0, self.length());
            let q = self.point_at(s);
            Projection {
                s,
                point: q,
                heading: 0.0,
                lateral: 0.0,
                distance: p.distance(q),
            }
        })
    }

    /// Points resampled every `spacing` meters along the path, ends included.
    pub fn resample(&self, spacing: f64) -> Vec<Point2> {
        let len = self.length();
        let n = (len / spacing).ceil().max(1.0) as usize;
        (0..=n)
            .map(|k| self.point_at(len * k as f64 / n as f64))
            .collect()
    }
}

/// Signed Menger curvature at interior samples; ends copy their neighbor.
fn three_point_curvature(points: &[Point2]) -> Vec<f64> {
    let n = points.len();
    if n < 3 {
        return vec![0.0; n];
    }
    let mut k = vec![0.0; n];
    for i in 1..n - 1 {
        let (a, b, c) = (points[i - 1], points[i], points[i + 1]);
        let denom = a.distance(b) * b.distance(c) * a.distance(c);
        if denom > 1e-12 {
            k[i] = 2.0 * (b - a).cross(c - b) / denom;
        }
    }
    k[0] = k[1];
    k[n - 1] = k[n - 2];
    k
}

/// Samples the curve at `num_samples` uniform parameter values in `[0, 1]`.
pub fn bezier_path(polygon: &ControlPolygon, num_samples: usize) -> SmoothPath {
    let num_samples = num_samples.max(2);
    let last = num_samples - 1;
    let samples = (0..num_samples)
        .map(|k| match k {
            0 => polygon.points()[0],
            k if k == last => *polygon.points().last().unwrap(),
            k => polygon.eval(k as f64 / last as f64),
        })
        .collect();
    SmoothPath::from_samples(samples)
}

/// Splits a control polygon at its middle node until every piece has at
/// most `MAX_CONTROL_POINTS` points. Neighbouring pieces share the split node.
pub fn split_control_points(points: &[Point2]) -> Vec<Vec<Point2>> {
    if points.len() <= MAX_CONTROL_POINTS {
        return vec![points.to_vec()];
    }
    let mid = points.len() / 2;
    let mut pieces = split_control_points(&points[..=mid]);
    pieces.extend(split_control_points(&points[mid..]));
    pieces
}

/// Fits one Bezier per segment (node positions as control points) and joins
/// them, dropping the duplicated shared endpoints. `num_samples` overrides the
/// per-curve sample count.
pub fn connect_and_smooth(
    segments: &[Vec<Point2>],
    num_samples: Option<usize>,
) -> Result<SmoothPath> {
    if segments.is_empty() || segments.iter().all(|s| s.is_empty()) {
        return Err(Error::EmptySegments);
    }
    let mut samples: Vec<Point2> = Vec::new();
    for segment in segments {
        let points = match segment.len() {
            0 => continue,
            1 => vec![segment[0], segment[0]],
            _ => segment.clone(),
        };
        for piece in split_control_points(&points) {
            let polygon = ControlPolygon::new(piece)?;
            let count = num_samples.unwrap_or_else(|| default_sample_count(polygon.length()));
            let curve = bezier_path(&polygon, count);
            let mut iter = curve.samples().iter().copied().peekable();
            if let (Some(&last), Some(&first)) = (samples.last(), iter.peek()) {
                if last.distance(first) < 1e-9 {
                    iter.next();
                }
            }
            samples.extend(iter);
        }
    }
    Ok(SmoothPath::from_samples(samples))
}
