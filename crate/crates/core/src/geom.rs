//! Planar geometry helpers shared by the simplifier, the rasterizer and the
//! evaluator.

use serde::{Deserialize, Serialize};

/// A point in the metric BEV plane: `x` lateral (positive right), `y`
/// longitudinal (positive forward), both in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Manhattan (L1) distance.
    #[inline]
    pub fn l1(&self, other: &Point2) -> f64 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }

    #[inline]
    pub fn dist(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    #[inline]
    pub fn lerp(&self, other: &Point2, t: f64) -> Point2 {
        Point2::new(
            (1.0 - t) * self.x + t * other.x,
            (1.0 - t) * self.y + t * other.y,
        )
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Point2 {
        Point2::new(self.x + dx, self.y + dy)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Point2 { x, y }
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// Area of the triangle `abc` (always non-negative).
#[inline]
pub fn triangle_area(a: &Point2, b: &Point2, c: &Point2) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)).abs()
}

/// Euclidean distance from `p` to the closed segment `ab`.
pub fn point_segment_distance(p: &Point2, a: &Point2, b: &Point2) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.dist(&Point2::new(a.x + t * dx, a.y + t * dy))
}

/// Distance from `p` to the polyline through `points` (closing edge included
/// when `closed`).
pub fn point_polyline_distance(p: &Point2, points: &[Point2], closed: bool) -> f64 {
    match points.len() {
        0 => f64::INFINITY,
        1 => p.dist(&points[0]),
        _ => segments(points, closed)
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Iterate consecutive vertex pairs, including the closing edge for rings.
pub fn segments(points: &[Point2], closed: bool) -> impl Iterator<Item = (&Point2, &Point2)> {
    let closing = if closed && points.len() > 2 {
        Some((&points[points.len() - 1], &points[0]))
    } else {
        None
    };
    points.windows(2).map(|w| (&w[0], &w[1])).chain(closing)
}

pub fn path_length(points: &[Point2], closed: bool) -> f64 {
    segments(points, closed).map(|(a, b)| a.dist(b)).sum()
}

/// Sample a path at the given arc-length stations. Stations must be sorted
/// ascending and lie in `[0, path_length]`.
pub fn sample_at(points: &[Point2], closed: bool, stations: &[f64]) -> Vec<Point2> {
    let segs: Vec<(Point2, Point2, f64)> = segments(points, closed)
        .map(|(a, b)| (*a, *b, a.dist(b)))
        .collect();
    let mut out = Vec::with_capacity(stations.len());
    let mut seg = 0;
    let mut start = 0.0;
    for &s in stations {
        while seg + 1 < segs.len() && s > start + segs[seg].2 {
            start += segs[seg].2;
            seg += 1;
        }
        let (a, b, len) = segs[seg];
        let t = if len > 0.0 {
            ((s - start) / len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(a.lerp(&b, t));
    }
    out
}

/// Resample a path every `step` meters of arc length. The first vertex and
/// the path end (the last vertex, or the first again for rings) are always
/// included.
pub fn resample_by_step(points: &[Point2], closed: bool, step: f64) -> Vec<Point2> {
    let total = path_length(points, closed);
    if total == 0.0 || points.len() < 2 {
        return points.first().copied().into_iter().collect();
    }
    let count = (total / step).floor() as usize;
    let mut stations: Vec<f64> = (0..=count).map(|i| i as f64 * step).collect();
    // drop a trailing station that would duplicate the endpoint
    while stations.last().is_some_and(|&s| total - s < step * 1e-9) {
        stations.pop();
    }
    stations.push(total);
    let mut out = sample_at(points, closed, &stations);
    if let Some(last) = out.last_mut() {
        *last = if closed {
            points[0]
        } else {
            points[points.len() - 1]
        };
    }
    out
}
