//! Ground-truth pivot extraction by Visvalingam-Whyatt simplification, and
//! the tolerance check of a pivot sequence against its source polyline.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{point_polyline_distance, triangle_area, Point2};
use crate::map::Polyline;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimplifyConfig {
    /// Vertices whose neighbour triangle is smaller than this (m²) are removed.
    pub area_threshold: f64,
    /// Tolerated deviation (m) between the pivot polyline and its source.
    pub tolerance_epsilon: f64,
}

impl Default for SimplifyConfig {
    fn default() -> Self {
        Self {
            area_threshold: 0.01,
            tolerance_epsilon: 0.1,
        }
    }
}

impl SimplifyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.area_threshold > 0.0 && self.tolerance_epsilon > 0.0) {
            return Err(Error::invalid(
                "area_threshold and tolerance_epsilon must be strictly positive",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Stop {
    /// Stop once the smallest remaining triangle reaches the threshold.
    Area(f64),
    /// Stop once this many vertices remain.
    Count(usize),
}

/// Heap entry ordered by (area, vertex index) so equal areas pop the lowest
/// index first.
#[derive(PartialEq)]
struct Candidate {
    area: f64,
    index: usize,
    stamp: u32,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.area
            .total_cmp(&other.area)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Runs VW removal and returns a keep-mask over the input vertices.
fn vw_mask(points: &[Point2], closed: bool, stop: Stop) -> Vec<bool> {
    let n = points.len();
    let mut keep = vec![true; n];
    let min_len = if closed { 3 } else { 2 };
    if n <= min_len {
        return keep;
    }
    let mut prev: Vec<usize> = (0..n).map(|i| if i == 0 { n - 1 } else { i - 1 }).collect();
    let mut next: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
    let mut stamp = vec![0u32; n];
    let interior = |i: usize| closed || (i != 0 && i != n - 1);

    let mut heap = BinaryHeap::new();
    for i in (0..n).filter(|&i| interior(i)) {
        let area = triangle_area(&points[prev[i]], &points[i], &points[next[i]]);
        heap.push(Reverse(Candidate {
            area,
            index: i,
            stamp: 0,
        }));
    }

    let mut remaining = n;
    while let Some(Reverse(c)) = heap.pop() {
        if !keep[c.index] || c.stamp != stamp[c.index] {
            continue;
        }
        let done = match stop {
            Stop::Area(threshold) => c.area >= threshold,
            Stop::Count(k) => remaining <= k,
        };
        if done || remaining <= min_len {
            break;
        }
        let (p, q) = (prev[c.index], next[c.index]);
        keep[c.index] = false;
        remaining -= 1;
        next[p] = q;
        prev[q] = p;
        for j in [p, q] {
            if interior(j) {
                stamp[j] += 1;
                let area = triangle_area(&points[prev[j]], &points[j], &points[next[j]]);
                heap.push(Reverse(Candidate {
                    area,
                    index: j,
                    stamp: stamp[j],
                }));
            }
        }
    }
    keep
}

fn apply_mask(line: &Polyline, keep: &[bool]) -> Polyline {
    let pts = line
        .points()
        .iter()
        .zip(keep)
        .filter_map(|(p, &k)| k.then_some(*p))
        .collect();
    Polyline::from_parts_unchecked(pts, line.is_closed())
}

fn check_simplifiable(line: &Polyline) -> Result<()> {
    let min = if line.is_closed() { 3 } else { 2 };
    if line.len() < min {
        return Err(Error::invalid(format!(
            "polyline needs at least {min} points to simplify"
        )));
    }
    Ok(())
}

/// Visvalingam-Whyatt simplification: repeatedly drop the interior vertex
/// with the smallest neighbour-triangle area until every remaining area is at
/// least `cfg.area_threshold`. Open polylines keep their endpoints; rings
/// treat every vertex as interior and keep at least three.
pub fn vw_simplify(line: &Polyline, cfg: &SimplifyConfig) -> Result<Polyline> {
    check_simplifiable(line)?;
    let keep = vw_mask(
        line.points(),
        line.is_closed(),
        Stop::Area(cfg.area_threshold),
    );
    Ok(apply_mask(line, &keep))
}

/// Budgeted variant: run VW removal (ignoring any threshold) until exactly
/// `k` vertices remain. Lines already at or below `k` vertices are returned
/// unchanged.
pub fn vw_reduce_to(line: &Polyline, k: usize) -> Result<Polyline> {
    check_simplifiable(line)?;
    let min = if line.is_closed() { 3 } else { 2 };
    if k < min {
        return Err(Error::invalid(format!("budget must be at least {min}")));
    }
    let keep = vw_mask(line.points(), line.is_closed(), Stop::Count(k));
    Ok(apply_mask(line, &keep))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToleranceCheck {
    pub within: bool,
    pub max_deviation: f64,
}

/// Maximum distance from any vertex of `original` to the polyline through
/// `pivots`, and whether it is strictly below `epsilon`. `pivots` must be a
/// vertex subsequence of `original`.
pub fn check_tolerance(
    pivots: &Polyline,
    original: &Polyline,
    epsilon: f64,
) -> Result<ToleranceCheck> {
    if !is_subsequence(pivots.points(), original.points()) {
        return Err(Error::invalid(
            "pivots are not a subsequence of the original vertices",
        ));
    }
    let closed = pivots.is_closed() && original.is_closed();
    let max_deviation = original
        .points()
        .iter()
        .map(|p| point_polyline_distance(p, pivots.points(), closed))
        .fold(0.0, f64::max);
    Ok(ToleranceCheck {
        within: max_deviation < epsilon,
        max_deviation,
    })
}

pub(crate) fn is_subsequence(sub: &[Point2], full: &[Point2]) -> bool {
    let mut it = full.iter();
    sub.iter().all(|p| it.any(|q| q == p))
}
