//! Seeded synthetic map elements and the evenly-spaced vs pivot
//! representation comparison.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::chamfer_distance;
use crate::geom::{path_length, sample_at, Point2};
use crate::map::{BevRange, ElementClass, MapElement, Polyline};
use crate::simplify::vw_reduce_to;

/// Target vertex spacing of generated elements, in meters.
const DENSE_SPACING: f64 = 0.25;
const MIN_VERTICES: usize = 50;
const PLACEMENT_MARGIN: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Straight,
    LCorner,
    UShape,
    Zigzag,
    Arc,
    Rectangle,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 6] = [
        ShapeKind::Straight,
        ShapeKind::LCorner,
        ShapeKind::UShape,
        ShapeKind::Zigzag,
        ShapeKind::Arc,
        ShapeKind::Rectangle,
    ];

    /// Shapes whose outline is dominated by sharp corners.
    pub const CORNER_HEAVY: [ShapeKind; 4] = [
        ShapeKind::LCorner,
        ShapeKind::UShape,
        ShapeKind::Zigzag,
        ShapeKind::Rectangle,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ShapeKind::Straight => "straight",
            ShapeKind::LCorner => "l_corner",
            ShapeKind::UShape => "u_shape",
            ShapeKind::Zigzag => "zigzag",
            ShapeKind::Arc => "arc",
            ShapeKind::Rectangle => "rectangle",
        }
    }

    pub fn class(&self) -> ElementClass {
        match self {
            ShapeKind::Straight | ShapeKind::Zigzag => ElementClass::Divider,
            ShapeKind::Rectangle => ElementClass::PedCrossing,
            ShapeKind::LCorner | ShapeKind::UShape | ShapeKind::Arc => ElementClass::Boundary,
        }
    }

    /// Number of shape-defining vertices, if the shape is piecewise linear.
    pub fn pivot_count(&self) -> Option<usize> {
        match self {
            ShapeKind::Straight => Some(2),
            ShapeKind::LCorner => Some(3),
            ShapeKind::UShape => Some(4),
            ShapeKind::Zigzag => Some(6),
            ShapeKind::Rectangle => Some(4),
            ShapeKind::Arc => None,
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ShapeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ShapeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown shape kind '{s}'")))
    }
}

fn heading(angle: f64) -> Point2 {
    Point2::new(angle.cos(), angle.sin())
}

/// Walk `legs` (length, turn-before-leg in radians) from the origin.
fn walk(start_heading: f64, legs: &[(f64, f64)]) -> Vec<Point2> {
    let mut pts = vec![Point2::new(0.0, 0.0)];
    let mut h = start_heading;
    for &(len, turn) in legs {
        h += turn;
        let d = heading(h);
        let last = *pts.last().unwrap();
        pts.push(last.translate(d.x * len, d.y * len));
    }
    pts
}

/// Insert evenly spaced vertices along every edge so that the result has at
/// least [`MIN_VERTICES`] vertices. The corner vertices are kept exactly.
fn densify(pivots: &[Point2], closed: bool) -> Vec<Point2> {
    let total = path_length(pivots, closed);
    let spacing = DENSE_SPACING.min(total / MIN_VERTICES as f64);
    let mut out = Vec::new();
    let edges: Vec<(Point2, Point2)> = crate::geom::segments(pivots, closed)
        .map(|(a, b)| (*a, *b))
        .collect();
    for (a, b) in &edges {
        let k = (a.dist(b) / spacing).ceil().max(1.0) as usize;
        out.extend((0..k).map(|i| a.lerp(b, i as f64 / k as f64)));
    }
    if !closed {
        out.push(*pivots.last().unwrap());
    }
    out
}

fn arc_points(radius: f64, sweep: f64, start: f64) -> Vec<Point2> {
    let k = ((radius * sweep / DENSE_SPACING).ceil() as usize).max(MIN_VERTICES);
    (0..=k)
        .map(|i| {
            let a = start + sweep * i as f64 / k as f64;
            Point2::new(radius * a.cos(), radius * a.sin())
        })
        .collect()
}

/// Scale down (if needed) and translate so the points fit inside `range`
/// with a margin.
fn place(points: Vec<Point2>, range: &BevRange, rng: &mut ChaCha8Rng) -> Vec<Point2> {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in &points {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    let margin = PLACEMENT_MARGIN
        .min(range.width() / 4.0)
        .min(range.height() / 4.0);
    let avail_w = range.width() - 2.0 * margin;
    let avail_h = range.height() - 2.0 * margin;
    let scale = (avail_w / (x1 - x0).max(1e-9))
        .min(avail_h / (y1 - y0).max(1e-9))
        .min(1.0);
    let slack_x = (avail_w - (x1 - x0) * scale).max(0.0);
    let slack_y = (avail_h - (y1 - y0) * scale).max(0.0);
    let ox = range.x_min + margin + rng.gen::<f64>() * slack_x;
    let oy = range.y_min + margin + rng.gen::<f64>() * slack_y;
    points
        .into_iter()
        .map(|p| Point2::new(ox + (p.x - x0) * scale, oy + (p.y - y0) * scale))
        .collect()
}

fn kind_salt(kind: ShapeKind) -> u64 {
    (kind as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Deterministic dense element of the given kind for `seed`, inside `range`.
pub fn gen_element(kind: ShapeKind, seed: u64, range: &BevRange) -> MapElement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ kind_salt(kind));
    let h0 = rng.gen_range(0.0..2.0 * PI);
    let turn = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| {
        let t = rng.gen_range(lo..hi).to_radians();
        if rng.gen::<bool>() {
            t
        } else {
            -t
        }
    };
    let (points, closed) = match kind {
        ShapeKind::Straight => {
            let len = rng.gen_range(8.0..20.0);
            (densify(&walk(h0, &[(len, 0.0)]), false), false)
        }
        ShapeKind::LCorner => {
            let a = rng.gen_range(5.0..12.0);
            let b = rng.gen_range(5.0..12.0);
            let t = turn(&mut rng, 60.0, 120.0);
            (densify(&walk(h0, &[(a, 0.0), (b, t)]), false), false)
        }
        ShapeKind::UShape => {
            let a = rng.gen_range(5.0..10.0);
            let w = rng.gen_range(3.0..8.0);
            let c = rng.gen_range(5.0..10.0);
            let t = turn(&mut rng, 80.0, 100.0);
            let t2 = t.signum() * rng.gen_range(80.0f64..100.0).to_radians();
            (
                densify(&walk(h0, &[(a, 0.0), (w, t), (c, t2)]), false),
                false,
            )
        }
        ShapeKind::Zigzag => {
            let mut legs = vec![(rng.gen_range(3.0..6.0), 0.0)];
            let mut dir = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let first = rng.gen_range(60.0f64..100.0).to_radians();
            legs.push((rng.gen_range(3.0..6.0), dir * first));
            for _ in 0..3 {
                dir = -dir;
                let t = rng.gen_range(100.0f64..140.0).to_radians();
                legs.push((rng.gen_range(3.0..6.0), dir * t));
            }
            (densify(&walk(h0, &legs), false), false)
        }
        ShapeKind::Arc => {
            let r = rng.gen_range(8.0..15.0);
            let sweep = rng.gen_range(60.0f64..150.0).to_radians();
            (arc_points(r, sweep, h0), false)
        }
        ShapeKind::Rectangle => {
            let w = rng.gen_range(3.0..8.0);
            let h = rng.gen_range(2.0..5.0);
            let corners = walk(h0, &[(w, 0.0), (h, PI / 2.0), (w, PI / 2.0)]);
            (densify(&corners, true), true)
        }
    };
    let points = place(points, range, &mut rng);
    let line = Polyline::new(points, closed).expect("generated shapes are valid polylines");
    MapElement::ground_truth(kind.class(), line)
}

/// `count` corner-heavy elements cycling through [`ShapeKind::CORNER_HEAVY`],
/// element `i` seeded with `seed + i`.
pub fn corner_heavy_corpus(
    count: usize,
    seed: u64,
    range: &BevRange,
) -> Vec<(ShapeKind, MapElement)> {
    (0..count)
        .map(|i| {
            let kind = ShapeKind::CORNER_HEAVY[i % ShapeKind::CORNER_HEAVY.len()];
            (kind, gen_element(kind, seed + i as u64, range))
        })
        .collect()
}

/// `k` points equally spaced by arc length. Open lines include both
/// endpoints; rings are sampled uniformly around the perimeter starting at
/// the first vertex.
pub fn even_resample(line: &Polyline, k: usize) -> Result<Polyline> {
    let min = if line.is_closed() { 3 } else { 2 };
    if k < min {
        return Err(Error::invalid(format!(
            "need at least {min} resampled points, got {k}"
        )));
    }
    let total = line.length();
    let stations: Vec<f64> = if line.is_closed() {
        (0..k).map(|i| total * i as f64 / k as f64).collect()
    } else {
        (0..k).map(|i| total * i as f64 / (k - 1) as f64).collect()
    };
    let mut pts = sample_at(line.points(), line.is_closed(), &stations);
    if !line.is_closed() {
        pts[k - 1] = *line.points().last().unwrap();
    }
    Polyline::new(pts, line.is_closed())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompactnessEntry {
    pub index: usize,
    pub class: ElementClass,
    pub vertices: usize,
    pub chamfer_even: f64,
    pub chamfer_pivot: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompactnessReport {
    pub k: usize,
    pub sample_step: f64,
    pub entries: Vec<CompactnessEntry>,
    /// `(index, reason)` for elements left out.
    pub skipped: Vec<(usize, String)>,
    pub mean_chamfer_even: f64,
    pub mean_chamfer_pivot: f64,
}

/// The `k`-point representations of one element.
pub fn representations(line: &Polyline, k: usize) -> Result<(Polyline, Polyline)> {
    Ok((even_resample(line, k)?, vw_reduce_to(line, k)?))
}

fn measure(
    index: usize,
    e: &MapElement,
    k: usize,
    sample_step: f64,
) -> std::result::Result<CompactnessEntry, String> {
    if e.line.len() < k {
        return Err(format!("{} vertices < k = {k}", e.line.len()));
    }
    let (even, pivots) = representations(&e.line, k).map_err(|err| err.to_string())?;
    Ok(CompactnessEntry {
        index,
        class: e.class,
        vertices: e.line.len(),
        chamfer_even: chamfer_distance(&e.line, &even, sample_step),
        chamfer_pivot: chamfer_distance(&e.line, &pivots, sample_step),
    })
}

fn summarize(
    results: Vec<std::result::Result<CompactnessEntry, String>>,
    k: usize,
    sample_step: f64,
) -> CompactnessReport {
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Ok(e) => entries.push(e),
            Err(reason) => skipped.push((index, reason)),
        }
    }
    let mean = |f: fn(&CompactnessEntry) -> f64| {
        if entries.is_empty() {
            0.0
        } else {
            entries.iter().map(f).sum::<f64>() / entries.len() as f64
        }
    };
    CompactnessReport {
        k,
        sample_step,
        mean_chamfer_even: mean(|e| e.chamfer_even),
        mean_chamfer_pivot: mean(|e| e.chamfer_pivot),
        entries,
        skipped,
    }
}

fn check_experiment(corpus: &[MapElement], k: usize, sample_step: f64) -> Result<()> {
    if corpus.is_empty() {
        return Err(Error::invalid("corpus is empty"));
    }
    if k < 2 {
        return Err(Error::invalid(format!("k must be at least 2, got {k}")));
    }
    if !(sample_step.is_finite() && sample_step > 0.0) {
        return Err(Error::invalid(format!(
            "sample step must be positive, got {sample_step}"
        )));
    }
    Ok(())
}

/// Chamfer error of the evenly-spaced and the budgeted-pivot `k`-point
/// representations of every element, measured against the dense original.
/// Elements with fewer than `k` vertices are listed in `skipped`.
pub fn compactness_experiment(
    corpus: &[MapElement],
    k: usize,
    sample_step: f64,
) -> Result<CompactnessReport> {
    check_experiment(corpus, k, sample_step)?;
    let results = corpus
        .iter()
        .enumerate()
        .map(|(i, e)| measure(i, e, k, sample_step))
        .collect();
    Ok(summarize(results, k, sample_step))
}

/// [`compactness_experiment`] spread over `jobs` threads; the report is
/// identical to the sequential one.
#[cfg(feature = "parallel")]
pub fn compactness_experiment_parallel(
    corpus: &[MapElement],
    k: usize,
    sample_step: f64,
    jobs: usize,
) -> Result<CompactnessReport> {
    use rayon::prelude::*;
    check_experiment(corpus, k, sample_step)?;
    let results = crate::parallel::with_jobs(jobs, || {
        corpus
            .par_iter()
            .enumerate()
            .map(|(i, e)| measure(i, e, k, sample_step))
            .collect()
    });
    Ok(summarize(results, k, sample_step))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplify::{vw_simplify, SimplifyConfig};

    #[test]
    fn deterministic_and_in_range() {
        let range = BevRange::default();
        for kind in ShapeKind::ALL {
            for seed in 0..20 {
                let a = gen_element(kind, seed, &range);
                assert_eq!(a, gen_element(kind, seed, &range));
                assert!(
                    a.line.len() >= MIN_VERTICES,
                    "{kind} {seed}: {}",
                    a.line.len()
                );
                assert!(a.line.points().iter().all(|p| range.contains(p)));
                assert_eq!(a.line.is_closed(), kind == ShapeKind::Rectangle);
            }
        }
        assert_ne!(
            gen_element(ShapeKind::Straight, 0, &range),
            gen_element(ShapeKind::Straight, 1, &range)
        );
    }

    #[test]
    fn piecewise_linear_shapes_simplify_to_their_pivots() {
        let range = BevRange::default();
        let cfg = SimplifyConfig::default();
        for kind in ShapeKind::ALL {
            let Some(expect) = kind.pivot_count() else {
                continue;
            };
            for seed in 0..20 {
                let e = gen_element(kind, seed, &range);
                let p = vw_simplify(&e.line, &cfg).unwrap();
                assert_eq!(p.len(), expect, "{kind} seed {seed}");
            }
        }
    }

    #[test]
    fn even_resample_examples() {
        let line = Polyline::from_xy(&[(0.0, 0.0), (1.5, 0.0), (4.0, 0.0)], false).unwrap();
        let r = even_resample(&line, 5).unwrap();
        let xs: Vec<f64> = r.points().iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        let r = even_resample(&line, 2).unwrap();
        assert_eq!(r.points(), &[line.points()[0], line.points()[2]]);
        assert!(even_resample(&line, 1).is_err());

        let sq =
            Polyline::from_xy(&[(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)], true).unwrap();
        let r = even_resample(&sq, 8).unwrap();
        assert!(r.is_closed());
        assert!((r.length() - 8.0).abs() < 1e-12);
        assert!((r.points()[1].x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn resampled_length_within_one_segment() {
        // chords only shorten the path; on straight and gently curved lines
        // the loss stays under one resampled segment
        let range = BevRange::default();
        for kind in [ShapeKind::Straight, ShapeKind::Arc] {
            let e = gen_element(kind, 3, &range);
            for k in [4, 7, 16] {
                let r = even_resample(&e.line, k).unwrap();
                let seg = e.line.length() / if e.line.is_closed() { k } else { k - 1 } as f64;
                assert!(e.line.length() - r.length() <= seg + 1e-9);
                assert!(r.length() <= e.line.length() + 1e-9);
            }
        }
    }

    #[test]
    fn straight_line_both_exact() {
        let e = gen_element(ShapeKind::Straight, 5, &BevRange::default());
        let r = compactness_experiment(&[e], 4, 0.1).unwrap();
        assert!(r.entries[0].chamfer_even < 1e-9);
        assert!(r.entries[0].chamfer_pivot < 1e-9);
    }

    #[test]
    fn l_corner_pivots_exact_even_cuts_corner() {
        let e = gen_element(ShapeKind::LCorner, 2, &BevRange::default());
        let r = compactness_experiment(&[e], 3, 0.1).unwrap();
        assert!(r.entries[0].chamfer_pivot < 1e-6);
        assert!(r.entries[0].chamfer_even > 0.05);
    }

    #[test]
    fn short_elements_skipped() {
        let e = MapElement::ground_truth(
            ElementClass::Divider,
            Polyline::from_xy(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)], false).unwrap(),
        );
        let r = compactness_experiment(&[e], 5, 0.1).unwrap();
        assert!(r.entries.is_empty());
        assert_eq!(r.skipped.len(), 1);
        assert!(compactness_experiment(&[], 5, 0.1).is_err());
    }
}
