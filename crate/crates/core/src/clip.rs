//! Clipping of map elements against the BEV range rectangle.

use crate::geom::Point2;
use crate::map::{BevRange, LocalMap, MapElement, Polyline};

/// Clip every element of `map` against its range. Crossing polylines are cut
/// at the exact boundary intersection, elements entirely outside are dropped,
/// and a polyline that leaves and re-enters becomes several elements. Rings
/// that cross the boundary become open pieces of their outline.
pub fn clip_to_range(map: &LocalMap) -> LocalMap {
    let range = map.range;
    let elements = map
        .elements
        .iter()
        .flat_map(|e| {
            clip_polyline(&e.line, &range)
                .into_iter()
                .map(move |line| MapElement {
                    class: e.class,
                    line,
                    score: e.score,
                })
        })
        .collect();
    LocalMap {
        frame_id: map.frame_id.clone(),
        range,
        elements,
    }
}

/// Clip one polyline. Returns the in-range pieces in traversal order.
pub fn clip_polyline(line: &Polyline, range: &BevRange) -> Vec<Polyline> {
    let pts = line.points();
    if pts.iter().all(|p| range.contains(p)) {
        return vec![line.clone()];
    }
    let path: Vec<Point2> = if line.is_closed() {
        // start the walk on an outside vertex so no piece straddles the seam
        let start = pts.iter().position(|p| !range.contains(p)).unwrap_or(0);
        let mut ring: Vec<Point2> = pts[start..].iter().chain(&pts[..start]).copied().collect();
        ring.push(ring[0]);
        ring
    } else {
        pts.to_vec()
    };

    let mut pieces: Vec<Vec<Point2>> = Vec::new();
    let mut current: Vec<Point2> = Vec::new();
    for w in path.windows(2) {
        match clip_segment(w[0], w[1], range) {
            None => flush(&mut current, &mut pieces),
            Some((a, b)) => {
                if current.last() != Some(&a) {
                    flush(&mut current, &mut pieces);
                    current.push(a);
                }
                if current.last() != Some(&b) {
                    current.push(b);
                }
                // leaving the rectangle ends the piece
                if b != w[1] {
                    flush(&mut current, &mut pieces);
                }
            }
        }
    }
    flush(&mut current, &mut pieces);
    pieces
        .into_iter()
        .map(|p| Polyline::from_parts_unchecked(p, false))
        .collect()
}

fn flush(current: &mut Vec<Point2>, pieces: &mut Vec<Vec<Point2>>) {
    if current.len() >= 2 {
        pieces.push(std::mem::take(current));
    } else {
        current.clear();
    }
}

/// Liang-Barsky segment clipping. Cut points are snapped exactly onto the
/// boundary they cross so that clipping is idempotent.
fn clip_segment(a: Point2, b: Point2, r: &BevRange) -> Option<(Point2, Point2)> {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    // (p, q) pairs for left, right, bottom, top
    let checks = [
        (-dx, a.x - r.x_min),
        (dx, r.x_max - a.x),
        (-dy, a.y - r.y_min),
        (dy, r.y_max - a.y),
    ];
    let mut enter_side = None;
    let mut exit_side = None;
    for (side, &(p, q)) in checks.iter().enumerate() {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                if t > t1 {
                    return None;
                }
                if t > t0 {
                    t0 = t;
                    enter_side = Some(side);
                }
            } else {
                if t < t0 {
                    return None;
                }
                if t < t1 {
                    t1 = t;
                    exit_side = Some(side);
                }
            }
        }
    }
    let start = if t0 > 0.0 {
        snap(a.lerp(&b, t0), enter_side, r)
    } else {
        a
    };
    let end = if t1 < 1.0 {
        snap(a.lerp(&b, t1), exit_side, r)
    } else {
        b
    };
    if start == end && (t0 > 0.0 || t1 < 1.0) {
        // grazes a corner or edge at a single point
        return None;
    }
    Some((start, end))
}

fn snap(p: Point2, side: Option<usize>, r: &BevRange) -> Point2 {
    let mut q = Point2::new(p.x.clamp(r.x_min, r.x_max), p.y.clamp(r.y_min, r.y_max));
    match side {
        Some(0) => q.x = r.x_min,
        Some(1) => q.x = r.x_max,
        Some(2) => q.y = r.y_min,
        Some(3) => q.y = r.y_max,
        _ => {}
    }
    q
}
