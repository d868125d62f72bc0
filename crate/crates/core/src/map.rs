//! Map-element domain types and the line-delimited JSON map format.
//!
//! One frame per line:
//!
//! ```json
//! {"frame_id": "f0", "range": {"x_min": -15.0, "x_max": 15.0, "y_min": -30.0, "y_max": 30.0},
//!  "elements": [{"class": "divider", "closed": false, "score": null, "points": [[0.0, 0.0], [1.0, 2.0]]}]}
//! ```

use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point2;

/// Ordered vertex sequence. Rings carry `closed = true` and do not repeat the
/// first vertex at the end.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<Point2>,
    closed: bool,
}

impl Polyline {
    /// Validating constructor: at least two vertices (three for rings), all
    /// finite, no two consecutive vertices equal.
    pub fn new(points: Vec<Point2>, closed: bool) -> Result<Self> {
        validate_points(&points, closed).map_err(|(field, msg)| Error::validation(field, msg))?;
        Ok(Self { points, closed })
    }

    pub fn open(points: Vec<Point2>) -> Result<Self> {
        Self::new(points, false)
    }

    pub fn from_xy(coords: &[(f64, f64)], closed: bool) -> Result<Self> {
        Self::new(
            coords.iter().map(|&(x, y)| Point2::new(x, y)).collect(),
            closed,
        )
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point2> {
        self.points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn length(&self) -> f64 {
        crate::geom::path_length(&self.points, self.closed)
    }

    /// Open sequence walking the ring once, ending back on the first vertex.
    /// Open polylines are returned unchanged.
    pub fn to_open(&self) -> Polyline {
        if !self.closed {
            return self.clone();
        }
        let mut points = self.points.clone();
        points.push(self.points[0]);
        Polyline {
            points,
            closed: false,
        }
    }

    /// Ring rotated so that vertex `start` comes first.
    pub fn rotated(&self, start: usize) -> Polyline {
        let mut points = self.points.clone();
        points.rotate_left(start % self.points.len());
        Polyline {
            points,
            closed: self.closed,
        }
    }

    pub(crate) fn from_parts_unchecked(points: Vec<Point2>, closed: bool) -> Self {
        debug_assert!(validate_points(&points, closed).is_ok());
        Self { points, closed }
    }
}

fn validate_points(points: &[Point2], closed: bool) -> Result<(), (String, String)> {
    let min = if closed { 3 } else { 2 };
    if points.len() < min {
        return Err((
            "points".into(),
            format!("length ≥ {min} required, got {}", points.len()),
        ));
    }
    if let Some(i) = points.iter().position(|p| !p.is_finite()) {
        return Err((format!("points[{i}]"), "coordinates must be finite".into()));
    }
    if let Some(i) = points.windows(2).position(|w| w[0] == w[1]) {
        return Err((
            format!("points[{}]", i + 1),
            "consecutive duplicate point".into(),
        ));
    }
    if closed && points[0] == points[points.len() - 1] {
        return Err((
            format!("points[{}]", points.len() - 1),
            "closed polyline must not repeat its first point".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementClass {
    Divider,
    PedCrossing,
    Boundary,
}

impl ElementClass {
    pub const ALL: [ElementClass; 3] = [
        ElementClass::Divider,
        ElementClass::PedCrossing,
        ElementClass::Boundary,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ElementClass::Divider => "divider",
            ElementClass::PedCrossing => "ped_crossing",
            ElementClass::Boundary => "boundary",
        }
    }

    pub fn index(&self) -> usize {
        *self as usize
    }
}

impl fmt::Display for ElementClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A classed polyline. Predictions carry a confidence score, ground truth
/// does not.
#[derive(Debug, Clone, PartialEq)]
pub struct MapElement {
    pub class: ElementClass,
    pub line: Polyline,
    pub score: Option<f64>,
}

impl MapElement {
    pub fn new(class: ElementClass, line: Polyline, score: Option<f64>) -> Result<Self> {
        if let Some(s) = score {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::validation(
                    "score",
                    format!("must lie in [0,1], got {s}"),
                ));
            }
        }
        Ok(Self { class, line, score })
    }

    pub fn ground_truth(class: ElementClass, line: Polyline) -> Self {
        Self {
            class,
            line,
            score: None,
        }
    }
}

/// Rectangular region of interest around the ego vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BevRange {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for BevRange {
    fn default() -> Self {
        Self {
            x_min: -15.0,
            x_max: 15.0,
            y_min: -30.0,
            y_max: 30.0,
        }
    }
}

impl BevRange {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let r = Self {
            x_min,
            x_max,
            y_min,
            y_max,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::validation("range", "bounds must be finite"));
        }
        if self.x_min >= self.x_max {
            return Err(Error::validation("range", "x_min < x_max required"));
        }
        if self.y_min >= self.y_max {
            return Err(Error::validation("range", "y_min < y_max required"));
        }
        Ok(())
    }

    pub fn contains(&self, p: &Point2) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    /// Map into the unit square, `(x_min, y_min)` ↦ `(0, 0)`.
    pub fn normalize(&self, p: &Point2) -> Point2 {
        Point2::new(
            (p.x - self.x_min) / self.width(),
            (p.y - self.y_min) / self.height(),
        )
    }
}

/// Per-class limits on instance count (`max_instances`) and points per
/// predicted instance (`max_points`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassBudget {
    pub max_instances: usize,
    pub max_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassBudgets {
    pub divider: ClassBudget,
    pub ped_crossing: ClassBudget,
    pub boundary: ClassBudget,
}

impl Default for ClassBudgets {
    fn default() -> Self {
        Self {
            divider: ClassBudget {
                max_instances: 20,
                max_points: 10,
            },
            ped_crossing: ClassBudget {
                max_instances: 25,
                max_points: 2,
            },
            boundary: ClassBudget {
                max_instances: 15,
                max_points: 30,
            },
        }
    }
}

impl ClassBudgets {
    pub fn get(&self, class: ElementClass) -> ClassBudget {
        match class {
            ElementClass::Divider => self.divider,
            ElementClass::PedCrossing => self.ped_crossing,
            ElementClass::Boundary => self.boundary,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for class in ElementClass::ALL {
            let b = self.get(class);
            if b.max_instances < 1 {
                return Err(Error::validation(
                    format!("budgets.{class}.max_instances"),
                    "must be ≥ 1",
                ));
            }
            if b.max_points < 2 {
                return Err(Error::validation(
                    format!("budgets.{class}.max_points"),
                    "must be ≥ 2",
                ));
            }
        }
        Ok(())
    }
}

/// All map elements of one frame.
///
/// Elements parsed from disk may extend past `range`; run
/// [`clip_to_range`](crate::clip::clip_to_range) at ingest to establish the
/// in-range invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMap {
    pub frame_id: String,
    pub range: BevRange,
    pub elements: Vec<MapElement>,
}

impl LocalMap {
    pub fn new(frame_id: impl Into<String>, range: BevRange, elements: Vec<MapElement>) -> Self {
        Self {
            frame_id: frame_id.into(),
            range,
            elements,
        }
    }

    pub fn elements_of(&self, class: ElementClass) -> impl Iterator<Item = (usize, &MapElement)> {
        self.elements
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.class == class)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireElement {
    class: ElementClass,
    /// Optional on input (defaults to open); always written.
    #[serde(default)]
    closed: bool,
    #[serde(default)]
    score: Option<f64>,
    points: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireMap {
    frame_id: String,
    range: BevRange,
    elements: Vec<WireElement>,
}

/// Parse one JSONL record. `line_no` (1-based) is echoed in parse errors.
pub fn parse_local_map(text: &str, line_no: usize) -> Result<LocalMap> {
    let wire: WireMap = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: line_no,
        message: e.to_string(),
    })?;
    let range = wire.range;
    range.validate()?;
    let elements = wire
        .elements
        .into_iter()
        .enumerate()
        .map(|(i, e)| {
            let points = e.points.into_iter().map(Point2::from).collect();
            let prefix = |err: Error| match err {
                Error::Validation { field, message } => Error::Validation {
                    field: format!("line {line_no}: elements[{i}].{field}"),
                    message,
                },
                other => other,
            };
            let line = Polyline::new(points, e.closed).map_err(prefix)?;
            MapElement::new(e.class, line, e.score).map_err(prefix)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LocalMap {
        frame_id: wire.frame_id,
        range,
        elements,
    })
}

/// Serialize one frame as a single JSON line (no trailing newline). Floats are
/// written in shortest round-trip form.
pub fn serialize_local_map(map: &LocalMap) -> String {
    let wire = WireMap {
        frame_id: map.frame_id.clone(),
        range: map.range,
        elements: map
            .elements
            .iter()
            .map(|e| WireElement {
                class: e.class,
                closed: e.line.is_closed(),
                score: e.score,
                points: e.line.points().iter().map(|&p| p.into()).collect(),
            })
            .collect(),
    };
    serde_json::to_string(&wire).expect("map serialization is infallible")
}

/// Streaming reader over a JSONL map file. Blank lines are skipped.
pub struct LocalMapReader<R> {
    inner: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> LocalMapReader<R> {
    pub fn new(reader: R) -> Self {
        Self {
            inner: reader.lines(),
            line_no: 0,
        }
    }
}

impl<R: BufRead> Iterator for LocalMapReader<R> {
    type Item = Result<LocalMap>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = self.inner.next()?;
            self.line_no += 1;
            match line {
                Err(e) => return Some(Err(e.into())),
                Ok(l) if l.trim().is_empty() => continue,
                Ok(l) => return Some(parse_local_map(&l, self.line_no)),
            }
        }
    }
}

pub fn read_local_maps<R: BufRead>(reader: R) -> Result<Vec<LocalMap>> {
    LocalMapReader::new(reader).collect()
}
