//! Pivot-based vectorized HD-map toolkit.
//!
//! * [`map`] / [`clip`]: map-element types, the JSONL frame format, range clipping.
//! * [`simplify`]: Visvalingam-Whyatt pivot extraction and tolerance checks.
//! * [`pdm`]: pivot dynamic matching (enumeration oracle and O(N·T) DP) and
//!   instance assignment.
//! * [`dvs`]: pivotal, collinear and classification losses with subgradients.
//! * [`raster`]: BEV masks and the BCE + dice mask losses.
//! * [`eval`]: Chamfer-distance AP evaluation.
//! * [`synth`] / [`fit`]: synthetic shapes, representation comparison and a
//!   direct-descent fitting harness.

pub mod clip;
pub mod config;
pub mod dvs;
pub mod error;
pub mod eval;
pub mod fit;
pub mod geom;
mod hungarian;
pub mod map;
#[cfg(feature = "parallel")]
pub mod parallel;
pub mod pdm;
pub mod raster;
pub mod simplify;
pub mod svg;
pub mod synth;

pub use error::{Error, Result};
pub use geom::Point2;
pub use hungarian::min_cost_assignment;
pub use map::{BevRange, ElementClass, LocalMap, MapElement, Polyline};
