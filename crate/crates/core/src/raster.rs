//! BEV rasterization of map elements and the segmentation losses computed on
//! the resulting masks.
//!
//! Grid orientation: row 0 covers `y_min` (rear of the vehicle), column 0
//! covers `x_min` (left).

use serde::{Deserialize, Serialize};

use crate::dvs::DvsReport;
use crate::error::{Error, Result};
use crate::geom::{point_polyline_distance, Point2};
use crate::map::{BevRange, Polyline};

/// Probability clamp used by the mask BCE.
pub const MASK_CLAMP: f64 = 1e-7;
/// Dice smoothing term.
pub const DICE_SMOOTH: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub height: usize,
    pub width: usize,
    /// Line thickness in meters; defaults to one cell diagonal.
    pub thickness: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            height: 64,
            width: 32,
            thickness: None,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::invalid("grid dimensions must be at least 1"));
        }
        if let Some(t) = self.thickness {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::invalid("thickness must be finite and non-negative"));
            }
        }
        Ok(())
    }

    pub fn cell_size(&self, range: &BevRange) -> (f64, f64) {
        (
            range.width() / self.width as f64,
            range.height() / self.height as f64,
        )
    }

    pub fn thickness_for(&self, range: &BevRange) -> f64 {
        self.thickness.unwrap_or_else(|| {
            let (cw, ch) = self.cell_size(range);
            cw.hypot(ch)
        })
    }

    pub fn cell_center(&self, range: &BevRange, row: usize, col: usize) -> Point2 {
        let (cw, ch) = self.cell_size(range);
        Point2::new(
            range.x_min + (col as f64 + 0.5) * cw,
            range.y_min + (row as f64 + 0.5) * ch,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BevGrid {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl BevGrid {
    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::from_vec(height, width, vec![0.0; height * width])
    }

    pub fn filled(height: usize, width: usize, v: f64) -> Result<Self> {
        Self::from_vec(height, width, vec![v; height * width])
    }

    /// Row-major values, each in `[0, 1]`.
    pub fn from_vec(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("grid dimensions must be at least 1"));
        }
        if data.len() != height * width {
            return Err(Error::invalid(format!(
                "{} values for a {height}x{width} grid",
                data.len()
            )));
        }
        if data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("grid values must lie in [0,1]"));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.data[row * self.width + col] = v.clamp(0.0, 1.0);
    }

    pub fn count_on(&self) -> usize {
        self.data.iter().filter(|&&v| v >= 0.5).count()
    }

    /// Cellwise maximum.
    pub fn union(&self, other: &BevGrid) -> Result<BevGrid> {
        same_dims(self, other)?;
        Ok(BevGrid {
            height: self.height,
            width: self.width,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.max(*b))
                .collect(),
        })
    }

    /// Run-length encoding of the binarized grid (threshold 0.5), row-major,
    /// alternating runs that start with zeros.
    pub fn to_rle(&self) -> RleMask {
        let mut counts = Vec::new();
        let mut current = false;
        let mut run = 0usize;
        for &v in &self.data {
            let on = v >= 0.5;
            if on != current {
                counts.push(run);
                run = 0;
                current = on;
            }
            run += 1;
        }
        counts.push(run);
        RleMask {
            height: self.height,
            width: self.width,
            counts,
        }
    }

    /// Binary PGM (P5). The top image row is the front of the range.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        for row in (0..self.height).rev() {
            for col in 0..self.width {
                out.push((self.get(row, col) * 255.0).round() as u8);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RleMask {
    pub height: usize,
    pub width: usize,
    pub counts: Vec<usize>,
}

impl RleMask {
    pub fn decode(&self) -> Result<BevGrid> {
        let mut data = Vec::with_capacity(self.height * self.width);
        for (i, &c) in self.counts.iter().enumerate() {
            let v = if i % 2 == 1 { 1.0 } else { 0.0 };
            data.extend(std::iter::repeat_n(v, c));
        }
        BevGrid::from_vec(self.height, self.width, data)
    }
}

fn same_dims(a: &BevGrid, b: &BevGrid) -> Result<()> {
    if a.height != b.height || a.width != b.width {
        return Err(Error::invalid(format!(
            "grid size mismatch: {}x{} vs {}x{}",
            a.height, a.width, b.height, b.width
        )));
    }
    Ok(())
}

/// Binary mask of cells whose centre lies within `thickness / 2` of the line.
pub fn rasterize(line: &Polyline, range: &BevRange, spec: &GridSpec) -> Result<BevGrid> {
    spec.validate()?;
    let half = spec.thickness_for(range) / 2.0;
    let mut grid = BevGrid::zeros(spec.height, spec.width)?;
    for row in 0..spec.height {
        for col in 0..spec.width {
            let c = spec.cell_center(range, row, col);
            if point_polyline_distance(&c, line.points(), line.is_closed()) <= half {
                grid.data[row * spec.width + col] = 1.0;
            }
        }
    }
    Ok(grid)
}

/// Union of the rasterized lines (all zeros for an empty list).
pub fn rasterize_union(lines: &[Polyline], range: &BevRange, spec: &GridSpec) -> Result<BevGrid> {
    let mut acc = BevGrid::zeros(spec.height, spec.width)?;
    for l in lines {
        acc = acc.union(&rasterize(l, range, spec)?)?;
    }
    Ok(acc)
}

/// `1 − (2·Σpg + s) / (Σp + Σg + s)` with smoothing `s = 1`.
pub fn dice_loss(pred: &BevGrid, gt: &BevGrid) -> Result<f64> {
    same_dims(pred, gt)?;
    let (mut inter, mut sp, mut sg) = (0.0, 0.0, 0.0);
    for (p, g) in pred.data.iter().zip(&gt.data) {
        inter += p * g;
        sp += p;
        sg += g;
    }
    Ok(1.0 - (2.0 * inter + DICE_SMOOTH) / (sp + sg + DICE_SMOOTH))
}

/// Mean per-cell binary cross-entropy with clamped predictions.
pub fn bce_mask_loss(pred: &BevGrid, gt: &BevGrid) -> Result<f64> {
    same_dims(pred, gt)?;
    let sum: f64 = pred
        .data
        .iter()
        .zip(&gt.data)
        .map(|(&p, &g)| {
            let p = p.clamp(MASK_CLAMP, 1.0 - MASK_CLAMP);
            -(g * p.ln() + (1.0 - g) * (1.0 - p).ln())
        })
        .sum();
    Ok(sum / pred.data.len() as f64)
}

/// BCE + dice of one predicted mask against one target mask.
pub fn mask_loss(pred: &BevGrid, gt: &BevGrid) -> Result<f64> {
    Ok(bce_mask_loss(pred, gt)? + dice_loss(pred, gt)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineAwareLoss {
    pub value: f64,
    /// Set when there were no matched instances; `value` is then 0.
    pub empty: bool,
}

/// Mean over matched instances of the mask loss between each predicted line
/// mask and its rasterized ground-truth line.
pub fn line_aware_loss(
    pred_masks: &[BevGrid],
    gt_lines: &[Polyline],
    range: &BevRange,
    spec: &GridSpec,
) -> Result<LineAwareLoss> {
    if pred_masks.len() != gt_lines.len() {
        return Err(Error::invalid(format!(
            "{} predicted masks for {} ground-truth lines",
            pred_masks.len(),
            gt_lines.len()
        )));
    }
    if pred_masks.is_empty() {
        return Ok(LineAwareLoss {
            value: 0.0,
            empty: true,
        });
    }
    let mut total = 0.0;
    for (m, l) in pred_masks.iter().zip(gt_lines) {
        total += mask_loss(m, &rasterize(l, range, spec)?)?;
    }
    Ok(LineAwareLoss {
        value: total / pred_masks.len() as f64,
        empty: false,
    })
}

/// Mask loss of a predicted BEV mask against the union of all ground-truth
/// elements.
pub fn bev_loss(
    pred: &BevGrid,
    gt_lines: &[Polyline],
    range: &BevRange,
    spec: &GridSpec,
) -> Result<f64> {
    mask_loss(pred, &rasterize_union(gt_lines, range, spec)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskLossWeights {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl Default for MaskLossWeights {
    fn default() -> Self {
        Self {
            lambda1: 5.0,
            lambda2: 3.0,
        }
    }
}

/// `dvs.total + λ₁·la + λ₂·bev`.
pub fn total_loss(dvs: &DvsReport, la: f64, bev: f64, w: &MaskLossWeights) -> Result<f64> {
    combine_losses(dvs.total, la, bev, w)
}

pub fn combine_losses(dvs_total: f64, la: f64, bev: f64, w: &MaskLossWeights) -> Result<f64> {
    let all = [dvs_total, la, bev, w.lambda1, w.lambda2];
    if all.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("loss components and weights must be finite"));
    }
    if w.lambda1 < 0.0 || w.lambda2 < 0.0 {
        return Err(Error::invalid("mask loss weights must be non-negative"));
    }
    Ok(dvs_total + w.lambda1 * la + w.lambda2 * bev)
}
