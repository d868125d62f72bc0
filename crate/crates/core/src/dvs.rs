//! Dynamic vectorized sequence loss: pivotal L1, collinear L1 against
//! interpolated targets, and per-point pivot classification, with analytic
//! subgradients.
//!
//! The matching is held fixed while differentiating: it is recomputed on
//! every evaluation and treated as a constant for the gradient. L1 kinks
//! (zero residual) take the zero subgradient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point2;
use crate::pdm::{pdm_dp, Combination, PivotMatch};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` inside the BCE.
pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DvsWeights {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
}

impl Default for DvsWeights {
    fn default() -> Self {
        Self {
            alpha1: 5.0,
            alpha2: 2.0,
            alpha3: 2.0,
        }
    }
}

impl DvsWeights {
    pub fn validate(&self) -> Result<()> {
        let w = [self.alpha1, self.alpha2, self.alpha3];
        if w.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::invalid(
                "loss weights must be finite and non-negative",
            ));
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            alpha1: self.alpha1 * c,
            alpha2: self.alpha2 * c,
            alpha3: self.alpha3 * c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DvsReport {
    pub l_pp: f64,
    pub l_cp: f64,
    pub l_cls: f64,
    pub total: f64,
    pub weights: DvsWeights,
    pub combination: Combination,
    /// ∂total/∂(x, y) per prediction point.
    pub grad: Vec<[f64; 2]>,
    /// ∂total/∂p per point, p being the (unclamped) input probability.
    pub prob_grad: Vec<f64>,
    /// ∂total/∂z per point for p = sigmoid(z).
    pub cls_grad: Vec<f64>,
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Mean L1 distance between matched predicted pivots and the ground truth.
pub fn pivotal_loss(m: &PivotMatch, gt: &[Point2]) -> Result<f64> {
    let pivots = &m.split.pivot_seq;
    if pivots.len() != gt.len() {
        return Err(Error::invalid(format!(
            "{} matched pivots for {} ground-truth points",
            pivots.len(),
            gt.len()
        )));
    }
    let mut total = 0.0;
    for (g, p) in gt.iter().zip(pivots) {
        total += g.l1(p);
    }
    Ok(total / gt.len() as f64)
}

/// Evenly spaced targets between consecutive ground-truth pivots: rank `r` of
/// `R` in a gap sits at fraction `r / (R + 1)` along the pivot segment.
pub fn collinear_targets(gt_pivots: &[Point2], gap_sizes: &[usize]) -> Result<Vec<Vec<Point2>>> {
    if gt_pivots.len() < 2 {
        return Err(Error::invalid("collinear targets need at least two pivots"));
    }
    if gap_sizes.len() != gt_pivots.len() - 1 {
        return Err(Error::invalid(format!(
            "{} gap sizes for {} pivots",
            gap_sizes.len(),
            gt_pivots.len()
        )));
    }
    Ok(gt_pivots
        .windows(2)
        .zip(gap_sizes)
        .map(|(w, &r_n)| {
            (1..=r_n)
                .map(|r| {
                    let theta = r as f64 / (r_n as f64 + 1.0);
                    w[0].lerp(&w[1], theta)
                })
                .collect()
        })
        .collect())
}

/// Mean L1 distance of predicted collinear points to their targets; zero when
/// the prediction has no collinear points.
pub fn collinear_loss(m: &PivotMatch, gt: &[Point2]) -> Result<f64> {
    let count = m.split.collinear_count();
    if count == 0 {
        return Ok(0.0);
    }
    let targets = collinear_targets(gt, &m.split.gap_sizes())?;
    let mut total = 0.0;
    for (group, tgt) in m.split.collinear_groups.iter().zip(&targets) {
        for (c, t) in group.iter().zip(tgt) {
            total += c.l1(t);
        }
    }
    Ok(total / count as f64)
}

#[inline]
fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

#[inline]
fn bce(p: f64, label: bool) -> f64 {
    let p = clamp_prob(p);
    if label {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

fn check_probs(probs: &[f64], n: usize) -> Result<()> {
    if probs.len() != n {
        return Err(Error::invalid(format!(
            "{} probabilities for {n} prediction points",
            probs.len()
        )));
    }
    if let Some(i) = probs.iter().position(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::invalid(format!(
            "probability {} at index {i} outside [0,1]",
            probs[i]
        )));
    }
    Ok(())
}

/// Mean binary cross-entropy of per-point pivot probabilities against the
/// labels induced by the matching (1 on matched indices, 0 elsewhere).
pub fn pivot_cls_loss(probs: &[f64], m: &PivotMatch) -> Result<f64> {
    let n = m.split.pivot_seq.len() + m.split.collinear_count();
    check_probs(probs, n)?;
    let labels = m.combination.labels(n);
    Ok(probs
        .iter()
        .zip(&labels)
        .map(|(&p, &y)| bce(p, y))
        .sum::<f64>()
        / n as f64)
}

/// Match `pred` against `gt` with [`pdm_dp`] and evaluate the weighted loss
/// and its gradients.
pub fn dvs_total(
    pred: &[Point2],
    probs: &[f64],
    gt: &[Point2],
    weights: &DvsWeights,
) -> Result<DvsReport> {
    let m = pdm_dp(pred, gt)?;
    if m.is_prefix_match(gt.len()) {
        return Err(Error::invalid(format!(
            "ground truth has {} pivots but the prediction only {} points",
            gt.len(),
            pred.len()
        )));
    }
    dvs_with_match(pred, probs, gt, &m, weights)
}

/// Loss and gradients for a fixed matching. `m` must have been computed for
/// `pred` (its split is reused).
pub fn dvs_with_match(
    pred: &[Point2],
    probs: &[f64],
    gt: &[Point2],
    m: &PivotMatch,
    weights: &DvsWeights,
) -> Result<DvsReport> {
    weights.validate()?;
    let n = pred.len();
    let t = gt.len();
    let l_pp = pivotal_loss(m, gt)?;
    let l_cp = collinear_loss(m, gt)?;
    let l_cls = pivot_cls_loss(probs, m)?;
    let total = weights.alpha1 * l_pp + weights.alpha2 * l_cp + weights.alpha3 * l_cls;

    let mut grad = vec![[0.0; 2]; n];
    let idx = m.combination.indices();
    let pp_scale = weights.alpha1 / t as f64;
    for (g, &j) in gt.iter().zip(idx) {
        grad[j] = [
            pp_scale * sign(pred[j].x - g.x),
            pp_scale * sign(pred[j].y - g.y),
        ];
    }
    let collinear = n - t;
    if collinear > 0 {
        let cp_scale = weights.alpha2 / collinear as f64;
        let targets = collinear_targets(gt, &m.combination.gap_sizes())?;
        for (w, tgt) in idx.windows(2).zip(&targets) {
            for (j, c) in (w[0] + 1..w[1]).zip(tgt) {
                grad[j] = [
                    cp_scale * sign(pred[j].x - c.x),
                    cp_scale * sign(pred[j].y - c.y),
                ];
            }
        }
    }

    let labels = m.combination.labels(n);
    let cls_scale = weights.alpha3 / n as f64;
    let inside = |p: f64| (PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&p);
    let prob_grad = probs
        .iter()
        .zip(&labels)
        .map(|(&p, &y)| {
            if !inside(p) {
                0.0
            } else if y {
                -cls_scale / p
            } else {
                cls_scale / (1.0 - p)
            }
        })
        .collect();
    let cls_grad = probs
        .iter()
        .zip(&labels)
        .map(|(&p, &y)| {
            if inside(p) {
                cls_scale * (p - if y { 1.0 } else { 0.0 })
            } else {
                0.0
            }
        })
        .collect();

    Ok(DvsReport {
        l_pp,
        l_cp,
        l_cls,
        total,
        weights: *weights,
        combination: m.combination.clone(),
        grad,
        prob_grad,
        cls_grad,
    })
}
