//! Direct descent of a free point set against the sequence loss: each step
//! re-matches the prediction to the ground-truth pivots, then moves every
//! coordinate by a sign-gradient step and every pivot logit by a plain
//! gradient step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dvs::{dvs_with_match, DvsWeights};
use crate::error::{Error, Result};
use crate::eval::chamfer_distance;
use crate::geom::Point2;
use crate::map::Polyline;
use crate::pdm::{pdm_dp, PivotMatch};
use crate::simplify::{vw_simplify, SimplifyConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub steps: usize,
    /// Coordinate step (m) before decay.
    pub learning_rate: f64,
    /// Logit step per unit gradient.
    pub prob_lr: f64,
    pub seed: u64,
    pub weights: DvsWeights,
    pub log_interval: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            learning_rate: 0.05,
            prob_lr: 0.1,
            seed: 0,
            weights: DvsWeights::default(),
            log_interval: 10,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.log_interval == 0 {
            return Err(Error::invalid("steps and log_interval must be positive"));
        }
        if !(self.learning_rate.is_finite()
            && self.learning_rate > 0.0
            && self.prob_lr.is_finite()
            && self.prob_lr > 0.0)
        {
            return Err(Error::invalid("learning rates must be positive"));
        }
        self.weights.validate()
    }

    /// Step size at `step`: ×0.2 after 70% and again after 90% of the run.
    pub fn lr_at(&self, step: usize) -> f64 {
        let f = step as f64 / self.steps as f64;
        let mut lr = self.learning_rate;
        if f >= 0.7 {
            lr *= 0.2;
        }
        if f >= 0.9 {
            lr *= 0.2;
        }
        lr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitLogEntry {
    pub step: usize,
    pub l_pp: f64,
    pub l_cp: f64,
    pub l_cls: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitTrace {
    pub log: Vec<FitLogEntry>,
    pub initial_points: Vec<Point2>,
    pub final_points: Vec<Point2>,
    pub final_probs: Vec<f64>,
    pub final_match: PivotMatch,
    /// Matched combination at each of the last `min(100, steps)` evaluations.
    #[serde(skip)]
    pub recent_combinations: Vec<Vec<usize>>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Random initial points, uniform in the ground-truth bounding box padded by
/// 1 m.
pub fn random_init(gt: &[Point2], n: usize, seed: u64) -> Vec<Point2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in gt {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    (0..n)
        .map(|_| {
            Point2::new(
                rng.gen_range(x0 - 1.0..x1 + 1.0),
                rng.gen_range(y0 - 1.0..y1 + 1.0),
            )
        })
        .collect()
}

/// Fit `n` points from a seeded random start with probabilities at 0.5.
pub fn fit_points(gt: &[Point2], n: usize, cfg: &FitConfig) -> Result<FitTrace> {
    if gt.len() < 2 || gt.len() > n {
        return Err(Error::invalid(format!(
            "fitting needs 2 ≤ T ≤ N, got T = {}, N = {n}",
            gt.len()
        )));
    }
    let init = random_init(gt, n, cfg.seed);
    fit_points_from(gt, init, vec![0.5; n], cfg)
}

/// Fit from an explicit initial state.
///
/// Each coordinate keeps its own step size, capped by the decayed learning
/// rate: it is halved whenever the coordinate's gradient sign flips and grows
/// by 1.2× while the sign holds.
pub fn fit_points_from(
    gt: &[Point2],
    init: Vec<Point2>,
    init_probs: Vec<f64>,
    cfg: &FitConfig,
) -> Result<FitTrace> {
    cfg.validate()?;
    let n = init.len();
    if gt.len() < 2 || gt.len() > n {
        return Err(Error::invalid(format!(
            "fitting needs 2 ≤ T ≤ N, got T = {}, N = {n}",
            gt.len()
        )));
    }
    if init_probs.len() != n {
        return Err(Error::invalid(
            "one initial probability per point is required",
        ));
    }
    let mut points = init.clone();
    let mut logits: Vec<f64> = init_probs.iter().map(|&p| logit(p)).collect();
    let mut step_size = vec![[cfg.learning_rate; 2]; n];
    let mut last_sign = vec![[0.0f64; 2]; n];
    let mut log = Vec::with_capacity(cfg.steps / cfg.log_interval + 1);
    let keep_recent = cfg.steps.min(100);
    let mut recent = std::collections::VecDeque::with_capacity(keep_recent + 1);

    for step in 0..=cfg.steps {
        let probs: Vec<f64> = logits.iter().map(|&z| sigmoid(z)).collect();
        let m = pdm_dp(&points, gt)?;
        let report = dvs_with_match(&points, &probs, gt, &m, &cfg.weights)?;
        if step % cfg.log_interval == 0 {
            log.push(FitLogEntry {
                step,
                l_pp: report.l_pp,
                l_cp: report.l_cp,
                l_cls: report.l_cls,
                total: report.total,
            });
        }
        recent.push_back(m.combination.indices().to_vec());
        if recent.len() > keep_recent {
            recent.pop_front();
        }
        if step == cfg.steps {
            return Ok(FitTrace {
                log,
                initial_points: init,
                final_points: points,
                final_probs: probs,
                final_match: m,
                recent_combinations: recent.into(),
            });
        }

        let cap = cfg.lr_at(step);
        for ((p, g), (size, prev)) in points
            .iter_mut()
            .zip(&report.grad)
            .zip(step_size.iter_mut().zip(last_sign.iter_mut()))
        {
            for axis in 0..2 {
                let s = g[axis].signum() * (g[axis] != 0.0) as u8 as f64;
                if s != 0.0 && prev[axis] != 0.0 && s != prev[axis] {
                    size[axis] *= 0.5;
                } else if s != 0.0 {
                    size[axis] *= 1.2;
                }
                size[axis] = size[axis].min(cap);
                if s != 0.0 {
                    prev[axis] = s;
                }
                let delta = size[axis] * s;
                if axis == 0 {
                    p.x -= delta;
                } else {
                    p.y -= delta;
                }
            }
        }
        for (z, g) in logits.iter_mut().zip(&report.cls_grad) {
            *z -= cfg.prob_lr * g;
        }
    }
    unreachable!("the loop returns on its last iteration")
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTrip {
    pub gt_pivots: Vec<Point2>,
    pub recovered: Vec<Point2>,
    pub chamfer: f64,
    pub final_l_pp: f64,
}

/// Points whose pivot probability exceeds 0.5, in order.
pub fn recover_pivots(points: &[Point2], probs: &[f64]) -> Vec<Point2> {
    let mut out: Vec<Point2> = Vec::new();
    for (p, &prob) in points.iter().zip(probs) {
        if prob > 0.5 && out.last() != Some(p) {
            out.push(*p);
        }
    }
    out
}

/// Simplify a dense ground truth, fit `n` points to its pivots, keep the
/// points classified as pivots and measure the Chamfer distance of the
/// reconstruction to the dense original.
pub fn round_trip(
    gt_dense: &Polyline,
    simplify: &SimplifyConfig,
    n: usize,
    fit: &FitConfig,
    sample_step: f64,
) -> Result<RoundTrip> {
    let pivots = vw_simplify(gt_dense, simplify)?.to_open().into_points();
    let trace = fit_points(&pivots, n, fit)?;
    let recovered = recover_pivots(&trace.final_points, &trace.final_probs);
    if recovered.len() < 2 {
        return Err(Error::invalid(format!(
            "only {} point(s) classified as pivots",
            recovered.len()
        )));
    }
    let recon = Polyline::open(recovered.clone())?;
    Ok(RoundTrip {
        chamfer: chamfer_distance(&gt_dense.to_open(), &recon, sample_step),
        final_l_pp: trace.log.last().map_or(f64::NAN, |e| e.l_pp),
        gt_pivots: pivots,
        recovered,
    })
}
