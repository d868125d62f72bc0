//! Chamfer-distance average precision over classed map elements.
//!
//! Protocol: both polylines are resampled every `sample_step` meters of arc
//! length; their Chamfer distance is the mean of the two directed mean
//! nearest-sample distances. Within a frame and class, predictions are
//! matched greedily in descending score order to the nearest still-free
//! ground truth closer than the threshold. AP is the area under the
//! precision envelope over all frames, and mAP the unweighted mean of the
//! per-class APs (each averaged over thresholds).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{resample_by_step, Point2};
use crate::map::{ElementClass, LocalMap, MapElement, Polyline};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub thresholds: Vec<f64>,
    pub sample_step: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            thresholds: vec![0.2, 0.5, 1.0],
            sample_step: 0.1,
        }
    }
}

impl EvalConfig {
    /// The relaxed threshold set `{0.5, 1.0, 1.5}`.
    pub fn relaxed() -> Self {
        Self {
            thresholds: vec![0.5, 1.0, 1.5],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thresholds.is_empty() {
            return Err(Error::invalid("at least one threshold is required"));
        }
        if self.thresholds.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::invalid("thresholds must be positive"));
        }
        if self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("thresholds must be strictly ascending"));
        }
        if !(self.sample_step.is_finite() && self.sample_step > 0.0) {
            return Err(Error::invalid("sample_step must be positive"));
        }
        Ok(())
    }
}

fn resample(line: &Polyline, step: f64) -> Vec<Point2> {
    resample_by_step(line.points(), line.is_closed(), step)
}

fn directed_mean(from: &[Point2], to: &[Point2]) -> f64 {
    from.iter()
        .map(|p| to.iter().map(|q| p.dist(q)).fold(f64::INFINITY, f64::min))
        .sum::<f64>()
        / from.len() as f64
}

/// Chamfer distance between two already-resampled point sets.
pub fn chamfer_samples(a: &[Point2], b: &[Point2]) -> f64 {
    0.5 * (directed_mean(a, b) + directed_mean(b, a))
}

/// Symmetric Chamfer distance after arc-length resampling at `step`.
pub fn chamfer_distance(a: &Polyline, b: &Polyline, step: f64) -> f64 {
    chamfer_samples(&resample(a, step), &resample(b, step))
}

/// Greedy score-ordered TP/FP assignment for one frame and class.
/// Returns, for each threshold, one flag per prediction in input order.
pub fn match_for_eval_multi(
    preds: &[&MapElement],
    gts: &[&MapElement],
    thresholds: &[f64],
    step: f64,
) -> Result<Vec<Vec<bool>>> {
    let scores = preds
        .iter()
        .enumerate()
        .map(|(i, p)| {
            p.score
                .ok_or_else(|| Error::invalid(format!("prediction {i} has no score")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let pred_samples: Vec<_> = preds.iter().map(|p| resample(&p.line, step)).collect();
    let gt_samples: Vec<_> = gts.iter().map(|g| resample(&g.line, step)).collect();
    let dist: Vec<Vec<f64>> = pred_samples
        .iter()
        .map(|p| gt_samples.iter().map(|g| chamfer_samples(p, g)).collect())
        .collect();

    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    Ok(thresholds
        .iter()
        .map(|&thr| {
            let mut flags = vec![false; preds.len()];
            let mut taken = vec![false; gts.len()];
            for &p in &order {
                let best = (0..gts.len())
                    .filter(|&g| !taken[g] && dist[p][g] < thr)
                    .min_by(|&a, &b| dist[p][a].total_cmp(&dist[p][b]));
                if let Some(g) = best {
                    taken[g] = true;
                    flags[p] = true;
                }
            }
            flags
        })
        .collect())
}

/// Single-threshold form of [`match_for_eval_multi`].
pub fn match_for_eval(
    preds: &[&MapElement],
    gts: &[&MapElement],
    threshold: f64,
    step: f64,
) -> Result<Vec<bool>> {
    Ok(match_for_eval_multi(preds, gts, &[threshold], step)?.remove(0))
}

/// All-point AP: area under the precision envelope. `None` when there is no
/// ground truth (recall undefined).
pub fn average_precision(detections: &[(f64, bool)], num_gt: usize) -> Option<f64> {
    if num_gt == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| detections[b].0.total_cmp(&detections[a].0));
    let mut precision = Vec::with_capacity(order.len());
    let mut recall = Vec::with_capacity(order.len());
    let mut tp = 0usize;
    for (rank, &i) in order.iter().enumerate() {
        if detections[i].1 {
            tp += 1;
        }
        precision.push(tp as f64 / (rank + 1) as f64);
        recall.push(tp as f64 / num_gt as f64);
    }
    for k in (0..precision.len().saturating_sub(1)).rev() {
        precision[k] = precision[k].max(precision[k + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (p, r) in precision.iter().zip(&recall) {
        ap += (r - prev_recall) * p;
        prev_recall = *r;
    }
    Some(ap)
}

/// Scored TP flags of one frame, per class and threshold.
#[derive(Debug, Clone, Default)]
pub struct FrameDetections {
    /// `[class][threshold]` → `(score, tp)` per prediction.
    detections: [Vec<Vec<(f64, bool)>>; 3],
    num_gt: [usize; 3],
}

/// Match one aligned pair of frames.
pub fn frame_detections(
    pred: &LocalMap,
    gt: &LocalMap,
    cfg: &EvalConfig,
) -> Result<FrameDetections> {
    let mut out = FrameDetections::default();
    for class in ElementClass::ALL {
        let p: Vec<&MapElement> = pred.elements_of(class).map(|(_, e)| e).collect();
        let g: Vec<&MapElement> = gt.elements_of(class).map(|(_, e)| e).collect();
        let flags = match_for_eval_multi(&p, &g, &cfg.thresholds, cfg.sample_step).map_err(
            |e| match e {
                Error::InvalidInput(m) => {
                    Error::invalid(format!("frame {}: {class}: {m}", pred.frame_id))
                }
                other => other,
            },
        )?;
        let c = class.index();
        out.num_gt[c] = g.len();
        out.detections[c] = flags
            .into_iter()
            .map(|f| {
                p.iter()
                    .zip(f)
                    .map(|(e, tp)| (e.score.unwrap(), tp))
                    .collect()
            })
            .collect();
    }
    Ok(out)
}

/// Order-preserving reduction of per-frame detections into an [`EvalResult`].
#[derive(Debug, Clone)]
pub struct EvalAccumulator {
    thresholds: Vec<f64>,
    detections: [Vec<Vec<(f64, bool)>>; 3],
    num_gt: [usize; 3],
    frames: usize,
}

impl EvalAccumulator {
    pub fn new(cfg: &EvalConfig) -> Result<Self> {
        cfg.validate()?;
        let per_thr = || vec![Vec::new(); cfg.thresholds.len()];
        Ok(Self {
            thresholds: cfg.thresholds.clone(),
            detections: [per_thr(), per_thr(), per_thr()],
            num_gt: [0; 3],
            frames: 0,
        })
    }

    pub fn push(&mut self, frame: FrameDetections) {
        for c in 0..3 {
            self.num_gt[c] += frame.num_gt[c];
            for (acc, d) in self.detections[c]
                .iter_mut()
                .zip(frame.detections[c].iter())
            {
                acc.extend_from_slice(d);
            }
        }
        self.frames += 1;
    }

    pub fn finish(self) -> EvalResult {
        let classes: Vec<ClassResult> = ElementClass::ALL
            .iter()
            .map(|&class| {
                let c = class.index();
                let ap: Vec<Option<f64>> = self.detections[c]
                    .iter()
                    .map(|d| average_precision(d, self.num_gt[c]))
                    .collect();
                let defined: Vec<f64> = ap.iter().flatten().copied().collect();
                let mean_ap = (!defined.is_empty())
                    .then(|| defined.iter().sum::<f64>() / defined.len() as f64);
                ClassResult {
                    class,
                    ap,
                    mean_ap,
                    num_gt: self.num_gt[c],
                    num_pred: self.detections[c].first().map_or(0, Vec::len),
                }
            })
            .collect();
        let means: Vec<f64> = classes.iter().filter_map(|c| c.mean_ap).collect();
        let map = (!means.is_empty()).then(|| means.iter().sum::<f64>() / means.len() as f64);
        EvalResult {
            thresholds: self.thresholds,
            frames: self.frames,
            classes,
            map,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassResult {
    pub class: ElementClass,
    /// One entry per threshold; `None` when the class has no ground truth.
    pub ap: Vec<Option<f64>>,
    pub mean_ap: Option<f64>,
    pub num_gt: usize,
    pub num_pred: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub thresholds: Vec<f64>,
    pub frames: usize,
    pub classes: Vec<ClassResult>,
    /// Mean of the defined per-class mean APs.
    pub map: Option<f64>,
}

impl EvalResult {
    pub fn class(&self, class: ElementClass) -> &ClassResult {
        &self.classes[class.index()]
    }

    /// Summary table: per-class AP (averaged over thresholds) and mAP.
    pub fn to_csv(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x}"));
        format!(
            "AP_divider,AP_ped,AP_boundary,mAP\n{},{},{},{}\n",
            fmt(self.class(ElementClass::Divider).mean_ap),
            fmt(self.class(ElementClass::PedCrossing).mean_ap),
            fmt(self.class(ElementClass::Boundary).mean_ap),
            fmt(self.map)
        )
    }
}

/// Pair frames by id. Every frame must appear on both sides.
fn align<'a>(
    preds: &'a [LocalMap],
    gts: &'a [LocalMap],
) -> Result<Vec<(&'a LocalMap, &'a LocalMap)>> {
    let by_id: HashMap<&str, &LocalMap> = preds.iter().map(|m| (m.frame_id.as_str(), m)).collect();
    let gt_ids: std::collections::HashSet<&str> = gts.iter().map(|m| m.frame_id.as_str()).collect();
    let missing_pred: Vec<&str> = gts
        .iter()
        .map(|g| g.frame_id.as_str())
        .filter(|id| !by_id.contains_key(id))
        .collect();
    let missing_gt: Vec<&str> = preds
        .iter()
        .map(|p| p.frame_id.as_str())
        .filter(|id| !gt_ids.contains(id))
        .collect();
    if !missing_pred.is_empty() || !missing_gt.is_empty() {
        return Err(frame_mismatch(&missing_pred, &missing_gt));
    }
    Ok(gts
        .iter()
        .map(|g| (by_id[g.frame_id.as_str()], g))
        .collect())
}

pub(crate) fn frame_mismatch(missing_pred: &[&str], missing_gt: &[&str]) -> Error {
    Error::invalid(format!(
        "frame mismatch: missing predictions for [{}]; missing ground truth for [{}]",
        missing_pred.join(", "),
        missing_gt.join(", ")
    ))
}

/// Pairs frames from two streams by `frame_id`. Each side is read one record
/// at a time and unpaired frames wait in a pending table, so identically
/// ordered inputs are paired with O(1) memory. Pairs come out in the order
/// they complete; an unpaired frame at the end of input is an error.
pub struct FramePairs<P, G> {
    preds: P,
    gts: G,
    pending_pred: HashMap<String, LocalMap>,
    pending_gt: HashMap<String, LocalMap>,
    preds_done: bool,
    gts_done: bool,
    finished: bool,
}

impl<P, G> FramePairs<P, G>
where
    P: Iterator<Item = Result<LocalMap>>,
    G: Iterator<Item = Result<LocalMap>>,
{
    pub fn new(preds: P, gts: G) -> Self {
        Self {
            preds,
            gts,
            pending_pred: HashMap::new(),
            pending_gt: HashMap::new(),
            preds_done: false,
            gts_done: false,
            finished: false,
        }
    }

    fn mismatch(&mut self) -> Error {
        let mut missing_pred: Vec<&str> = self.pending_gt.keys().map(String::as_str).collect();
        let mut missing_gt: Vec<&str> = self.pending_pred.keys().map(String::as_str).collect();
        missing_pred.sort_unstable();
        missing_gt.sort_unstable();
        frame_mismatch(&missing_pred, &missing_gt)
    }
}

impl<P, G> Iterator for FramePairs<P, G>
where
    P: Iterator<Item = Result<LocalMap>>,
    G: Iterator<Item = Result<LocalMap>>,
{
    type Item = Result<(LocalMap, LocalMap)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.finished {
            return None;
        }
        loop {
            if !self.gts_done {
                match self.gts.next() {
                    None => self.gts_done = true,
                    Some(Err(e)) => {
                        self.finished = true;
                        return Some(Err(e));
                    }
                    Some(Ok(g)) => match self.pending_pred.remove(&g.frame_id) {
                        Some(p) => return Some(Ok((p, g))),
                        None => {
                            if self.pending_gt.contains_key(&g.frame_id) {
                                self.finished = true;
                                return Some(Err(Error::invalid(format!(
                                    "duplicate ground-truth frame {}",
                                    g.frame_id
                                ))));
                            }
                            self.pending_gt.insert(g.frame_id.clone(), g);
                        }
                    },
                }
            }
            if !self.preds_done {
                match self.preds.next() {
                    None => self.preds_done = true,
                    Some(Err(e)) => {
                        self.finished = true;
                        return Some(Err(e));
                    }
                    Some(Ok(p)) => match self.pending_gt.remove(&p.frame_id) {
                        Some(g) => return Some(Ok((p, g))),
                        None => {
                            if self.pending_pred.contains_key(&p.frame_id) {
                                self.finished = true;
                                return Some(Err(Error::invalid(format!(
                                    "duplicate prediction frame {}",
                                    p.frame_id
                                ))));
                            }
                            self.pending_pred.insert(p.frame_id.clone(), p);
                        }
                    },
                }
            }
            if self.preds_done && self.gts_done {
                self.finished = true;
                if self.pending_pred.is_empty() && self.pending_gt.is_empty() {
                    return None;
                }
                return Some(Err(self.mismatch()));
            }
        }
    }
}

/// [`frame_detections`] for a batch of aligned frames on `jobs` threads,
/// returned in input order.
#[cfg(feature = "parallel")]
pub fn frame_detections_parallel(
    pairs: &[(LocalMap, LocalMap)],
    cfg: &EvalConfig,
    jobs: usize,
) -> Result<Vec<FrameDetections>> {
    use rayon::prelude::*;
    crate::parallel::with_jobs(jobs, || {
        pairs
            .par_iter()
            .map(|(p, g)| frame_detections(p, g, cfg))
            .collect()
    })
}

/// Full evaluation over aligned frames.
pub fn evaluate(preds: &[LocalMap], gts: &[LocalMap], cfg: &EvalConfig) -> Result<EvalResult> {
    let mut acc = EvalAccumulator::new(cfg)?;
    for (p, g) in align(preds, gts)? {
        acc.push(frame_detections(p, g, cfg)?);
    }
    Ok(acc.finish())
}

/// [`evaluate`] with per-frame matching spread over `jobs` threads. The
/// reduction runs in frame order, so the result is identical to the
/// sequential one.
#[cfg(feature = "parallel")]
pub fn evaluate_parallel(
    preds: &[LocalMap],
    gts: &[LocalMap],
    cfg: &EvalConfig,
    jobs: usize,
) -> Result<EvalResult> {
    use rayon::prelude::*;
    let mut acc = EvalAccumulator::new(cfg)?;
    let pairs = align(preds, gts)?;
    let frames = crate::parallel::with_jobs(jobs, || {
        pairs
            .par_iter()
            .map(|(p, g)| frame_detections(p, g, cfg))
            .collect::<Result<Vec<_>>>()
    })?;
    for f in frames {
        acc.push(f);
    }
    Ok(acc.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::BevRange;

    fn seg(x0: f64, y0: f64, x1: f64, y1: f64) -> Polyline {
        Polyline::from_xy(&[(x0, y0), (x1, y1)], false).unwrap()
    }

    fn pred(line: Polyline, score: f64) -> MapElement {
        MapElement::new(ElementClass::Divider, line, Some(score)).unwrap()
    }

    fn gt(line: Polyline) -> MapElement {
        MapElement::ground_truth(ElementClass::Divider, line)
    }

    #[test]
    fn chamfer_basics() {
        let a = seg(0.0, 0.0, 5.0, 0.0);
        assert_eq!(chamfer_distance(&a, &a, 0.1), 0.0);
        let b = seg(0.0, 0.5, 5.0, 0.5);
        assert!((chamfer_distance(&a, &b, 0.1) - 0.5).abs() < 1e-12);
        let c = Polyline::from_xy(&[(0.0, 1.0), (2.0, 3.0), (4.0, 0.5)], false).unwrap();
        assert_eq!(chamfer_distance(&a, &c, 0.1), chamfer_distance(&c, &a, 0.1));
    }

    #[test]
    fn match_examples() {
        let g = gt(seg(0.0, 0.0, 5.0, 0.0));
        let on = pred(seg(0.0, 0.0, 5.0, 0.0), 0.9);
        assert_eq!(match_for_eval(&[&on], &[&g], 0.5, 0.1).unwrap(), vec![true]);

        let second = pred(seg(0.0, 0.0, 5.0, 0.0), 0.8);
        assert_eq!(
            match_for_eval(&[&second, &on], &[&g], 0.5, 0.1).unwrap(),
            vec![false, true]
        );

        let far = pred(seg(0.0, 0.6, 5.0, 0.6), 0.9);
        assert_eq!(
            match_for_eval(&[&far], &[&g], 0.5, 0.1).unwrap(),
            vec![false]
        );

        let unscored = gt(seg(0.0, 0.0, 5.0, 0.0));
        assert!(match_for_eval(&[&unscored], &[&g], 0.5, 0.1).is_err());
    }

    #[test]
    fn nearest_free_gt_chosen() {
        let g0 = gt(seg(0.0, 0.0, 5.0, 0.0));
        let g1 = gt(seg(0.0, 0.3, 5.0, 0.3));
        let p = pred(seg(0.0, 0.25, 5.0, 0.25), 0.9);
        let q = pred(seg(0.0, 0.05, 5.0, 0.05), 0.8);
        // p takes g1 (0.05 away), leaving g0 for q
        let f = match_for_eval(&[&p, &q], &[&g0, &g1], 0.5, 0.1).unwrap();
        assert_eq!(f, vec![true, true]);
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&[(0.9, true), (0.7, true)], 2), Some(1.0));
        assert_eq!(
            average_precision(&[(0.9, true), (0.8, false)], 1),
            Some(1.0)
        );
        assert_eq!(
            average_precision(&[(0.9, false), (0.8, true)], 1),
            Some(0.5)
        );
        assert_eq!(average_precision(&[], 3), Some(0.0));
        assert_eq!(average_precision(&[], 0), None);
        assert_eq!(average_precision(&[(0.5, false)], 0), None);
    }

    #[test]
    fn evaluate_identity_and_empty() {
        let range = BevRange::default();
        let mut gts = Vec::new();
        let mut preds = Vec::new();
        for (i, class) in ElementClass::ALL.iter().enumerate() {
            let line = seg(i as f64, -5.0, i as f64 + 1.0, 5.0);
            gts.push(LocalMap::new(
                format!("f{i}"),
                range,
                vec![MapElement::ground_truth(*class, line.clone())],
            ));
            preds.push(LocalMap::new(
                format!("f{i}"),
                range,
                vec![MapElement::new(*class, line, Some(1.0)).unwrap()],
            ));
        }
        let r = evaluate(&preds, &gts, &EvalConfig::default()).unwrap();
        assert_eq!(r.map, Some(1.0));
        assert!(r
            .classes
            .iter()
            .all(|c| c.ap.iter().all(|a| *a == Some(1.0))));

        let empty: Vec<LocalMap> = gts
            .iter()
            .map(|g| LocalMap::new(g.frame_id.clone(), range, vec![]))
            .collect();
        let r = evaluate(&empty, &gts, &EvalConfig::default()).unwrap();
        assert_eq!(r.map, Some(0.0));
    }

    #[test]
    fn frame_mismatch_lists_ids() {
        let range = BevRange::default();
        let gts = vec![
            LocalMap::new("a", range, vec![]),
            LocalMap::new("b", range, vec![]),
        ];
        let preds = vec![
            LocalMap::new("a", range, vec![]),
            LocalMap::new("c", range, vec![]),
        ];
        let err = evaluate(&preds, &gts, &EvalConfig::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[b]") && msg.contains("[c]"), "{msg}");
    }

    #[test]
    fn config_validation() {
        assert!(EvalConfig::default().validate().is_ok());
        assert!(EvalConfig::relaxed().validate().is_ok());
        let bad = EvalConfig {
            thresholds: vec![1.0, 0.5],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    fn frames(ids: &[&str]) -> Vec<Result<LocalMap>> {
        ids.iter()
            .map(|id| Ok(LocalMap::new(*id, BevRange::default(), Vec::new())))
            .collect()
    }

    #[test]
    fn frame_pairs_tolerate_reordering() {
        let pairs: Vec<(String, String)> = FramePairs::new(
            frames(&["a", "b", "c"]).into_iter(),
            frames(&["b", "a", "c"]).into_iter(),
        )
        .map(|r| r.map(|(p, g)| (p.frame_id, g.frame_id)))
        .collect::<Result<_>>()
        .unwrap();
        assert_eq!(pairs.len(), 3);
        assert!(pairs.iter().all(|(p, g)| p == g));
    }

    #[test]
    fn frame_pairs_report_missing_frames() {
        let out: Vec<_> = FramePairs::new(
            frames(&["a", "x"]).into_iter(),
            frames(&["a", "y"]).into_iter(),
        )
        .collect();
        assert_eq!(out.len(), 2);
        let err = out[1].as_ref().unwrap_err().to_string();
        assert!(err.contains("[y]") && err.contains("[x]"), "{err}");
    }
}
