//! WebAssembly entry points for the browser demo. Each function takes plain
//! numbers/strings and returns a JSON document; failures come back as
//! `{"error": "..."}` so the page never has to catch exceptions.

use pivotmap::dvs::collinear_targets;
use pivotmap::eval::chamfer_distance;
use pivotmap::fit::{fit_points, recover_pivots, FitConfig};
use pivotmap::pdm::pdm_dp;
use pivotmap::simplify::{vw_reduce_to, vw_simplify, SimplifyConfig};
use pivotmap::synth::{even_resample, gen_element, ShapeKind};
use pivotmap::{BevRange, Point2, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Chamfer sampling step used by the demo, in metres.
const SAMPLE_STEP: f64 = 0.1;

fn to_json<T: Serialize>(r: Result<T>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e.to_string()),
    }
}

fn error_json(msg: &str) -> String {
    serde_json::json!({ "error": msg }).to_string()
}

#[derive(Serialize)]
struct SimplifyView {
    kind: &'static str,
    class: &'static str,
    closed: bool,
    range: BevRange,
    dense: Vec<Point2>,
    pivots: Vec<Point2>,
    budget_pivots: Vec<Point2>,
    even: Vec<Point2>,
    chamfer_pivot: f64,
    chamfer_even: f64,
}

/// A synthetic shape with its threshold-simplified pivots and the `k`-point
/// pivot and even-spacing representations.
#[wasm_bindgen]
pub fn simplify_demo(kind: &str, seed: u32, area_threshold: f64, k: u32) -> String {
    to_json((|| {
        let kind: ShapeKind = kind.parse()?;
        let range = BevRange::default();
        let e = gen_element(kind, u64::from(seed), &range);
        let cfg = SimplifyConfig {
            area_threshold,
            ..SimplifyConfig::default()
        };
        let pivots = vw_simplify(&e.line, &cfg)?;
        let budget = vw_reduce_to(&e.line, k as usize)?;
        let even = even_resample(&e.line, k as usize)?;
        Ok(SimplifyView {
            kind: kind.as_str(),
            class: e.class.as_str(),
            closed: e.line.is_closed(),
            range,
            chamfer_pivot: chamfer_distance(&e.line, &budget, SAMPLE_STEP),
            chamfer_even: chamfer_distance(&e.line, &even, SAMPLE_STEP),
            dense: e.line.points().to_vec(),
            pivots: pivots.into_points(),
            budget_pivots: budget.into_points(),
            even: even.into_points(),
        })
    })())
}

#[derive(Serialize)]
struct MatchView {
    combination: Vec<usize>,
    cost: f64,
    prefix: bool,
    /// Where each collinear point is pulled to, grouped by pivot gap.
    targets: Vec<Vec<Point2>>,
}

/// Pivot matching of a predicted sequence against a ground-truth pivot
/// sequence, both given as JSON arrays of `[x, y]`.
#[wasm_bindgen]
pub fn match_demo(pred_json: &str, gt_json: &str) -> String {
    to_json((|| {
        let parse = |s: &str, what: &str| -> Result<Vec<Point2>> {
            serde_json::from_str(s)
                .map_err(|e| pivotmap::Error::InvalidInput(format!("{what}: {e}")))
        };
        let pred = parse(pred_json, "prediction")?;
        let gt = parse(gt_json, "ground truth")?;
        let m = pdm_dp(&pred, &gt)?;
        let prefix = m.is_prefix_match(gt.len());
        let targets = if prefix {
            Vec::new()
        } else {
            collinear_targets(&gt, &m.combination.gap_sizes())?
        };
        Ok(MatchView {
            combination: m.combination.indices().to_vec(),
            cost: m.cost,
            prefix,
            targets,
        })
    })())
}

#[derive(Serialize)]
struct FitView {
    gt: Vec<Point2>,
    initial: Vec<Point2>,
    final_points: Vec<Point2>,
    final_probs: Vec<f64>,
    recovered: Vec<Point2>,
    /// `[step, l_pp, l_cp, l_cls, total]` rows.
    log: Vec<[f64; 5]>,
}

/// Fit `n` free points to the pivots of a synthetic shape.
#[wasm_bindgen]
pub fn fit_demo(kind: &str, seed: u32, n: u32, steps: u32) -> String {
    to_json((|| {
        let kind: ShapeKind = kind.parse()?;
        let e = gen_element(kind, u64::from(seed), &BevRange::default());
        let gt = vw_simplify(&e.line, &SimplifyConfig::default())?
            .to_open()
            .into_points();
        let cfg = FitConfig {
            steps: steps as usize,
            seed: u64::from(seed),
            log_interval: (steps as usize / 100).max(1),
            ..FitConfig::default()
        };
        let trace = fit_points(&gt, n as usize, &cfg)?;
        Ok(FitView {
            recovered: recover_pivots(&trace.final_points, &trace.final_probs),
            log: trace
                .log
                .iter()
                .map(|l| [l.step as f64, l.l_pp, l.l_cp, l.l_cls, l.total])
                .collect(),
            gt,
            initial: trace.initial_points,
            final_points: trace.final_points,
            final_probs: trace.final_probs,
        })
    })())
}

/// Shape kinds accepted by the other entry points, as a JSON array.
#[wasm_bindgen]
pub fn shape_kinds() -> String {
    let kinds: Vec<&str> = ShapeKind::ALL.iter().map(|k| k.as_str()).collect();
    serde_json::to_string(&kinds).unwrap_or_default()
}
