//! Subcommand implementations. Every command reads its whole configuration
//! up front, streams frames where it can and writes one JSON value per line.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use pivotmap::config::Config;
use pivotmap::dvs::{dvs_total, DvsReport};
use pivotmap::eval::{frame_detections_parallel, EvalAccumulator, FramePairs};
use pivotmap::fit::{fit_points, recover_pivots};
use pivotmap::pdm::{assign_instances, Combination};
use pivotmap::raster::{rasterize, rasterize_union, BevGrid, RleMask};
use pivotmap::simplify::vw_simplify;
use pivotmap::svg::{render_panels, Layer};
use pivotmap::synth::{
    compactness_experiment_parallel, corner_heavy_corpus, gen_element, representations, ShapeKind,
};
use pivotmap::{BevRange, ElementClass, Error, LocalMap, MapElement, Point2, Polyline, Result};
use serde::{Deserialize, Serialize};

use crate::io::{clipped_maps, create_file, open_input, open_output, write_file, write_json_line};

/// Frames handed to the worker pool at a time by `eval`.
const EVAL_BATCH: usize = 64;

pub fn simplify(cfg: &Config, input: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let mut w = open_output(out)?;
    for map in clipped_maps(input)? {
        let map = map?;
        let elements = map
            .elements
            .iter()
            .map(|e| {
                Ok(MapElement {
                    line: vw_simplify(&e.line, &cfg.simplify)?,
                    ..e.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let out_map = LocalMap::new(map.frame_id, map.range, elements);
        w.write_all(pivotmap::map::serialize_local_map(&out_map).as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct MatchRecord<'a> {
    frame_id: &'a str,
    class: ElementClass,
    pred_index: usize,
    /// `None` for predictions left unassigned.
    gt_index: Option<usize>,
    combination: Option<&'a Combination>,
    cost: Option<f64>,
}

fn normalized(line: &Polyline, range: &BevRange) -> Result<Polyline> {
    let pts = line.points().iter().map(|p| range.normalize(p)).collect();
    Polyline::new(pts, line.is_closed())
}

pub fn match_instances(
    cfg: &Config,
    preds: &Path,
    gts: &Path,
    out: Option<&Path>,
    normalize: bool,
) -> Result<()> {
    let mut w = open_output(out)?;
    for pair in FramePairs::new(clipped_maps(Some(preds))?, clipped_maps(Some(gts))?) {
        let (pred, gt) = pair?;
        for class in ElementClass::ALL {
            let budget = cfg.budgets.get(class);
            let p_idx: Vec<usize> = pred.elements_of(class).map(|(i, _)| i).collect();
            let g_idx: Vec<usize> = gt.elements_of(class).map(|(i, _)| i).collect();
            if p_idx.len() > budget.max_instances {
                return Err(Error::Capacity(format!(
                    "frame {}: {} {class} predictions exceed the budget of {}",
                    pred.frame_id,
                    p_idx.len(),
                    budget.max_instances
                )));
            }
            let lines = |map: &LocalMap, idx: &[usize]| -> Result<Vec<Polyline>> {
                idx.iter()
                    .map(|&i| {
                        let line = &map.elements[i].line;
                        if normalize {
                            normalized(line, &map.range)
                        } else {
                            Ok(line.clone())
                        }
                    })
                    .collect()
            };
            let p_lines = lines(&pred, &p_idx)?;
            let g_lines = lines(&gt, &g_idx)?;
            let assignment = assign_instances(class, &p_lines, &g_lines)
                .map_err(|e| annotate(e, &pred.frame_id))?;
            for pair in &assignment.pairs {
                let rec = MatchRecord {
                    frame_id: &pred.frame_id,
                    class,
                    pred_index: p_idx[pair.pred],
                    gt_index: Some(g_idx[pair.gt]),
                    combination: Some(&pair.matching.combination),
                    cost: Some(pair.matching.cost),
                };
                write_json_line(&mut w, &rec)?;
            }
            for &p in &assignment.unmatched {
                let rec = MatchRecord {
                    frame_id: &pred.frame_id,
                    class,
                    pred_index: p_idx[p],
                    gt_index: None,
                    combination: None,
                    cost: None,
                };
                write_json_line(&mut w, &rec)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn annotate(e: Error, frame_id: &str) -> Error {
    match e {
        Error::Capacity(m) => Error::Capacity(format!("frame {frame_id}: {m}")),
        Error::InvalidInput(m) => Error::InvalidInput(format!("frame {frame_id}: {m}")),
        other => other,
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LossRecord {
    pred: Vec<Point2>,
    probs: Vec<f64>,
    gt: Vec<Point2>,
}

pub fn loss(cfg: &Config, input: Option<&Path>, out: Option<&Path>, normalize: bool) -> Result<()> {
    let reader = open_input(input)?;
    let mut w = open_output(out)?;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let mut rec: LossRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if normalize {
            for p in rec.pred.iter_mut().chain(rec.gt.iter_mut()) {
                *p = cfg.range.normalize(p);
            }
        }
        let report: DvsReport = dvs_total(&rec.pred, &rec.probs, &rec.gt, &cfg.dvs_weights)
            .map_err(|e| match e {
                Error::InvalidInput(m) => Error::InvalidInput(format!("line {line_no}: {m}")),
                other => other,
            })?;
        write_json_line(&mut w, &report)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ElementMask {
    index: usize,
    class: ElementClass,
    mask: RleMask,
}

#[derive(Serialize)]
struct FrameMasks {
    frame_id: String,
    height: usize,
    width: usize,
    elements: Vec<ElementMask>,
    union: RleMask,
}

fn frame_union(cfg: &Config, map: &LocalMap) -> Result<BevGrid> {
    let lines: Vec<Polyline> = map.elements.iter().map(|e| e.line.clone()).collect();
    rasterize_union(&lines, &map.range, &cfg.grid)
}

pub fn rasterize_rle(cfg: &Config, input: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let mut w = open_output(out)?;
    for map in clipped_maps(input)? {
        let map = map?;
        let elements = map
            .elements
            .iter()
            .enumerate()
            .map(|(index, e)| {
                Ok(ElementMask {
                    index,
                    class: e.class,
                    mask: rasterize(&e.line, &map.range, &cfg.grid)?.to_rle(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let rec = FrameMasks {
            height: cfg.grid.height,
            width: cfg.grid.width,
            union: frame_union(cfg, &map)?.to_rle(),
            frame_id: map.frame_id,
            elements,
        };
        write_json_line(&mut w, &rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn rasterize_pgm(
    cfg: &Config,
    input: Option<&Path>,
    out: Option<&Path>,
    frame: Option<&str>,
) -> Result<()> {
    for map in clipped_maps(input)? {
        let map = map?;
        if frame.is_some_and(|f| f != map.frame_id) {
            continue;
        }
        let mut w = open_output(out)?;
        w.write_all(&frame_union(cfg, &map)?.to_pgm())?;
        w.flush()?;
        return Ok(());
    }
    Err(Error::InvalidInput(match frame {
        Some(f) => format!("frame {f} not found"),
        None => "input contains no frames".into(),
    }))
}

pub fn eval(
    cfg: &Config,
    preds: &Path,
    gts: &Path,
    out: Option<&Path>,
    csv: Option<&Path>,
    jobs: usize,
) -> Result<()> {
    let mut acc = EvalAccumulator::new(&cfg.eval)?;
    let mut pairs = FramePairs::new(clipped_maps(Some(preds))?, clipped_maps(Some(gts))?);
    loop {
        let batch = pairs
            .by_ref()
            .take(EVAL_BATCH)
            .collect::<Result<Vec<_>>>()?;
        if batch.is_empty() {
            break;
        }
        for frame in frame_detections_parallel(&batch, &cfg.eval, jobs)? {
            acc.push(frame);
        }
    }
    let result = acc.finish();
    let mut w = open_output(out)?;
    write_json_line(&mut w, &result)?;
    w.flush()?;
    if let Some(path) = csv {
        write_file(&path.to_path_buf(), result.to_csv().as_bytes())?;
    }
    Ok(())
}

fn synth_kinds(
    selection: &str,
    count: usize,
    seed: u64,
    range: &BevRange,
) -> Result<Vec<MapElement>> {
    Ok(match selection {
        "corner-heavy" => corner_heavy_corpus(count, seed, range)
            .into_iter()
            .map(|(_, e)| e)
            .collect(),
        "all" => (0..count)
            .map(|i| {
                let kind = ShapeKind::ALL[i % ShapeKind::ALL.len()];
                gen_element(kind, seed + i as u64, range)
            })
            .collect(),
        other => {
            let kind: ShapeKind = other.parse()?;
            (0..count)
                .map(|i| gen_element(kind, seed + i as u64, range))
                .collect()
        }
    })
}

pub fn synth(cfg: &Config, out: Option<&Path>, count: usize, kind: &str, seed: u64) -> Result<()> {
    let mut w = open_output(out)?;
    for (i, e) in synth_kinds(kind, count, seed, &cfg.range)?
        .into_iter()
        .enumerate()
    {
        let map = LocalMap::new(format!("synth-{i:04}"), cfg.range, vec![e]);
        w.write_all(pivotmap::map::serialize_local_map(&map).as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn compare(
    cfg: &Config,
    input: Option<&Path>,
    out: Option<&Path>,
    k: usize,
    svg: Option<&Path>,
    svg_limit: usize,
    jobs: usize,
) -> Result<()> {
    let mut corpus = Vec::new();
    for map in clipped_maps(input)? {
        corpus.extend(map?.elements);
    }
    let report = compactness_experiment_parallel(&corpus, k, cfg.eval.sample_step, jobs)?;
    let mut w = open_output(out)?;
    write_json_line(&mut w, &report)?;
    w.flush()?;
    if let Some(path) = svg {
        let reps: Vec<(usize, Polyline, Polyline)> = report
            .entries
            .iter()
            .take(svg_limit)
            .map(|e| {
                let (even, pivots) = representations(&corpus[e.index].line, k)?;
                Ok((e.index, even, pivots))
            })
            .collect::<Result<_>>()?;
        let panels: Vec<(String, Vec<Layer>)> = reps
            .iter()
            .map(|(i, even, pivots)| {
                let dense = &corpus[*i].line;
                let layers = vec![
                    layer("dense", dense, "#888888", false),
                    layer("even", even, "#1f77b4", true),
                    layer("pivots", pivots, "#d62728", true),
                ];
                (format!("#{i} {}", corpus[*i].class), layers)
            })
            .collect();
        write_file(
            &path.to_path_buf(),
            render_panels(&panels, 240.0).as_bytes(),
        )?;
    }
    Ok(())
}

fn layer<'a>(label: &'a str, line: &'a Polyline, color: &'a str, markers: bool) -> Layer<'a> {
    Layer {
        label,
        points: line.points(),
        closed: line.is_closed(),
        color,
        markers,
    }
}

pub enum FitSource {
    File {
        path: PathBuf,
        frame: Option<String>,
        element: usize,
    },
    Synthetic(ShapeKind),
}

fn fit_target(cfg: &Config, source: &FitSource) -> Result<MapElement> {
    match source {
        FitSource::Synthetic(kind) => Ok(gen_element(*kind, cfg.fit.seed, &cfg.range)),
        FitSource::File {
            path,
            frame,
            element,
        } => {
            for map in clipped_maps(Some(path))? {
                let map = map?;
                if frame.as_deref().is_some_and(|f| f != map.frame_id) {
                    continue;
                }
                return map.elements.get(*element).cloned().ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "frame {} has {} element(s); --element {element} is out of range",
                        map.frame_id,
                        map.elements.len()
                    ))
                });
            }
            Err(Error::InvalidInput(match frame {
                Some(f) => format!("frame {f} not found"),
                None => "input contains no frames".into(),
            }))
        }
    }
}

#[derive(Serialize)]
struct FitSummary<'a> {
    class: ElementClass,
    gt_pivots: &'a [Point2],
    initial_points: &'a [Point2],
    final_points: &'a [Point2],
    final_probs: &'a [f64],
    combination: &'a Combination,
    cost: f64,
    recovered: &'a [Point2],
}

pub fn fit(
    cfg: &Config,
    source: &FitSource,
    n: usize,
    out: Option<&Path>,
    svg: Option<&Path>,
) -> Result<()> {
    let target = fit_target(cfg, source)?;
    let gt = vw_simplify(&target.line, &cfg.simplify)?
        .to_open()
        .into_points();
    let trace = fit_points(&gt, n, &cfg.fit)?;
    let recovered = recover_pivots(&trace.final_points, &trace.final_probs);
    let mut w = open_output(out)?;
    for entry in &trace.log {
        write_json_line(&mut w, entry)?;
    }
    let summary = FitSummary {
        class: target.class,
        gt_pivots: &gt,
        initial_points: &trace.initial_points,
        final_points: &trace.final_points,
        final_probs: &trace.final_probs,
        combination: &trace.final_match.combination,
        cost: trace.final_match.cost,
        recovered: &recovered,
    };
    write_json_line(&mut w, &serde_json::json!({ "final": summary }))?;
    w.flush()?;
    if let Some(path) = svg {
        let point_layer = |label, points, color| Layer {
            label,
            points,
            closed: false,
            color,
            markers: true,
        };
        let panels = vec![(
            format!("{} fit, N = {n}", target.class),
            vec![
                point_layer("ground truth", gt.as_slice(), "#888888"),
                point_layer("initial", trace.initial_points.as_slice(), "#1f77b4"),
                point_layer("final", trace.final_points.as_slice(), "#d62728"),
            ],
        )];
        let mut f = create_file(path)?;
        f.write_all(render_panels(&panels, 480.0).as_bytes())?;
        f.flush()?;
    }
    Ok(())
}
