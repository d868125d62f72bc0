use pivotmap::clip::clip_to_range;
use pivotmap::dvs::{collinear_targets, dvs_total, DvsWeights};
use pivotmap::eval::{average_precision, chamfer_distance};
use pivotmap::map::{parse_local_map, serialize_local_map};
use pivotmap::pdm::{pdm_bruteforce, pdm_dp};
use pivotmap::simplify::{vw_simplify, SimplifyConfig};
use pivotmap::{BevRange, ElementClass, LocalMap, MapElement, Point2, Polyline};
use proptest::prelude::*;

fn point(lim: f64) -> impl Strategy<Value = Point2> {
    (-lim..lim, -lim..lim).prop_map(|(x, y)| Point2::new(x, y))
}

fn points(lim: f64, len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Point2>> {
    prop::collection::vec(point(lim), len)
}

/// Open polyline without consecutive duplicates.
fn open_line(lim: f64, max: usize) -> impl Strategy<Value = Polyline> {
    points(lim, 2..=max).prop_filter_map("degenerate", |p| Polyline::open(p).ok())
}

fn element() -> impl Strategy<Value = MapElement> {
    (
        0..3usize,
        open_line(40.0, 8),
        prop::option::of(0.0..=1.0f64),
        any::<bool>(),
    )
        .prop_filter_map("invalid", |(c, line, score, close)| {
            let line = if close && line.len() >= 3 {
                Polyline::new(line.into_points(), true).ok()?
            } else {
                line
            };
            MapElement::new(ElementClass::ALL[c], line, score).ok()
        })
}

fn local_map() -> impl Strategy<Value = LocalMap> {
    ("[a-z0-9_-]{1,12}", prop::collection::vec(element(), 0..6))
        .prop_map(|(id, elements)| LocalMap::new(id, BevRange::default(), elements))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn parse_serialize_roundtrip(map in local_map()) {
        let text = serialize_local_map(&map);
        let back = parse_local_map(&text, 1).unwrap();
        prop_assert_eq!(&back, &map);
        prop_assert_eq!(serialize_local_map(&back), text);
    }

    #[test]
    fn clip_in_range_and_idempotent(map in local_map()) {
        let once = clip_to_range(&map);
        for e in &once.elements {
            for p in e.line.points() {
                prop_assert!(map.range.contains(p), "{:?} outside", p);
            }
        }
        let twice = clip_to_range(&once);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn vw_subsequence_and_monotone(line in open_line(10.0, 30), a in 1e-4..1.0f64, b in 1e-4..1.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let s_lo = vw_simplify(&line, &SimplifyConfig { area_threshold: lo, ..Default::default() }).unwrap();
        let s_hi = vw_simplify(&line, &SimplifyConfig { area_threshold: hi, ..Default::default() }).unwrap();
        prop_assert!(s_hi.len() <= s_lo.len());
        let mut it = line.points().iter();
        prop_assert!(s_lo.points().iter().all(|p| it.any(|q| q == p)));
        prop_assert_eq!(s_lo.points()[0], line.points()[0]);
        prop_assert_eq!(s_lo.points().last(), line.points().last());
    }

    #[test]
    fn dp_matches_oracle(pred in points(20.0, 2..=11), gt in points(20.0, 2..=11)) {
        let dp = pdm_dp(&pred, &gt).unwrap();
        let bf = pdm_bruteforce(&pred, &gt).unwrap();
        prop_assert_eq!(dp.cost, bf.cost);
        prop_assert_eq!(dp.combination, bf.combination);
    }

    #[test]
    fn dp_translation_equivariant(
        pred in points(10.0, 2..=12),
        gt in points(10.0, 2..=12),
        dx in -5.0..5.0f64,
        dy in -5.0..5.0f64,
    ) {
        // dyadic offsets keep the shift exact in floating point
        let dx = (dx * 8.0).round() / 8.0;
        let dy = (dy * 8.0).round() / 8.0;
        let a = pdm_dp(&pred, &gt).unwrap();
        let sp: Vec<_> = pred.iter().map(|p| p.translate(dx, dy)).collect();
        let sg: Vec<_> = gt.iter().map(|p| p.translate(dx, dy)).collect();
        let b = pdm_dp(&sp, &sg).unwrap();
        prop_assert!((a.cost - b.cost).abs() <= 1e-9 * (1.0 + a.cost));
    }

    #[test]
    fn collinear_targets_ordered(a in point(20.0), b in point(20.0), r in 0usize..25) {
        let t = &collinear_targets(&[a, b], &[r]).unwrap()[0];
        let d: Vec<f64> = t.iter().map(|p| p.dist(&a)).collect();
        prop_assert!(d.windows(2).all(|w| w[0] <= w[1] + 1e-12));
        prop_assert!(d.iter().all(|&x| x <= a.dist(&b) + 1e-12));
    }

    #[test]
    fn dvs_weights_scale_linearly(
        pred in points(10.0, 4..=10),
        gt in points(10.0, 2..=4),
        c in 0.1..10.0f64,
    ) {
        let probs: Vec<f64> = (0..pred.len()).map(|i| (i as f64 + 0.5) / pred.len() as f64).collect();
        let w = DvsWeights::default();
        let base = dvs_total(&pred, &probs, &gt, &w).unwrap();
        let scaled = dvs_total(&pred, &probs, &gt, &w.scaled(c)).unwrap();
        prop_assert!((scaled.total - c * base.total).abs() <= 1e-9 * (1.0 + c * base.total));
    }

    #[test]
    fn ap_in_unit_interval_and_rank_invariant(
        hits in prop::collection::vec((0.0..1.0f64, any::<bool>()), 0..30),
        extra_gt in 0usize..5,
    ) {
        let num_gt = hits.iter().filter(|h| h.1).count() + extra_gt;
        let ap = average_precision(&hits, num_gt);
        if num_gt == 0 {
            prop_assert!(ap.is_none());
        } else {
            let ap = ap.unwrap();
            prop_assert!((0.0..=1.0).contains(&ap));
            // a strictly monotone rescaling of scores leaves the ranking unchanged
            let squashed: Vec<(f64, bool)> = hits.iter().map(|&(s, t)| (s * 0.5 + 0.25, t)).collect();
            prop_assert_eq!(average_precision(&squashed, num_gt), Some(ap));
        }
    }

    #[test]
    fn chamfer_symmetric_and_zero_on_self(a in open_line(10.0, 6), b in open_line(10.0, 6)) {
        prop_assert!(chamfer_distance(&a, &a, 0.1) < 1e-12);
        let ab = chamfer_distance(&a, &b, 0.1);
        let ba = chamfer_distance(&b, &a, 0.1);
        prop_assert!((ab - ba).abs() < 1e-9);
    }
}

#[test]
fn chamfer_converges_as_step_shrinks() {
    let a = Polyline::from_xy(&[(0.0, 0.0), (4.0, 0.0), (4.0, 3.0)], false).unwrap();
    let b = Polyline::from_xy(&[(0.0, 1.0), (5.0, 1.0)], false).unwrap();
    let values: Vec<f64> = [0.5, 0.1, 0.02, 0.005]
        .iter()
        .map(|&s| chamfer_distance(&a, &b, s))
        .collect();
    let diffs: Vec<f64> = values.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
    assert!(diffs.windows(2).all(|w| w[1] <= w[0]), "{values:?}");
    assert!(diffs.last().unwrap() < &1e-2);
}

#[test]
fn vw_removes_exactly_collinear_vertices() {
    let line = Polyline::from_xy(
        &[
            (0.0, 0.0),
            (1.0, 1.0),
            (2.0, 2.0),
            (3.0, 0.0),
            (4.0, -2.0),
            (5.0, 0.0),
        ],
        false,
    )
    .unwrap();
    let cfg = SimplifyConfig {
        area_threshold: 1e-12,
        ..Default::default()
    };
    let out = vw_simplify(&line, &cfg).unwrap();
    let expect =
        Polyline::from_xy(&[(0.0, 0.0), (2.0, 2.0), (4.0, -2.0), (5.0, 0.0)], false).unwrap();
    assert_eq!(out, expect);
}
