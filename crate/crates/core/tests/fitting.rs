use pivotmap::dvs::DvsWeights;
use pivotmap::fit::{fit_points, round_trip, FitConfig};
use pivotmap::simplify::SimplifyConfig;
use pivotmap::synth::{gen_element, ShapeKind};
use pivotmap::{BevRange, Point2};

fn l_shape() -> Vec<Point2> {
    vec![
        Point2::new(0.0, 0.0),
        Point2::new(6.0, 0.0),
        Point2::new(6.0, 8.0),
    ]
}

#[test]
fn matching_settles_in_the_last_hundred_steps() {
    let trace = fit_points(&l_shape(), 8, &FitConfig::default()).unwrap();
    assert_eq!(trace.recent_combinations.len(), 100);
    let last = trace.recent_combinations.last().unwrap();
    assert!(trace.recent_combinations.iter().all(|c| c == last));
    assert_eq!(trace.final_match.combination.indices(), last.as_slice());
}

#[test]
fn loss_trends_down() {
    let trace = fit_points(&l_shape(), 8, &FitConfig::default()).unwrap();
    let first = trace.log.first().unwrap().total;
    let last = trace.log.last().unwrap().total;
    assert!(last < 0.1 * first, "{first} -> {last}");
    // the tail of the run is much quieter than the head
    let head = &trace.log[..trace.log.len() / 2];
    let tail = &trace.log[trace.log.len() / 2..];
    let best_head = head.iter().map(|e| e.total).fold(f64::INFINITY, f64::min);
    let worst_tail = tail.iter().map(|e| e.total).fold(0.0, f64::max);
    assert!(
        worst_tail <= best_head * 2.0 + 1e-6,
        "{best_head} vs {worst_tail}"
    );
}

#[test]
fn collinear_term_off_still_fits_pivots() {
    let cfg = FitConfig {
        weights: DvsWeights {
            alpha2: 0.0,
            ..DvsWeights::default()
        },
        ..FitConfig::default()
    };
    let trace = fit_points(&l_shape(), 8, &cfg).unwrap();
    assert!(trace.log.last().unwrap().l_pp < 1e-2);
}

#[test]
fn fitting_is_deterministic() {
    let a = fit_points(&l_shape(), 8, &FitConfig::default()).unwrap();
    let b = fit_points(&l_shape(), 8, &FitConfig::default()).unwrap();
    assert_eq!(a.final_points, b.final_points);
    assert_eq!(a.final_probs, b.final_probs);
}

#[test]
fn round_trip_straight_segment() {
    let e = gen_element(ShapeKind::Straight, 3, &BevRange::default());
    let r = round_trip(
        &e.line,
        &SimplifyConfig::default(),
        10,
        &FitConfig::default(),
        0.1,
    )
    .unwrap();
    assert_eq!(r.gt_pivots.len(), 2);
    assert!(r.chamfer < 0.05, "chamfer {}", r.chamfer);
}

#[test]
fn round_trip_l_corner_recovers_three_pivots() {
    let e = gen_element(ShapeKind::LCorner, 3, &BevRange::default());
    let r = round_trip(
        &e.line,
        &SimplifyConfig::default(),
        10,
        &FitConfig::default(),
        0.1,
    )
    .unwrap();
    assert_eq!(r.gt_pivots.len(), 3);
    assert_eq!(r.recovered.len(), 3);
    assert!(r.chamfer < 0.05, "chamfer {}", r.chamfer);
}

#[test]
fn round_trip_zigzag_recovers_six_pivots() {
    let e = gen_element(ShapeKind::Zigzag, 3, &BevRange::default());
    let r = round_trip(
        &e.line,
        &SimplifyConfig::default(),
        10,
        &FitConfig::default(),
        0.1,
    )
    .unwrap();
    assert_eq!(r.gt_pivots.len(), 6);
    assert_eq!(r.recovered.len(), 6);
    assert!(r.final_l_pp < 1e-2);
}
