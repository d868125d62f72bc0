//! Pivot dynamic matching: the endpoint-constrained assignment of ground-truth
//! pivots to an ordered prediction, and the instance-level assignment built
//! on top of it.
//!
//! Ties between equal-cost combinations resolve to the lexicographically
//! smallest index list in both the enumeration oracle and the dynamic
//! program, so the two agree on the combination and not only on the cost.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::Point2;
use crate::hungarian::min_cost_assignment;
use crate::map::{ElementClass, Polyline};

/// Largest number of interior combinations the enumeration oracle will visit.
pub const BRUTEFORCE_LIMIT: u128 = 1_000_000;

/// Strictly increasing prediction indices, one per ground-truth pivot, pinned
/// to the first and last prediction points.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Combination(Vec<usize>);

impl Combination {
    /// Validate `indices` as a combination over a prediction of `n` points.
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        if indices.len() < 2 {
            return Err(Error::invalid("a combination needs at least two indices"));
        }
        if indices[0] != 0 || *indices.last().unwrap() != n - 1 {
            return Err(Error::invalid(format!(
                "combination must start at 0 and end at {} (endpoint constraint)",
                n - 1
            )));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "combination indices must be strictly increasing",
            ));
        }
        Ok(Self(indices))
    }

    /// `0, 1, …, n-1`.
    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of prediction points strictly between consecutive pivots.
    pub fn gap_sizes(&self) -> Vec<usize> {
        self.0.windows(2).map(|w| w[1] - w[0] - 1).collect()
    }

    /// Per-point pivot labels over a prediction of `n` points.
    pub fn labels(&self, n: usize) -> Vec<bool> {
        let mut labels = vec![false; n];
        for &i in &self.0 {
            labels[i] = true;
        }
        labels
    }
}

/// A prediction split into matched pivots and the collinear runs between them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceSplit {
    pub pivot_seq: Vec<Point2>,
    /// Group `n` holds the points between pivots `n` and `n+1`, in order.
    pub collinear_groups: Vec<Vec<Point2>>,
}

impl SequenceSplit {
    pub fn gap_sizes(&self) -> Vec<usize> {
        self.collinear_groups.iter().map(Vec::len).collect()
    }

    pub fn collinear_count(&self) -> usize {
        self.collinear_groups.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PivotMatch {
    pub combination: Combination,
    /// Mean per-pivot L1 cost. In the `T > N` prefix case this is the summed
    /// cost of the `N` prefix pairs.
    pub cost: f64,
    #[serde(flatten)]
    pub split: SequenceSplit,
}

impl PivotMatch {
    /// True when the ground truth had more pivots than the prediction has
    /// points and only a prefix was matched.
    pub fn is_prefix_match(&self, gt_len: usize) -> bool {
        self.combination.len() < gt_len
    }
}

fn check_lengths(n: usize, t: usize) -> Result<()> {
    if n < 2 || t < 2 {
        return Err(Error::invalid("A line should contain two points at least"));
    }
    Ok(())
}

/// Mean L1 distance between ground-truth pivots and the prediction points
/// selected by `beta`.
pub fn match_cost(pred: &[Point2], gt: &[Point2], beta: &Combination) -> Result<f64> {
    check_lengths(pred.len(), gt.len())?;
    let idx = beta.indices();
    if idx.len() != gt.len() {
        return Err(Error::invalid(format!(
            "combination has {} indices for {} ground-truth points",
            idx.len(),
            gt.len()
        )));
    }
    if idx[0] != 0 || idx[idx.len() - 1] != pred.len() - 1 {
        return Err(Error::invalid(
            "combination violates the endpoint constraint",
        ));
    }
    Ok(summed_cost(pred, gt, idx) / gt.len() as f64)
}

/// Sequential left-to-right sum; the DP accumulates in the same order.
fn summed_cost(pred: &[Point2], gt: &[Point2], idx: &[usize]) -> f64 {
    let mut total = 0.0;
    for (g, &j) in gt.iter().zip(idx) {
        total += g.l1(&pred[j]);
    }
    total
}

/// Partition `pred` by `beta` into pivots and collinear gap groups.
pub fn split_sequence(pred: &[Point2], beta: &Combination) -> SequenceSplit {
    let idx = beta.indices();
    SequenceSplit {
        pivot_seq: idx.iter().map(|&i| pred[i]).collect(),
        collinear_groups: idx
            .windows(2)
            .map(|w| pred[w[0] + 1..w[1]].to_vec())
            .collect(),
    }
}

fn build_match(pred: &[Point2], combination: Combination, cost: f64) -> PivotMatch {
    let split = split_sequence(pred, &combination);
    PivotMatch {
        combination,
        cost,
        split,
    }
}

/// More ground-truth pivots than prediction points: pair the first `N`
/// ground-truth points with predictions `0..N` and report the summed cost.
fn prefix_match(pred: &[Point2], gt: &[Point2]) -> PivotMatch {
    let n = pred.len();
    let mut cost = 0.0;
    for j in 0..n {
        cost += gt[j].l1(&pred[j]);
    }
    build_match(pred, Combination::identity(n), cost)
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Exhaustive search over all endpoint-constrained combinations. Used as the
/// reference oracle for [`pdm_dp`].
pub fn pdm_bruteforce(pred: &[Point2], gt: &[Point2]) -> Result<PivotMatch> {
    let (n, t) = (pred.len(), gt.len());
    check_lengths(n, t)?;
    if t > n {
        return Ok(prefix_match(pred, gt));
    }
    let count = binomial(n - 2, t - 2);
    if count > BRUTEFORCE_LIMIT {
        return Err(Error::Capacity(format!(
            "enumerating C({}, {}) = {count} combinations exceeds the limit of {BRUTEFORCE_LIMIT}",
            n - 2,
            t - 2
        )));
    }
    // interior indices enumerated in lexicographic order; strict `<` keeps
    // the first (lexicographically smallest) of equal-cost combinations
    let k = t - 2;
    let mut interior: Vec<usize> = (1..=k).collect();
    let mut idx = vec![0; t];
    idx[t - 1] = n - 1;
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        idx[1..t - 1].copy_from_slice(&interior);
        let total = summed_cost(pred, gt, &idx);
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, idx.clone()));
        }
        // advance to the next k-subset of 1..=n-2
        let mut pos = k;
        loop {
            if pos == 0 {
                let (total, idx) = best.unwrap();
                return Ok(build_match(pred, Combination(idx), total / t as f64));
            }
            pos -= 1;
            if interior[pos] < n - 2 - (k - 1 - pos) {
                interior[pos] += 1;
                for q in pos + 1..k {
                    interior[q] = interior[q - 1] + 1;
                }
                break;
            }
        }
    }
}

const NONE: u32 = u32::MAX;

/// O(N·T) dynamic program for the optimal combination.
///
/// `dp[i][j]` is the lowest summed cost of matching ground-truth points
/// `0..=i` with ground-truth point `i` on prediction point `j`; a running
/// minimum over each row replaces the inner `min_k` scan. A backward pass
/// then marks states that continue to the optimum through tight
/// transitions, and the forward reconstruction takes the smallest such
/// successor at each step.
pub fn pdm_dp(pred: &[Point2], gt: &[Point2]) -> Result<PivotMatch> {
    let (n, t) = (pred.len(), gt.len());
    check_lengths(n, t)?;
    if t > n {
        return Ok(prefix_match(pred, gt));
    }
    let slack = n - t;
    let at = |i: usize, j: usize| i * n + j;
    let mut dp = vec![f64::INFINITY; t * n];
    let mut run_min = vec![f64::INFINITY; t * n];

    dp[at(0, 0)] = gt[0].l1(&pred[0]);
    for j in 0..n {
        run_min[at(0, j)] = dp[at(0, 0)];
    }
    for i in 1..t {
        for j in i..=slack + i {
            dp[at(i, j)] = run_min[at(i - 1, j - 1)] + gt[i].l1(&pred[j]);
        }
        let mut m = f64::INFINITY;
        for j in 0..n {
            m = m.min(dp[at(i, j)]);
            run_min[at(i, j)] = m;
        }
    }
    let total = dp[at(t - 1, n - 1)];

    // succ[i][k]: smallest j' > k such that (i+1, j') lies on an optimal path
    // and dp[i][k] is the running minimum feeding it
    let mut succ = vec![NONE; t * n];
    let mut on_path = vec![false; n];
    on_path[n - 1] = true;
    let mut next_on = vec![usize::MAX; n + 1];
    let mut run_end = vec![n; n];
    for i in (0..t - 1).rev() {
        // next_on[j]: first j' >= j with on_path[j'] (row i+1)
        next_on[n] = usize::MAX;
        for j in (0..n).rev() {
            next_on[j] = if on_path[j] { j } else { next_on[j + 1] };
        }
        // run_end[k]: first m > k where the running minimum drops below row i's value at k
        run_end[n - 1] = n;
        for m in (0..n - 1).rev() {
            run_end[m] = if run_min[at(i, m + 1)] < run_min[at(i, m)] {
                m + 1
            } else {
                run_end[m + 1]
            };
        }
        let mut row_on = vec![false; n];
        for k in i..=slack + i {
            let v = dp[at(i, k)];
            if v.is_finite() && v == run_min[at(i, k)] {
                let cand = next_on[k + 1];
                if cand != usize::MAX && cand <= run_end[k] {
                    succ[at(i, k)] = cand as u32;
                    row_on[k] = true;
                }
            }
        }
        on_path = row_on;
    }

    let mut idx = Vec::with_capacity(t);
    let mut k = 0usize;
    idx.push(0);
    for i in 0..t - 1 {
        let s = succ[at(i, k)];
        debug_assert_ne!(s, NONE, "optimal path reconstruction failed");
        k = s as usize;
        idx.push(k);
    }
    debug_assert_eq!(k, n - 1);
    Ok(build_match(pred, Combination(idx), total / t as f64))
}

/// Open sequences to feed the matcher. Rings are cut open: the ground truth at
/// its first vertex, a ring prediction at its vertex nearest the ground
/// truth's first vertex. Each opened ring walks back to its starting vertex.
pub fn open_for_matching(pred: &Polyline, gt: &Polyline) -> (Vec<Point2>, Vec<Point2>) {
    let gt_open = gt.to_open().into_points();
    let pred_open = if pred.is_closed() {
        let anchor = gt.points()[0];
        let start = pred
            .points()
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.dist(&anchor).total_cmp(&b.1.dist(&anchor)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        pred.rotated(start).to_open().into_points()
    } else {
        pred.points().to_vec()
    };
    (pred_open, gt_open)
}

#[derive(Debug, Clone, Serialize)]
pub struct AssignedPair {
    pub pred: usize,
    pub gt: usize,
    pub matching: PivotMatch,
}

/// One-to-one pairing of predictions to ground truth within a class.
#[derive(Debug, Clone, Serialize)]
pub struct InstanceAssignment {
    /// Sorted by prediction index.
    pub pairs: Vec<AssignedPair>,
    pub unmatched: Vec<usize>,
    pub total_cost: f64,
}

/// Optimal (Hungarian) assignment minimizing the summed matching cost.
pub fn assign_instances(
    class: ElementClass,
    preds: &[Polyline],
    gts: &[Polyline],
) -> Result<InstanceAssignment> {
    if gts.len() > preds.len() {
        return Err(Error::Capacity(format!(
            "class {class}: {} ground-truth instances exceed the {} available predictions",
            gts.len(),
            preds.len()
        )));
    }
    let mut matches: Vec<Vec<PivotMatch>> = Vec::with_capacity(gts.len());
    for g in gts {
        let row = preds
            .iter()
            .map(|p| {
                let (p, g) = open_for_matching(p, g);
                pdm_dp(&p, &g)
            })
            .collect::<Result<Vec<_>>>()?;
        matches.push(row);
    }
    let cost: Vec<Vec<f64>> = matches
        .iter()
        .map(|row| row.iter().map(|m| m.cost).collect())
        .collect();
    let cols = min_cost_assignment(&cost, preds.len());
    let mut taken = vec![false; preds.len()];
    let mut pairs = Vec::with_capacity(gts.len());
    let mut total_cost = 0.0;
    for (g, (row, &p)) in matches.into_iter().zip(&cols).enumerate() {
        taken[p] = true;
        let matching = row.into_iter().nth(p).unwrap();
        total_cost += matching.cost;
        pairs.push(AssignedPair {
            pred: p,
            gt: g,
            matching,
        });
    }
    pairs.sort_by_key(|p| p.pred);
    let unmatched = (0..preds.len()).filter(|&p| !taken[p]).collect();
    Ok(InstanceAssignment {
        pairs,
        unmatched,
        total_cost,
    })
}
