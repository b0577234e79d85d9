//! Perfect bottleneck (minimax) matching between two point clouds.
//!
//! Exact mode finds the true minimax value by searching over the
//! red-blue distance multiset, deciding feasibility at each threshold
//! with a maximum-cardinality matching. Threshold-doubling mode settles
//! for a 2-approximation at a fraction of the cost.

use std::collections::VecDeque;

use thiserror::Error;

use crate::geometry::PointCloud;

#[derive(Debug, Error)]
pub enum MatchingError {
    #[error("empty point cloud")]
    Empty,
    #[error("clouds have different sizes: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("non-finite coordinate")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Euclidean,
    Chebyshev,
}

impl Metric {
    pub fn distance(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let dx = (a.0 - b.0).abs();
        let dy = (a.1 - b.1).abs();
        match self {
            Metric::Euclidean => (dx * dx + dy * dy).sqrt(),
            Metric::Chebyshev => dx.max(dy),
        }
    }

    /// Largest possible distance within the unit square.
    pub fn diameter(&self) -> f64 {
        match self {
            Metric::Euclidean => std::f64::consts::SQRT_2,
            Metric::Chebyshev => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchingMode {
    Exact,
    ThresholdDoubling,
}

/// A perfect pairing between two equal-size clouds; indices are 0-based
/// cloud indices. `bottleneck` is the maximum distance actually realized
/// by the pairs.
#[derive(Debug, Clone)]
pub struct BottleneckMatching {
    pub pairs: Vec<(usize, usize)>,
    pub bottleneck: f64,
    pub metric: Metric,
}

impl BottleneckMatching {
    /// blue index matched to each red index.
    pub fn blue_of_red(&self, n: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; n];
        for &(r, b) in &self.pairs {
            out[r] = b;
        }
        out
    }
}

/// A partial matching in the bipartite graph of pairs at distance <= t.
#[derive(Debug, Clone)]
pub struct ThresholdMatching {
    /// blue index per red index, usize::MAX when unmatched.
    pub blue_of_red: Vec<usize>,
    pub cardinality: usize,
}

// Spatial bucketing of the blue points into cells of side t; candidate
// edges for a red point live in the 3x3 cell neighborhood.
struct Buckets {
    cell: f64,
    side: usize,
    cells: Vec<Vec<usize>>,
}

impl Buckets {
    fn build(blue: &PointCloud, t: f64) -> Self {
        let cell = t.max(1e-12);
        // cap the grid at O(n) cells: a coarser grid only weakens pruning,
        // never correctness, and avoids huge allocations for tiny t
        let cap = (4 * blue.len().max(1)).isqrt().clamp(1, 4096);
        let side = ((1.0 / cell).ceil() as usize).clamp(1, cap);
        let cell = 1.0 / side as f64;
        let mut cells = vec![Vec::new(); side * side];
        for (i, p) in blue.points().iter().enumerate() {
            let cx = ((p.x / cell) as usize).min(side - 1);
            let cy = ((p.y / cell) as usize).min(side - 1);
            cells[cy * side + cx].push(i);
        }
        Buckets { cell, side, cells }
    }

    fn neighbors(&self, x: f64, y: f64) -> impl Iterator<Item = usize> + '_ {
        let cx = ((x / self.cell) as usize).min(self.side - 1);
        let cy = ((y / self.cell) as usize).min(self.side - 1);
        let x0 = cx.saturating_sub(1);
        let x1 = (cx + 1).min(self.side - 1);
        let y0 = cy.saturating_sub(1);
        let y1 = (cy + 1).min(self.side - 1);
        (y0..=y1).flat_map(move |gy| {
            (x0..=x1).flat_map(move |gx| self.cells[gy * self.side + gx].iter().copied())
        })
    }
}

fn adjacency(red: &PointCloud, blue: &PointCloud, t: f64, metric: Metric) -> Vec<Vec<usize>> {
    let n = red.len();
    // bucketing pays off only while cells are small relative to the square
    if t < 0.25 {
        let buckets = Buckets::build(blue, t);
        red.points()
            .iter()
            .map(|r| {
                buckets
                    .neighbors(r.x, r.y)
                    .filter(|&b| {
                        let bp = blue.points()[b];
                        metric.distance((r.x, r.y), (bp.x, bp.y)) <= t
                    })
                    .collect()
            })
            .collect()
    } else {
        red.points()
            .iter()
            .map(|r| {
                (0..n)
                    .filter(|&b| {
                        let bp = blue.points()[b];
                        metric.distance((r.x, r.y), (bp.x, bp.y)) <= t
                    })
                    .collect()
            })
            .collect()
    }
}

// Hopcroft-Karp: layered BFS phases with DFS augmentation, O(E sqrt(V)).
fn hopcroft_karp(adj: &[Vec<usize>], n_blue: usize) -> ThresholdMatching {
    let n_red = adj.len();
    let mut red_match = vec![usize::MAX; n_red];
    let mut blue_match = vec![usize::MAX; n_blue];
    let mut dist = vec![0usize; n_red];
    let mut cardinality = 0;

    loop {
        // BFS phase: layer free red vertices at distance 0
        let mut queue = VecDeque::new();
        for r in 0..n_red {
            if red_match[r] == usize::MAX {
                dist[r] = 0;
                queue.push_back(r);
            } else {
                dist[r] = usize::MAX;
            }
        }
        let mut found_augmenting = false;
        while let Some(r) = queue.pop_front() {
            for &b in &adj[r] {
                let r2 = blue_match[b];
                if r2 == usize::MAX {
                    found_augmenting = true;
                } else if dist[r2] == usize::MAX {
                    dist[r2] = dist[r] + 1;
                    queue.push_back(r2);
                }
            }
        }
        if !found_augmenting {
            break;
        }
        for r in 0..n_red {
            if red_match[r] == usize::MAX && dfs_augment(r, adj, &mut red_match, &mut blue_match, &mut dist) {
                cardinality += 1;
            }
        }
    }

    ThresholdMatching {
        blue_of_red: red_match,
        cardinality,
    }
}

fn dfs_augment(
    r: usize,
    adj: &[Vec<usize>],
    red_match: &mut [usize],
    blue_match: &mut [usize],
    dist: &mut [usize],
) -> bool {
    for i in 0..adj[r].len() {
        let b = adj[r][i];
        let r2 = blue_match[b];
        if r2 == usize::MAX
            || (dist[r2] == dist[r] + 1 && dfs_augment(r2, adj, red_match, blue_match, dist))
        {
            red_match[r] = b;
            blue_match[b] = r;
            return true;
        }
    }
    dist[r] = usize::MAX;
    false
}

/// Maximum-cardinality matching among pairs at distance <= t.
pub fn max_matching_under_threshold(
    red: &PointCloud,
    blue: &PointCloud,
    t: f64,
    metric: Metric,
) -> ThresholdMatching {
    let adj = adjacency(red, blue, t, metric);
    hopcroft_karp(&adj, blue.len())
}

fn check_inputs(red: &PointCloud, blue: &PointCloud) -> Result<usize, MatchingError> {
    if red.is_empty() || blue.is_empty() {
        return Err(MatchingError::Empty);
    }
    if red.len() != blue.len() {
        return Err(MatchingError::SizeMismatch(red.len(), blue.len()));
    }
    for p in red.points().iter().chain(blue.points()) {
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(MatchingError::NonFinite);
        }
    }
    Ok(red.len())
}

fn doubling_start(n: usize) -> f64 {
    let t0 = (n as f64).ln().powf(0.75) / (n as f64).sqrt();
    t0.max(1e-9)
}

// Smallest threshold (by doubling from t0) admitting a perfect matching.
fn doubling_threshold(
    red: &PointCloud,
    blue: &PointCloud,
    metric: Metric,
) -> (f64, ThresholdMatching) {
    let n = red.len();
    let mut t = doubling_start(n);
    loop {
        let m = max_matching_under_threshold(red, blue, t, metric);
        if m.cardinality == n {
            return (t, m);
        }
        assert!(
            t <= 2.0 * metric.diameter(),
            "doubling search failed to find a perfect matching"
        );
        t *= 2.0;
    }
}

fn realized_bottleneck(
    red: &PointCloud,
    blue: &PointCloud,
    blue_of_red: &[usize],
    metric: Metric,
) -> f64 {
    blue_of_red
        .iter()
        .enumerate()
        .map(|(r, &b)| {
            let rp = red.points()[r];
            let bp = blue.points()[b];
            metric.distance((rp.x, rp.y), (bp.x, bp.y))
        })
        .fold(0.0, f64::max)
}

fn to_matching(
    red: &PointCloud,
    blue: &PointCloud,
    m: &ThresholdMatching,
    metric: Metric,
) -> BottleneckMatching {
    let pairs: Vec<(usize, usize)> = m
        .blue_of_red
        .iter()
        .enumerate()
        .map(|(r, &b)| (r, b))
        .collect();
    let bottleneck = realized_bottleneck(red, blue, &m.blue_of_red, metric);
    BottleneckMatching {
        pairs,
        bottleneck,
        metric,
    }
}

// Candidate bottleneck values in (lo, hi]: the realized red-blue
// distances in that band, deduplicated and sorted.
fn candidates_in_band(
    red: &PointCloud,
    blue: &PointCloud,
    lo: f64,
    hi: f64,
    metric: Metric,
) -> Vec<f64> {
    let mut out = Vec::new();
    let n = red.len();
    if hi < 0.25 {
        let buckets = Buckets::build(blue, hi);
        for r in red.points() {
            for b in buckets.neighbors(r.x, r.y) {
                let bp = blue.points()[b];
                let d = metric.distance((r.x, r.y), (bp.x, bp.y));
                if d > lo && d <= hi {
                    out.push(d);
                }
            }
        }
    } else {
        for r in red.points() {
            for bp in blue.points().iter().take(n) {
                let d = metric.distance((r.x, r.y), (bp.x, bp.y));
                if d > lo && d <= hi {
                    out.push(d);
                }
            }
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup();
    out
}

/// Minimax perfect matching between two equal-size clouds.
///
/// Exact mode returns the true optimum; threshold-doubling returns a
/// perfect matching whose bottleneck is at most twice the optimum
/// (or at most the doubling start t0 when t0 already admits one).
pub fn bottleneck_matching(
    red: &PointCloud,
    blue: &PointCloud,
    mode: MatchingMode,
    metric: Metric,
) -> Result<BottleneckMatching, MatchingError> {
    let n = check_inputs(red, blue)?;

    if n == 1 {
        let m = ThresholdMatching {
            blue_of_red: vec![0],
            cardinality: 1,
        };
        return Ok(to_matching(red, blue, &m, metric));
    }

    match mode {
        MatchingMode::ThresholdDoubling => {
            let (_t, m) = doubling_threshold(red, blue, metric);
            Ok(to_matching(red, blue, &m, metric))
        }
        MatchingMode::Exact => {
            // A perfect matching at t = 0 means coincident clouds.
            let at_zero = max_matching_under_threshold(red, blue, 0.0, metric);
            if at_zero.cardinality == n {
                return Ok(to_matching(red, blue, &at_zero, metric));
            }
            // Bracket the optimum: hi feasible, lo infeasible.
            let (mut hi, mut best) = doubling_threshold(red, blue, metric);
            let mut lo = 0.0f64;
            // Shrink the bracket by continuous bisection until few enough
            // candidate distances remain, then finish discretely.
            loop {
                let cands = candidates_in_band(red, blue, lo, hi, metric);
                if cands.len() <= 64 {
                    for &t in &cands {
                        let m = max_matching_under_threshold(red, blue, t, metric);
                        if m.cardinality == n {
                            best = m;
                            break;
                        }
                    }
                    break;
                }
                let mid = 0.5 * (lo + hi);
                let m = max_matching_under_threshold(red, blue, mid, metric);
                if m.cardinality == n {
                    hi = mid;
                    best = m;
                } else {
                    lo = mid;
                }
            }
            Ok(to_matching(red, blue, &best, metric))
        }
    }
}
