//! Brute-force ground-truth engines for small instances.
//!
//! These are deliberately exhaustive and refuse inputs above their
//! budget rather than run unbounded.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::geometry::PointCloud;
use crate::matching::Metric;
use crate::perm::Permutation;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("input size {0} exceeds oracle budget {1}")]
    OverBudget(usize, usize),
    #[error("time cap exceeded")]
    TimeCap,
    #[error("tail bound requires x > lambda > 0, got lambda={0}, x={1}")]
    BadTailArgs(f64, f64),
    #[error("need at least 2 permutations")]
    TooFew,
    #[error("permutations have unequal lengths")]
    UnequalLengths,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleBudget {
    pub exact_u_max: usize,
    pub common_pattern_max: usize,
    pub bottleneck_max: usize,
    pub lis_max: usize,
    pub time_cap: Duration,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            exact_u_max: 7,
            common_pattern_max: 10,
            bottleneck_max: 7,
            lis_max: 12,
            time_cap: Duration::from_secs(60),
        }
    }
}

/// The minimum number of parts over all decompositions of the given
/// permutations into aligned order-isomorphic subpermutations.
///
/// Iterative deepening over the part count: enumerate canonical set
/// partitions of the first permutation's positions, then check whether
/// every other permutation's positions can be assigned to parts with
/// matching patterns, pruning on prefix pattern mismatches.
pub fn exact_u(perms: &[Permutation], budget: &OracleBudget) -> Result<usize, OracleError> {
    if perms.len() < 2 {
        return Err(OracleError::TooFew);
    }
    let n = perms[0].len();
    if perms.iter().any(|p| p.len() != n) {
        return Err(OracleError::UnequalLengths);
    }
    if n > budget.exact_u_max {
        return Err(OracleError::OverBudget(n, budget.exact_u_max));
    }
    let deadline = Instant::now() + budget.time_cap;
    for ell in 1..=n {
        if feasible_with(perms, ell, deadline)? {
            return Ok(ell);
        }
    }
    unreachable!("the all-singletons decomposition always works at ell = n");
}

fn feasible_with(
    perms: &[Permutation],
    ell: usize,
    deadline: Instant,
) -> Result<bool, OracleError> {
    let n = perms[0].len();
    // restricted-growth enumeration: position 1 in part 1, new parts
    // introduced in order, at most ell parts total
    let mut assignment = vec![0usize; n];
    enumerate_partitions(perms, ell, 1, 1, &mut assignment, deadline)
}

fn enumerate_partitions(
    perms: &[Permutation],
    ell: usize,
    pos: usize,
    used: usize,
    assignment: &mut Vec<usize>,
    deadline: Instant,
) -> Result<bool, OracleError> {
    let n = perms[0].len();
    if pos == n {
        if used != ell {
            return Ok(false);
        }
        if Instant::now() > deadline {
            return Err(OracleError::TimeCap);
        }
        // parts of sigma_1 are fixed; each other permutation checks
        // independently because pattern equality is transitive
        let sigma_parts = parts_of(&perms[0], assignment, used);
        for other in &perms[1..] {
            if !assignable(other, &sigma_parts) {
                return Ok(false);
            }
        }
        return Ok(true);
    }
    // remaining positions must be able to open the remaining parts
    let remaining = n - pos;
    for part in 0..used.min(ell) {
        if used + remaining >= ell {
            assignment[pos] = part;
            if enumerate_partitions(perms, ell, pos + 1, used, assignment, deadline)? {
                return Ok(true);
            }
        }
    }
    if used < ell {
        assignment[pos] = used;
        if enumerate_partitions(perms, ell, pos + 1, used + 1, assignment, deadline)? {
            return Ok(true);
        }
    }
    Ok(false)
}

fn parts_of(p: &Permutation, assignment: &[usize], num_parts: usize) -> Vec<Vec<usize>> {
    let mut parts = vec![Vec::new(); num_parts];
    for (i, &part) in assignment.iter().enumerate() {
        parts[part].push(p.at(i + 1));
    }
    parts
}

// Can `p`'s positions be assigned (in position order) to parts so that
// each part's value sequence is order-isomorphic to the corresponding
// sigma part?
fn assignable(p: &Permutation, sigma_parts: &[Vec<usize>]) -> bool {
    let mut partial: Vec<Vec<usize>> = vec![Vec::new(); sigma_parts.len()];
    assign_rec(p.values(), 0, sigma_parts, &mut partial)
}

fn assign_rec(
    values: &[usize],
    pos: usize,
    sigma_parts: &[Vec<usize>],
    partial: &mut Vec<Vec<usize>>,
) -> bool {
    if pos == values.len() {
        return true;
    }
    let v = values[pos];
    for b in 0..sigma_parts.len() {
        let t = partial[b].len();
        if t >= sigma_parts[b].len() {
            continue;
        }
        // prefix compatibility: v must relate to the already-placed values
        // exactly as sigma's (t+1)-th part element relates to its prefix
        let sp = &sigma_parts[b];
        let ok = partial[b]
            .iter()
            .enumerate()
            .all(|(i, &w)| (w < v) == (sp[i] < sp[t]));
        if ok {
            partial[b].push(v);
            if assign_rec(values, pos + 1, sigma_parts, partial) {
                return true;
            }
            partial[b].pop();
        }
    }
    false
}

/// Maximum length of order-isomorphic subsequences, one from each
/// permutation.
pub fn longest_common_pattern(
    a: &Permutation,
    b: &Permutation,
    budget: &OracleBudget,
) -> Result<usize, OracleError> {
    let n = a.len().max(b.len());
    if n > budget.common_pattern_max {
        return Err(OracleError::OverBudget(n, budget.common_pattern_max));
    }
    for len in (1..=a.len().min(b.len())).rev() {
        let pats_a = subsequence_patterns(a.values(), len);
        if subsequences_hit(b.values(), len, &pats_a) {
            return Ok(len);
        }
    }
    Ok(0)
}

fn subsequence_patterns(values: &[usize], len: usize) -> HashSet<Vec<usize>> {
    let mut out = HashSet::new();
    for_each_subsequence(values, len, &mut |sub| {
        out.insert(crate::perm::pattern_of(sub).unwrap().values().to_vec());
        false
    });
    out
}

fn subsequences_hit(values: &[usize], len: usize, pats: &HashSet<Vec<usize>>) -> bool {
    let mut hit = false;
    for_each_subsequence(values, len, &mut |sub| {
        if pats.contains(crate::perm::pattern_of(sub).unwrap().values()) {
            hit = true;
            true
        } else {
            false
        }
    });
    hit
}

fn for_each_subsequence(values: &[usize], len: usize, f: &mut dyn FnMut(&[usize]) -> bool) {
    let n = values.len();
    let mut idx: Vec<usize> = (0..len).collect();
    let mut buf = vec![0usize; len];
    loop {
        for (i, &j) in idx.iter().enumerate() {
            buf[i] = values[j];
        }
        if f(&buf) {
            return;
        }
        // next combination in lexicographic order
        let mut i = len;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - len {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..len {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Minimum over all n! perfect matchings of the maximum matched distance.
pub fn brute_bottleneck(
    red: &PointCloud,
    blue: &PointCloud,
    metric: Metric,
    budget: &OracleBudget,
) -> Result<f64, OracleError> {
    let n = red.len();
    if n > budget.bottleneck_max {
        return Err(OracleError::OverBudget(n, budget.bottleneck_max));
    }
    let dist: Vec<Vec<f64>> = red
        .points()
        .iter()
        .map(|r| {
            blue.points()
                .iter()
                .map(|b| metric.distance((r.x, r.y), (b.x, b.y)))
                .collect()
        })
        .collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute_rec(&mut perm, 0, &dist, &mut best);
    Ok(best)
}

fn permute_rec(perm: &mut Vec<usize>, i: usize, dist: &[Vec<f64>], best: &mut f64) {
    let n = perm.len();
    if i == n {
        let bottleneck = (0..n).map(|r| dist[r][perm[r]]).fold(0.0, f64::max);
        if bottleneck < *best {
            *best = bottleneck;
        }
        return;
    }
    for j in i..n {
        perm.swap(i, j);
        permute_rec(perm, i + 1, dist, best);
        perm.swap(i, j);
    }
}

/// Longest increasing subsequence by exhaustive subset search.
pub fn brute_lis(p: &Permutation, budget: &OracleBudget) -> Result<usize, OracleError> {
    let n = p.len();
    if n > budget.lis_max {
        return Err(OracleError::OverBudget(n, budget.lis_max));
    }
    let values = p.values();
    let mut best = 0usize;
    for mask in 1u32..(1 << n) {
        let mut last = 0usize;
        let mut len = 0usize;
        let mut increasing = true;
        for (i, &v) in values.iter().enumerate() {
            if mask & (1 << i) != 0 {
                if v <= last {
                    increasing = false;
                    break;
                }
                last = v;
                len += 1;
            }
        }
        if increasing {
            best = best.max(len);
        }
    }
    Ok(best)
}

/// The Poisson upper-tail bound (e*lambda)^x * e^{-lambda} / x^x for
/// x > lambda > 0, evaluated in log space.
pub fn poisson_tail_bound(lambda: f64, x: f64) -> Result<f64, OracleError> {
    if !(x > lambda && lambda > 0.0) {
        return Err(OracleError::BadTailArgs(lambda, x));
    }
    let log_bound = x * (1.0 + lambda.ln()) - lambda - x * x.ln();
    Ok(log_bound.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sample_cloud, SamplerConfig};
    use crate::matching::{bottleneck_matching, MatchingMode};

    fn perm(vals: &[usize]) -> Permutation {
        Permutation::new(vals.to_vec()).unwrap()
    }

    fn budget() -> OracleBudget {
        OracleBudget::default()
    }

    #[test]
    fn exact_u_worked_example() {
        let sigma = perm(&[1, 4, 3, 5, 2]);
        let pi = perm(&[2, 5, 3, 1, 4]);
        assert_eq!(exact_u(&[sigma, pi], &budget()).unwrap(), 2);
    }

    #[test]
    fn exact_u_equal_permutations_is_one() {
        let p = perm(&[3, 1, 4, 2]);
        assert_eq!(exact_u(&[p.clone(), p], &budget()).unwrap(), 1);
    }

    #[test]
    fn exact_u_identity_vs_reverse() {
        for n in [2usize, 3, 4] {
            let id = Permutation::identity(n);
            let rev = Permutation::reverse(n);
            assert_eq!(exact_u(&[id, rev], &budget()).unwrap(), n);
        }
    }

    #[test]
    fn exact_u_three_permutations() {
        let a = perm(&[1, 2, 3]);
        let b = perm(&[1, 3, 2]);
        let c = perm(&[2, 1, 3]);
        let u = exact_u(&[a, b, c], &budget()).unwrap();
        assert!(u == 2, "expected 2, got {u}");
    }

    #[test]
    fn exact_u_refuses_over_budget() {
        let p = Permutation::identity(8);
        assert!(matches!(
            exact_u(&[p.clone(), p], &budget()),
            Err(OracleError::OverBudget(8, 7))
        ));
    }

    #[test]
    fn lcp_examples() {
        let b = budget();
        assert_eq!(
            longest_common_pattern(&Permutation::identity(6), &Permutation::reverse(6), &b)
                .unwrap(),
            1
        );
        let p = perm(&[2, 4, 1, 3, 5]);
        assert_eq!(longest_common_pattern(&p, &p, &b).unwrap(), 5);
        let sigma = perm(&[1, 4, 3, 5, 2]);
        let pi = perm(&[2, 5, 3, 1, 4]);
        assert_eq!(longest_common_pattern(&sigma, &pi, &b).unwrap(), 3);
    }

    #[test]
    fn lcp_lower_bounds_exact_u() {
        // ceil(n / lcp) <= exact_u on the worked example: ceil(5/3) = 2 <= 2
        let sigma = perm(&[1, 4, 3, 5, 2]);
        let pi = perm(&[2, 5, 3, 1, 4]);
        let b = budget();
        let lcp = longest_common_pattern(&sigma, &pi, &b).unwrap();
        let u = exact_u(&[sigma, pi], &b).unwrap();
        assert!(u >= 5usize.div_ceil(lcp));
    }

    #[test]
    fn brute_bottleneck_matches_exact_matching() {
        let b = budget();
        for seed in 0..20 {
            let n = 2 + (seed as usize % 6);
            let red = sample_cloud(n, &SamplerConfig::uniform(seed), 0);
            let blue = sample_cloud(n, &SamplerConfig::uniform(seed), 1);
            for metric in [Metric::Euclidean, Metric::Chebyshev] {
                let brute = brute_bottleneck(&red, &blue, metric, &b).unwrap();
                let exact =
                    bottleneck_matching(&red, &blue, MatchingMode::Exact, metric).unwrap();
                assert!(
                    (brute - exact.bottleneck).abs() < 1e-12,
                    "n={n} seed={seed}: brute {brute} vs exact {}",
                    exact.bottleneck
                );
            }
        }
    }

    #[test]
    fn brute_bottleneck_two_point_example() {
        use crate::geometry::Point;
        let red = PointCloud::new(vec![
            Point { x: 0.1, y: 0.1 },
            Point { x: 0.9, y: 0.9 },
        ])
        .unwrap();
        let blue = PointCloud::new(vec![
            Point { x: 0.2, y: 0.1 },
            Point { x: 0.8, y: 0.9 },
        ])
        .unwrap();
        let v = brute_bottleneck(&red, &blue, Metric::Euclidean, &budget()).unwrap();
        assert!((v - 0.1).abs() < 1e-12);
    }

    #[test]
    fn brute_lis_examples() {
        let b = budget();
        assert_eq!(brute_lis(&Permutation::identity(7), &b).unwrap(), 7);
        assert_eq!(brute_lis(&Permutation::reverse(7), &b).unwrap(), 1);
        assert_eq!(brute_lis(&perm(&[1, 4, 3, 5, 2]), &b).unwrap(), 3);
        assert!(brute_lis(&Permutation::identity(13), &b).is_err());
    }

    #[test]
    fn lis_matches_patience_pile_count() {
        use crate::pipeline::patience_piles;
        use rand::seq::SliceRandom;
        let b = budget();
        // exhaustive for n <= 6
        for n in 1..=6usize {
            let mut stack = vec![(Vec::new(), (1..=n).collect::<Vec<usize>>())];
            while let Some((acc, rest)) = stack.pop() {
                if rest.is_empty() {
                    let p = Permutation::new(acc.clone()).unwrap();
                    assert_eq!(
                        brute_lis(&p, &b).unwrap(),
                        patience_piles(&p, true).len()
                    );
                    continue;
                }
                for i in 0..rest.len() {
                    let mut acc2 = acc.clone();
                    let mut rest2 = rest.clone();
                    acc2.push(rest2.remove(i));
                    stack.push((acc2, rest2));
                }
            }
        }
        // random samples at n = 7, 8
        let mut rng = crate::geometry::stream_rng(4, 0);
        for n in [7usize, 8] {
            for _ in 0..50 {
                let mut vals: Vec<usize> = (1..=n).collect();
                vals.shuffle(&mut rng);
                let p = Permutation::new(vals).unwrap();
                assert_eq!(brute_lis(&p, &b).unwrap(), patience_piles(&p, true).len());
            }
        }
    }

    #[test]
    fn tail_bound_reference_value() {
        // (4e)^16 e^{-4} / 16^16, evaluated independently at high precision
        let v = poisson_tail_bound(4.0, 16.0).unwrap();
        assert!((v - 3.78943028438e-5).abs() < 1e-12);
    }

    #[test]
    fn tail_bound_rejects_bad_args() {
        assert!(poisson_tail_bound(4.0, 4.0).is_err());
        assert!(poisson_tail_bound(-1.0, 2.0).is_err());
    }

    #[test]
    fn tail_bound_dominates_monte_carlo() {
        use rand_distr::{Distribution, Poisson};
        let mut rng = crate::geometry::stream_rng(10, 0);
        let lambda = 1.0f64;
        let x = 1.5f64;
        let bound = poisson_tail_bound(lambda, x).unwrap();
        assert!(bound > 0.0 && bound.is_finite());
        let dist = Poisson::new(lambda).unwrap();
        let trials = 200_000usize;
        let hits = (0..trials)
            .filter(|_| dist.sample(&mut rng) >= x)
            .count();
        let freq = hits as f64 / trials as f64;
        let se = (bound.min(1.0) * (1.0 - bound.min(1.0)) / trials as f64)
            .sqrt()
            .max(1e-6);
        assert!(freq <= bound + 5.0 * se, "freq {freq} exceeds bound {bound}");
    }
}
