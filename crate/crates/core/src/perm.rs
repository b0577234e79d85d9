//! Permutations, patterns, and the decomposition verifier.
//!
//! Positions and values are 1-indexed throughout, matching the usual
//! one-line notation sigma(1), ..., sigma(n).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PermError {
    #[error("not distinct")]
    NotDistinct,
    #[error("empty sequence")]
    Empty,
    #[error("values are not a permutation of 1..={0}")]
    NotAPermutation(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// A permutation of {1, ..., n} in one-line notation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Permutation {
    values: Vec<usize>,
}

impl Permutation {
    pub fn new(values: Vec<usize>) -> Result<Self, PermError> {
        let n = values.len();
        if n == 0 {
            return Err(PermError::Empty);
        }
        let mut seen = vec![false; n + 1];
        for &v in &values {
            if v < 1 || v > n || seen[v] {
                return Err(PermError::NotAPermutation(n));
            }
            seen[v] = true;
        }
        Ok(Permutation { values })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            values: (1..=n).collect(),
        }
    }

    pub fn reverse(n: usize) -> Self {
        Permutation {
            values: (1..=n).rev().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    /// Value at 1-indexed position `i`.
    pub fn at(&self, i: usize) -> usize {
        self.values[i - 1]
    }

    /// Values at the given 1-indexed positions, in the given order.
    pub fn values_at(&self, positions: &[usize]) -> Vec<usize> {
        positions.iter().map(|&i| self.values[i - 1]).collect()
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for v in &self.values {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{v}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for Permutation {
    type Err = PermError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let values: Vec<usize> = s
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| PermError::Parse(t.to_string())))
            .collect::<Result<_, _>>()?;
        Permutation::new(values)
    }
}

/// The rank sequence of a list of distinct reals; a permutation in its own right.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern(Permutation);

impl Pattern {
    pub fn values(&self) -> &[usize] {
        self.0.values()
    }

    pub fn as_permutation(&self) -> &Permutation {
        &self.0
    }
}

/// Replace the i-th smallest element with i.
pub fn pattern_of<T: PartialOrd>(seq: &[T]) -> Result<Pattern, PermError> {
    if seq.is_empty() {
        return Err(PermError::Empty);
    }
    let mut order: Vec<usize> = (0..seq.len()).collect();
    order.sort_by(|&a, &b| seq[a].partial_cmp(&seq[b]).expect("incomparable elements"));
    for w in order.windows(2) {
        if seq[w[0]] == seq[w[1]] {
            return Err(PermError::NotDistinct);
        }
    }
    let mut ranks = vec![0usize; seq.len()];
    for (rank, &idx) in order.iter().enumerate() {
        ranks[idx] = rank + 1;
    }
    Ok(Pattern(Permutation { values: ranks }))
}

/// True iff the sequences have equal length and the same pattern.
pub fn is_order_isomorphic<T: PartialOrd, U: PartialOrd>(a: &[T], b: &[U]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    if a.is_empty() {
        return true;
    }
    match (pattern_of(a), pattern_of(b)) {
        (Ok(pa), Ok(pb)) => pa == pb,
        _ => false,
    }
}

/// One part of a decomposition: one index list per permutation, all the
/// same length, each strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Part {
    pub index_lists: Vec<Vec<usize>>,
}

impl Part {
    pub fn len(&self) -> usize {
        self.index_lists.first().map_or(0, |l| l.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// An ordered list of parts partitioning the positions of k permutations
/// of length n, with each part's induced value subsequences pairwise
/// order-isomorphic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub n: usize,
    pub k: usize,
    pub parts: Vec<Part>,
}

impl Decomposition {
    pub fn num_parts(&self) -> usize {
        self.parts.len()
    }
}

/// Outcome of verification: valid, or a description of the first violation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Violation(String),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }
}

/// Check both decomposition invariants against the given permutations:
/// the index lists partition {1, ..., n} for every permutation, and each
/// part's induced value subsequences are pairwise order-isomorphic.
///
/// Parts carry no canonical order; verification is order-insensitive.
pub fn verify_decomposition(
    perms: &[Permutation],
    d: &Decomposition,
) -> Result<Verdict, PermError> {
    if perms.len() != d.k {
        return Err(PermError::DimensionMismatch(format!(
            "decomposition has k={} but {} permutations given",
            d.k,
            perms.len()
        )));
    }
    for (j, p) in perms.iter().enumerate() {
        if p.len() != d.n {
            return Err(PermError::DimensionMismatch(format!(
                "permutation {} has length {} but decomposition has n={}",
                j + 1,
                p.len(),
                d.n
            )));
        }
    }

    for (pi, part) in d.parts.iter().enumerate() {
        if part.index_lists.len() != d.k {
            return Ok(Verdict::Violation(format!(
                "part {} has {} index lists, expected {}",
                pi + 1,
                part.index_lists.len(),
                d.k
            )));
        }
        let len0 = part.index_lists[0].len();
        if len0 == 0 {
            return Ok(Verdict::Violation(format!("part {} is empty", pi + 1)));
        }
        for (j, list) in part.index_lists.iter().enumerate() {
            if list.len() != len0 {
                return Ok(Verdict::Violation(format!(
                    "part {}: index list {} has length {} but list 1 has length {}",
                    pi + 1,
                    j + 1,
                    list.len(),
                    len0
                )));
            }
            for w in list.windows(2) {
                if w[0] >= w[1] {
                    return Ok(Verdict::Violation(format!(
                        "part {}: index list {} is not strictly increasing",
                        pi + 1,
                        j + 1
                    )));
                }
            }
            if list[0] < 1 || *list.last().unwrap() > d.n {
                return Ok(Verdict::Violation(format!(
                    "part {}: index list {} out of range 1..={}",
                    pi + 1,
                    j + 1,
                    d.n
                )));
            }
        }
    }

    // Partition check per permutation.
    for j in 0..d.k {
        let mut seen = vec![false; d.n + 1];
        for (pi, part) in d.parts.iter().enumerate() {
            for &idx in &part.index_lists[j] {
                if seen[idx] {
                    return Ok(Verdict::Violation(format!(
                        "permutation {}: index {} appears in more than one part (last in part {})",
                        j + 1,
                        idx,
                        pi + 1
                    )));
                }
                seen[idx] = true;
            }
        }
        if let Some(missing) = (1..=d.n).find(|&i| !seen[i]) {
            return Ok(Verdict::Violation(format!(
                "permutation {}: index {} is not covered by any part",
                j + 1,
                missing
            )));
        }
    }

    // Order-isomorphism within each part.
    for (pi, part) in d.parts.iter().enumerate() {
        let first = perms[0].values_at(&part.index_lists[0]);
        for j in 1..d.k {
            let other = perms[j].values_at(&part.index_lists[j]);
            if !is_order_isomorphic(&first, &other) {
                return Ok(Verdict::Violation(format!(
                    "part {}: subsequence of permutation {} is not order-isomorphic to that of permutation 1",
                    pi + 1,
                    j + 1
                )));
            }
        }
    }

    Ok(Verdict::Valid)
}

/// The all-singletons decomposition: every position its own part.
pub fn singleton_decomposition(n: usize, k: usize) -> Decomposition {
    Decomposition {
        n,
        k,
        parts: (1..=n)
            .map(|i| Part {
                index_lists: vec![vec![i]; k],
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn perm(vals: &[usize]) -> Permutation {
        Permutation::new(vals.to_vec()).unwrap()
    }

    #[test]
    fn pattern_of_reals() {
        assert_eq!(pattern_of(&[0.3, 0.9, 0.5]).unwrap().values(), &[1, 3, 2]);
    }

    #[test]
    fn pattern_of_subsequence_matches_worked_example() {
        // sigma = 1,4,3,5,2 restricted to positions {1,3,5} reads 1,3,2
        let sigma = perm(&[1, 4, 3, 5, 2]);
        let sub = sigma.values_at(&[1, 3, 5]);
        assert_eq!(pattern_of(&sub).unwrap().values(), &[1, 3, 2]);
    }

    #[test]
    fn pattern_of_identity() {
        let v: Vec<usize> = (1..=10).collect();
        assert_eq!(pattern_of(&v).unwrap().values(), v.as_slice());
    }

    #[test]
    fn pattern_of_rejects_duplicates() {
        assert_eq!(pattern_of(&[1.0, 1.0]), Err(PermError::NotDistinct));
    }

    #[test]
    fn order_isomorphism_examples() {
        assert!(is_order_isomorphic(&[1, 3, 2], &[2, 5, 3]));
        assert!(!is_order_isomorphic(&[1, 2], &[2, 1]));
        assert!(!is_order_isomorphic(&[1, 2], &[1, 2, 3]));
    }

    #[test]
    fn permutation_rejects_bad_input() {
        assert!(Permutation::new(vec![]).is_err());
        assert!(Permutation::new(vec![1, 1]).is_err());
        assert!(Permutation::new(vec![0, 1]).is_err());
        assert!(Permutation::new(vec![2, 3]).is_err());
    }

    #[test]
    fn worked_example_decomposition_is_valid() {
        // sigma^{(1)} = 1,3,2 at positions {1,3,5}; pi^{(1)} = 2,5,3 at
        // positions {1,2,3}
        let sigma = perm(&[1, 4, 3, 5, 2]);
        let pi = perm(&[2, 5, 3, 1, 4]);
        let d = Decomposition {
            n: 5,
            k: 2,
            parts: vec![
                Part {
                    index_lists: vec![vec![1, 3, 5], vec![1, 2, 3]],
                },
                Part {
                    index_lists: vec![vec![2, 4], vec![4, 5]],
                },
            ],
        };
        assert_eq!(
            verify_decomposition(&[sigma, pi], &d).unwrap(),
            Verdict::Valid
        );
    }

    #[test]
    fn swapped_parts_violate() {
        let sigma = perm(&[1, 4, 3, 5, 2]);
        let pi = perm(&[2, 5, 3, 1, 4]);
        let d = Decomposition {
            n: 5,
            k: 2,
            parts: vec![
                Part {
                    index_lists: vec![vec![1, 3, 5], vec![4, 5]],
                },
                Part {
                    index_lists: vec![vec![2, 4], vec![1, 2, 3]],
                },
            ],
        };
        let verdict = verify_decomposition(&[sigma, pi], &d).unwrap();
        assert!(matches!(verdict, Verdict::Violation(_)));
    }

    #[test]
    fn missing_index_violates() {
        let sigma = perm(&[1, 4, 3, 5, 2]);
        let pi = perm(&[2, 5, 3, 1, 4]);
        let d = Decomposition {
            n: 5,
            k: 2,
            parts: vec![
                Part {
                    index_lists: vec![vec![1, 3], vec![1, 3]],
                },
                Part {
                    index_lists: vec![vec![2, 4], vec![2, 4]],
                },
            ],
        };
        let verdict = verify_decomposition(&[sigma, pi], &d).unwrap();
        assert!(matches!(verdict, Verdict::Violation(_)));
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let sigma = perm(&[1, 2, 3]);
        let d = singleton_decomposition(3, 2);
        assert!(verify_decomposition(&[sigma], &d).is_err());
    }

    #[test]
    fn decomposition_json_round_trip() {
        let d = singleton_decomposition(3, 2);
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(
            s,
            r#"{"n":3,"k":2,"parts":[[[1],[1]],[[2],[2]],[[3],[3]]]}"#
        );
        let back: Decomposition = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
    }

    fn arb_perm(max_n: usize) -> impl Strategy<Value = Permutation> {
        (1..=max_n).prop_flat_map(|n| {
            Just((1..=n).collect::<Vec<usize>>())
                .prop_shuffle()
                .prop_map(|v| Permutation::new(v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn pattern_of_is_idempotent(vals in proptest::collection::vec(-1000.0f64..1000.0, 1..30)) {
            prop_assume!(pattern_of(&vals).is_ok());
            let p1 = pattern_of(&vals).unwrap();
            let p2 = pattern_of(p1.values()).unwrap();
            prop_assert_eq!(p1, p2);
        }

        #[test]
        fn order_isomorphism_is_an_equivalence(
            a in proptest::collection::vec(-100.0f64..100.0, 5),
            b in proptest::collection::vec(-100.0f64..100.0, 5),
            c in proptest::collection::vec(-100.0f64..100.0, 5),
        ) {
            prop_assume!(pattern_of(&a).is_ok() && pattern_of(&b).is_ok() && pattern_of(&c).is_ok());
            prop_assert!(is_order_isomorphic(&a, &a));
            prop_assert_eq!(is_order_isomorphic(&a, &b), is_order_isomorphic(&b, &a));
            if is_order_isomorphic(&a, &b) && is_order_isomorphic(&b, &c) {
                prop_assert!(is_order_isomorphic(&a, &c));
            }
        }

        #[test]
        fn singletons_always_verify(p1 in arb_perm(12), seed in 0u64..100) {
            let n = p1.len();
            // derive a second permutation by rotating values
            let mut vals: Vec<usize> = p1.values().to_vec();
            vals.rotate_left((seed as usize) % n);
            let p2 = Permutation::new(vals).unwrap();
            let d = singleton_decomposition(n, 2);
            prop_assert_eq!(verify_decomposition(&[p1, p2], &d).unwrap(), Verdict::Valid);
        }

        #[test]
        fn duplicated_index_is_rejected(p in arb_perm(10)) {
            let n = p.len();
            prop_assume!(n >= 2);
            let mut d = singleton_decomposition(n, 1);
            // make part 1 reuse index 1 alongside part 0
            d.parts[1].index_lists[0] = vec![1];
            let verdict = verify_decomposition(std::slice::from_ref(&p), &d).unwrap();
            prop_assert!(matches!(verdict, Verdict::Violation(_)));
        }
    }
}
