//! End-to-end orchestration: from k permutations (or fresh random ones)
//! to a certified decomposition, plus the patience-pile baseline.

use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::coloring::{color_classes, edge_color};
use crate::geometry::{embed_permutation, permutation_of_cloud, sample_cloud, PointCloud, SamplerConfig};
use crate::gridgraph::{build_multigraph, grid_size, group_by_label, GridConfig, GridError};
use crate::matching::{bottleneck_matching, BottleneckMatching, MatchingError, MatchingMode, Metric};
use crate::perm::{verify_decomposition, Decomposition, Part, PermError, Permutation, Verdict};

/// Above this size the default matching mode switches from exact to
/// threshold doubling.
pub const EXACT_MODE_CUTOFF: usize = 40_000;

/// Constant factor applied to the asymptotic grid side. The theory fixes
/// only the growth rate of M; this factor was tuned empirically (part
/// counts at n = 2^10..2^15 are minimized near half the raw formula
/// value, where fewer labels offset slightly denser cells).
pub const GRID_CALIBRATION: f64 = 0.5;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("need at least 2 permutations, got {0}")]
    TooFewPermutations(usize),
    #[error("permutations have unequal lengths")]
    UnequalLengths,
    #[error("fresh mode needs n >= 2")]
    FreshTooSmall,
    #[error(transparent)]
    Perm(#[from] PermError),
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("internal error: emitted decomposition failed verification: {0}")]
    Internal(String),
    #[error("scaling ratio undefined for n < 2")]
    RatioUndefined,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub k: usize,
    pub sampler: SamplerConfig,
    pub metric: Metric,
    /// None selects exact mode up to EXACT_MODE_CUTOFF and threshold
    /// doubling above.
    pub matching_mode: Option<MatchingMode>,
    pub m_override: Option<usize>,
    pub seed: u64,
}

impl PipelineConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        PipelineConfig {
            k,
            sampler: SamplerConfig::uniform(seed),
            metric: Metric::Euclidean,
            matching_mode: None,
            m_override: None,
            seed,
        }
    }

    fn mode_for(&self, n: usize) -> MatchingMode {
        self.matching_mode.unwrap_or(if n <= EXACT_MODE_CUTOFF {
            MatchingMode::Exact
        } else {
            MatchingMode::ThresholdDoubling
        })
    }
}

/// Instrumentation of one pipeline run.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub n: usize,
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "bottleneck")]
    pub bottlenecks: Vec<f64>,
    pub label_count: usize,
    pub max_label_degree: usize,
    pub part_count: usize,
    pub wall_time_ms: f64,
    pub seed: u64,
}

/// Decompose the given permutations. Validity of the output is
/// deterministic; only the part count is probabilistic.
pub fn decompose(
    perms: &[Permutation],
    cfg: &PipelineConfig,
) -> Result<(Decomposition, RunRecord), PipelineError> {
    if perms.len() < 2 {
        return Err(PipelineError::TooFewPermutations(perms.len()));
    }
    let n = perms[0].len();
    if perms.iter().any(|p| p.len() != n) {
        return Err(PipelineError::UnequalLengths);
    }
    let clouds: Vec<PointCloud> = perms
        .iter()
        .enumerate()
        .map(|(j, p)| embed_permutation(p, cfg.seed, j as u64))
        .collect();
    decompose_clouds(perms, &clouds, cfg)
}

/// Sample k fresh uniform permutations of length n and decompose them.
pub fn decompose_fresh(
    n: usize,
    cfg: &PipelineConfig,
) -> Result<(Vec<Permutation>, Decomposition, RunRecord), PipelineError> {
    if n < 2 {
        return Err(PipelineError::FreshTooSmall);
    }
    if cfg.k < 2 {
        return Err(PipelineError::TooFewPermutations(cfg.k));
    }
    let clouds: Vec<PointCloud> = (0..cfg.k)
        .map(|j| sample_cloud(n, &cfg.sampler, j as u64))
        .collect();
    let perms: Vec<Permutation> = clouds
        .iter()
        .map(|c| permutation_of_cloud(c).expect("sampled clouds are non-degenerate"))
        .collect();
    let (d, record) = decompose_clouds(&perms, &clouds, cfg)?;
    Ok((perms, d, record))
}

fn decompose_clouds(
    perms: &[Permutation],
    clouds: &[PointCloud],
    cfg: &PipelineConfig,
) -> Result<(Decomposition, RunRecord), PipelineError> {
    let start = Instant::now();
    let n = perms[0].len();
    let k = perms.len();
    let mode = cfg.mode_for(n);

    let matchings: Vec<BottleneckMatching> = clouds[1..]
        .iter()
        .map(|c| bottleneck_matching(&clouds[0], c, mode, cfg.metric))
        .collect::<Result<_, _>>()?;
    let bottlenecks: Vec<f64> = matchings.iter().map(|m| m.bottleneck).collect();

    if n == 1 {
        let d = Decomposition {
            n: 1,
            k,
            parts: vec![Part {
                index_lists: vec![vec![1]; k],
            }],
        };
        let record = RunRecord {
            n,
            k,
            m: 1,
            bottlenecks,
            label_count: 1,
            max_label_degree: 1,
            part_count: 1,
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
            seed: cfg.seed,
        };
        return Ok((d, record));
    }

    let m = match cfg.m_override {
        Some(m) => m.max(1),
        None => ((grid_size(n, k)? as f64 * GRID_CALIBRATION).round() as usize).max(1),
    };
    let grid_cfg = GridConfig { m, k, n };
    let graph = build_multigraph(clouds, &matchings, &grid_cfg)?;
    let groups = group_by_label(&graph);

    let label_count = groups.len();
    let mut max_label_degree = 0;
    let mut parts = Vec::new();
    // labels are processed in sorted order so the output does not depend
    // on any parallel schedule upstream
    for edges in groups.values() {
        let pairs: Vec<(usize, usize)> = edges.iter().map(|e| (e.row - 1, e.col - 1)).collect();
        let coloring = edge_color(&pairs);
        max_label_degree = max_label_degree.max(coloring.num_colors);
        let classes = color_classes(&coloring, &pairs)
            .map_err(|e| PipelineError::Internal(e.to_string()))?;
        for class in classes {
            if class.is_empty() {
                continue;
            }
            let mut index_lists = vec![Vec::with_capacity(class.len()); k];
            for &eid in &class {
                for (j, &cloud_idx) in edges[eid].binding.iter().enumerate() {
                    index_lists[j].push(cloud_idx + 1);
                }
            }
            for list in &mut index_lists {
                list.sort_unstable();
            }
            parts.push(Part { index_lists });
        }
    }

    let d = Decomposition { n, k, parts };
    match verify_decomposition(perms, &d) {
        Ok(Verdict::Valid) => {}
        Ok(Verdict::Violation(v)) => return Err(PipelineError::Internal(v)),
        Err(e) => return Err(PipelineError::Internal(e.to_string())),
    }

    let record = RunRecord {
        n,
        k,
        m,
        bottlenecks,
        label_count,
        max_label_degree,
        part_count: d.num_parts(),
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        seed: cfg.seed,
    };
    Ok((d, record))
}

/// Greedy patience piling into decreasing subsequences. Returns the
/// piles as lists of 1-based positions; the pile count equals the
/// longest increasing subsequence length.
pub fn patience_piles(p: &Permutation, decreasing: bool) -> Vec<Vec<usize>> {
    let mut piles: Vec<Vec<usize>> = Vec::new();
    let mut tops: Vec<usize> = Vec::new();
    for (i, &v) in p.values().iter().enumerate() {
        // leftmost pile whose top can take v; tops are monotone, so
        // binary search applies
        let pos = if decreasing {
            tops.partition_point(|&t| t < v)
        } else {
            tops.partition_point(|&t| t > v)
        };
        if pos == piles.len() {
            piles.push(vec![i + 1]);
            tops.push(v);
        } else {
            piles[pos].push(i + 1);
            tops[pos] = v;
        }
    }
    piles
}

/// The Dilworth baseline: pile each permutation into decreasing
/// subsequences, then cut the piles across permutations into aligned
/// equal-length pieces. Any two decreasing sequences of the same length
/// are order-isomorphic, so every piece is a valid part.
pub fn baseline_decompose(
    perms: &[Permutation],
    decreasing: bool,
) -> Result<(Decomposition, RunRecord), PipelineError> {
    if perms.is_empty() {
        return Err(PipelineError::TooFewPermutations(0));
    }
    let n = perms[0].len();
    if perms.iter().any(|p| p.len() != n) {
        return Err(PipelineError::UnequalLengths);
    }
    let start = Instant::now();
    let k = perms.len();

    let mut all_piles: Vec<Vec<Vec<usize>>> = perms
        .iter()
        .map(|p| patience_piles(p, decreasing))
        .collect();
    // longest piles first so the cuts stay coarse
    for piles in &mut all_piles {
        piles.sort_by_key(|pile| std::cmp::Reverse(pile.len()));
    }

    let mut pile_idx = vec![0usize; k];
    let mut offset = vec![0usize; k];
    let mut consumed = 0usize;
    let mut parts = Vec::new();
    while consumed < n {
        let take = (0..k)
            .map(|j| all_piles[j][pile_idx[j]].len() - offset[j])
            .min()
            .unwrap();
        let mut index_lists = Vec::with_capacity(k);
        for j in 0..k {
            let pile = &all_piles[j][pile_idx[j]];
            index_lists.push(pile[offset[j]..offset[j] + take].to_vec());
            offset[j] += take;
            if offset[j] == pile.len() {
                pile_idx[j] += 1;
                offset[j] = 0;
            }
        }
        parts.push(Part { index_lists });
        consumed += take;
    }

    let d = Decomposition { n, k, parts };
    match verify_decomposition(perms, &d) {
        Ok(Verdict::Valid) => {}
        Ok(Verdict::Violation(v)) => return Err(PipelineError::Internal(v)),
        Err(e) => return Err(PipelineError::Internal(e.to_string())),
    }

    let record = RunRecord {
        n,
        k,
        m: 0,
        bottlenecks: Vec::new(),
        label_count: 0,
        max_label_degree: 0,
        part_count: d.num_parts(),
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        seed: 0,
    };
    Ok((d, record))
}

/// A normalized scaling measurement: part count divided by the
/// theoretical envelope n^{(k-1)/(2k-1)} * ln(n)^{e(k)} with
/// e(k) = 3(k-1)/2 + 1/(2k-1) (so e(2) = 11/6).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScalingPoint {
    pub n: usize,
    pub ell: usize,
    pub ratio: f64,
}

pub fn scaling_exponents(k: usize) -> (f64, f64) {
    let kk = (2 * k - 1) as f64;
    let poly = (k - 1) as f64 / kk;
    let log = 3.0 * (k - 1) as f64 / 2.0 + 1.0 / kk;
    (poly, log)
}

pub fn pipeline_stats(record: &RunRecord) -> Result<ScalingPoint, PipelineError> {
    if record.n < 2 {
        return Err(PipelineError::RatioUndefined);
    }
    let (a, e) = scaling_exponents(record.k);
    let nf = record.n as f64;
    let envelope = nf.powf(a) * nf.ln().powf(e);
    Ok(ScalingPoint {
        n: record.n,
        ell: record.part_count,
        ratio: record.part_count as f64 / envelope,
    })
}
