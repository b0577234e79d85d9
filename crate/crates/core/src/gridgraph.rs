//! Grid discretization of the unit square and the displacement-labelled
//! bipartite multigraph built from matched point clouds.
//!
//! Each red point contributes one edge from its grid row to its grid
//! column; the edge is labelled with the cell offsets of the matched
//! points. Matchings of same-label edges correspond to order-isomorphic
//! subpermutations.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{Point, PointCloud};
use crate::matching::BottleneckMatching;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("n must be at least 2 (log n must be positive)")]
    TooSmall,
    #[error("k must be at least 2")]
    BadK,
    #[error("matching {0} is not perfect")]
    NotPerfect(usize),
    #[error("expected {0} matchings for {1} clouds, got {2}")]
    WrongMatchingCount(usize, usize, usize),
    #[error("cloud {0} has size {1}, expected {2}")]
    CloudSize(usize, usize, usize),
}

#[derive(Debug, Clone, Copy)]
pub struct GridConfig {
    /// Grid side M.
    pub m: usize,
    /// Number of permutations.
    pub k: usize,
    /// Permutation length.
    pub n: usize,
}

impl GridConfig {
    pub fn default_for(n: usize, k: usize) -> Result<Self, GridError> {
        Ok(GridConfig {
            m: grid_size(n, k)?,
            k,
            n,
        })
    }
}

/// M = ceil(n^{1/2 + 1/(2(2k-1))} / ln(n)^{1/(2k-1)}), natural log.
/// At k = 2 this is ceil(n^{2/3} ln(n)^{-1/3}).
pub fn grid_size(n: usize, k: usize) -> Result<usize, GridError> {
    if n < 2 {
        return Err(GridError::TooSmall);
    }
    if k < 2 {
        return Err(GridError::BadK);
    }
    let nf = n as f64;
    let kk = (2 * k - 1) as f64;
    let exp = 0.5 + 1.0 / (2.0 * kk);
    let m = (nf.powf(exp) / nf.ln().powf(1.0 / kk)).ceil();
    Ok((m as usize).max(1))
}

/// 1-based grid cell; cells are half-open except the top/right boundary,
/// which is clamped into row/column M.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellIndex {
    pub row: usize,
    pub col: usize,
}

pub fn cell_of(p: &Point, m: usize) -> CellIndex {
    let col = ((p.x * m as f64) as usize + 1).min(m);
    let row = ((p.y * m as f64) as usize + 1).min(m);
    CellIndex { row, col }
}

/// Cell offsets (delta_row, delta_col) of each matched point relative to
/// the red point, 2(k-1) integers in total.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct DisplacementLabel(pub Vec<i64>);

#[derive(Debug, Clone, Serialize)]
pub struct MultiEdge {
    /// Row vertex, 1..=M (the red point's grid row).
    pub row: usize,
    /// Column vertex, 1..=M (the red point's grid column).
    pub col: usize,
    pub label: DisplacementLabel,
    /// 0-based cloud indices: red index followed by the k-1 matched indices.
    pub binding: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LabeledMultigraph {
    pub m: usize,
    pub edges: Vec<MultiEdge>,
}

/// One edge per red point, labelled by the cell displacements of its
/// matched points.
pub fn build_multigraph(
    clouds: &[PointCloud],
    matchings: &[BottleneckMatching],
    cfg: &GridConfig,
) -> Result<LabeledMultigraph, GridError> {
    let k = clouds.len();
    if matchings.len() + 1 != k {
        return Err(GridError::WrongMatchingCount(k - 1, k, matchings.len()));
    }
    let n = cfg.n;
    for (j, c) in clouds.iter().enumerate() {
        if c.len() != n {
            return Err(GridError::CloudSize(j, c.len(), n));
        }
    }
    let mut partner: Vec<Vec<usize>> = Vec::with_capacity(k - 1);
    for (mi, m) in matchings.iter().enumerate() {
        let bor = m.blue_of_red(n);
        if m.pairs.len() != n || bor.iter().any(|&b| b == usize::MAX) {
            return Err(GridError::NotPerfect(mi));
        }
        partner.push(bor);
    }

    let m = cfg.m;
    let mut edges = Vec::with_capacity(n);
    for r in 0..n {
        let red_cell = cell_of(&clouds[0].points()[r], m);
        let mut offsets = Vec::with_capacity(2 * (k - 1));
        let mut binding = Vec::with_capacity(k);
        binding.push(r);
        for (j, bor) in partner.iter().enumerate() {
            let b = bor[r];
            let cell = cell_of(&clouds[j + 1].points()[b], m);
            offsets.push(cell.row as i64 - red_cell.row as i64);
            offsets.push(cell.col as i64 - red_cell.col as i64);
            binding.push(b);
        }
        edges.push(MultiEdge {
            row: red_cell.row,
            col: red_cell.col,
            label: DisplacementLabel(offsets),
            binding,
        });
    }
    Ok(LabeledMultigraph { m, edges })
}

/// Split the edge set by label; sub-multigraphs preserve point bindings.
/// The map is ordered, so iteration order is deterministic.
pub fn group_by_label(g: &LabeledMultigraph) -> BTreeMap<DisplacementLabel, Vec<&MultiEdge>> {
    let mut groups: BTreeMap<DisplacementLabel, Vec<&MultiEdge>> = BTreeMap::new();
    for e in &g.edges {
        groups.entry(e.label.clone()).or_default().push(e);
    }
    groups
}
