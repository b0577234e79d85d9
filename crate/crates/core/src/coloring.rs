//! Proper edge coloring of bipartite multigraphs with exactly Delta
//! colors, by alternating-path insertion.
//!
//! Edges are given as (row vertex, column vertex) pairs; the two vertex
//! classes are disjoint by representation, so the input is always
//! bipartite. Parallel edges are first-class: repeat the pair.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ColoringError {
    #[error("coloring is not proper: edges {0} and {1} share a vertex and color")]
    NotProper(usize, usize),
    #[error("coloring length {0} does not match edge count {1}")]
    LengthMismatch(usize, usize),
}

/// A proper edge coloring; colors are 1-based dense integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeColoring {
    /// Color of each edge, parallel to the input edge list.
    pub color_of_edge: Vec<usize>,
    /// Always equals the maximum degree of the input (0 for no edges).
    pub num_colors: usize,
}

/// Maximum degree, counting parallel edges with multiplicity.
pub fn max_degree(edges: &[(usize, usize)]) -> usize {
    let mut row_deg = std::collections::HashMap::new();
    let mut col_deg = std::collections::HashMap::new();
    for &(u, v) in edges {
        *row_deg.entry(u).or_insert(0usize) += 1;
        *col_deg.entry(v).or_insert(0usize) += 1;
    }
    row_deg
        .values()
        .chain(col_deg.values())
        .copied()
        .max()
        .unwrap_or(0)
}

/// Color the edges with exactly max_degree colors. Deterministic given
/// the edge input order.
///
/// Each edge (u, v) is inserted by taking the smallest color missing at
/// u and the smallest missing at v; if they differ, the alternating
/// two-color path starting at v is flipped first. The path has at most
/// 2|V| edges, so insertion is linear in the graph size.
pub fn edge_color(edges: &[(usize, usize)]) -> EdgeColoring {
    let delta = max_degree(edges);
    if delta == 0 {
        return EdgeColoring {
            color_of_edge: Vec::new(),
            num_colors: 0,
        };
    }
    let n_rows = edges.iter().map(|&(u, _)| u + 1).max().unwrap_or(0);
    let n_cols = edges.iter().map(|&(_, v)| v + 1).max().unwrap_or(0);
    // vertex x color -> edge id (colors 0-based internally)
    let mut row_slot = vec![vec![usize::MAX; delta]; n_rows];
    let mut col_slot = vec![vec![usize::MAX; delta]; n_cols];
    let mut color = vec![usize::MAX; edges.len()];

    for (e, &(u, v)) in edges.iter().enumerate() {
        let alpha = row_slot[u].iter().position(|&s| s == usize::MAX).unwrap();
        let beta = col_slot[v].iter().position(|&s| s == usize::MAX).unwrap();
        if alpha != beta && col_slot[v][alpha] != usize::MAX {
            // Flip the alpha/beta alternating path starting at v; it
            // cannot reach u (bipartite), so alpha becomes free at v.
            let mut path = Vec::new();
            let mut at_col = true;
            let mut vertex = v;
            let mut want = alpha;
            loop {
                let slot = if at_col {
                    &col_slot[vertex]
                } else {
                    &row_slot[vertex]
                };
                let eid = slot[want];
                if eid == usize::MAX {
                    break;
                }
                path.push(eid);
                let (eu, ev) = edges[eid];
                vertex = if at_col { eu } else { ev };
                at_col = !at_col;
                want = if want == alpha { beta } else { alpha };
            }
            // Every alpha/beta edge at a path vertex lies on the path, so
            // clearing both slots at those vertices and re-setting from the
            // flipped edges is sound.
            for &eid in &path {
                let (eu, ev) = edges[eid];
                row_slot[eu][alpha] = usize::MAX;
                row_slot[eu][beta] = usize::MAX;
                col_slot[ev][alpha] = usize::MAX;
                col_slot[ev][beta] = usize::MAX;
            }
            for &eid in &path {
                let old = color[eid];
                let new = if old == alpha { beta } else { alpha };
                color[eid] = new;
                let (eu, ev) = edges[eid];
                row_slot[eu][new] = eid;
                col_slot[ev][new] = eid;
            }
        }
        color[e] = alpha;
        row_slot[u][alpha] = e;
        col_slot[v][alpha] = e;
    }

    EdgeColoring {
        color_of_edge: color.iter().map(|&c| c + 1).collect(),
        num_colors: delta,
    }
}

/// Split the edges into matchings by color. Errors if the coloring is
/// not proper for the given edges.
pub fn color_classes(
    c: &EdgeColoring,
    edges: &[(usize, usize)],
) -> Result<Vec<Vec<usize>>, ColoringError> {
    if c.color_of_edge.len() != edges.len() {
        return Err(ColoringError::LengthMismatch(
            c.color_of_edge.len(),
            edges.len(),
        ));
    }
    check_proper(c, edges)?;
    let mut classes = vec![Vec::new(); c.num_colors];
    for (e, &col) in c.color_of_edge.iter().enumerate() {
        classes[col - 1].push(e);
    }
    Ok(classes)
}

fn check_proper(c: &EdgeColoring, edges: &[(usize, usize)]) -> Result<(), ColoringError> {
    use std::collections::HashMap;
    let mut row_seen: HashMap<(usize, usize), usize> = HashMap::new();
    let mut col_seen: HashMap<(usize, usize), usize> = HashMap::new();
    for (e, (&(u, v), &col)) in edges.iter().zip(&c.color_of_edge).enumerate() {
        if let Some(&prev) = row_seen.get(&(u, col)) {
            return Err(ColoringError::NotProper(prev, e));
        }
        if let Some(&prev) = col_seen.get(&(v, col)) {
            return Err(ColoringError::NotProper(prev, e));
        }
        row_seen.insert((u, col), e);
        col_seen.insert((v, col), e);
    }
    Ok(())
}
