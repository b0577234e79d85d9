//! Decomposition of random permutations into order-isomorphic subpermutations.
//!
//! The pipeline embeds permutations as point clouds in the unit square,
//! computes minimax matchings between the clouds, discretizes the square
//! into a grid, groups matched pairs by their cell displacement, and
//! edge-colors the resulting bipartite multigraph per displacement label.
//! Each color class of each label becomes one part of the decomposition.

pub mod coloring;
pub mod geometry;
pub mod gridgraph;
pub mod matching;
pub mod oracle;
pub mod perm;
pub mod pipeline;

pub use geometry::{Point, PointCloud, SamplerConfig, SamplerMode};
pub use gridgraph::{CellIndex, DisplacementLabel, GridConfig, LabeledMultigraph};
pub use matching::{BottleneckMatching, MatchingMode, Metric};
pub use perm::{Decomposition, Part, Pattern, Permutation, Verdict};
pub use pipeline::{PipelineConfig, RunRecord};
