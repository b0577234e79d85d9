//! Shared setup for the criterion benches.

use permsim_core::geometry::{sample_cloud, PointCloud};
use permsim_core::SamplerConfig;

/// A reproducible pair of point clouds for matching benchmarks.
pub fn cloud_pair(n: usize, seed: u64) -> (PointCloud, PointCloud) {
    let cfg = SamplerConfig::uniform(seed);
    (sample_cloud(n, &cfg, 0), sample_cloud(n, &cfg, 1))
}
