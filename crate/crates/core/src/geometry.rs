//! Point-cloud representations of permutations in the unit square.
//!
//! A cloud of n points with strictly increasing x-coordinates defines a
//! permutation by reading off the ranks of the y-coordinates. Sampling
//! a uniform cloud gives a uniformly random permutation; embedding a
//! given permutation places it at a uniform cloud conditioned on its
//! pattern.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

use crate::perm::{pattern_of, Permutation};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("degenerate cloud: duplicate y-coordinate")]
    DegenerateCloud,
    #[error("x-coordinates not strictly increasing")]
    UnsortedCloud,
    #[error("coordinate out of the unit square: ({0}, {1})")]
    OutOfBounds(f64, f64),
    #[error("empty cloud")]
    Empty,
    #[error("csv parse error: {0}")]
    Csv(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

/// n points sorted by strictly increasing x with pairwise distinct y;
/// point i corresponds to permutation position i+1.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point>,
}

impl PointCloud {
    pub fn new(mut points: Vec<Point>) -> Result<Self, GeometryError> {
        if points.is_empty() {
            return Err(GeometryError::Empty);
        }
        for p in &points {
            if !(0.0..=1.0).contains(&p.x) || !(0.0..=1.0).contains(&p.y) {
                return Err(GeometryError::OutOfBounds(p.x, p.y));
            }
        }
        points.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
        for w in points.windows(2) {
            if w[0].x >= w[1].x {
                return Err(GeometryError::UnsortedCloud);
            }
        }
        let mut ys: Vec<f64> = points.iter().map(|p| p.y).collect();
        ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if ys.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GeometryError::DegenerateCloud);
        }
        Ok(PointCloud { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), GeometryError> {
        writeln!(w, "index,x,y")?;
        for (i, p) in self.points.iter().enumerate() {
            writeln!(w, "{},{},{}", i + 1, p.x, p.y)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, GeometryError> {
        let mut points = Vec::new();
        for (ln, line) in r.lines().enumerate() {
            let line = line?;
            if ln == 0 {
                if line.trim() != "index,x,y" {
                    return Err(GeometryError::Csv(format!("bad header: {line}")));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(GeometryError::Csv(format!("bad row: {line}")));
            }
            let x: f64 = fields[1]
                .parse()
                .map_err(|_| GeometryError::Csv(format!("bad x: {}", fields[1])))?;
            let y: f64 = fields[2]
                .parse()
                .map_err(|_| GeometryError::Csv(format!("bad y: {}", fields[2])))?;
            points.push(Point { x, y });
        }
        PointCloud::new(points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerMode {
    Uniform,
    Poisson,
}

#[derive(Debug, Clone, Copy)]
pub struct SamplerConfig {
    pub mode: SamplerMode,
    /// Poisson rate is rate_multiplier * n; must exceed 1 in poisson mode.
    pub rate_multiplier: f64,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn uniform(seed: u64) -> Self {
        SamplerConfig {
            mode: SamplerMode::Uniform,
            rate_multiplier: 2.0,
            seed,
        }
    }

    pub fn poisson(seed: u64) -> Self {
        SamplerConfig {
            mode: SamplerMode::Poisson,
            rate_multiplier: 2.0,
            seed,
        }
    }
}

/// Seedable generator with independent sub-streams per (seed, stream_id).
pub fn stream_rng(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

// Resample exact ties so downstream code never sees equal coordinates.
fn make_distinct(values: &mut [f64], rng: &mut ChaCha8Rng) {
    loop {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let mut clean = true;
        for w in order.windows(2) {
            if values[w[0]] == values[w[1]] {
                values[w[1]] = rng.gen::<f64>();
                clean = false;
            }
        }
        if clean {
            return;
        }
    }
}

/// Draw n i.i.d. uniform points on the unit square, sorted by x.
///
/// Both modes produce the same distribution: poisson mode first draws
/// N ~ Poisson(rate_multiplier * n) points, redraws N while N < n, then
/// deletes N - n points uniformly at random.
pub fn sample_cloud(n: usize, cfg: &SamplerConfig, stream_id: u64) -> PointCloud {
    assert!(n >= 1, "n must be at least 1");
    let mut rng = stream_rng(cfg.seed, stream_id);
    let m = match cfg.mode {
        SamplerMode::Uniform => n,
        SamplerMode::Poisson => {
            assert!(cfg.rate_multiplier > 1.0, "poisson rate multiplier must exceed 1");
            let dist = Poisson::new(cfg.rate_multiplier * n as f64).unwrap();
            loop {
                let draw = dist.sample(&mut rng) as usize;
                if draw >= n {
                    break draw;
                }
            }
        }
    };
    let mut xs: Vec<f64> = (0..m).map(|_| rng.gen()).collect();
    let mut ys: Vec<f64> = (0..m).map(|_| rng.gen()).collect();
    if m > n {
        // delete m - n points uniformly at random via a partial Fisher-Yates
        for i in 0..n {
            let j = rng.gen_range(i..m);
            xs.swap(i, j);
            ys.swap(i, j);
        }
        xs.truncate(n);
        ys.truncate(n);
    }
    make_distinct(&mut xs, &mut rng);
    make_distinct(&mut ys, &mut rng);
    let points: Vec<Point> = xs
        .into_iter()
        .zip(ys)
        .map(|(x, y)| Point { x, y })
        .collect();
    PointCloud::new(points).expect("sampled coordinates are distinct by construction")
}

/// Read off the permutation: sigma(i) = rank of points[i].y among all y's.
pub fn permutation_of_cloud(c: &PointCloud) -> Result<Permutation, GeometryError> {
    let ys: Vec<f64> = c.points().iter().map(|p| p.y).collect();
    let pattern = pattern_of(&ys).map_err(|_| GeometryError::DegenerateCloud)?;
    Ok(pattern.as_permutation().clone())
}

/// Place permutation p on sorted uniform x's and y's: point i sits at
/// (x_(i), y_(p(i))). The result reads back as p and is distributed as a
/// uniform cloud conditioned on having pattern p.
pub fn embed_permutation(p: &Permutation, seed: u64, stream_id: u64) -> PointCloud {
    let n = p.len();
    let mut rng = stream_rng(seed, stream_id);
    let mut xs: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
    let mut ys: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
    make_distinct(&mut xs, &mut rng);
    make_distinct(&mut ys, &mut rng);
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let points: Vec<Point> = (0..n)
        .map(|i| Point {
            x: xs[i],
            y: ys[p.at(i + 1) - 1],
        })
        .collect();
    PointCloud::new(points).expect("sorted distinct coordinates")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;

    #[test]
    fn single_point_cloud() {
        let c = sample_cloud(1, &SamplerConfig::uniform(3), 0);
        assert_eq!(c.len(), 1);
        let p = c.points()[0];
        assert!((0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y));
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = SamplerConfig::uniform(42);
        assert_eq!(sample_cloud(50, &cfg, 7), sample_cloud(50, &cfg, 7));
        assert_ne!(sample_cloud(50, &cfg, 7), sample_cloud(50, &cfg, 8));
        let pcfg = SamplerConfig::poisson(42);
        assert_eq!(sample_cloud(50, &pcfg, 7), sample_cloud(50, &pcfg, 7));
    }

    #[test]
    fn chi_square_uniformity_10k() {
        // 10x10 cell counts; chi-square threshold for 99 dof at 1e-3
        // significance is 148.2304 (inverse chi-square CDF at 0.999).
        let c = sample_cloud(10_000, &SamplerConfig::uniform(1), 0);
        let mut counts = [[0usize; 10]; 10];
        for p in c.points() {
            let i = ((p.x * 10.0) as usize).min(9);
            let j = ((p.y * 10.0) as usize).min(9);
            counts[i][j] += 1;
        }
        let expected = 100.0;
        let chi2: f64 = counts
            .iter()
            .flatten()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 148.2304, "chi-square statistic too large: {chi2}");
    }

    #[test]
    fn permutation_of_cloud_ranks() {
        let c = PointCloud::new(vec![
            Point { x: 0.1, y: 0.5 },
            Point { x: 0.5, y: 0.9 },
            Point { x: 0.9, y: 0.2 },
        ])
        .unwrap();
        let p = permutation_of_cloud(&c).unwrap();
        assert_eq!(p.values(), &[2, 3, 1]);
    }

    #[test]
    fn increasing_y_gives_identity() {
        let c = PointCloud::new(
            (0..5)
                .map(|i| Point {
                    x: 0.1 + 0.2 * i as f64,
                    y: 0.1 + 0.15 * i as f64,
                })
                .collect(),
        )
        .unwrap();
        assert_eq!(permutation_of_cloud(&c).unwrap(), Permutation::identity(5));
    }

    #[test]
    fn embed_round_trip() {
        let mut rng = stream_rng(99, 0);
        for trial in 0..100 {
            let mut vals: Vec<usize> = (1..=6).collect();
            vals.shuffle(&mut rng);
            let p = Permutation::new(vals).unwrap();
            let cloud = embed_permutation(&p, trial, 0);
            assert_eq!(permutation_of_cloud(&cloud).unwrap(), p);
        }
    }

    #[test]
    fn embed_two_one_puts_first_higher() {
        let p = Permutation::new(vec![2, 1]).unwrap();
        for seed in 0..10 {
            let c = embed_permutation(&p, seed, 0);
            assert!(c.points()[0].y > c.points()[1].y);
        }
    }

    #[test]
    fn degenerate_cloud_rejected() {
        let err = PointCloud::new(vec![
            Point { x: 0.1, y: 0.5 },
            Point { x: 0.2, y: 0.5 },
        ]);
        assert!(matches!(err, Err(GeometryError::DegenerateCloud)));
    }

    #[test]
    fn csv_round_trip() {
        let c = sample_cloud(20, &SamplerConfig::uniform(5), 1);
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let back = PointCloud::read_csv(&buf[..]).unwrap();
        assert_eq!(back, c);
    }

    // Over many seeds every pattern of length <= 5 should appear with
    // frequency within 5 standard errors of 1/n!, in both modes.
    fn pattern_frequency_check(mode: SamplerMode) {
        use std::collections::HashMap;
        let n = 4;
        let trials = 24_000usize;
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        let cfg = SamplerConfig {
            mode,
            rate_multiplier: 2.0,
            seed: 7,
        };
        for t in 0..trials {
            let c = sample_cloud(n, &cfg, t as u64);
            let p = permutation_of_cloud(&c).unwrap();
            *counts.entry(p.values().to_vec()).or_default() += 1;
        }
        let total_patterns = 24.0;
        let p = 1.0 / total_patterns;
        let se = (trials as f64 * p * (1.0 - p)).sqrt();
        let expected = trials as f64 * p;
        assert_eq!(counts.len(), 24);
        for (pat, &c) in &counts {
            assert!(
                (c as f64 - expected).abs() < 5.0 * se,
                "pattern {pat:?} count {c} too far from {expected}"
            );
        }
    }

    #[test]
    fn uniform_mode_patterns_are_uniform() {
        pattern_frequency_check(SamplerMode::Uniform);
    }

    #[test]
    fn poisson_mode_patterns_are_uniform() {
        pattern_frequency_check(SamplerMode::Poisson);
    }
}
