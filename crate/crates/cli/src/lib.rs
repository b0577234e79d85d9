//! Shared helpers behind the `permsim` binary: permutation generation,
//! text parsing, trial seed derivation, and the experiment harness.

use std::io::BufRead;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use permsim_core::perm::PermError;
use permsim_core::pipeline::{
    baseline_decompose, decompose_fresh, pipeline_stats, PipelineConfig,
};
use permsim_core::{MatchingMode, Metric, Permutation, SamplerConfig, SamplerMode};

/// Generate k independent uniform permutations of length n, reproducible
/// from the seed. Permutation j uses sub-stream j.
pub fn gen_perms(n: usize, k: usize, seed: u64) -> Vec<Permutation> {
    use rand::seq::SliceRandom;
    (0..k)
        .map(|j| {
            let mut rng = permsim_core::geometry::stream_rng(seed, j as u64);
            let mut vals: Vec<usize> = (1..=n).collect();
            vals.shuffle(&mut rng);
            Permutation::new(vals).expect("shuffle preserves the value set")
        })
        .collect()
}

/// Parse permutations, one per line, space-separated 1-indexed values.
pub fn parse_perms<R: BufRead>(r: R) -> Result<Vec<Permutation>, PermError> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line.map_err(|e| PermError::Parse(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(line.parse()?);
    }
    Ok(out)
}

/// splitmix64-style mix of (seed, n, trial) into a per-trial sub-seed so
/// trial-level parallelism never changes any byte of the output.
pub fn trial_seed(seed: u64, n: usize, trial: usize) -> u64 {
    let mut z = seed
        .wrapping_add(0x9e3779b97f4a7c15u64.wrapping_mul(n as u64 + 1))
        .wrapping_add(0xbf58476d1ce4e5b9u64.wrapping_mul(trial as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub n_values: Vec<usize>,
    pub k: usize,
    pub trials_per_n: usize,
    pub seed: u64,
    pub sampler_mode: SamplerMode,
    pub metric: Metric,
    pub matching_mode: Option<MatchingMode>,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() {
            bail!("no n values given");
        }
        if self.n_values.windows(2).any(|w| w[0] > w[1]) {
            bail!("n values must be sorted ascending");
        }
        if self.n_values.iter().any(|&n| n < 2) {
            bail!("n values must be at least 2");
        }
        if self.trials_per_n < 1 {
            bail!("trials must be at least 1");
        }
        if self.k < 2 {
            bail!("k must be at least 2");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrialRow {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub m: usize,
    pub bottleneck: f64,
    pub label_count: usize,
    pub max_label_degree: usize,
    pub ell: usize,
    pub ell_baseline: usize,
    pub ratio: f64,
    pub wall_ms: f64,
}

pub const CSV_HEADER: &str =
    "n,k,seed,M,bottleneck,label_count,max_label_degree,ell,ell_baseline,normalized_ratio,wall_ms";

pub fn run_trial(n: usize, plan: &ExperimentPlan, trial: usize) -> Result<TrialRow> {
    let seed = trial_seed(plan.seed, n, trial);
    let mut sampler = SamplerConfig::uniform(seed);
    sampler.mode = plan.sampler_mode;
    let cfg = PipelineConfig {
        k: plan.k,
        sampler,
        metric: plan.metric,
        matching_mode: plan.matching_mode,
        m_override: None,
        seed,
    };
    let (perms, _d, record) = decompose_fresh(n, &cfg).context("pipeline run failed")?;
    let (_bd, baseline_record) = baseline_decompose(&perms, true)?;
    let stats = pipeline_stats(&record)?;
    Ok(TrialRow {
        n,
        k: plan.k,
        seed,
        m: record.m,
        bottleneck: record.bottlenecks.iter().fold(0.0, |a: f64, &b| a.max(b)),
        label_count: record.label_count,
        max_label_degree: record.max_label_degree,
        ell: record.part_count,
        ell_baseline: baseline_record.part_count,
        ratio: stats.ratio,
        wall_ms: record.wall_time_ms,
    })
}

/// Run the full plan; rows come back sorted by (n, trial) regardless of
/// the parallel schedule.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<Vec<TrialRow>> {
    plan.validate()?;
    let jobs: Vec<(usize, usize)> = plan
        .n_values
        .iter()
        .flat_map(|&n| (0..plan.trials_per_n).map(move |t| (n, t)))
        .collect();
    let mut rows: Vec<((usize, usize), TrialRow)> = jobs
        .par_iter()
        .map(|&(n, t)| run_trial(n, plan, t).map(|row| ((n, t), row)))
        .collect::<Result<_>>()?;
    rows.sort_by_key(|&((n, t), _)| (n, t));
    Ok(rows.into_iter().map(|(_, row)| row).collect())
}

pub fn median_usize(values: &mut [usize]) -> f64 {
    values.sort_unstable();
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2] as f64
    } else {
        (values[n / 2 - 1] + values[n / 2]) as f64 / 2.0
    }
}

pub fn median_f64(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Render rows as CSV followed by a per-n median summary block.
pub fn render_csv(rows: &[TrialRow], n_values: &[usize]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{:.3}\n",
            r.n,
            r.k,
            r.seed,
            r.m,
            r.bottleneck,
            r.label_count,
            r.max_label_degree,
            r.ell,
            r.ell_baseline,
            r.ratio,
            r.wall_ms
        ));
    }
    for &n in n_values {
        let mut ells: Vec<usize> = rows.iter().filter(|r| r.n == n).map(|r| r.ell).collect();
        let mut base: Vec<usize> = rows
            .iter()
            .filter(|r| r.n == n)
            .map(|r| r.ell_baseline)
            .collect();
        let mut ratios: Vec<f64> = rows.iter().filter(|r| r.n == n).map(|r| r.ratio).collect();
        if ells.is_empty() {
            continue;
        }
        out.push_str(&format!(
            "# summary n={} median_ell={} median_ell_baseline={} median_ratio={}\n",
            n,
            median_usize(&mut ells),
            median_usize(&mut base),
            median_f64(&mut ratios)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn gen_is_deterministic_and_independent() {
        let a = gen_perms(20, 3, 9);
        let b = gen_perms(20, 3, 9);
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
        assert_ne!(gen_perms(20, 3, 10), a);
    }

    #[test]
    fn gen_patterns_are_uniform() {
        // n=5: each of the 120 patterns within 5 standard errors of 1/120
        let trials = 10_000usize;
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for t in 0..trials {
            let p = &gen_perms(5, 1, t as u64)[0];
            *counts.entry(p.values().to_vec()).or_default() += 1;
        }
        assert_eq!(counts.len(), 120);
        let p = 1.0 / 120.0;
        let expected = trials as f64 * p;
        let se = (trials as f64 * p * (1.0 - p)).sqrt();
        for (pat, &c) in &counts {
            assert!(
                (c as f64 - expected).abs() < 5.0 * se,
                "pattern {pat:?}: {c} vs {expected}"
            );
        }
    }

    #[test]
    fn parse_round_trip() {
        let text = "1 4 3 5 2\n2 5 3 1 4\n";
        let perms = parse_perms(text.as_bytes()).unwrap();
        assert_eq!(perms.len(), 2);
        assert_eq!(format!("{}\n{}\n", perms[0], perms[1]), text);
        assert!(parse_perms("1 2 x".as_bytes()).is_err());
        assert!(parse_perms("1 1 2".as_bytes()).is_err());
    }

    #[test]
    fn trial_seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for n in [256usize, 512] {
            for t in 0..100 {
                assert!(seen.insert(trial_seed(7, n, t)));
            }
        }
    }

    #[test]
    fn small_experiment_shape() {
        let plan = ExperimentPlan {
            n_values: vec![256],
            k: 2,
            trials_per_n: 1,
            seed: 3,
            sampler_mode: SamplerMode::Uniform,
            metric: Metric::Euclidean,
            matching_mode: None,
        };
        let rows = run_experiment(&plan).unwrap();
        assert_eq!(rows.len(), 1);
        let csv = render_csv(&rows, &plan.n_values);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[2].starts_with("# summary n=256"));
        // reproducible apart from the trailing wall-clock column
        let rows2 = run_experiment(&plan).unwrap();
        let strip = |s: &str| -> String {
            s.lines()
                .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_owned())
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(strip(&csv), strip(&render_csv(&rows2, &plan.n_values)));
    }

    #[test]
    fn plan_validation() {
        let mut plan = ExperimentPlan {
            n_values: vec![512, 256],
            k: 2,
            trials_per_n: 1,
            seed: 0,
            sampler_mode: SamplerMode::Uniform,
            metric: Metric::Euclidean,
            matching_mode: None,
        };
        assert!(plan.validate().is_err());
        plan.n_values = vec![256, 512];
        assert!(plan.validate().is_ok());
        plan.trials_per_n = 0;
        assert!(plan.validate().is_err());
    }
}
