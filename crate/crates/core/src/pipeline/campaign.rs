use num_traits::Float;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::LerBasis;
use super::shot::{Pipeline, ShotReport};
use super::{PipelineError, Stage};
use crate::code_model::{build_decoding_graph, build_layout, sample_fault_ids, syndrome_of_ids, DecodingGraph, Sector};
use crate::decoder::{decode, is_valid, residual_crosses_cut};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Summary of one interval over a campaign, in ps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    pub count: u64,
    pub mean_ps: f64,
    pub min_ps: i64,
    pub max_ps: i64,
    pub p50_ps: i64,
    pub p90_ps: i64,
    pub p99_ps: i64,
    pub stddev_ps: f64,
}

impl StageStats {
    /// Exact integer moments; percentiles by nearest rank.
    pub fn from_samples(samples: &[i64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut sorted = samples.to_vec();
        sorted.sort_unstable();
        let n = sorted.len() as i128;
        let sum: i128 = sorted.iter().map(|&x| x as i128).sum();
        let sum_sq: i128 = sorted.iter().map(|&x| (x as i128) * (x as i128)).sum();
        let var_num = n * sum_sq - sum * sum;
        let rank = |q: f64| sorted[((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1];
        Some(StageStats {
            count: sorted.len() as u64,
            mean_ps: sum as f64 / n as f64,
            min_ps: sorted[0],
            max_ps: sorted[sorted.len() - 1],
            p50_ps: rank(0.5),
            p90_ps: rank(0.9),
            p99_ps: rank(0.99),
            stddev_ps: (var_num as f64).sqrt() / n as f64,
        })
    }
}

/// Fixed-width histogram of end-to-end latency.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width_ps: u64,
    /// Lower edge of the first bin.
    pub first_bin_ps: i64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn from_samples(samples: &[i64], bin_width_ps: u64) -> Self {
        let w = bin_width_ps.max(1) as i64;
        let Some(&lo) = samples.iter().min() else {
            return Histogram { bin_width_ps: w as u64, first_bin_ps: 0, counts: Vec::new() };
        };
        let hi = *samples.iter().max().expect("non-empty");
        let first = lo.div_euclid(w) * w;
        let mut counts = vec![0u64; ((hi - first) / w + 1) as usize];
        for &s in samples {
            counts[((s - first) / w) as usize] += 1;
        }
        Histogram { bin_width_ps: w as u64, first_bin_ps: first, counts }
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval<T: Float>(failures: u64, shots: u64, z: T) -> (T, T) {
    if shots == 0 {
        return (T::zero(), T::one());
    }
    let n = T::from(shots).expect("shot count fits");
    let p = T::from(failures).expect("failure count fits") / n;
    let two = T::one() + T::one();
    let z2 = z * z;
    let denom = T::one() + z2 / n;
    let center = (p + z2 / (two * n)) / denom;
    let half = z * (p * (T::one() - p) / n + z2 / (two * two * n * n)).sqrt() / denom;
    ((center - half).max(T::zero()), (center + half).min(T::one()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LerEstimate {
    pub shots: u64,
    pub failures: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl LerEstimate {
    pub fn new(failures: u64, shots: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(failures, shots, Z95);
        let rate = if shots == 0 { 0.0 } else { failures as f64 / shots as f64 };
        LerEstimate { shots, failures, rate, ci_low, ci_high }
    }

    /// True if the two 95% intervals do not overlap.
    pub fn disjoint_from(&self, other: &LerEstimate) -> bool {
        self.ci_high < other.ci_low || other.ci_high < self.ci_low
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub seed: u64,
    pub shots: u64,
    pub router_layers: u32,
    pub stages: Vec<(Stage, StageStats)>,
    pub end_to_end: StageStats,
    pub histogram: Histogram,
    pub ler: LerEstimate,
    pub shot_reports: Vec<ShotReport>,
}

impl CampaignReport {
    pub fn stage(&self, stage: Stage) -> Option<&StageStats> {
        self.stages.iter().find(|(s, _)| *s == stage).map(|(_, st)| st)
    }
}

fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> Result<R, PipelineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| PipelineError::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs `shots` shots of `pipeline`. `jobs == 1` runs sequentially on the
/// calling thread; `0` uses every core. Results are identical either way.
pub fn run_campaign(pipeline: &Pipeline, shots: u64, seed: u64, jobs: usize) -> Result<CampaignReport, PipelineError> {
    if shots == 0 {
        return Err(PipelineError::Config("a campaign needs at least one shot".into()));
    }
    let reports: Vec<ShotReport> = if jobs == 1 {
        (0..shots).map(|s| pipeline.run_shot(seed, s)).collect::<Result<_, _>>()?
    } else {
        with_jobs(jobs, || (0..shots).into_par_iter().map(|s| pipeline.run_shot(seed, s)).collect::<Result<_, _>>())??
    };

    let layers = pipeline.router_layers();
    let stages = Stage::active(layers)
        .iter()
        .map(|&stage| {
            let xs: Vec<i64> = reports.iter().map(|r| r.interval(stage).unwrap_or(0)).collect();
            (stage, StageStats::from_samples(&xs).expect("at least one shot"))
        })
        .collect();
    let e2e: Vec<i64> = reports.iter().map(|r| r.end_to_end_ps).collect();
    let failures = reports.iter().filter(|r| r.logical_failure).count() as u64;
    Ok(CampaignReport {
        seed,
        shots,
        router_layers: layers,
        stages,
        end_to_end: StageStats::from_samples(&e2e).expect("at least one shot"),
        histogram: Histogram::from_samples(&e2e, 1_000),
        ler: LerEstimate::new(failures, shots),
        shot_reports: reports,
    })
}

/// Decoding outcome of one shot without the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LerOutcome {
    pub valid: bool,
    pub sector_failures: [bool; 2],
}

/// Samples and decodes both sectors of shot `shot`. Draws the same faults as
/// the full pipeline for the same seed and shot.
pub fn ler_shot(graphs: &[DecodingGraph; 2], p: f64, seed: u64, shot: u64) -> Result<LerOutcome, PipelineError> {
    let mut out = LerOutcome { valid: true, sector_failures: [false; 2] };
    for graph in graphs {
        let ids = sample_fault_ids(graph, p, seed, shot)?;
        if ids.is_empty() {
            continue;
        }
        let syndrome = syndrome_of_ids(graph, &ids)?;
        let c = decode(graph, &syndrome)?;
        out.valid &= is_valid(&c, &syndrome, graph);
        out.sector_failures[graph.sector().index()] = residual_crosses_cut(graph, &ids, &c.faults);
    }
    Ok(out)
}

/// Logical error rate of distance `d` with `rounds` rounds at physical rate
/// `p`, counting failures in `basis`.
pub fn ler_campaign(
    d: u32,
    rounds: u32,
    p: f64,
    basis: LerBasis,
    shots: u64,
    seed: u64,
    jobs: usize,
) -> Result<LerEstimate, PipelineError> {
    let layout = build_layout(d as usize)?;
    let graphs = [
        build_decoding_graph(&layout, Sector::X, rounds as usize)?,
        build_decoding_graph(&layout, Sector::Z, rounds as usize)?,
    ];
    let count = |s: u64| -> Result<u64, PipelineError> {
        let o = ler_shot(&graphs, p, seed, s)?;
        if !o.valid {
            return Err(PipelineError::Invariant(format!("shot {s} produced an invalid correction")));
        }
        Ok(basis.failed(o.sector_failures) as u64)
    };
    let failures = if jobs == 1 {
        (0..shots).map(count).sum::<Result<u64, _>>()?
    } else {
        with_jobs(jobs, || (0..shots).into_par_iter().map(count).sum::<Result<u64, _>>())??
    };
    Ok(LerEstimate::new(failures, shots))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::PipelineConfig;

    #[test]
    fn stats_of_constant_and_known_samples() {
        let s = StageStats::from_samples(&[5, 5, 5]).unwrap();
        assert_eq!((s.min_ps, s.max_ps, s.p50_ps), (5, 5, 5));
        assert_eq!(s.stddev_ps, 0.0);
        let s = StageStats::from_samples(&[1, 2, 3, 4]).unwrap();
        assert_eq!(s.mean_ps, 2.5);
        assert_eq!(s.p50_ps, 2);
        assert_eq!(s.p99_ps, 4);
        assert!((s.stddev_ps - 1.118_033_988_749_895).abs() < 1e-12);
        assert!(StageStats::from_samples(&[]).is_none());
    }

    #[test]
    fn histogram_covers_samples() {
        let h = Histogram::from_samples(&[1_500, 2_100, 2_999, -1], 1_000);
        assert_eq!(h.first_bin_ps, -1_000);
        assert_eq!(h.counts, vec![1, 0, 1, 2]);
    }

    #[test]
    fn wilson_reference_values() {
        let (lo, hi) = wilson_interval(0, 100, Z95);
        assert!(lo.abs() < 1e-12);
        assert!((hi - 0.036_994).abs() < 1e-5);
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert!((lo - 0.403_831).abs() < 1e-5 && (hi - 0.596_169).abs() < 1e-5);
        let (lo32, _) = wilson_interval(50u64, 100, Z95 as f32);
        assert!((lo32 - 0.403_831).abs() < 1e-4);
    }

    #[test]
    fn single_shot_campaign() {
        let pipe = Pipeline::new(PipelineConfig::prototype()).unwrap();
        let r = run_campaign(&pipe, 1, 11, 1).unwrap();
        for (_, s) in &r.stages {
            assert_eq!(s.min_ps, s.max_ps);
            assert_eq!(s.mean_ps, s.min_ps as f64);
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let pipe = Pipeline::new(PipelineConfig::prototype()).unwrap();
        assert_eq!(run_campaign(&pipe, 64, 4, 1).unwrap(), run_campaign(&pipe, 64, 4, 4).unwrap());
        assert_eq!(ler_campaign(3, 3, 0.05, LerBasis::Both, 500, 2, 1).unwrap(), ler_campaign(3, 3, 0.05, LerBasis::Both, 500, 2, 3).unwrap());
    }

    #[test]
    fn ler_limits() {
        assert_eq!(ler_campaign(5, 5, 0.0, LerBasis::Both, 200, 1, 1).unwrap().failures, 0);
        let half = ler_campaign(3, 3, 0.5, LerBasis::Z, 4_000, 1, 0).unwrap();
        assert!((half.rate - 0.5).abs() < 0.05, "{half:?}");
        let either = ler_campaign(3, 3, 0.5, LerBasis::Both, 4_000, 1, 0).unwrap();
        assert!((either.rate - 0.75).abs() < 0.05, "{either:?}");
    }

    #[test]
    fn pipeline_and_ler_paths_agree() {
        let mut cfg = PipelineConfig::prototype();
        cfg.physical_error_rate = 0.03;
        let pipe = Pipeline::new(cfg).unwrap();
        let graphs = [pipe.graph(Sector::X).clone(), pipe.graph(Sector::Z).clone()];
        for shot in 0..200 {
            let a = pipe.run_shot(8, shot).unwrap().sector_failures;
            let b = ler_shot(&graphs, 0.03, 8, shot).unwrap().sector_failures;
            assert_eq!(a, b);
        }
    }
}
