//! Multi-run benchmark protocol: seeded repeated runs per algorithm,
//! geometric distance to the known ground truth, 10-bin accuracy
//! histograms and a comparative report against a uniform-random-search
//! baseline.

pub mod report;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::evolution::GaParams;
use crate::imagecore::Image;
use crate::objective::{ObjectiveConfig, ObjectiveEvaluator, Pose};
use crate::optim::{run, Algorithm, OptimizerConfig, RunError, RunRecord};
use crate::simplex::{AnnealingParams, SimplexParams};
use crate::swarm::SwarmParams;

/// The pose a perfect registration would report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub x_g: f64,
    pub y_g: f64,
    pub s_g: f64,
}

impl GroundTruth {
    pub fn new(x_g: f64, y_g: f64, s_g: f64) -> Self {
        GroundTruth { x_g, y_g, s_g }
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.x_g, self.y_g, self.s_g)
    }
}

/// Geometric distance between a run's pose and the ground truth:
/// sqrt((x_G−x)² + (y_G−y)² + (s_G−s)²), mixing pixel and scale units
/// unweighted.
pub fn distance(run_pose: &Pose, gt: &GroundTruth) -> f64 {
    let dx = gt.x_g - run_pose.x;
    let dy = gt.y_g - run_pose.y;
    let ds = gt.s_g - run_pose.s;
    (dx * dx + dy * dy + ds * ds).sqrt()
}

/// Distance histogram over fixed unit-width bins: bin k counts distances
/// in [k, k+1) for k < 9; bin 9 absorbs everything at 9 or beyond. Raw
/// distances are retained so the clamp loses nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyHistogram {
    pub bin_counts: [u32; 10],
    pub bin_width: f64,
    pub runs: u32,
    pub distances: Vec<f64>,
}

/// A histogram needs at least one distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmptyDistances;

impl fmt::Display for EmptyDistances {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("cannot build a histogram from zero distances")
    }
}

impl std::error::Error for EmptyDistances {}

/// Bins a non-empty list of distances; see [`AccuracyHistogram`].
pub fn histogram(distances: &[f64]) -> Result<AccuracyHistogram, EmptyDistances> {
    if distances.is_empty() {
        return Err(EmptyDistances);
    }
    let mut bin_counts = [0u32; 10];
    for &d in distances {
        assert!(d >= 0.0, "distances are non-negative by construction");
        let bin = (d.floor() as usize).min(9);
        bin_counts[bin] += 1;
    }
    Ok(AccuracyHistogram {
        bin_counts,
        bin_width: 1.0,
        runs: distances.len() as u32,
        distances: distances.to_vec(),
    })
}

/// Everything the benchmark needs besides the image pair: which
/// algorithms, how many runs, seeding, budget and the full parameter
/// blocks (these double as the report's config snapshot).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub algorithms: Vec<Algorithm>,
    pub runs_per_algorithm: u32,
    pub base_seed: u64,
    pub eval_budget: u32,
    pub objective: ObjectiveConfig,
    pub simplex: SimplexParams,
    pub annealing: AnnealingParams,
    pub genetic: GaParams,
    pub swarm: SwarmParams,
    /// Append the uniform-random-search baseline unless it is already
    /// among the algorithms.
    pub include_baseline: bool,
    /// Cap on concurrently executing runs; `None` uses all cores.
    pub jobs: Option<usize>,
}

impl BenchmarkConfig {
    /// Full defaults for a scene: the four studied algorithms plus the
    /// baseline, 50 runs each, budget 1000.
    pub fn for_scene(scene: &Image, base_seed: u64) -> Self {
        BenchmarkConfig {
            algorithms: Algorithm::STUDIED.to_vec(),
            runs_per_algorithm: 50,
            base_seed,
            eval_budget: OptimizerConfig::DEFAULT_BUDGET,
            objective: ObjectiveConfig::new(crate::objective::ParameterBounds::for_scene(scene)),
            simplex: SimplexParams::default(),
            annealing: AnnealingParams::default(),
            genetic: GaParams::default(),
            swarm: SwarmParams::default(),
            include_baseline: true,
            jobs: None,
        }
    }

    /// Algorithms in execution order, baseline appended when requested.
    pub fn algorithm_order(&self) -> Vec<Algorithm> {
        let mut order = self.algorithms.clone();
        if self.include_baseline && !order.contains(&Algorithm::RandomSearch) {
            order.push(Algorithm::RandomSearch);
        }
        order
    }

    fn optimizer_config(&self, algorithm: Algorithm, seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            algorithm,
            seed,
            eval_budget: self.eval_budget,
            record_trace: false,
            simplex: self.simplex.clone(),
            annealing: self.annealing.clone(),
            genetic: self.genetic.clone(),
            swarm: self.swarm.clone(),
        }
    }
}

/// Per-algorithm slice of the report. Every statistic here is a pure
/// function of `records`, kept precomputed for report rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub histogram: AccuracyHistogram,
    pub best_distance: f64,
    pub median_distance: f64,
    pub worst_distance: f64,
    pub mean_evals: f64,
    pub seeds: Vec<u64>,
    pub records: Vec<RunRecord>,
}

/// Complete benchmark outcome: metadata plus one summary per algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    /// Provenance of the scene image (origin and dimensions).
    pub scene_info: String,
    /// Provenance of the template image.
    pub template_info: String,
    pub ground_truth: GroundTruth,
    pub config: BenchmarkConfig,
    pub summaries: Vec<AlgorithmSummary>,
}

/// Benchmark failure: bad configuration, or a failing run with its
/// provenance.
#[derive(Debug, Clone, PartialEq)]
pub enum BenchmarkError {
    InvalidConfig(String),
    Run {
        algorithm: Algorithm,
        seed: u64,
        source: RunError,
    },
}

impl fmt::Display for BenchmarkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchmarkError::InvalidConfig(msg) => write!(f, "invalid benchmark config: {msg}"),
            BenchmarkError::Run {
                algorithm,
                seed,
                source,
            } => write!(f, "{algorithm} run with seed {seed} failed: {source}"),
        }
    }
}

impl std::error::Error for BenchmarkError {}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Stable per-run seed: mixes the base seed with the algorithm name and
/// run index so adding an algorithm never perturbs the others' runs.
pub fn derive_seed(base_seed: u64, algorithm: Algorithm, run_index: u32) -> u64 {
    let per_algorithm = splitmix64(base_seed ^ fnv1a64(algorithm.name().as_bytes()));
    splitmix64(per_algorithm ^ run_index as u64)
}

fn summarize(
    algorithm: Algorithm,
    records: Vec<RunRecord>,
    gt: &GroundTruth,
) -> AlgorithmSummary {
    let distances: Vec<f64> = records
        .iter()
        .map(|r| distance(&r.best_pose, gt))
        .collect();
    let histogram = histogram(&distances).expect("runs_per_algorithm >= 1");
    let mut sorted = distances.clone();
    sorted.sort_by(f64::total_cmp);
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2]) / 2.0
    };
    let mean_evals =
        records.iter().map(|r| r.evals_used as f64).sum::<f64>() / records.len() as f64;
    AlgorithmSummary {
        algorithm,
        best_distance: sorted[0],
        median_distance: median,
        worst_distance: *sorted.last().unwrap(),
        mean_evals,
        seeds: records.iter().map(|r| r.seed).collect(),
        records,
        histogram,
    }
}

/// Runs the full protocol: `runs_per_algorithm` seeded runs per
/// algorithm (baseline included), each against a fresh evaluator with
/// the configured budget. Runs execute in parallel; record order and
/// results are independent of thread count.
pub fn benchmark(
    scene: &Image,
    template: &Image,
    gt: &GroundTruth,
    config: &BenchmarkConfig,
) -> Result<BenchmarkReport, BenchmarkError> {
    benchmark_with_progress(scene, template, gt, config, |_, _| {})
}

/// [`benchmark`] with a per-run completion callback `(algorithm,
/// run_index)`; invoked from worker threads in completion order.
pub fn benchmark_with_progress<F>(
    scene: &Image,
    template: &Image,
    gt: &GroundTruth,
    config: &BenchmarkConfig,
    on_run_done: F,
) -> Result<BenchmarkReport, BenchmarkError>
where
    F: Fn(Algorithm, u32) + Sync,
{
    if config.runs_per_algorithm == 0 {
        return Err(BenchmarkError::InvalidConfig(
            "runs_per_algorithm must be at least 1".into(),
        ));
    }
    if config.eval_budget == 0 {
        return Err(BenchmarkError::InvalidConfig(
            "eval_budget must be at least 1".into(),
        ));
    }
    let order = config.algorithm_order();
    if order.is_empty() {
        return Err(BenchmarkError::InvalidConfig(
            "no algorithms selected".into(),
        ));
    }

    let execute = || -> Result<Vec<AlgorithmSummary>, BenchmarkError> {
        order
            .iter()
            .map(|&algorithm| {
                let records: Vec<RunRecord> = (0..config.runs_per_algorithm)
                    .into_par_iter()
                    .map(|i| {
                        let seed = derive_seed(config.base_seed, algorithm, i);
                        let mut evaluator = ObjectiveEvaluator::new(
                            scene,
                            template,
                            config.objective,
                            config.eval_budget,
                        );
                        let optimizer = config.optimizer_config(algorithm, seed);
                        let record = run(&optimizer, &mut evaluator).map_err(|source| {
                            BenchmarkError::Run {
                                algorithm,
                                seed,
                                source,
                            }
                        })?;
                        on_run_done(algorithm, i);
                        Ok(record)
                    })
                    .collect::<Result<_, BenchmarkError>>()?;
                Ok(summarize(algorithm, records, gt))
            })
            .collect()
    };

    let summaries = match config.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| BenchmarkError::InvalidConfig(format!("thread pool: {e}")))?
            .install(execute),
        None => execute(),
    }?;

    Ok(BenchmarkReport {
        scene_info: format!("{}x{} scene", scene.width(), scene.height()),
        template_info: format!("{}x{} template", template.width(), template.height()),
        ground_truth: *gt,
        config: config.clone(),
        summaries,
    })
}
