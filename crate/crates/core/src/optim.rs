//! Shared optimizer contract: algorithm selection, seeded runs, uniform
//! result records, random pose generation and the uniform-random-search
//! baseline.
//!
//! Every stochastic choice in a run flows from the single configured seed
//! through one ChaCha8 generator, so a (config, scene, template) triple
//! reproduces bit-identically across platforms.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::evolution::GaParams;
use crate::objective::{
    clamp_pose, BudgetExhausted, ObjectiveEvaluator, ParameterBounds, Pose,
};
use crate::simplex::{AnnealingParams, SimplexParams};
use crate::swarm::SwarmParams;

/// The search strategies available to [`run`].
///
/// `RandomSearch` is not one of the four studied optimizers; it draws
/// uniform poses until the budget runs out and is included as the
/// dominance baseline every other algorithm's benchmark median is held
/// against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Simplex,
    SimulatedAnnealing,
    Genetic,
    Swarm,
    RandomSearch,
}

impl Algorithm {
    /// The four studied optimizers, in reporting order.
    pub const STUDIED: [Algorithm; 4] = [
        Algorithm::Simplex,
        Algorithm::SimulatedAnnealing,
        Algorithm::Genetic,
        Algorithm::Swarm,
    ];

    /// Studied optimizers plus the random-search baseline.
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Simplex,
        Algorithm::SimulatedAnnealing,
        Algorithm::Genetic,
        Algorithm::Swarm,
        Algorithm::RandomSearch,
    ];

    /// Stable identifier used in file names, CSV rows and seed derivation.
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Simplex => "simplex",
            Algorithm::SimulatedAnnealing => "simulated_annealing",
            Algorithm::Genetic => "genetic",
            Algorithm::Swarm => "swarm",
            Algorithm::RandomSearch => "random_search",
        }
    }

    /// Inverse of [`name`](Self::name), with a few common aliases.
    pub fn from_name(name: &str) -> Option<Algorithm> {
        match name {
            "simplex" | "nm" | "nelder-mead" => Some(Algorithm::Simplex),
            "annealing" | "sa" | "simulated_annealing" => Some(Algorithm::SimulatedAnnealing),
            "genetic" | "ga" => Some(Algorithm::Genetic),
            "swarm" | "pso" => Some(Algorithm::Swarm),
            "random_search" | "random" | "baseline" => Some(Algorithm::RandomSearch),
            _ => None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything a single optimizer run depends on besides the image pair.
///
/// `eval_budget` is the budget callers should construct evaluators with
/// (the benchmark harness and CLI do); [`run`] itself takes the budget
/// from the evaluator it is handed, which is authoritative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub eval_budget: u32,
    /// Record a (eval index, best-so-far error) trace. Off by default;
    /// the trace grows with every improvement.
    pub record_trace: bool,
    pub simplex: SimplexParams,
    pub annealing: AnnealingParams,
    pub genetic: GaParams,
    pub swarm: SwarmParams,
}

impl OptimizerConfig {
    pub const DEFAULT_BUDGET: u32 = 1000;

    pub fn new(algorithm: Algorithm, seed: u64) -> Self {
        OptimizerConfig {
            algorithm,
            seed,
            eval_budget: Self::DEFAULT_BUDGET,
            record_trace: false,
            simplex: SimplexParams::default(),
            annealing: AnnealingParams::default(),
            genetic: GaParams::default(),
            swarm: SwarmParams::default(),
        }
    }

    pub fn with_budget(mut self, eval_budget: u32) -> Self {
        self.eval_budget = eval_budget;
        self
    }

    pub fn with_trace(mut self, record_trace: bool) -> Self {
        self.record_trace = record_trace;
        self
    }

    /// Validates the parameter block of the configured algorithm only;
    /// an invalid block for an unused algorithm is irrelevant.
    pub fn validate(&self) -> Result<(), String> {
        match self.algorithm {
            Algorithm::Simplex => self.simplex.validate(),
            Algorithm::SimulatedAnnealing => self.annealing.validate(),
            Algorithm::Genetic => self.genetic.validate(),
            Algorithm::Swarm => self.swarm.validate(),
            Algorithm::RandomSearch => Ok(()),
        }
    }
}

/// One optimizer run's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub best_pose: Pose,
    /// Penalized error of `best_pose`; re-evaluating the pose reproduces
    /// it bit-identically.
    pub best_error: f64,
    pub evals_used: u32,
    /// Improvement trace (eval index, best-so-far error), present when
    /// the config asked for it. Errors are non-increasing, indices
    /// strictly increasing.
    pub trace: Option<Vec<(u32, f64)>>,
}

/// Ways a run can fail before any optimization happens. Once the first
/// evaluation has been spent, runs always complete with a record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunError {
    /// The evaluator was built with budget 0; no pose can be evaluated.
    ZeroBudget,
    /// The evaluator has already counted evaluations; runs need a fresh
    /// counter so `evals_used` and budget checks mean what they say.
    EvaluatorNotFresh { eval_count: u32 },
    /// The active algorithm's parameter block failed validation.
    InvalidParams(String),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::ZeroBudget => write!(f, "evaluation budget must be at least 1"),
            RunError::EvaluatorNotFresh { eval_count } => {
                write!(f, "evaluator already used ({eval_count} evaluations); runs need a fresh one")
            }
            RunError::InvalidParams(msg) => write!(f, "invalid optimizer parameters: {msg}"),
        }
    }
}

impl std::error::Error for RunError {}

/// A pose with each coordinate uniform over its bound interval.
pub fn random_pose<R: Rng>(rng: &mut R, bounds: &ParameterBounds) -> Pose {
    Pose::new(
        rng.random_range(bounds.x_min..=bounds.x_max),
        rng.random_range(bounds.y_min..=bounds.y_max),
        rng.random_range(bounds.s_min..=bounds.s_max),
    )
}

/// A random pose preferring penalty-free ground: redraws while the pose
/// would pay the out-of-image penalty, keeping the last draw after 64
/// attempts (an oversized template may have no penalty-free pose at all).
/// The simplex family starts and restarts here; a simplex seeded on the
/// penalty cliff learns nothing about the image. Costs no evaluations.
pub(crate) fn random_start<C: Cost, R: Rng>(cost: &C, rng: &mut R) -> Pose {
    let bounds = cost.bounds();
    let mut pose = random_pose(rng, &bounds);
    for _ in 0..63 {
        if cost.penalty_free(pose) {
            break;
        }
        pose = random_pose(rng, &bounds);
    }
    pose
}

/// What the algorithm cores see of an objective: bounds, budget state and
/// three evaluation flavors. Keeping this narrow lets unit tests drive the
/// cores with analytic stand-ins instead of image pairs.
pub(crate) trait Cost {
    fn bounds(&self) -> ParameterBounds;
    fn budget(&self) -> u32;
    fn used(&self) -> u32;
    fn remaining(&self) -> u32 {
        self.budget().saturating_sub(self.used())
    }
    /// Best (pose, error) over every evaluation so far, by true error.
    fn best(&self) -> Option<(Pose, f64)>;
    /// Budget-checked evaluation; fails once the counter reaches the
    /// budget and never before.
    fn eval(&mut self, pose: Pose) -> Result<f64, BudgetExhausted>;
    /// Unchecked evaluation for finishing an already-started step; counts
    /// against (and may overshoot) the budget.
    fn eval_overshoot(&mut self, pose: Pose) -> f64;
    /// Evaluation exempt from the budget counter, for pre-processing
    /// scans configured as free. Still feeds best tracking.
    fn eval_free(&mut self, pose: Pose) -> f64;
    /// Whether evaluating at `pose` would incur no out-of-domain penalty.
    /// Pure geometry on the real objective; analytic stand-ins, having no
    /// penalty region, say yes everywhere.
    fn penalty_free(&self, pose: Pose) -> bool {
        let _ = pose;
        true
    }
}

/// The real [`Cost`]: forwards to an [`ObjectiveEvaluator`] and keeps the
/// global best and optional trace across every evaluation, restarts
/// included. The recorded pose is the scale-clamped one actually
/// measured, so re-evaluating it reproduces `best_error` exactly.
pub(crate) struct TrackedEvaluator<'e, 'i> {
    inner: &'e mut ObjectiveEvaluator<'i>,
    best: Option<(Pose, f64)>,
    trace: Option<Vec<(u32, f64)>>,
}

impl<'e, 'i> TrackedEvaluator<'e, 'i> {
    pub(crate) fn new(inner: &'e mut ObjectiveEvaluator<'i>, record_trace: bool) -> Self {
        TrackedEvaluator {
            inner,
            best: None,
            trace: if record_trace { Some(Vec::new()) } else { None },
        }
    }

    fn record(&mut self, pose: Pose, error: f64) {
        let improved = match self.best {
            None => true,
            Some((_, incumbent)) => error < incumbent,
        };
        if improved {
            self.best = Some((clamp_pose(pose, &self.inner.config().bounds), error));
            if let Some(trace) = &mut self.trace {
                trace.push((self.inner.eval_count(), error));
            }
        }
    }

}

impl Cost for TrackedEvaluator<'_, '_> {
    fn bounds(&self) -> ParameterBounds {
        *self.inner.bounds()
    }

    fn budget(&self) -> u32 {
        self.inner.eval_budget()
    }

    fn used(&self) -> u32 {
        self.inner.eval_count()
    }

    fn best(&self) -> Option<(Pose, f64)> {
        self.best
    }

    fn eval(&mut self, pose: Pose) -> Result<f64, BudgetExhausted> {
        let result = self.inner.evaluate(pose)?;
        self.record(pose, result.error_p);
        Ok(result.error_p)
    }

    fn eval_overshoot(&mut self, pose: Pose) -> f64 {
        let result = self.inner.evaluate_overshoot(pose);
        self.record(pose, result.error_p);
        result.error_p
    }

    fn eval_free(&mut self, pose: Pose) -> f64 {
        let result = self.inner.peek(pose);
        self.record(pose, result.error_p);
        result.error_p
    }

    fn penalty_free(&self, pose: Pose) -> bool {
        self.inner.fully_visible(pose)
    }
}

/// Draws uniform poses until the budget runs out, keeping the best.
fn random_search<C: Cost, R: Rng>(cost: &mut C, rng: &mut R) {
    let bounds = cost.bounds();
    while cost.remaining() > 0 {
        let pose = random_pose(rng, &bounds);
        if cost.eval(pose).is_err() {
            break;
        }
    }
}

/// Runs the configured algorithm once against a fresh evaluator.
///
/// The global best is tracked across every evaluation the algorithm
/// makes, including restarts, so `best_pose`/`best_error` never regress
/// relative to anything the run has seen.
pub fn run(
    config: &OptimizerConfig,
    evaluator: &mut ObjectiveEvaluator<'_>,
) -> Result<RunRecord, RunError> {
    if evaluator.eval_count() != 0 {
        return Err(RunError::EvaluatorNotFresh {
            eval_count: evaluator.eval_count(),
        });
    }
    if evaluator.eval_budget() == 0 {
        return Err(RunError::ZeroBudget);
    }
    config.validate().map_err(RunError::InvalidParams)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut tracker = TrackedEvaluator::new(evaluator, config.record_trace);
    match config.algorithm {
        Algorithm::Simplex => crate::simplex::run_simplex(&config.simplex, &mut tracker, &mut rng),
        Algorithm::SimulatedAnnealing => {
            crate::simplex::simulated_annealing(&config.annealing, &mut tracker, &mut rng);
        }
        Algorithm::Genetic => crate::evolution::ga_run(&config.genetic, &mut tracker, &mut rng),
        Algorithm::Swarm => {
            crate::swarm::pso_run(&config.swarm, &mut tracker, &mut rng);
        }
        Algorithm::RandomSearch => random_search(&mut tracker, &mut rng),
    }
    let TrackedEvaluator { best, trace, .. } = tracker;
    let (best_pose, best_error) =
        best.expect("budget >= 1 means every algorithm evaluates at least one pose");
    Ok(RunRecord {
        algorithm: config.algorithm,
        seed: config.seed,
        best_pose,
        best_error,
        evals_used: evaluator.eval_count(),
        trace,
    })
}
