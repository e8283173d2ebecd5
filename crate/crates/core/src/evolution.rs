//! Real-coded genetic algorithm: normalized geometric ranking selection,
//! arithmetic crossover, multi-non-uniform mutation and elitist
//! truncation, minimizing the registration error through negated fitness.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::objective::{ParameterBounds, Pose};
use crate::optim::{random_pose, Cost};

/// Population and operator counts per generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaParams {
    pub population_size: usize,
    /// Probability of selecting the rank-1 individual before
    /// normalization over the population.
    pub q_select: f64,
    /// Parent pairs recombined per generation; each pair yields two
    /// children.
    pub crossovers_per_gen: usize,
    /// Individuals mutated per generation.
    pub mutations_per_gen: usize,
    /// Non-uniformity exponent of the mutation schedule; larger values
    /// shrink mutations faster over the generations.
    pub mutation_shape_b: f64,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            population_size: 20,
            q_select: 0.6,
            crossovers_per_gen: 10,
            mutations_per_gen: 20,
            mutation_shape_b: 3.0,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.population_size < 2 {
            return Err("population_size must be at least 2".into());
        }
        if !(self.q_select > 0.0 && self.q_select < 1.0) {
            return Err("q_select must be in (0, 1)".into());
        }
        if !(self.mutation_shape_b > 0.0) {
            return Err("mutation_shape_b must be positive".into());
        }
        Ok(())
    }

    /// New evaluations per generation: two children per crossover pair
    /// plus the mutants.
    pub fn evals_per_generation(&self) -> usize {
        2 * self.crossovers_per_gen + self.mutations_per_gen
    }

    /// Generations that fit the budget after the initial population, so
    /// the mutation schedule's endpoint aligns with budget exhaustion.
    pub fn max_generations(&self, eval_budget: u32) -> u32 {
        let per_gen = self.evals_per_generation();
        if per_gen == 0 {
            return 0;
        }
        let after_init = (eval_budget as usize).saturating_sub(self.population_size);
        (after_init / per_gen) as u32
    }
}

/// One chromosome: a pose and its fitness, the negated penalized error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Individual {
    pub pose: Pose,
    pub fitness: f64,
}

/// Selection probability of each rank (1-based) under normalized
/// geometric ranking: P(rank r) = q' · (1−q)^(r−1) with
/// q' = q / (1 − (1−q)^P).
pub fn norm_geom_probabilities(q_select: f64, population: usize) -> Vec<f64> {
    assert!(population > 0);
    let miss = 1.0 - q_select;
    let q_norm = q_select / (1.0 - miss.powi(population as i32));
    (0..population).map(|r| q_norm * miss.powi(r as i32)).collect()
}

/// Draws one individual from a population sorted best-first, favoring
/// low ranks geometrically. The final rank absorbs any residual
/// probability mass, so the scan always lands.
pub fn norm_geom_select<'p, R: Rng>(
    ranked: &'p [Individual],
    q_select: f64,
    rng: &mut R,
) -> &'p Individual {
    assert!(!ranked.is_empty(), "cannot select from an empty population");
    let miss = 1.0 - q_select;
    let q_norm = q_select / (1.0 - miss.powi(ranked.len() as i32));
    let mut u = rng.random::<f64>();
    let mut p = q_norm;
    for individual in &ranked[..ranked.len() - 1] {
        if u < p {
            return individual;
        }
        u -= p;
        p *= miss;
    }
    &ranked[ranked.len() - 1]
}

/// Linear interpolation crossover at a caller-supplied mixing factor.
pub(crate) fn arith_crossover_lambda(p1: Pose, p2: Pose, lambda: f64) -> (Pose, Pose) {
    let (a, b) = (p1.to_array(), p2.to_array());
    let mut c1 = [0.0; 3];
    let mut c2 = [0.0; 3];
    for i in 0..3 {
        c1[i] = lambda * a[i] + (1.0 - lambda) * b[i];
        c2[i] = (1.0 - lambda) * a[i] + lambda * b[i];
    }
    (Pose::from_array(c1), Pose::from_array(c2))
}

/// Arithmetic crossover: draws one λ uniform in [0, 1) and returns the
/// two complementary blends λ·p1 + (1−λ)·p2 and (1−λ)·p1 + λ·p2. Each
/// child coordinate stays inside the parents' per-component interval.
pub fn arith_crossover<R: Rng>(p1: Pose, p2: Pose, rng: &mut R) -> (Pose, Pose) {
    arith_crossover_lambda(p1, p2, rng.random::<f64>())
}

/// Multi-non-uniform mutation: every component moves toward one of its
/// bounds (a coin flip each) by headroom · (1 − r^((1−g/G)^b)). Early
/// generations can cover the whole headroom; at g = G the perturbation
/// is exactly zero. Results stay within bounds by construction.
pub fn multi_nonuniform_mutate<R: Rng>(
    p: Pose,
    generation: u32,
    max_generations: u32,
    shape_b: f64,
    bounds: &ParameterBounds,
    rng: &mut R,
) -> Pose {
    assert!(max_generations > 0, "mutation schedule needs max_generations >= 1");
    let progress = 1.0 - generation as f64 / max_generations as f64;
    let mut out = p.to_array();
    for (i, value) in out.iter_mut().enumerate() {
        let toward_upper = rng.random::<bool>();
        let r = rng.random::<f64>();
        let fraction = 1.0 - r.powf(progress.powf(shape_b));
        let (lo, hi) = bounds.interval(i);
        if toward_upper {
            *value += (hi - *value) * fraction;
        } else {
            *value -= (*value - lo) * fraction;
        }
    }
    Pose::from_array(out)
}

/// One GA run from a caller-supplied initial population (poses only;
/// they are evaluated here). Returns the final ranked population.
pub(crate) fn ga_run_from<C: Cost, R: Rng>(
    params: &GaParams,
    cost: &mut C,
    rng: &mut R,
    initial: Vec<Pose>,
) -> Vec<Individual> {
    let bounds = cost.bounds();
    let mut population: Vec<Individual> = Vec::with_capacity(params.population_size);
    for pose in initial {
        match cost.eval(pose) {
            Ok(error) => population.push(Individual {
                pose,
                fitness: -error,
            }),
            Err(_) => break,
        }
    }
    if population.is_empty() {
        return population;
    }
    rank(&mut population);

    let max_generations = params.max_generations(cost.budget());
    let per_gen = params.evals_per_generation();
    for generation in 0..max_generations {
        if cost.remaining() == 0 || per_gen == 0 {
            break;
        }
        // Breed first, then evaluate in creation order: children of the
        // crossover pairs, then the mutants.
        let mut offspring: Vec<Pose> = Vec::with_capacity(per_gen);
        for _ in 0..params.crossovers_per_gen {
            let p1 = norm_geom_select(&population, params.q_select, rng).pose;
            let p2 = norm_geom_select(&population, params.q_select, rng).pose;
            let (c1, c2) = arith_crossover(p1, p2, rng);
            offspring.push(c1);
            offspring.push(c2);
        }
        for _ in 0..params.mutations_per_gen {
            let parent = norm_geom_select(&population, params.q_select, rng).pose;
            offspring.push(multi_nonuniform_mutate(
                parent,
                generation,
                max_generations,
                params.mutation_shape_b,
                &bounds,
                rng,
            ));
        }
        for pose in offspring {
            let error = cost.eval_overshoot(pose);
            population.push(Individual {
                pose,
                fitness: -error,
            });
        }
        // Elitist truncation: parents and offspring compete as one pool;
        // the stable sort keeps parents ahead of equal-fitness offspring.
        rank(&mut population);
        population.truncate(params.population_size);
    }
    population
}

/// Standard entry: initial population drawn uniformly over the bounds.
pub(crate) fn ga_run<C: Cost, R: Rng>(params: &GaParams, cost: &mut C, rng: &mut R) {
    let bounds = cost.bounds();
    let initial = (0..params.population_size)
        .map(|_| random_pose(rng, &bounds))
        .collect();
    ga_run_from(params, cost, rng, initial);
}

/// Sorts best-first (highest fitness first), stably.
fn rank(population: &mut [Individual]) {
    population.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
}
