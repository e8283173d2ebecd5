//! Particle swarm optimizer with deterministic velocity coefficients and
//! a logical ring neighborhood over particle indices.
//!
//! The velocity rule is applied exactly as configured, with no hidden
//! random scaling: v' = alpha·v + beta_i·(pbest − x) + beta_g·(nbest − x).
//! An optional flag restores the canonical stochastic coefficient
//! scaling for comparison.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::objective::{ParameterBounds, Pose};
use crate::optim::{random_pose, Cost};

/// Swarm size, velocity constants and neighborhood shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmParams {
    pub particle_count: usize,
    /// Inertia factor on the previous velocity; kept just under 1 so the
    /// swarm does not become unstable.
    pub alpha: f64,
    /// Attraction toward the particle's own best position.
    pub beta_i: f64,
    /// Attraction toward the neighborhood's best position.
    pub beta_g: f64,
    /// Ring radius: a particle's neighborhood is itself plus this many
    /// adjacent indices to either side, modulo the swarm size.
    pub neighborhood_radius: usize,
    /// Per-component speed cap as a fraction of that component's bound
    /// range, applied after the velocity update; `None` removes the cap.
    pub v_max: Option<f64>,
    /// Initial velocities are drawn uniformly within ± this fraction of
    /// each component's bound range.
    pub init_velocity_fraction: f64,
    /// Scale both attraction terms by per-component uniform draws, as
    /// canonical PSO does. Off by default: the deterministic rule is the
    /// reference behavior.
    pub stochastic: bool,
}

impl Default for SwarmParams {
    fn default() -> Self {
        SwarmParams {
            particle_count: 20,
            alpha: 0.99,
            beta_i: 0.01,
            beta_g: 0.01,
            neighborhood_radius: 3,
            v_max: Some(0.25),
            init_velocity_fraction: 0.1,
            stochastic: false,
        }
    }
}

impl SwarmParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.particle_count < 2 {
            return Err("particle_count must be at least 2".into());
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err("alpha must be in (0, 1]".into());
        }
        if self.beta_i < 0.0 || self.beta_g < 0.0 {
            return Err("beta_i and beta_g must be non-negative".into());
        }
        if self.neighborhood_radius == 0 {
            return Err("neighborhood_radius must be at least 1".into());
        }
        if self.neighborhood_radius >= self.particle_count {
            return Err("neighborhood_radius must be smaller than particle_count".into());
        }
        if let Some(v) = self.v_max {
            if !(v > 0.0) {
                return Err("v_max must be positive when set".into());
            }
        }
        if !(self.init_velocity_fraction >= 0.0) {
            return Err("init_velocity_fraction must be non-negative".into());
        }
        Ok(())
    }
}

/// One swarm member: current state plus the best it has ever sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub position: Pose,
    pub velocity: [f64; 3],
    pub best_position: Pose,
    pub best_value: f64,
    /// Position in the ring; fixed for the particle's lifetime.
    pub index: usize,
}

/// Best `best_position` among the 2·radius+1 ring neighbors of `index`
/// (itself included), ties resolved toward the lowest absolute index.
pub fn neighborhood_best(swarm: &[Particle], index: usize, radius: usize) -> Pose {
    let n = swarm.len();
    assert!(n > 0 && radius < n, "radius must be smaller than the swarm");
    let mut indices: Vec<usize> = (0..=2 * radius)
        .map(|k| (index + n + k - radius) % n)
        .collect();
    indices.sort_unstable();
    indices.dedup();
    let mut best = indices[0];
    for &i in &indices[1..] {
        if swarm[i].best_value < swarm[best].best_value {
            best = i;
        }
    }
    swarm[best].best_position
}

fn velocity_update_scaled(
    p: &Particle,
    group_best: Pose,
    params: &SwarmParams,
    bounds: &ParameterBounds,
    scale_i: [f64; 3],
    scale_g: [f64; 3],
) -> [f64; 3] {
    let x = p.position.to_array();
    let own = p.best_position.to_array();
    let group = group_best.to_array();
    let mut v = [0.0; 3];
    for d in 0..3 {
        v[d] = params.alpha * p.velocity[d]
            + params.beta_i * scale_i[d] * (own[d] - x[d])
            + params.beta_g * scale_g[d] * (group[d] - x[d]);
        if let Some(fraction) = params.v_max {
            let cap = fraction * bounds.range(d);
            v[d] = v[d].clamp(-cap, cap);
        }
    }
    v
}

/// Deterministic velocity rule: v' = alpha·v + beta_i·(pbest − x) +
/// beta_g·(group_best − x) componentwise, clamped to ± v_max of each
/// component's bound range when a cap is configured.
pub fn update_velocity(
    p: &Particle,
    group_best: Pose,
    params: &SwarmParams,
    bounds: &ParameterBounds,
) -> [f64; 3] {
    velocity_update_scaled(p, group_best, params, bounds, [1.0; 3], [1.0; 3])
}

/// One PSO run from caller-supplied initial particles; returns the final
/// swarm. Positions are never clamped: the objective's out-of-image
/// penalty steers strays back and scale is hard-limited at evaluation.
pub(crate) fn pso_run_from<C: Cost, R: Rng>(
    params: &SwarmParams,
    cost: &mut C,
    rng: &mut R,
    initial: Vec<(Pose, [f64; 3])>,
) -> Vec<Particle> {
    let bounds = cost.bounds();
    let mut swarm: Vec<Particle> = initial
        .into_iter()
        .enumerate()
        .map(|(index, (position, velocity))| Particle {
            position,
            velocity,
            best_position: position,
            best_value: f64::INFINITY,
            index,
        })
        .collect();
    loop {
        if cost.remaining() == 0 {
            return swarm;
        }
        // Synchronous sweep: evaluate everyone, update individual bests,
        // then derive neighborhood bests before anything moves. A budget
        // that runs dry mid-sweep ends the run with the partial sweep's
        // best updates applied and no further movement.
        for p in &mut swarm {
            let Ok(error) = cost.eval(p.position) else {
                return swarm;
            };
            if error < p.best_value {
                p.best_value = error;
                p.best_position = p.position;
            }
        }
        let group_bests: Vec<Pose> = (0..swarm.len())
            .map(|i| neighborhood_best(&swarm, i, params.neighborhood_radius))
            .collect();
        for (p, &group_best) in swarm.iter_mut().zip(&group_bests) {
            p.velocity = if params.stochastic {
                let mut scale_i = [0.0; 3];
                let mut scale_g = [0.0; 3];
                for d in 0..3 {
                    scale_i[d] = rng.random::<f64>();
                    scale_g[d] = rng.random::<f64>();
                }
                velocity_update_scaled(p, group_best, params, &bounds, scale_i, scale_g)
            } else {
                update_velocity(p, group_best, params, &bounds)
            };
            let mut x = p.position.to_array();
            for (xd, vd) in x.iter_mut().zip(p.velocity) {
                *xd += vd;
            }
            p.position = Pose::from_array(x);
        }
    }
}

/// Standard entry: positions uniform over the bounds, velocities uniform
/// within ± init_velocity_fraction of each component's range. Per
/// particle, the position is drawn first, then the velocity components.
pub(crate) fn pso_run<C: Cost, R: Rng>(
    params: &SwarmParams,
    cost: &mut C,
    rng: &mut R,
) -> Vec<Particle> {
    let bounds = cost.bounds();
    let initial = (0..params.particle_count)
        .map(|_| {
            let position = random_pose(rng, &bounds);
            let mut velocity = [0.0; 3];
            for (d, v) in velocity.iter_mut().enumerate() {
                let half = params.init_velocity_fraction * bounds.range(d);
                *v = if half > 0.0 {
                    rng.random_range(-half..=half)
                } else {
                    0.0
                };
            }
            (position, velocity)
        })
        .collect();
    pso_run_from(params, cost, rng, initial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::{extract_template, synthetic_scene};
    use crate::objective::{ObjectiveConfig, ObjectiveEvaluator};
    use crate::optim::test_cost::QuadCost;
    use crate::optim::TrackedEvaluator;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bounds() -> ParameterBounds {
        ParameterBounds::new(0.0, 63.0, 0.0, 63.0, 0.1, 2.0)
    }

    fn particle_at(index: usize, x: f64, best_value: f64) -> Particle {
        let pose = Pose::new(x, 0.0, 1.0);
        Particle {
            position: pose,
            velocity: [0.0; 3],
            best_position: pose,
            best_value,
            index,
        }
    }

    #[test]
    fn velocity_reproduces_the_worked_value() {
        // 1-D slice with alpha = 0.99, betas = 0.01: v = 1, x = 0,
        // pbest = 2, nbest = 4 gives 0.99 + 0.02 + 0.04 = 1.05.
        let params = SwarmParams::default();
        let p = Particle {
            position: Pose::new(0.0, 0.0, 1.0),
            velocity: [1.0, 0.0, 0.0],
            best_position: Pose::new(2.0, 0.0, 1.0),
            best_value: 0.5,
            index: 0,
        };
        let v = update_velocity(&p, Pose::new(4.0, 0.0, 1.0), &params, &bounds());
        assert!((v[0] - 1.05).abs() < 1e-12, "v_x = {}", v[0]);
        assert_eq!(v[1], 0.0);
        assert_eq!(v[2], 0.0);
    }

    #[test]
    fn velocity_decays_geometrically_without_attraction() {
        let params = SwarmParams {
            alpha: 0.5,
            beta_i: 0.0,
            beta_g: 0.0,
            v_max: None,
            ..SwarmParams::default()
        };
        let mut p = particle_at(0, 10.0, 1.0);
        p.velocity = [1.0, -8.0, 0.25];
        for t in 1..=20 {
            p.velocity = update_velocity(&p, Pose::new(50.0, 3.0, 0.2), &params, &bounds());
            // Halving is exact in binary, so the decay must be bitwise.
            assert_eq!(p.velocity[0].to_bits(), 0.5f64.powi(t).to_bits());
            assert_eq!(p.velocity[1].to_bits(), (-8.0 * 0.5f64.powi(t)).to_bits());
        }
    }

    #[test]
    fn velocity_is_capped_per_component() {
        let params = SwarmParams {
            v_max: Some(0.25),
            ..SwarmParams::default()
        };
        let mut p = particle_at(0, 0.0, 1.0);
        p.velocity = [1e6, -1e6, 1.0];
        let v = update_velocity(&p, Pose::new(63.0, 63.0, 2.0), &params, &bounds());
        assert_eq!(v[0], 0.25 * 63.0);
        assert_eq!(v[1], -0.25 * 63.0);
        assert!(v[2].abs() <= 0.25 * 1.9);
    }

    #[test]
    fn ring_neighborhood_wraps_modulo() {
        let mut swarm: Vec<Particle> = (0..20).map(|i| particle_at(i, i as f64, 10.0)).collect();
        swarm[17].best_value = 1.0;
        // Particle 0's ring with radius 3 is {17, 18, 19, 0, 1, 2, 3}.
        assert_eq!(neighborhood_best(&swarm, 0, 3), swarm[17].best_position);
        // Particle 10's ring {7..=13} does not see particle 17.
        let b10 = neighborhood_best(&swarm, 10, 3);
        assert_eq!(b10, swarm[7].best_position, "tie inside 7..=13 goes to index 7");
    }

    #[test]
    fn full_coverage_radius_returns_the_global_best() {
        let mut swarm: Vec<Particle> = (0..6).map(|i| particle_at(i, i as f64, 5.0)).collect();
        swarm[4].best_value = 0.25;
        for i in 0..6 {
            assert_eq!(neighborhood_best(&swarm, i, 3), swarm[4].best_position);
        }
    }

    #[test]
    fn neighborhood_ties_resolve_to_the_lowest_index() {
        let swarm: Vec<Particle> = (0..20).map(|i| particle_at(i, i as f64, 7.0)).collect();
        assert_eq!(neighborhood_best(&swarm, 0, 3), swarm[0].best_position);
        assert_eq!(neighborhood_best(&swarm, 10, 3), swarm[7].best_position);
        assert_eq!(neighborhood_best(&swarm, 19, 3), swarm[0].best_position);
    }

    #[test]
    fn neighborhood_result_is_no_worse_than_any_member() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let swarm: Vec<Particle> = (0..20)
            .map(|i| particle_at(i, i as f64, rng.random::<f64>()))
            .collect();
        for i in 0..20 {
            let best = neighborhood_best(&swarm, i, 3);
            let best_value = swarm
                .iter()
                .find(|p| p.best_position == best)
                .unwrap()
                .best_value;
            for k in 0..=6usize {
                let j = (i + 20 + k - 3) % 20;
                assert!(best_value <= swarm[j].best_value);
            }
        }
    }

    #[test]
    fn swarm_spends_the_budget_in_whole_sweeps() {
        // Same seed, two budgets: the shorter run stops after the first
        // sweep, so its best is the initial best of the longer run.
        let target = Pose::new(40.0, 22.0, 1.3);
        let run = |budget: u32| {
            let mut cost = QuadCost::new(target, bounds(), budget);
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            pso_run(&SwarmParams::default(), &mut cost, &mut rng);
            (cost.used(), cost.best().unwrap().1)
        };
        let (used_full, best_full) = run(1000);
        assert_eq!(used_full, 1000, "20 particles and budget 1000 mean 50 sweeps");
        let (used_one_sweep, best_initial) = run(20);
        assert_eq!(used_one_sweep, 20);
        assert!(best_full < best_initial, "the swarm must improve on its start");
    }

    #[test]
    fn stationary_swarm_at_the_optimum_never_moves() {
        let scene = synthetic_scene(64, 64);
        let template = extract_template(&scene, 33.5, 30.5, 2.0, 24, 20).unwrap();
        let config = ObjectiveConfig::new(ParameterBounds::for_scene(&scene));
        let mut ev = ObjectiveEvaluator::new(&scene, &template, config, 200);
        let mut cost = TrackedEvaluator::new(&mut ev, false);
        let gt = Pose::new(33.5, 30.5, 0.5);
        let initial = vec![(gt, [0.0; 3]); 20];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let swarm = pso_run_from(&SwarmParams::default(), &mut cost, &mut rng, initial);
        for p in &swarm {
            assert_eq!(p.position, gt);
            assert_eq!(p.velocity, [0.0; 3]);
            assert_eq!(p.best_value, 0.0);
        }
        assert_eq!(cost.best().unwrap().1, 0.0);
    }

    #[test]
    fn particle_bests_stay_in_sync_with_their_positions() {
        let target = Pose::new(40.0, 22.0, 1.3);
        let mut cost = QuadCost::new(target, bounds(), 600);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let swarm = pso_run(&SwarmParams::default(), &mut cost, &mut rng);
        for p in &swarm {
            let fresh = cost.eval_free(p.best_position);
            assert_eq!(p.best_value.to_bits(), fresh.to_bits(), "particle {}", p.index);
            assert!(p.best_value <= fresh);
        }
    }

    #[test]
    fn stochastic_mode_differs_but_stays_seeded() {
        let params = SwarmParams {
            stochastic: true,
            ..SwarmParams::default()
        };
        let target = Pose::new(40.0, 22.0, 1.3);
        let run = |seed: u64| {
            let mut cost = QuadCost::new(target, bounds(), 400);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            pso_run(&params, &mut cost, &mut rng);
            cost.best().unwrap()
        };
        let (p1, v1) = run(5);
        let (p2, v2) = run(5);
        assert_eq!(p1, p2);
        assert_eq!(v1.to_bits(), v2.to_bits());
    }
}
