//! Downhill simplex search: plain Nelder-Mead with a coarse grid-scan
//! start chooser and restarts, plus the simulated-annealing variant that
//! adds thermal fluctuations to vertex comparisons.
//!
//! Both optimizers share one step engine. The annealed variant passes
//! per-vertex fluctuations drawn from the current temperature; plain
//! Nelder-Mead passes zeros and gets the textbook method. Stored vertex
//! values are always true objective values; fluctuations exist only in
//! the comparisons of a single step.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::objective::{ParameterBounds, Pose};
use crate::optim::{random_start, Cost};

const DIM: usize = 3;
const VERTS: usize = DIM + 1;

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Grid scan, tolerance and restart settings for the Nelder-Mead runner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexParams {
    /// Lattice counts (nx, ny, ns) for the start-choosing scan.
    pub grid: (usize, usize, usize),
    /// Largest share of the budget the scan may consume when charged;
    /// oversized grids are skipped in favor of a random start.
    pub grid_budget_fraction: f64,
    /// Whether scan evaluations count against the budget. Charged by
    /// default so the cross-algorithm comparison stays honest.
    pub charge_grid: bool,
    /// Convergence tolerance on the spread of vertex values.
    pub tol_f: f64,
    /// Convergence tolerance on the simplex diameter.
    pub tol_x: f64,
    /// Initial simplex edge, as a fraction of each parameter's bound
    /// range.
    pub initial_step_fraction: f64,
}

impl Default for SimplexParams {
    fn default() -> Self {
        SimplexParams {
            grid: (8, 8, 3),
            grid_budget_fraction: 0.2,
            charge_grid: true,
            tol_f: 1e-9,
            tol_x: 1e-6,
            initial_step_fraction: 0.05,
        }
    }
}

impl SimplexParams {
    pub fn validate(&self) -> Result<(), String> {
        let (nx, ny, ns) = self.grid;
        if nx == 0 || ny == 0 || ns == 0 {
            return Err("start grid counts must all be at least 1".into());
        }
        if !(self.grid_budget_fraction > 0.0 && self.grid_budget_fraction <= 1.0) {
            return Err("grid_budget_fraction must be in (0, 1]".into());
        }
        if !(self.tol_f > 0.0) || !(self.tol_x > 0.0) {
            return Err("tolerances must be positive".into());
        }
        if !(self.initial_step_fraction > 0.0 && self.initial_step_fraction <= 0.5) {
            return Err("initial_step_fraction must be in (0, 0.5]".into());
        }
        Ok(())
    }
}

/// Temperature schedule for the annealed simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealingSchedule {
    /// Starting temperature; `None` derives it at run time as
    /// max(initial simplex value spread, 1).
    pub t_initial: Option<f64>,
    /// Geometric cooling factor applied after each temperature block.
    pub decay: f64,
    /// Simplex steps spent at each temperature.
    pub iters_per_temp: u32,
    /// Boltzmann constant of the acceptance rule, dimensionless.
    pub k_b: f64,
}

impl Default for AnnealingSchedule {
    fn default() -> Self {
        AnnealingSchedule {
            t_initial: None,
            decay: 0.5,
            iters_per_temp: 10,
            k_b: 1.0,
        }
    }
}

/// Schedule plus stuck detection for the annealed simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealingParams {
    pub schedule: AnnealingSchedule,
    /// Evaluations without improvement of the simplex's best vertex
    /// before the simplex counts as stuck.
    pub stall_evals: u32,
    /// Diameter below which an unimproving simplex counts as stuck.
    pub stall_diameter: f64,
}

impl Default for AnnealingParams {
    fn default() -> Self {
        AnnealingParams {
            schedule: AnnealingSchedule::default(),
            stall_evals: 30,
            stall_diameter: 1e-3,
        }
    }
}

impl AnnealingParams {
    pub fn validate(&self) -> Result<(), String> {
        let s = &self.schedule;
        if let Some(t) = s.t_initial {
            if !(t > 0.0) {
                return Err("t_initial must be positive".into());
            }
        }
        if !(s.decay > 0.0 && s.decay < 1.0) {
            return Err("decay must be in (0, 1)".into());
        }
        if s.iters_per_temp == 0 {
            return Err("iters_per_temp must be at least 1".into());
        }
        if !(s.k_b > 0.0) {
            return Err("k_b must be positive".into());
        }
        if self.stall_evals == 0 {
            return Err("stall_evals must be at least 1".into());
        }
        if !(self.stall_diameter > 0.0) {
            return Err("stall_diameter must be positive".into());
        }
        Ok(())
    }
}

/// Four vertices with their true objective values, kept in sync: at any
/// point `values[i]` is exactly what evaluating `vertices[i]` returns.
#[derive(Debug, Clone)]
pub(crate) struct Simplex {
    vertices: [Pose; VERTS],
    values: [f64; VERTS],
}

impl Simplex {
    /// Largest distance between any two vertices.
    pub(crate) fn diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..VERTS {
            for j in (i + 1)..VERTS {
                d = d.max(self.vertices[i].distance(&self.vertices[j]));
            }
        }
        d
    }

    /// Best-to-worst gap of true values.
    pub(crate) fn spread(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        hi - lo
    }

    pub(crate) fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// What a step did; informational, used by tests and diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum StepKind {
    Reflect,
    Expand,
    ContractOutside,
    ContractInside,
    Shrink,
}

/// c + coeff * (p - c), componentwise.
fn combine(c: &[f64; DIM], p: &[f64; DIM], coeff: f64) -> Pose {
    let mut out = [0.0; DIM];
    for i in 0..DIM {
        out[i] = c[i] + coeff * (p[i] - c[i]);
    }
    Pose::from_array(out)
}

/// One simplex move. `fluct[i]` is added to `values[i]` for every
/// ordering and comparison in this step only; trial points are compared
/// by their true values. With zero fluctuations this is a textbook
/// Nelder-Mead step; with positive fluctuations the effective chance of
/// replacing a vertex with a point worse by Δ is exp(−Δ / scale), the
/// Metropolis rule.
///
/// Costs 1 to 5 evaluations; the caller checks the budget before the
/// step and the step finishes unconditionally.
pub(crate) fn simplex_step<C: Cost>(
    simplex: &mut Simplex,
    fluct: &[f64; VERTS],
    cost: &mut C,
) -> StepKind {
    fn put(simplex: &mut Simplex, at: usize, pose: Pose, value: f64) {
        simplex.vertices[at] = pose;
        simplex.values[at] = value;
    }

    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&a, &b| {
        (simplex.values[a] + fluct[a]).total_cmp(&(simplex.values[b] + fluct[b]))
    });
    let (best, second_worst, worst) = (order[0], order[2], order[3]);
    let noisy_best = simplex.values[best] + fluct[best];
    let noisy_second_worst = simplex.values[second_worst] + fluct[second_worst];
    let noisy_worst = simplex.values[worst] + fluct[worst];

    let mut centroid = [0.0; DIM];
    for &i in &order[..VERTS - 1] {
        let a = simplex.vertices[i].to_array();
        for d in 0..DIM {
            centroid[d] += a[d] / (VERTS - 1) as f64;
        }
    }
    let worst_arr = simplex.vertices[worst].to_array();

    let reflected = combine(&centroid, &worst_arr, -REFLECT);
    let y_r = cost.eval_overshoot(reflected);

    if y_r < noisy_best {
        let expanded = combine(&centroid, &reflected.to_array(), EXPAND);
        let y_e = cost.eval_overshoot(expanded);
        if y_e < y_r {
            put(simplex, worst, expanded, y_e);
            return StepKind::Expand;
        }
        put(simplex, worst, reflected, y_r);
        return StepKind::Reflect;
    }
    if y_r < noisy_second_worst {
        put(simplex, worst, reflected, y_r);
        return StepKind::Reflect;
    }
    if y_r < noisy_worst {
        let contracted = combine(&centroid, &reflected.to_array(), CONTRACT);
        let y_c = cost.eval_overshoot(contracted);
        if y_c <= y_r {
            put(simplex, worst, contracted, y_c);
            return StepKind::ContractOutside;
        }
    } else {
        let contracted = combine(&centroid, &worst_arr, CONTRACT);
        let y_c = cost.eval_overshoot(contracted);
        if y_c < noisy_worst {
            put(simplex, worst, contracted, y_c);
            return StepKind::ContractInside;
        }
    }

    let best_arr = simplex.vertices[best].to_array();
    for &i in &order[1..] {
        let shrunk = combine(&best_arr, &simplex.vertices[i].to_array(), SHRINK);
        simplex.vertices[i] = shrunk;
        simplex.values[i] = cost.eval_overshoot(shrunk);
    }
    StepKind::Shrink
}

/// The start-choosing scan asked for more evaluations than its share of
/// the budget allows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct GridTooLarge {
    pub grid_evals: usize,
    pub allowed: usize,
}

/// Evaluates a regular (nx, ny, ns) lattice over the bounds and returns
/// the minimal-error lattice pose. Single-count axes use the interval
/// midpoint. Charged evaluations count against the shared budget.
pub(crate) fn choose_start<C: Cost>(
    cost: &mut C,
    grid: (usize, usize, usize),
    budget_fraction: f64,
    charge: bool,
) -> Result<Pose, GridTooLarge> {
    let (nx, ny, ns) = grid;
    let total = nx * ny * ns;
    assert!(total > 0, "grid counts must be at least 1 each");
    if charge {
        let allowed = (budget_fraction * cost.budget() as f64).floor() as usize;
        if total > allowed {
            return Err(GridTooLarge {
                grid_evals: total,
                allowed,
            });
        }
    }
    let bounds = cost.bounds();
    let axis = |n: usize, lo: f64, hi: f64, i: usize| {
        if n == 1 {
            (lo + hi) / 2.0
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    };
    let mut best: Option<(Pose, f64)> = None;
    for k in 0..ns {
        let s = axis(ns, bounds.s_min, bounds.s_max, k);
        for j in 0..ny {
            let y = axis(ny, bounds.y_min, bounds.y_max, j);
            for i in 0..nx {
                let pose = Pose::new(axis(nx, bounds.x_min, bounds.x_max, i), y, s);
                let value = if charge {
                    match cost.eval(pose) {
                        Ok(v) => v,
                        Err(_) => {
                            return Ok(best.map(|(p, _)| p).unwrap_or(pose));
                        }
                    }
                } else {
                    cost.eval_free(pose)
                };
                if best.is_none_or(|(_, b)| value < b) {
                    best = Some((pose, value));
                }
            }
        }
    }
    Ok(best.expect("grid has at least one point").0)
}

/// Evaluates `start` plus one axis-bumped vertex per parameter. Bumps
/// point away from the nearer bound so the simplex starts inside the box.
/// Returns `None` when the budget dies mid-construction.
fn init_simplex_around<C: Cost>(
    start: Pose,
    bounds: &ParameterBounds,
    step_fraction: f64,
    cost: &mut C,
) -> Option<Simplex> {
    let mut vertices = [start; VERTS];
    let mut values = [0.0; VERTS];
    values[0] = cost.eval(start).ok()?;
    let start_arr = start.to_array();
    for d in 0..DIM {
        let (lo, hi) = bounds.interval(d);
        let step = step_fraction * (hi - lo);
        let mut arr = start_arr;
        arr[d] = if start_arr[d] + step > hi {
            start_arr[d] - step
        } else {
            start_arr[d] + step
        };
        let pose = Pose::from_array(arr);
        values[d + 1] = cost.eval(pose).ok()?;
        vertices[d + 1] = pose;
    }
    Some(Simplex { vertices, values })
}

/// Keeps `(best_pose, best_value)` as vertex 0 without re-evaluating it
/// (evaluation is pure, so the stored value still equals a fresh one) and
/// fills the rest with random evaluated poses, drawn penalty-free when
/// such poses exist.
fn restart_simplex<C: Cost, R: Rng>(
    keep: (Pose, f64),
    cost: &mut C,
    rng: &mut R,
) -> Option<Simplex> {
    let mut vertices = [keep.0; VERTS];
    let mut values = [keep.1; VERTS];
    for i in 1..VERTS {
        let pose = random_start(cost, rng);
        values[i] = cost.eval(pose).ok()?;
        vertices[i] = pose;
    }
    Some(Simplex { vertices, values })
}

/// Plain Nelder-Mead from an existing simplex. Returns `true` when both
/// tolerances were met and `false` when the budget ran out first.
pub(crate) fn nelder_mead<C: Cost>(
    cost: &mut C,
    simplex: &mut Simplex,
    tol_f: f64,
    tol_x: f64,
) -> bool {
    const NO_FLUCT: [f64; VERTS] = [0.0; VERTS];
    loop {
        if simplex.spread() < tol_f && simplex.diameter() < tol_x {
            return true;
        }
        if cost.remaining() == 0 {
            return false;
        }
        simplex_step(simplex, &NO_FLUCT, cost);
    }
}

/// Grid-seeded Nelder-Mead with restarts: scan for a start (when the
/// grid fits its budget share), descend, and on convergence restart from
/// a fresh random simplex that keeps the global best as one vertex,
/// until the budget is spent. Restarting spends leftover budget probing
/// other basins instead of stopping early.
pub(crate) fn run_simplex<C: Cost, R: Rng>(params: &SimplexParams, cost: &mut C, rng: &mut R) {
    let bounds = cost.bounds();
    let (nx, ny, ns) = params.grid;
    let grid_total = nx * ny * ns;
    let grid_allowed = (params.grid_budget_fraction * cost.budget() as f64).floor() as usize;
    let start = if !params.charge_grid || grid_total <= grid_allowed {
        match choose_start(cost, params.grid, params.grid_budget_fraction, params.charge_grid) {
            Ok(pose) => pose,
            Err(_) => unreachable!("grid size checked against the budget share"),
        }
    } else {
        random_start(cost, rng)
    };
    let Some(mut simplex) = init_simplex_around(start, &bounds, params.initial_step_fraction, cost)
    else {
        return;
    };
    loop {
        if !nelder_mead(cost, &mut simplex, params.tol_f, params.tol_x) {
            return;
        }
        let keep = cost.best().expect("initial simplex was evaluated");
        match restart_simplex(keep, cost, rng) {
            Some(next) => simplex = next,
            None => return,
        }
    }
}

/// Metropolis acceptance: a non-positive energy change always accepts; a
/// positive one accepts with probability exp(−delta_e / (k_b · temp)).
pub fn sa_accept<R: Rng>(delta_e: f64, temp: f64, k_b: f64, rng: &mut R) -> bool {
    assert!(temp > 0.0, "temperature must be positive");
    if delta_e <= 0.0 {
        return true;
    }
    rng.random::<f64>() < (-delta_e / (k_b * temp)).exp()
}

/// Positive thermal fluctuation of scale `k_b·temp`: −k_b·t·ln(u) with u
/// uniform on (0, 1].
fn thermal_fluctuation<R: Rng>(temp: f64, k_b: f64, rng: &mut R) -> f64 {
    -k_b * temp * (1.0 - rng.random::<f64>()).ln()
}

/// Run diagnostics for the annealed simplex; used by tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SaDiag {
    pub restarts: u32,
    pub final_temp: f64,
}

/// Annealed simplex search. Per step, each vertex's comparison value gets
/// an independent positive fluctuation of scale k_b·t while trial points
/// compete with their true values, which accepts an uphill replacement of
/// size Δ with probability exp(−Δ/(k_b·t)). Blocks of `iters_per_temp`
/// steps run at each temperature; after each block the simplex is
/// restarted if stuck (no best-vertex improvement for `stall_evals`
/// evaluations and diameter under `stall_diameter`), then t decays
/// geometrically. The global best is tracked on true values throughout.
pub(crate) fn simulated_annealing<C: Cost, R: Rng>(
    params: &AnnealingParams,
    cost: &mut C,
    rng: &mut R,
) -> SaDiag {
    let mut diag = SaDiag {
        restarts: 0,
        final_temp: 0.0,
    };
    let first = random_start(cost, rng);
    let Some(first_value) = cost.eval(first).ok() else {
        return diag;
    };
    let Some(mut simplex) = restart_simplex((first, first_value), cost, rng) else {
        return diag;
    };
    let mut t = params
        .schedule
        .t_initial
        .unwrap_or_else(|| simplex.spread().max(1.0));
    let mut best_vertex = simplex.min_value();
    let mut last_improvement = cost.used();
    loop {
        diag.final_temp = t;
        for _ in 0..params.schedule.iters_per_temp {
            if cost.remaining() == 0 {
                return diag;
            }
            let mut fluct = [0.0; VERTS];
            for f in &mut fluct {
                *f = thermal_fluctuation(t, params.schedule.k_b, rng);
            }
            simplex_step(&mut simplex, &fluct, cost);
            let now_best = simplex.min_value();
            if now_best < best_vertex {
                best_vertex = now_best;
                last_improvement = cost.used();
            }
        }
        let stuck = cost.used() - last_improvement >= params.stall_evals
            && simplex.diameter() < params.stall_diameter;
        if stuck {
            let keep = cost.best().expect("simplex was evaluated");
            match restart_simplex(keep, cost, rng) {
                Some(next) => simplex = next,
                None => return diag,
            }
            diag.restarts += 1;
            best_vertex = simplex.min_value();
            last_improvement = cost.used();
        }
        t *= params.schedule.decay;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::{extract_template, synthetic_scene};
    use crate::objective::{ObjectiveConfig, ObjectiveEvaluator};
    use crate::optim::test_cost::QuadCost;
    use crate::optim::random_pose;
    use crate::optim::TrackedEvaluator;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quad_bounds() -> ParameterBounds {
        ParameterBounds::new(0.0, 63.0, 0.0, 63.0, 0.1, 2.0)
    }

    fn quad(budget: u32) -> QuadCost {
        QuadCost::new(Pose::new(40.0, 22.0, 1.3), quad_bounds(), budget)
    }

    #[test]
    fn nelder_mead_converges_on_a_quadratic() {
        let mut cost = quad(1000);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let start = random_pose(&mut rng, &quad_bounds());
        let mut simplex = init_simplex_around(start, &quad_bounds(), 0.05, &mut cost).unwrap();
        let converged = nelder_mead(&mut cost, &mut simplex, 1e-9, 1e-6);
        assert!(converged, "quadratic must converge inside 1000 evals");
        let (pose, value) = cost.best().unwrap();
        assert!(pose.distance(&cost.target) < 1e-4, "off by {}", pose.distance(&cost.target));
        assert!(value < 1e-8);
        assert!(cost.used() < 1000, "used {} evals", cost.used());
    }

    #[test]
    fn nelder_mead_keeps_a_zero_error_start() {
        let scene = synthetic_scene(64, 64);
        let template = extract_template(&scene, 33.5, 30.5, 2.0, 24, 20).unwrap();
        let config = ObjectiveConfig::new(ParameterBounds::for_scene(&scene));
        let mut ev = ObjectiveEvaluator::new(&scene, &template, config, 400);
        let mut cost = TrackedEvaluator::new(&mut ev, false);
        let bounds = cost.bounds();
        let gt = Pose::new(33.5, 30.5, 0.5);
        let mut simplex = init_simplex_around(gt, &bounds, 0.05, &mut cost).unwrap();
        nelder_mead(&mut cost, &mut simplex, 1e-9, 1e-6);
        let (pose, value) = cost.best().unwrap();
        assert!(value <= 1e-9, "best error {value}");
        assert!(pose.distance(&gt) < 1e-9);
    }

    #[test]
    fn step_keeps_vertices_and_values_paired() {
        let mut cost = quad(10_000);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let start = random_pose(&mut rng, &quad_bounds());
        let mut simplex = init_simplex_around(start, &quad_bounds(), 0.05, &mut cost).unwrap();
        for step in 0..200 {
            let mut fluct = [0.0; VERTS];
            if step % 2 == 1 {
                for f in &mut fluct {
                    *f = thermal_fluctuation(5.0, 1.0, &mut rng);
                }
            }
            simplex_step(&mut simplex, &fluct, &mut cost);
            for i in 0..VERTS {
                let fresh = cost.eval_free(simplex.vertices[i]);
                assert_eq!(
                    simplex.values[i].to_bits(),
                    fresh.to_bits(),
                    "vertex {i} desynchronized at step {step}"
                );
            }
        }
    }

    #[test]
    fn choose_start_single_point_grid_returns_the_midpoint() {
        let mut cost = quad(100);
        let pose = choose_start(&mut cost, (1, 1, 1), 0.2, true).unwrap();
        assert_eq!(pose, Pose::new(31.5, 31.5, 1.05));
        assert_eq!(cost.used(), 1);
    }

    #[test]
    fn choose_start_finds_the_best_lattice_point_exhaustively() {
        let scene = synthetic_scene(64, 64);
        let template = extract_template(&scene, 33.5, 30.5, 2.0, 24, 20).unwrap();
        let config = ObjectiveConfig::new(ParameterBounds::for_scene(&scene));

        let mut ev = ObjectiveEvaluator::new(&scene, &template, config, 1000);
        let mut cost = TrackedEvaluator::new(&mut ev, false);
        let chosen = choose_start(&mut cost, (8, 8, 3), 0.2, true).unwrap();
        assert_eq!(ev.eval_count(), 192, "grid evaluations are charged");

        // Re-walk the same lattice independently; the chosen pose must be
        // at least as good as every lattice point.
        let chosen_error = ev.peek(chosen).error_p;
        let axis = |n: usize, lo: f64, hi: f64, i: usize| {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        };
        let bounds = ParameterBounds::for_scene(&scene);
        for k in 0..3 {
            for j in 0..8 {
                for i in 0..8 {
                    let pose = Pose::new(
                        axis(8, bounds.x_min, bounds.x_max, i),
                        axis(8, bounds.y_min, bounds.y_max, j),
                        axis(3, bounds.s_min, bounds.s_max, k),
                    );
                    assert!(chosen_error <= ev.peek(pose).error_p, "beaten at {pose}");
                }
            }
        }
    }

    #[test]
    fn choose_start_rejects_grids_beyond_the_budget_share() {
        let mut cost = quad(100);
        let err = choose_start(&mut cost, (8, 8, 3), 0.2, true).unwrap_err();
        assert_eq!(
            err,
            GridTooLarge {
                grid_evals: 192,
                allowed: 20
            }
        );
        assert_eq!(cost.used(), 0, "a rejected grid must not evaluate");
        // Uncharged scans are exempt from the check and the counter.
        choose_start(&mut cost, (8, 8, 3), 0.2, false).unwrap();
        assert_eq!(cost.used(), 0);
    }

    #[test]
    fn run_simplex_spends_the_whole_budget() {
        let mut cost = quad(1000);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        run_simplex(&SimplexParams::default(), &mut cost, &mut rng);
        // One step costs at most 5 evaluations, so the run must land in
        // [budget - 5, budget + 4]: a step only starts with budget left.
        assert!(cost.used() >= 995 && cost.used() <= 1004, "used {}", cost.used());
        let (pose, _) = cost.best().unwrap();
        assert!(pose.distance(&cost.target) < 1e-4);
    }

    #[test]
    fn run_simplex_budget_one_evaluates_once() {
        let mut cost = quad(1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        run_simplex(&SimplexParams::default(), &mut cost, &mut rng);
        assert_eq!(cost.used(), 1);
        assert!(cost.best().is_some());
    }

    #[test]
    fn restart_keeps_the_global_best_as_a_vertex() {
        let mut cost = quad(100);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let keep = (Pose::new(40.0, 22.0, 1.3), 0.0);
        let simplex = restart_simplex(keep, &mut cost, &mut rng).unwrap();
        assert_eq!(simplex.vertices[0], keep.0);
        assert_eq!(simplex.values[0], keep.1);
        assert_eq!(cost.used(), 3, "kept vertex is not re-evaluated");
    }

    #[test]
    fn sa_accept_never_rejects_downhill() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100_000 {
            assert!(sa_accept(-1.0, 2.0, 1.0, &mut rng));
        }
        assert!(sa_accept(0.0, 2.0, 1.0, &mut rng), "zero change always accepts");
    }

    #[test]
    fn sa_accept_matches_the_metropolis_rate_at_unit_ratio() {
        // delta_e = k_b * temp gives acceptance probability e^-1. Over 1e5
        // trials the empirical rate must sit within 3 standard errors,
        // sqrt(p(1-p)/n) = 0.001525, so within ±0.0046.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 100_000;
        let accepted = (0..n).filter(|_| sa_accept(3.0, 1.5, 2.0, &mut rng)).count();
        let rate = accepted as f64 / n as f64;
        assert!((rate - 0.3679).abs() < 0.0046, "rate {rate}");
    }

    #[test]
    fn sa_accept_rejects_infinite_uphill() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        assert!(!sa_accept(f64::INFINITY, 1.0, 1.0, &mut rng));
    }

    #[test]
    fn zero_temperature_annealing_replays_nelder_mead() {
        // With t -> 0 the fluctuations vanish, so every ordering and accept
        // decision matches plain Nelder-Mead: identical vertices, bit for
        // bit, over 100 scripted steps from the same simplex.
        let mut cost_nm = quad(10_000);
        let mut cost_sa = quad(10_000);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let start = random_pose(&mut rng, &quad_bounds());
        let mut nm = init_simplex_around(start, &quad_bounds(), 0.05, &mut cost_nm).unwrap();
        let mut sa = init_simplex_around(start, &quad_bounds(), 0.05, &mut cost_sa).unwrap();
        let mut fluct_rng = ChaCha8Rng::seed_from_u64(99);
        for step in 0..100 {
            let kind_nm = simplex_step(&mut nm, &[0.0; VERTS], &mut cost_nm);
            let mut fluct = [0.0; VERTS];
            for f in &mut fluct {
                *f = thermal_fluctuation(1e-12, 1.0, &mut fluct_rng);
            }
            let kind_sa = simplex_step(&mut sa, &fluct, &mut cost_sa);
            assert_eq!(kind_nm, kind_sa, "step {step} diverged");
            for i in 0..VERTS {
                assert_eq!(nm.vertices[i], sa.vertices[i], "vertex {i} at step {step}");
                assert_eq!(nm.values[i].to_bits(), sa.values[i].to_bits());
            }
        }
    }

    #[test]
    fn hot_fluctuations_accept_uphill_moves() {
        // At a high temperature the annealed step must sometimes keep a
        // reflected point that plain Nelder-Mead would only take after
        // contraction; detect this as runs where the simplex's worst true
        // value increases after a step.
        let mut cost = quad(100_000);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let start = random_pose(&mut rng, &quad_bounds());
        let mut simplex = init_simplex_around(start, &quad_bounds(), 0.05, &mut cost).unwrap();
        let mut uphill = 0;
        for _ in 0..2000 {
            let before = simplex.min_value();
            let mut fluct = [0.0; VERTS];
            for f in &mut fluct {
                *f = thermal_fluctuation(500.0, 1.0, &mut rng);
            }
            simplex_step(&mut simplex, &fluct, &mut cost);
            if simplex.min_value() > before {
                uphill += 1;
            }
        }
        assert!(uphill > 0, "hot annealing never moved uphill");
    }

    #[test]
    fn simulated_annealing_spends_the_budget_with_the_auto_temperature() {
        // Default schedule: t_initial from the initial value spread,
        // cooled by 0.8 per block. A 1000-eval run must stop inside the
        // one-step overshoot window with the temperature still positive.
        let mut cost = quad(1000);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let diag = simulated_annealing(&AnnealingParams::default(), &mut cost, &mut rng);
        assert!(cost.used() >= 995 && cost.used() <= 1004, "used {}", cost.used());
        assert!(diag.final_temp > 0.0);
        let (_, value) = cost.best().unwrap();
        assert!(value.is_finite());
    }

    #[test]
    fn simulated_annealing_restarts_when_stuck_and_converges_when_cold() {
        // A near-zero starting temperature makes every phase greedy, so
        // the simplex collapses onto the optimum, stalls, and restarts
        // repeatedly while the global best stays pinned.
        let params = AnnealingParams {
            schedule: AnnealingSchedule {
                t_initial: Some(1e-9),
                ..AnnealingSchedule::default()
            },
            ..AnnealingParams::default()
        };
        let mut cost = quad(1000);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let diag = simulated_annealing(&params, &mut cost, &mut rng);
        assert!(cost.used() >= 995 && cost.used() <= 1004, "used {}", cost.used());
        assert!(diag.restarts > 0, "convergent run never restarted");
        let (pose, value) = cost.best().unwrap();
        assert!(value < 1e-6, "best value {value}");
        assert!(
            pose.distance(&cost.target) < 1e-3,
            "distance {}",
            pose.distance(&cost.target)
        );
    }

    #[test]
    fn simulated_annealing_best_never_regresses() {
        // Global best is judged on true values: run twice with the same
        // seed, once with a spy recording every best, and check monotone.
        let mut cost = quad(800);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        simulated_annealing(&AnnealingParams::default(), &mut cost, &mut rng);
        let (_, final_best) = cost.best().unwrap();
        let mut cost2 = quad(400);
        let mut rng2 = ChaCha8Rng::seed_from_u64(3);
        simulated_annealing(&AnnealingParams::default(), &mut cost2, &mut rng2);
        let (_, half_best) = cost2.best().unwrap();
        assert!(final_best <= half_best, "more budget must not worsen the best");
    }
}
