//! The penalized registration error minimized by every optimizer in this
//! crate, with parameter bounds, scale hard-limiting and evaluation-budget
//! accounting.
//!
//! A pose maps each template pixel onto a scene coordinate; overlapping
//! pixels contribute a normalized sum-squared difference, and every
//! template pixel that lands outside the scene adds a large constant
//! penalty. The penalty steers the translation parameters back into range,
//! while the scale parameter is hard-limited before sampling.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::imagecore::Image;

/// The transformation parameter triple being optimized: horizontal
/// translation `x`, vertical translation `y` (scene pixels) and uniform
/// scale `s` (template-to-scene pixel ratio).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub s: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, s: f64) -> Self {
        Pose { x, y, s }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.s]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Pose {
            x: a[0],
            y: a[1],
            s: a[2],
        }
    }

    /// Euclidean distance to `other` in raw parameter space (pixels and
    /// scale units mixed unweighted).
    pub fn distance(&self, other: &Pose) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let ds = self.s - other.s;
        (dx * dx + dy * dy + ds * ds).sqrt()
    }
}

impl fmt::Display for Pose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(x={}, y={}, s={})", self.x, self.y, self.s)
    }
}

/// Search intervals for each pose parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterBounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub s_min: f64,
    pub s_max: f64,
}

impl ParameterBounds {
    pub fn new(
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        s_min: f64,
        s_max: f64,
    ) -> Self {
        assert!(x_min < x_max && y_min < y_max && s_min < s_max, "each min must be below its max");
        assert!(s_min > 0.0, "scale lower bound must be positive");
        ParameterBounds {
            x_min,
            x_max,
            y_min,
            y_max,
            s_min,
            s_max,
        }
    }

    /// Default search box for a scene: translations over the full image,
    /// scale in `[0.1, 2.0]` (small enough to avoid one-pixel templates
    /// matching anywhere, large enough to cover plausible magnifications).
    pub fn for_scene(scene: &Image) -> Self {
        Self::new(
            0.0,
            (scene.width() - 1) as f64,
            0.0,
            (scene.height() - 1) as f64,
            0.1,
            2.0,
        )
    }

    /// `(min, max)` of parameter `i` in `x, y, s` order.
    pub fn interval(&self, i: usize) -> (f64, f64) {
        match i {
            0 => (self.x_min, self.x_max),
            1 => (self.y_min, self.y_max),
            2 => (self.s_min, self.s_max),
            _ => panic!("pose has 3 parameters"),
        }
    }

    pub fn range(&self, i: usize) -> f64 {
        let (lo, hi) = self.interval(i);
        hi - lo
    }

    pub fn contains(&self, pose: &Pose) -> bool {
        pose.x >= self.x_min
            && pose.x <= self.x_max
            && pose.y >= self.y_min
            && pose.y <= self.y_max
            && pose.s >= self.s_min
            && pose.s <= self.s_max
    }

    /// Midpoint of the search box.
    pub fn center(&self) -> Pose {
        Pose::new(
            (self.x_min + self.x_max) / 2.0,
            (self.y_min + self.y_max) / 2.0,
            (self.s_min + self.s_max) / 2.0,
        )
    }
}

/// Hard-limits the scale parameter into the bounds. Translations are
/// returned unchanged: the out-of-image penalty pulls them back into range
/// on its own, while unchecked scale can cost unbounded memory or make a
/// one-pixel template match anywhere.
pub fn clamp_pose(pose: Pose, bounds: &ParameterBounds) -> Pose {
    Pose {
        x: pose.x,
        y: pose.y,
        s: pose.s.clamp(bounds.s_min, bounds.s_max),
    }
}

/// Penalty constant and bounds for the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    /// Penalty added per template pixel that maps outside the scene.
    /// Should dominate the SSD term, which is at most 1 under unit
    /// intensities.
    pub penalty_c: f64,
    pub bounds: ParameterBounds,
}

impl ObjectiveConfig {
    pub const DEFAULT_PENALTY: f64 = 1000.0;

    pub fn new(bounds: ParameterBounds) -> Self {
        ObjectiveConfig {
            penalty_c: Self::DEFAULT_PENALTY,
            bounds,
        }
    }

    pub fn with_penalty(mut self, penalty_c: f64) -> Self {
        assert!(penalty_c > 0.0, "penalty constant must be positive");
        self.penalty_c = penalty_c;
        self
    }
}

/// One evaluation's breakdown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveResult {
    /// Penalized error: `error_raw + out_pixels * penalty_c`. The quantity
    /// optimizers minimize.
    pub error_p: f64,
    /// Sum-squared difference over overlapping pixels, divided by the
    /// overlap count (0 when nothing overlaps).
    pub error_raw: f64,
    /// Template pixels whose mapped coordinate fell outside the scene.
    pub out_pixels: usize,
    /// Template pixels that sampled inside the scene.
    pub overlap: usize,
}

/// Signal that the evaluation budget has been used up; the caller must
/// stop (optimizers may finish the step they already started).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetExhausted {
    pub eval_budget: u32,
}

impl fmt::Display for BudgetExhausted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "evaluation budget of {} exhausted", self.eval_budget)
    }
}

impl std::error::Error for BudgetExhausted {}

/// Scene + template + penalty config + budget counter. One evaluator per
/// optimizer run; the counter has a single writer. The scene and template
/// are borrowed immutably, so distinct runs can share them concurrently.
#[derive(Debug)]
pub struct ObjectiveEvaluator<'a> {
    scene: &'a Image,
    template: &'a Image,
    config: ObjectiveConfig,
    eval_count: u32,
    eval_budget: u32,
}

impl<'a> ObjectiveEvaluator<'a> {
    pub fn new(
        scene: &'a Image,
        template: &'a Image,
        config: ObjectiveConfig,
        eval_budget: u32,
    ) -> Self {
        ObjectiveEvaluator {
            scene,
            template,
            config,
            eval_count: 0,
            eval_budget,
        }
    }

    pub fn config(&self) -> &ObjectiveConfig {
        &self.config
    }

    pub fn bounds(&self) -> &ParameterBounds {
        &self.config.bounds
    }

    pub fn eval_count(&self) -> u32 {
        self.eval_count
    }

    pub fn eval_budget(&self) -> u32 {
        self.eval_budget
    }

    /// Evaluations left before the budget is reached (0 once exhausted,
    /// also 0 if a finishing step overshot).
    pub fn remaining_budget(&self) -> u32 {
        self.eval_budget.saturating_sub(self.eval_count)
    }

    /// Evaluates the penalized error at `pose`, counting one evaluation.
    ///
    /// Fails with [`BudgetExhausted`] once the counter has reached the
    /// budget; it never fails before that.
    pub fn evaluate(&mut self, pose: Pose) -> Result<ObjectiveResult, BudgetExhausted> {
        if self.eval_count >= self.eval_budget {
            return Err(BudgetExhausted {
                eval_budget: self.eval_budget,
            });
        }
        Ok(self.evaluate_overshoot(pose))
    }

    /// Evaluates and counts unconditionally. Optimizers use this to finish
    /// a step they started while budget remained, so a run can end at most
    /// one step past the budget.
    pub fn evaluate_overshoot(&mut self, pose: Pose) -> ObjectiveResult {
        self.eval_count += 1;
        self.compute(pose)
    }

    /// The objective value without touching the counter. Used to re-check
    /// a run's reported best and by budget-exempt pre-processing scans.
    pub fn peek(&self, pose: Pose) -> ObjectiveResult {
        self.compute(pose)
    }

    /// Whether every template pixel maps inside the scene at `pose`, i.e.
    /// evaluating there incurs no out-of-image penalty. Pure geometry, no
    /// evaluation counted. Uses the same scale clamp as [`evaluate`](Self::evaluate).
    pub fn fully_visible(&self, pose: Pose) -> bool {
        let pose = clamp_pose(pose, &self.config.bounds);
        let half_u = (self.template.width() as f64 - 1.0) / 2.0;
        let half_v = (self.template.height() as f64 - 1.0) / 2.0;
        let max_x = (self.scene.width() - 1) as f64;
        let max_y = (self.scene.height() - 1) as f64;
        pose.x - half_u * pose.s >= 0.0
            && pose.x + half_u * pose.s <= max_x
            && pose.y - half_v * pose.s >= 0.0
            && pose.y + half_v * pose.s <= max_y
    }

    /// Pure function of (scene, template, config, pose): repeated calls
    /// with the same pose produce bit-identical results.
    fn compute(&self, pose: Pose) -> ObjectiveResult {
        let pose = clamp_pose(pose, &self.config.bounds);
        let (w, h) = (self.template.width(), self.template.height());
        let half_u = (w as f64 - 1.0) / 2.0;
        let half_v = (h as f64 - 1.0) / 2.0;
        let mut sum = 0.0f64;
        let mut overlap = 0usize;
        let mut out_pixels = 0usize;
        for v in 0..h {
            let sy = pose.y + (v as f64 - half_v) * pose.s;
            for u in 0..w {
                let sx = pose.x + (u as f64 - half_u) * pose.s;
                match self.scene.sample_bilinear(sx, sy) {
                    Some(a) => {
                        let d = a - self.template.pixel(u, v);
                        sum += d * d;
                        overlap += 1;
                    }
                    None => out_pixels += 1,
                }
            }
        }
        let error_raw = if overlap > 0 {
            sum / overlap as f64
        } else {
            0.0
        };
        ObjectiveResult {
            error_p: error_raw + out_pixels as f64 * self.config.penalty_c,
            error_raw,
            out_pixels,
            overlap,
        }
    }
}
