//! Benchmark objectives, noise, and smoothness bookkeeping.
//!
//! The two shipped benchmarks are a quadratic bowl (`f1`), smooth with
//! exponent 2, and a pair of distance cones (`f2`), kinked at its two
//! optima with exponent 1. Both are minimized over `[-1, 1]^d` in the
//! experiments and carry their exact smoothness/packing parameters so the
//! theory-facing code can validate regimes and predict rates. Synthetic
//! objectives (constant, one-dimensional step) back protocol tests and
//! estimator edge cases.

use rand::{Rng, RngExt};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::space::{DecisionSpace, Point};

/// Tolerance used when checking `beta <= d / alpha`.
const BETA_GUARD_EPS: f64 = 1e-12;

/// Expected distance from the center of a unit cube to a uniform point,
/// by dimension (index 0 unused). Evaluated once numerically; these feed
/// the kinked benchmark's smoothness constant.
const UNIT_CUBE_MEAN_L2: [f64; 4] = [f64::NAN, 0.25, 0.382598, 0.480296];
const UNIT_CUBE_MEAN_SUP: [f64; 4] = [f64::NAN, 0.25, 1.0 / 3.0, 0.375];

/// Norm used by the distance-cone benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L2,
    Sup,
}

impl Norm {
    fn eval(self, v: &[f64]) -> f64 {
        match self {
            Norm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Norm::Sup => v.iter().fold(0.0, |acc, x| acc.max(x.abs())),
        }
    }
}

/// Constants describing how regular an objective is: smoothness exponent
/// `alpha` and constant `m` (cube averages deviate from center values by at
/// most `m * a^alpha`), packing growth `beta` with constant `c0`, and the
/// scale `a_max` up to which the smoothness bound is asserted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionParams {
    pub alpha: f64,
    pub beta: f64,
    pub m: f64,
    pub c0: f64,
    pub a_max: f64,
}

impl AssumptionParams {
    /// Validates ranges and the compatibility bound `beta <= d / alpha`.
    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(Error::config(
                "assumption.alpha",
                format!("alpha {} must lie in (0, 2]", self.alpha),
            ));
        }
        if !(self.beta > 0.0) {
            return Err(Error::config(
                "assumption.beta",
                format!("beta {} must be positive", self.beta),
            ));
        }
        if !(self.m > 0.0) {
            return Err(Error::config("assumption.m", format!("m {} must be positive", self.m)));
        }
        if !(self.c0 > 0.0) {
            return Err(Error::config("assumption.c0", format!("c0 {} must be positive", self.c0)));
        }
        if !(self.a_max >= 0.0) {
            return Err(Error::config(
                "assumption.a_max",
                format!("a_max {} must be nonnegative", self.a_max),
            ));
        }
        check_beta_bound(self.alpha, self.beta, d)
    }
}

/// Rejects packing growth faster than the smoothness dimension allows:
/// `beta` may not exceed `d / alpha` (up to float slack). Faster growth
/// would mean near-optimal volume shrinks too slowly for the claimed
/// smoothness, a combination no objective can realize.
pub fn check_beta_bound(alpha: f64, beta: f64, d: usize) -> Result<()> {
    let limit = d as f64 / alpha;
    if beta > limit + BETA_GUARD_EPS {
        return Err(Error::guard(format!(
            "beta {beta} exceeds d/alpha = {limit} (packing growth incompatible with smoothness)"
        )));
    }
    Ok(())
}

/// The shapes an objective can take.
#[derive(Debug, Clone, PartialEq)]
enum Shape {
    /// `10 * ||x + offset||_2^2`, one minimum at `-offset`.
    QuadraticBowl { offset: Vec<f64> },
    /// `10 * min(||x - offset||, ||x + offset||)`, minima at both
    /// `offset` and `-offset`.
    DistanceCones { offset: Vec<f64>, norm: Norm },
    /// Constant loss everywhere; degenerate case for estimator tests.
    Flat { value: f64 },
    /// One-dimensional step: `low` strictly left of `threshold`, `high` at
    /// and right of it. Constant per grid half, so a two-bin tiling sees a
    /// clean two-armed bandit with gap `high - low`.
    StepFn { threshold: f64, low: f64, high: f64 },
}

/// A deterministic loss function over a fixed dimension, with its optimum
/// value and (when known) regularity constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    dim: usize,
    optimum_value: f64,
    shape: Shape,
    assumption: Option<AssumptionParams>,
}

impl Objective {
    /// The quadratic bowl benchmark (`f1`): `10 * ||x + offset||^2`.
    ///
    /// Exactly smooth with exponent 2 and constant `10 d / 12` (the cube
    /// average exceeds the center value by `10 d a^2 / 12` everywhere),
    /// with packing growth `beta = d / 2`.
    pub fn quadratic_bowl(dim: usize, offset: Vec<f64>) -> Result<Self> {
        if offset.len() != dim {
            return Err(Error::config(
                "objective.offset",
                format!("offset has {} coordinates, expected {dim}", offset.len()),
            ));
        }
        let assumption = AssumptionParams {
            alpha: 2.0,
            beta: dim as f64 / 2.0,
            m: 10.0 * dim as f64 / 12.0,
            c0: 2f64.powi(dim as i32),
            a_max: 2.0,
        };
        Ok(Objective {
            dim,
            optimum_value: 0.0,
            shape: Shape::QuadraticBowl { offset },
            assumption: Some(assumption),
        })
    }

    /// The twin distance-cone benchmark (`f2`):
    /// `10 * min(||x - offset||, ||x + offset||)`.
    ///
    /// Kinked at its two optima, so smooth only with exponent 1; the
    /// smoothness constant is `10 E||U||` for `U` uniform on a unit cube
    /// (the worst cube sits centered on an apex), and packing growth is
    /// `beta = d`. Dimensions above 3 get no precomputed constants.
    pub fn distance_cones(dim: usize, offset: Vec<f64>, norm: Norm) -> Result<Self> {
        if offset.len() != dim {
            return Err(Error::config(
                "objective.offset",
                format!("offset has {} coordinates, expected {dim}", offset.len()),
            ));
        }
        let assumption = if (1..=3).contains(&dim) {
            let mean_norm = match norm {
                Norm::L2 => UNIT_CUBE_MEAN_L2[dim],
                Norm::Sup => UNIT_CUBE_MEAN_SUP[dim],
            };
            Some(AssumptionParams {
                alpha: 1.0,
                beta: dim as f64,
                m: 10.0 * mean_norm,
                c0: 2f64.powi(dim as i32 + 1),
                a_max: 2.0,
            })
        } else {
            None
        };
        Ok(Objective {
            dim,
            optimum_value: 0.0,
            shape: Shape::DistanceCones { offset, norm },
            assumption,
        })
    }

    /// A constant objective; every point is optimal.
    pub fn flat(dim: usize, value: f64) -> Self {
        Objective { dim, optimum_value: value, shape: Shape::Flat { value }, assumption: None }
    }

    /// A one-dimensional step function with gap `high - low` at `threshold`.
    pub fn step(threshold: f64, low: f64, high: f64) -> Self {
        Objective {
            dim: 1,
            optimum_value: low.min(high),
            shape: Shape::StepFn { threshold, low, high },
            assumption: None,
        }
    }

    /// Looks up a benchmark by its registry name (`"f1"` or `"f2"`).
    pub fn by_name(name: &str, dim: usize, offset: Vec<f64>, norm: Norm) -> Result<Self> {
        match name {
            "f1" => Objective::quadratic_bowl(dim, offset),
            "f2" => Objective::distance_cones(dim, offset, norm),
            other => Err(Error::config(
                "objective.name",
                format!("unknown benchmark {other:?}; expected \"f1\" or \"f2\""),
            )),
        }
    }

    /// Evaluates the true loss at `x`.
    pub fn evaluate(&self, x: &Point) -> Result<f64> {
        if x.dim() != self.dim {
            return Err(Error::config(
                "point",
                format!("point has {} coordinates, objective expects {}", x.dim(), self.dim),
            ));
        }
        let v = x.coords();
        Ok(match &self.shape {
            Shape::QuadraticBowl { offset } => {
                10.0 * v.iter().zip(offset).map(|(x, c)| (x + c) * (x + c)).sum::<f64>()
            }
            Shape::DistanceCones { offset, norm } => {
                let minus: Vec<f64> = v.iter().zip(offset).map(|(x, c)| x - c).collect();
                let plus: Vec<f64> = v.iter().zip(offset).map(|(x, c)| x + c).collect();
                10.0 * norm.eval(&minus).min(norm.eval(&plus))
            }
            Shape::Flat { value } => *value,
            Shape::StepFn { threshold, low, high } => {
                if v[0] < *threshold { *low } else { *high }
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The minimal loss value, used as the regret baseline.
    pub fn optimum_value(&self) -> f64 {
        self.optimum_value
    }

    pub fn assumption(&self) -> Option<&AssumptionParams> {
        self.assumption.as_ref()
    }

    /// Replaces the declared regularity constants. Used to study a policy
    /// under a misdeclared regime or to declare constants for shapes that
    /// carry none; the replacement is validated wherever a declaration is.
    pub fn with_assumption(mut self, assumption: AssumptionParams) -> Self {
        self.assumption = Some(assumption);
        self
    }
}

/// Observation noise added to the true loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    Gaussian { scale: f64 },
}

impl NoiseModel {
    pub fn gaussian(scale: f64) -> Result<Self> {
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(Error::config(
                "noise.scale",
                format!("scale {scale} must be nonnegative and finite"),
            ));
        }
        Ok(NoiseModel::Gaussian { scale })
    }

    /// Draws one noise realization.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseModel::Gaussian { scale } => {
                let z: f64 = rng.sample(StandardNormal);
                scale * z
            }
        }
    }

    pub fn scale(&self) -> f64 {
        match self {
            NoiseModel::Gaussian { scale } => *scale,
        }
    }
}

/// One noisy function evaluation at `x`, which must lie inside the
/// margin-inflated domain.
pub fn noisy_observe<R: Rng + ?Sized>(
    objective: &Objective,
    space: &DecisionSpace,
    x: &Point,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<f64> {
    if !space.contains_inflated(x) {
        return Err(Error::config(
            "query point",
            format!("point {:?} lies outside the margin-inflated domain", x.coords()),
        ));
    }
    Ok(objective.evaluate(x)? + noise.draw(rng))
}
