//! Estimators that check an objective's regularity from samples alone.
//!
//! Two quantities drive both policy tuning and the rate predictions: the
//! smoothness constant (how far cube averages drift from center values,
//! relative to `a^alpha`) and the packing growth `beta` (how fast
//! near-optimal volume shrinks with the tolerance). Both are estimated
//! here without touching an objective's declared constants, so the
//! `diagnose` entry point can cross-check declarations against behavior
//! and suggest a safe exploration weight.
//!
//! The smoothness probe averages antithetic pairs `(u, 2x - u)`: mirroring
//! through the cube center cancels the linear part of the objective, which
//! otherwise dominates the Monte Carlo variance and would tie the sample
//! cost to the cube size. With the pairs, a few hundred draws resolve the
//! ratio at any scale.

use rand::{Rng, RngExt};

use crate::analysis::least_squares_line;
use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::space::{Bin, DecisionSpace, Point, sample_uniform};

/// Rungs of the dyadic scale ladder probed by the smoothness estimator.
const LADDER_RUNGS: usize = 5;
/// Monte Carlo pair batching and stopping parameters.
const PAIR_BATCH: usize = 64;
const MIN_PAIRS: usize = 128;
const COARSE_MAX_PAIRS: usize = 4_096;
const RUNG_MAX_PAIRS: usize = 32_768;
const FINAL_MAX_PAIRS: usize = 262_144;
const COARSE_REL_SE: f64 = 0.05;
const RUNG_REL_SE: f64 = 0.02;
const FINAL_REL_SE: f64 = 0.01;
/// Largest number of grid cells `estimate_beta` will enumerate.
const BETA_CELL_CAP: f64 = 1_000_000.5;

/// The largest cube-average deviation ratio found at one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleRatio {
    /// Cube side length probed.
    pub scale: f64,
    /// Largest observed `|cube average - center value| / scale^alpha`.
    pub ratio: f64,
}

/// The estimated smoothness constant and the probe that attained it.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessEstimate {
    /// Estimated constant: the largest deviation ratio found, re-measured
    /// at the winning probe so the reported value carries no selection
    /// bias.
    pub constant: f64,
    /// Cube side length of the winning probe.
    pub scale: f64,
    /// Cube center of the winning probe.
    pub center: Point,
}

fn validate_probe_args(objective: &Objective, space: &DecisionSpace, alpha: f64, samples: usize) -> Result<()> {
    if objective.dim() != space.dim() {
        return Err(Error::config(
            "diagnostics",
            format!("objective dimension {} does not match space dimension {}", objective.dim(), space.dim()),
        ));
    }
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::config("diagnostics.alpha", format!("alpha {alpha} must lie in (0, 2]")));
    }
    if samples < 100 {
        return Err(Error::config(
            "diagnostics.samples",
            format!("need at least 100 probe centers per scale, got {samples}"),
        ));
    }
    Ok(())
}

/// Averages antithetic pair deviations over the cube of side `a` centered
/// at `center`, in batches, until `done(|mean|, se)` approves or the pair
/// budget runs out. Returns `|mean deviation|`.
fn mean_abs_deviation<R: Rng + ?Sized>(
    objective: &Objective,
    center: &Point,
    a: f64,
    rng: &mut R,
    max_pairs: usize,
    mut done: impl FnMut(f64, f64) -> bool,
) -> Result<f64> {
    let center_value = objective.evaluate(center)?;
    let corner: Vec<f64> = center.coords().iter().map(|&x| x - a / 2.0).collect();
    let cube = Bin::new(corner, a, 0);
    let mut n = 0usize;
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    loop {
        for _ in 0..PAIR_BATCH {
            let u = sample_uniform(&cube, rng);
            let mirror =
                Point::new(center.coords().iter().zip(u.coords()).map(|(&x, &v)| 2.0 * x - v).collect());
            let pair = (objective.evaluate(&u)? + objective.evaluate(&mirror)?) / 2.0 - center_value;
            n += 1;
            let delta = pair - mean;
            mean += delta / n as f64;
            m2 += delta * (pair - mean);
        }
        let se = (m2 / (n as f64 * (n - 1) as f64)).sqrt();
        if n >= max_pairs || (n >= MIN_PAIRS && done(mean.abs(), se)) {
            return Ok(mean.abs());
        }
    }
}

/// Re-measures one probe until its standard error drops below
/// `rel_target` of its own magnitude, and returns the deviation ratio.
fn measure_ratio<R: Rng + ?Sized>(
    objective: &Objective,
    center: &Point,
    a: f64,
    alpha: f64,
    rel_target: f64,
    max_pairs: usize,
    rng: &mut R,
) -> Result<f64> {
    let dev = mean_abs_deviation(objective, center, a, rng, max_pairs, |abs_mean, se| {
        se <= rel_target * abs_mean
    })?;
    Ok(dev / a.powf(alpha))
}

/// Scans one rung: coarse-estimates the ratio at `samples` uniformly drawn
/// centers and returns the best probe. Coarse estimates stop once their
/// standard error is under 5% of the running maximum (theirs or the global
/// one), so cheap probes stay cheap and contenders get resolved.
fn rung_argmax<R: Rng + ?Sized>(
    objective: &Objective,
    space: &DecisionSpace,
    alpha: f64,
    a: f64,
    samples: usize,
    global_best: &mut f64,
    rng: &mut R,
) -> Result<(Point, f64)> {
    let scale_pow = a.powf(alpha);
    let mut best_center: Option<Point> = None;
    let mut best_ratio = f64::NEG_INFINITY;
    for _ in 0..samples {
        let center = Point::new(
            (0..space.dim()).map(|i| space.lower()[i] + rng.random::<f64>() * space.side(i)).collect(),
        );
        let target = *global_best;
        let dev = mean_abs_deviation(objective, &center, a, rng, COARSE_MAX_PAIRS, |abs_mean, se| {
            se <= COARSE_REL_SE * f64::max(target * scale_pow, abs_mean)
        })?;
        let ratio = dev / scale_pow;
        if ratio > best_ratio {
            best_ratio = ratio;
            best_center = Some(center);
        }
        if ratio > *global_best {
            *global_best = ratio;
        }
    }
    Ok((best_center.expect("samples >= 100"), best_ratio))
}

fn scan_ladder<R: Rng + ?Sized>(
    objective: &Objective,
    space: &DecisionSpace,
    alpha: f64,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<(f64, Point, f64)>> {
    validate_probe_args(objective, space, alpha, samples)?;
    let top = space.max_side() / 2.0;
    let mut global_best = 0.0f64;
    let mut rungs = Vec::with_capacity(LADDER_RUNGS);
    for k in 0..LADDER_RUNGS {
        let a = top * 2f64.powi(-(k as i32));
        let (center, _) = rung_argmax(objective, space, alpha, a, samples, &mut global_best, rng)?;
        let ratio = measure_ratio(objective, &center, a, alpha, RUNG_REL_SE, RUNG_MAX_PAIRS, rng)?;
        rungs.push((a, center, ratio));
    }
    Ok(rungs)
}

/// Probes the deviation ratio `|cube average - center| / a^alpha` on a
/// dyadic ladder of five scales starting at half the domain side, with
/// `samples` random cube centers per scale, and reports the per-scale
/// maxima.
///
/// Under a correctly declared exponent the ratios stay bounded across
/// scales; a declared `alpha` above the objective's true exponent makes
/// them grow as the scale shrinks, which is the signature callers should
/// look for.
pub fn smoothness_profile<R: Rng + ?Sized>(
    objective: &Objective,
    space: &DecisionSpace,
    alpha: f64,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<ScaleRatio>> {
    let rungs = scan_ladder(objective, space, alpha, samples, rng)?;
    Ok(rungs.into_iter().map(|(scale, _, ratio)| ScaleRatio { scale, ratio }).collect())
}

/// Estimates the smoothness constant: the largest deviation ratio over the
/// whole scale ladder.
///
/// The winning probe is re-measured to a 1% relative standard error before
/// being reported, so picking the maximum of many noisy estimates does not
/// inflate the result.
pub fn estimate_smoothness<R: Rng + ?Sized>(
    objective: &Objective,
    space: &DecisionSpace,
    alpha: f64,
    samples: usize,
    rng: &mut R,
) -> Result<SmoothnessEstimate> {
    let rungs = scan_ladder(objective, space, alpha, samples, rng)?;
    let (scale, center, _) = rungs
        .into_iter()
        .max_by(|a, b| a.2.total_cmp(&b.2))
        .expect("ladder has a fixed positive number of rungs");
    let constant = measure_ratio(objective, &center, scale, alpha, FINAL_REL_SE, FINAL_MAX_PAIRS, rng)?;
    Ok(SmoothnessEstimate { constant, scale, center })
}

/// Estimates the packing growth `beta` from sublevel-set volumes.
///
/// Tiles the space with cells of side `grid_a`, counts cells whose center
/// loss is within `eps` of the optimum for each `eps` in the ladder, and
/// fits the slope of `log(count * grid_a^d)` against `log(eps)`. Levels
/// with empty sublevel sets carry no point; levels where every cell
/// qualifies are saturated and carry no local information, so both are
/// dropped. Fewer than 3 informative levels is an insufficient-data error,
/// which is what a constant objective produces.
pub fn estimate_beta(objective: &Objective, space: &DecisionSpace, grid_a: f64, eps_ladder: &[f64]) -> Result<f64> {
    if objective.dim() != space.dim() {
        return Err(Error::config(
            "diagnostics",
            format!("objective dimension {} does not match space dimension {}", objective.dim(), space.dim()),
        ));
    }
    if !(grid_a > 0.0) || !grid_a.is_finite() {
        return Err(Error::config("diagnostics.grid_a", format!("cell side {grid_a} must be positive and finite")));
    }
    if eps_ladder.len() < 3 {
        return Err(Error::config(
            "diagnostics.eps_ladder",
            format!("need at least 3 tolerance levels, got {}", eps_ladder.len()),
        ));
    }
    for &eps in eps_ladder {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::config(
                "diagnostics.eps_ladder",
                format!("tolerance {eps} must be positive and finite"),
            ));
        }
    }
    let d = space.dim();
    let cells: f64 = (0..d).map(|i| (space.side(i) / grid_a).ceil()).product();
    if cells > BETA_CELL_CAP {
        return Err(Error::config(
            "diagnostics.grid_a",
            format!("cell side {grid_a} yields about {cells:.0} cells in dimension {d}, beyond the 1e6 cap"),
        ));
    }
    let bins = crate::space::make_grid(space, grid_a)?;
    let threshold: Vec<f64> = eps_ladder.iter().map(|&eps| objective.optimum_value() + eps).collect();
    let mut counts = vec![0u64; eps_ladder.len()];
    for bin in &bins {
        let value = objective.evaluate(&bin.center())?;
        for (count, &cut) in counts.iter_mut().zip(&threshold) {
            if value < cut {
                *count += 1;
            }
        }
    }
    let total = bins.len() as u64;
    let volume = grid_a.powi(d as i32);
    let points: Vec<(f64, f64)> = eps_ladder
        .iter()
        .zip(&counts)
        .filter(|&(_, &count)| count > 0 && count < total)
        .map(|(&eps, &count)| (eps.ln(), (count as f64 * volume).ln()))
        .collect();
    if points.len() < 3 {
        return Err(Error::insufficient(format!(
            "only {} of {} tolerance levels produced informative sublevel counts",
            points.len(),
            eps_ladder.len()
        )));
    }
    let min_x = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let max_x = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if min_x == max_x {
        return Err(Error::insufficient("tolerance levels must include at least two distinct values"));
    }
    let (slope, _) = least_squares_line(&points);
    Ok(slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::Norm;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_space(dim: usize) -> DecisionSpace {
        DecisionSpace::symmetric(dim, 1.0, 1.0).unwrap()
    }

    #[test]
    fn smoothness_recovers_the_bowl_constant() {
        // The bowl's cube average exceeds its center value by exactly
        // 10 d a^2 / 12 at every center and scale.
        for dim in [1usize, 2] {
            let f = Objective::quadratic_bowl(dim, vec![0.5; dim]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let est = estimate_smoothness(&f, &unit_space(dim), 2.0, 100, &mut rng).unwrap();
            let truth = 10.0 * dim as f64 / 12.0;
            let rel = (est.constant / truth - 1.0).abs();
            assert!(rel < 0.1, "dim {dim}: estimate {} vs {truth}, rel err {rel}", est.constant);
        }
    }

    #[test]
    fn smoothness_tracks_the_cone_constant() {
        // Worst cubes sit centered on a kink of the cone pair, where the
        // deviation ratio approaches 10/4 in one dimension.
        let f = Objective::distance_cones(1, vec![0.5], Norm::L2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let est = estimate_smoothness(&f, &unit_space(1), 1.0, 200, &mut rng).unwrap();
        assert!(
            est.constant > 2.1 && est.constant < 2.55,
            "estimate {} should sit just under 2.5",
            est.constant
        );
    }

    #[test]
    fn profile_flags_a_misdeclared_exponent() {
        // Probing the kinked objective with exponent 2 divides a roughly
        // scale-linear deviation by a^2, so the ratio must blow up as the
        // ladder descends. With the correct exponent 1 it stays bounded.
        let f = Objective::distance_cones(1, vec![0.5], Norm::L2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let wrong = smoothness_profile(&f, &unit_space(1), 2.0, 100, &mut rng).unwrap();
        assert_eq!(wrong.len(), 5);
        assert!(wrong[0].scale == 1.0 && wrong[4].scale == 0.0625);
        assert!(
            wrong[4].ratio > 2.0 * wrong[0].ratio,
            "declared exponent 2: ratios {:?} should grow down the ladder",
            wrong.iter().map(|r| r.ratio).collect::<Vec<_>>()
        );
        let right = smoothness_profile(&f, &unit_space(1), 1.0, 100, &mut rng).unwrap();
        assert!(
            right[4].ratio < 2.0 * right[0].ratio,
            "declared exponent 1: ratios {:?} should stay bounded",
            right.iter().map(|r| r.ratio).collect::<Vec<_>>()
        );
    }

    #[test]
    fn smoothness_of_a_constant_objective_is_zero() {
        let f = Objective::flat(1, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let est = estimate_smoothness(&f, &unit_space(1), 1.0, 100, &mut rng).unwrap();
        assert_eq!(est.constant, 0.0);
    }

    #[test]
    fn smoothness_rejects_bad_arguments() {
        let f = Objective::quadratic_bowl(1, vec![0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        assert!(estimate_smoothness(&f, &unit_space(1), 2.0, 99, &mut rng).is_err());
        assert!(estimate_smoothness(&f, &unit_space(1), 0.0, 100, &mut rng).is_err());
        assert!(estimate_smoothness(&f, &unit_space(1), 2.5, 100, &mut rng).is_err());
        assert!(estimate_smoothness(&f, &unit_space(2), 2.0, 100, &mut rng).is_err());
    }

    #[test]
    fn smoothness_is_deterministic_per_seed() {
        let f = Objective::quadratic_bowl(1, vec![0.5]).unwrap();
        let run = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            estimate_smoothness(&f, &unit_space(1), 2.0, 100, &mut rng).unwrap()
        };
        let a = run(12);
        let b = run(12);
        assert_eq!(a.constant.to_bits(), b.constant.to_bits());
        assert_eq!(a.center, b.center);
        assert_ne!(run(13).constant.to_bits(), a.constant.to_bits());
    }

    #[test]
    fn beta_estimates_match_sublevel_geometry() {
        let space = DecisionSpace::symmetric(1, 1.0, 0.0).unwrap();

        // Bowl sublevels are intervals of radius sqrt(eps/10): volume grows
        // like eps^(1/2).
        let f1 = Objective::quadratic_bowl(1, vec![0.5]).unwrap();
        let ladder = [0.05, 0.1, 0.2, 0.4, 0.8];
        let beta = estimate_beta(&f1, &space, 0.001, &ladder).unwrap();
        assert!((beta - 0.5).abs() < 0.02, "bowl beta {beta}");

        // Cone sublevels are two intervals of radius eps/10: volume grows
        // like eps^1.
        let f2 = Objective::distance_cones(1, vec![0.5], Norm::L2).unwrap();
        let ladder = [0.1, 0.2, 0.4, 0.8, 1.6];
        let beta = estimate_beta(&f2, &space, 0.001, &ladder).unwrap();
        assert!((beta - 1.0).abs() < 0.02, "cone beta {beta}");

        // In two dimensions the bowl's sublevels are disks: volume ~ eps.
        let space2 = DecisionSpace::symmetric(2, 1.0, 0.0).unwrap();
        let f1 = Objective::quadratic_bowl(2, vec![0.5, 0.5]).unwrap();
        let ladder = [0.05, 0.1, 0.2, 0.4, 0.8];
        let beta = estimate_beta(&f1, &space2, 0.01, &ladder).unwrap();
        assert!((beta - 1.0).abs() < 0.05, "bowl beta in 2d: {beta}");
    }

    #[test]
    fn beta_needs_informative_counts() {
        let space = DecisionSpace::symmetric(1, 1.0, 0.0).unwrap();
        let flat = Objective::flat(1, 1.0);
        // Every cell qualifies at every level: saturated, no information.
        match estimate_beta(&flat, &space, 0.01, &[0.1, 0.2, 0.4]) {
            Err(Error::InsufficientData { .. }) => {}
            other => panic!("expected insufficient data, got {other:?}"),
        }
        let f1 = Objective::quadratic_bowl(1, vec![0.5]).unwrap();
        // Levels so small no cell center qualifies are equally uninformative.
        match estimate_beta(&f1, &space, 0.25, &[1e-6, 2e-6, 4e-6]) {
            Err(Error::InsufficientData { .. }) => {}
            other => panic!("expected insufficient data, got {other:?}"),
        }
        assert!(estimate_beta(&f1, &space, 0.001, &[0.1, 0.2]).is_err());
        assert!(estimate_beta(&f1, &space, 0.001, &[0.1, -0.2, 0.4]).is_err());
        assert!(estimate_beta(&f1, &space, 0.0, &[0.1, 0.2, 0.4]).is_err());
        // A cell cap keeps misconfigured fine grids from exhausting memory.
        let space3 = DecisionSpace::symmetric(3, 1.0, 0.0).unwrap();
        let f3 = Objective::quadratic_bowl(3, vec![0.5; 3]).unwrap();
        assert!(estimate_beta(&f3, &space3, 0.001, &[0.1, 0.2, 0.4]).is_err());
    }
}
