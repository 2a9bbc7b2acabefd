//! Watch the adaptive policy split its way toward the optimizer.
//!
//! Bins start as one cube covering [-1, 1]^2 and split into quarters
//! whenever their sample budget fills. Resolution should end up
//! concentrated around the optimizer at (-0.5, -0.5): the depth histogram
//! and the location of the deepest bins show exactly that.
//!
//! Run with: cargo run --example adaptive_splitting

use binsplit::objective::{NoiseModel, Norm, Objective, noisy_observe};
use binsplit::policy::AdaptivePolicy;
use binsplit::space::DecisionSpace;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> binsplit::Result<()> {
    let space = DecisionSpace::symmetric(2, 1.0, 1.0)?;
    let objective = Objective::by_name("f1", 2, vec![0.5, 0.5], Norm::L2)?;
    let noise = NoiseModel::gaussian(1.0)?;
    let mut policy = AdaptivePolicy::new(&space, 2.0, 2.0, 9.0)?;
    let mut policy_rng = ChaCha8Rng::seed_from_u64(5);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(1005);

    let horizon = 20_000u64;
    let mut regret = 0.0;
    for _ in 0..horizon {
        let query = policy.step(&mut policy_rng)?;
        let y = noisy_observe(&objective, &space, &query, &noise, &mut noise_rng)?;
        policy.observe(y)?;
        regret += objective.evaluate(&query)? - objective.optimum_value();
    }
    println!("cumulative regret after {horizon} rounds: {regret:.1}");
    println!("live bins: {}, archived parents: {}\n", policy.live_bins().len(), policy.archived_bins().len());

    let max_depth = policy.live_bins().iter().map(|b| b.depth()).max().unwrap_or(0);
    println!("{:>6}  {:>8}  {:>6}", "depth", "side", "bins");
    for depth in 0..=max_depth {
        let count = policy.live_bins().iter().filter(|b| b.depth() == depth).count();
        if count > 0 {
            println!("{depth:>6}  {:>8.4}  {count:>6}", 2.0 * 0.5f64.powi(depth as i32));
        }
    }

    println!("\ndeepest bins sit near the optimizer:");
    for bin in policy.live_bins().iter().filter(|b| b.depth() == max_depth) {
        let c = bin.center();
        let dist = ((c.coords()[0] + 0.5).powi(2) + (c.coords()[1] + 0.5).powi(2)).sqrt();
        println!("  center ({:+.4}, {:+.4})  pulls {:>4}  distance to optimizer {dist:.4}",
            c.coords()[0], c.coords()[1], bin.count());
    }
    Ok(())
}
