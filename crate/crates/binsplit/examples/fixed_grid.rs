//! The fixed-grid policy, inspected bin by bin.
//!
//! Tiles [-1, 1] with bins of side 0.25, always queries bin centers, and
//! plays the bin with the lowest confidence bound on its mean loss. After
//! the run, the pull counts show how tightly exploration concentrated on
//! the bins nearest the optimizer at -0.5.
//!
//! Run with: cargo run --example fixed_grid

use binsplit::objective::{NoiseModel, Norm, Objective, noisy_observe};
use binsplit::policy::SimplePolicy;
use binsplit::space::DecisionSpace;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> binsplit::Result<()> {
    let space = DecisionSpace::symmetric(1, 1.0, 1.0)?;
    let objective = Objective::by_name("f1", 1, vec![0.5], Norm::L2)?;
    let noise = NoiseModel::gaussian(1.0)?;
    let mut policy = SimplePolicy::new(&space, 0.25)?;
    let mut policy_rng = ChaCha8Rng::seed_from_u64(3);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(1003);

    let horizon = 5_000u64;
    let mut regret = 0.0;
    for _ in 0..horizon {
        let query = policy.step(&mut policy_rng)?;
        let y = noisy_observe(&objective, &space, &query, &noise, &mut noise_rng)?;
        policy.observe(y)?;
        regret += objective.evaluate(&query)? - objective.optimum_value();
    }

    println!("cumulative regret after {horizon} rounds: {regret:.1}\n");
    println!("{:>8}  {:>6}  {:>10}  {:>10}", "center", "pulls", "mean loss", "lcb");
    let lcbs = policy.lcb_values();
    for (bin, lcb) in policy.bins().iter().zip(lcbs) {
        let center = bin.center().coords()[0];
        let mean = match bin.mean_loss() {
            Some(m) => format!("{m:10.3}"),
            None => " ".repeat(10),
        };
        println!("{center:>8.3}  {:>6}  {mean}  {lcb:>10.3}", bin.count());
    }
    Ok(())
}
