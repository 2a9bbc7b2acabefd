//! Drive a policy by hand against your own loss function.
//!
//! The policies never see the objective. Each round you ask for a query
//! point, evaluate it however you like, and tell the policy the noisy
//! value. Here the loss is a custom bumpy bowl the library knows nothing
//! about, observed through Gaussian noise.
//!
//! Run with: cargo run --example ask_tell

use binsplit::objective::NoiseModel;
use binsplit::policy::PolicySpec;
use binsplit::space::DecisionSpace;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bumpy_bowl(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    r2 + 0.3 * (6.0 * x[0]).sin() * (6.0 * x[1]).cos()
}

fn main() -> binsplit::Result<()> {
    let space = DecisionSpace::symmetric(2, 1.0, 1.0)?;
    let mut policy = PolicySpec::adaptive(2.0, 2.0, 9.0).build(&space)?;
    let noise = NoiseModel::gaussian(0.1)?;
    let mut policy_rng = ChaCha8Rng::seed_from_u64(42);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(1042);

    let mut best = f64::INFINITY;
    let mut best_at = Vec::new();
    for t in 1..=2000u64 {
        let query = policy.step(&mut policy_rng)?;
        let truth = bumpy_bowl(query.coords());
        policy.observe(truth + noise.draw(&mut noise_rng))?;
        if truth < best {
            best = truth;
            best_at = query.coords().to_vec();
        }
        if t % 500 == 0 {
            println!("round {t:4}: best true loss so far {best:.4}");
        }
    }
    println!("best query: ({:.3}, {:.3}) with true loss {best:.4}", best_at[0], best_at[1]);
    Ok(())
}
