//! Probe a black-box objective for the constants the theory runs on.
//!
//! The smoothness constant bounds how far a cube's average loss sits above
//! its center value, scaled by the cube side to the power alpha. The
//! packing growth exponent beta measures how fast near-optimal volume
//! shrinks. Both benchmarks have known values, so the estimates can be
//! checked: the bowl has constant 10/12 and beta 1/2, the cone pair has
//! beta 1. The estimated constant also yields the sufficient threshold for
//! the adaptive policy's resolution bonus.
//!
//! Run with: cargo run --example diagnostics

use binsplit::diagnostics::{estimate_beta, estimate_smoothness, smoothness_profile};
use binsplit::objective::{Norm, Objective};
use binsplit::policy::validate_mu;
use binsplit::space::DecisionSpace;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> binsplit::Result<()> {
    let space = DecisionSpace::symmetric(1, 1.0, 1.0)?;
    let bowl = Objective::by_name("f1", 1, vec![0.5], Norm::L2)?;
    let cones = Objective::by_name("f2", 1, vec![0.5], Norm::L2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    let m_hat = estimate_smoothness(&bowl, &space, 2.0, 200, &mut rng)?;
    println!("bowl smoothness constant: {:.4} (exact 10/12 = {:.4})", m_hat.constant, 10.0 / 12.0);
    println!("  winning probe: side {:.4} at center {:+.4}", m_hat.scale, m_hat.center.coords()[0]);

    let check = validate_mu(7.6, m_hat.constant, 1, 2.0);
    println!(
        "  resolution bonus threshold: {:.3}; mu = 7.6 is {}",
        check.threshold,
        if check.sufficient { "sufficient" } else { "not sufficient" }
    );

    let beta_bowl = estimate_beta(&bowl, &space, 0.001, &[0.05, 0.1, 0.2, 0.4, 0.8])?;
    let beta_cones = estimate_beta(&cones, &space, 0.001, &[0.1, 0.2, 0.4, 0.8, 1.6])?;
    println!("\npacking growth: bowl {beta_bowl:.3} (exact 0.5), cones {beta_cones:.3} (exact 1.0)");

    // Declaring the wrong exponent is visible in the scale profile: under
    // alpha = 2 the cone pair's deviation ratios blow up as the probe cube
    // shrinks, instead of holding flat.
    println!("\ncone-pair deviation ratios, probed under two exponents:");
    println!("{:>10}  {:>12}  {:>12}", "side", "alpha = 1", "alpha = 2");
    let right = smoothness_profile(&cones, &space, 1.0, 200, &mut rng)?;
    let wrong = smoothness_profile(&cones, &space, 2.0, 200, &mut rng)?;
    for (r, w) in right.iter().zip(&wrong) {
        println!("{:>10.4}  {:>12.3}  {:>12.3}", r.scale, r.ratio, w.ratio);
    }
    Ok(())
}
