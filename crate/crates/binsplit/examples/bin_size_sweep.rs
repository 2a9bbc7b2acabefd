//! Regret versus bin size: how grid resolution trades bias against
//! exploration cost, and where the adaptive policy lands.
//!
//! Coarse grids pay a bias floor every round (no bin center is close to
//! the optimizer); fine grids pay to explore many bins. The adaptive
//! policy sidesteps the trade-off by refining only where the loss is low.
//!
//! Run with: cargo run --example bin_size_sweep

use binsplit::harness::{ExperimentConfig, TraceMode, sweep_bin_sizes};
use binsplit::objective::{NoiseModel, Norm, Objective};
use binsplit::policy::PolicySpec;
use binsplit::space::DecisionSpace;

fn main() -> binsplit::Result<()> {
    let dim = 2;
    let base = ExperimentConfig {
        space: DecisionSpace::symmetric(dim, 1.0, 1.0)?,
        objective: Objective::by_name("f1", dim, vec![0.5; dim], Norm::L2)?,
        noise: NoiseModel::gaussian(1.0)?,
        policy: PolicySpec::adaptive(2.0, 2.0, 14.2),
        horizon: 5_000,
        replications: 10,
        master_seed: 2024,
        trace: TraceMode::CumulativeOnly,
    };
    let lengths = [2.0, 1.0, 0.5, 0.25, 0.125];
    let table = sweep_bin_sizes(&base, &lengths)?;

    println!("f1, d = {dim}, horizon {}, {} replications\n", base.horizon, base.replications);
    println!("{:>10}  {:>12}  {:>8}", "bin side", "mean regret", "stderr");
    for row in &table.rows {
        println!("{:>10.3}  {:>12.1}  {:>8.1}", row.a, row.summary.mean_final_regret, row.summary.stderr_final_regret);
    }
    println!("{:>10}  {:>12.1}  {:>8.1}", "adaptive", table.adaptive.mean_final_regret, table.adaptive.stderr_final_regret);
    Ok(())
}
