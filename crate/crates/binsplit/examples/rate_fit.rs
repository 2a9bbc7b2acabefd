//! Measure an empirical convergence rate and compare it with theory.
//!
//! Runs the adaptive policy on the quadratic bowl over a ladder of
//! horizons, fits the slope of mean average regret against the horizon on
//! log-log axes, and prints the predicted slope for these constants
//! (alpha = 2, beta = 1/2, d = 1 gives an exponent of 1/2, so average
//! regret should fall roughly like T^(-1/2)).
//!
//! Run with: cargo run --example rate_fit

use binsplit::analysis::{fit_rate, rate_adaptive};
use binsplit::harness::{ExperimentConfig, TraceMode, replicate};
use binsplit::objective::{NoiseModel, Norm, Objective};
use binsplit::policy::PolicySpec;
use binsplit::space::DecisionSpace;

fn main() -> binsplit::Result<()> {
    let base = ExperimentConfig {
        space: DecisionSpace::symmetric(1, 1.0, 1.0)?,
        objective: Objective::by_name("f1", 1, vec![0.5], Norm::L2)?,
        noise: NoiseModel::gaussian(1.0)?,
        policy: PolicySpec::adaptive(2.0, 2.0, 7.6),
        horizon: 0,
        replications: 20,
        master_seed: 7,
        trace: TraceMode::CumulativeOnly,
    };

    println!("{:>8}  {:>14}  {:>10}", "horizon", "avg regret", "stderr/T");
    let mut points = Vec::new();
    for horizon in [500u64, 1_000, 2_000, 4_000, 8_000] {
        let mut cfg = base.clone();
        cfg.horizon = horizon;
        let summary = replicate(&cfg)?;
        println!(
            "{horizon:>8}  {:>14.5}  {:>10.5}",
            summary.mean_average_regret,
            summary.stderr_final_regret / horizon as f64
        );
        points.push((horizon as f64, summary.mean_average_regret));
    }

    let fit = fit_rate(&points)?;
    let declared = base.objective.assumption().expect("benchmark declares its constants");
    let theory = rate_adaptive(declared.alpha, declared.beta, 1)?;
    println!("\nfitted slope {:.3} (rms residual {:.3})", fit.slope, fit.rms_residual);
    println!("predicted slope {:.3}, up to log factors", -theory.exponent);
    Ok(())
}
