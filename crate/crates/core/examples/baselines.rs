//! Movable antennas against fixed arrays, gradient-descent placement and
//! half-duplex operation on the same channels.
//!
//! ```text
//! cargo run --release --example baselines -- [trials]
//! ```

use prafd::experiment::{run_experiment, Algorithm, ExperimentSpec};
use prafd::ScenarioConfig;

fn main() -> prafd::Result<()> {
    let trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50);
    let spec = ExperimentSpec {
        base: ScenarioConfig::default().with_users(2).with_antennas(2),
        algorithms: Algorithm::ALL.to_vec(),
        trials,
        seed: 1,
        ..Default::default()
    };
    let res = run_experiment(&spec)?;
    let fpas = res.aggregate(Algorithm::Fpas, None).map(|a| a.mean).unwrap_or(f64::NAN);
    for a in &res.aggregates {
        println!(
            "{:>20}: mean {:.4} bits/s/Hz ({:+.1}% vs fpas), median {:.1} iterations",
            a.algorithm.id(),
            a.mean,
            100.0 * (a.mean / fpas - 1.0),
            a.median_iterations
        );
    }
    Ok(())
}
