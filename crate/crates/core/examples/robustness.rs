//! Optimizing on imperfect CSI and scoring on the true channel, for angle
//! errors and path-response errors.
//!
//! ```text
//! cargo run --release --example robustness
//! ```

use prafd::experiment::{run_experiment, Algorithm, ExperimentSpec};
use prafd::ScenarioConfig;

fn main() -> prafd::Result<()> {
    let base = ExperimentSpec {
        base: ScenarioConfig::default().with_users(2).with_antennas(2),
        algorithms: vec![Algorithm::FpBsum, Algorithm::Fpas],
        trials: 50,
        seed: 1,
        ..Default::default()
    };
    for sweep in ["theta_m=0,0.05,0.1,0.2", "sigma_e2=0,0.05,0.1,0.2"] {
        let spec = ExperimentSpec { sweep: Some(sweep.parse()?), ..base.clone() };
        let res = run_experiment(&spec)?;
        println!("{sweep}");
        for a in &res.aggregates {
            println!("  {:>5} {:>8}: {:.4}", a.sweep_value.unwrap_or_default(), a.algorithm.id(), a.mean);
        }
        // With imperfect CSI the true rate along the iterates need not rise.
        if let Some(v) = spec.points().last().copied().flatten() {
            let dips = res
                .successes(Algorithm::FpBsum, Some(v))
                .filter(|(_, r)| r.evaluated_trace.windows(2).any(|w| w[1] < w[0]))
                .count();
            println!("  trials whose true rate dipped at {v}: {dips}/{}", spec.trials);
        }
    }
    Ok(())
}
