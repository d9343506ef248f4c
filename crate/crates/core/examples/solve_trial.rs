//! Full alternating optimization for one trial, with the rate after every
//! outer iteration and the final antenna layout.
//!
//! ```text
//! cargo run --release --example solve_trial -- [seed]
//! ```

use prafd::channel::sample_trial_realization;
use prafd::{alternating_optimize, AoOptions, ScenarioConfig};

fn main() -> prafd::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let cfg = ScenarioConfig { seed, ..ScenarioConfig::default() };
    let real = sample_trial_realization(&cfg, seed, 0)?;
    let res = alternating_optimize(&cfg, &real, None, &AoOptions::default())?;

    for (i, r) in res.objective_trace.iter().enumerate() {
        println!("iter {i:>3}: {r:.5} bits/s/Hz");
    }
    println!("converged {} after {} iterations ({} placement sweeps)", res.converged, res.outer_iterations, res.bsum_sweeps);
    println!("DL rates {:?}", res.dl_rates.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>());
    println!("UL rates {:?}", res.ul_rates.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>());
    let lambda = cfg.wavelength();
    for (side, pts) in [("tx", &res.layout.transmit), ("rx", &res.layout.receive)] {
        let s: Vec<String> = pts.iter().map(|p| format!("({:+.2},{:+.2})", p.x / lambda, p.y / lambda)).collect();
        println!("{side} positions [λ]: {}", s.join(" "));
    }
    Ok(())
}
