//! One pass of the three beamforming blocks on a fixed layout. Each block
//! solves its subproblem exactly, so the surrogate never goes down.
//!
//! ```text
//! cargo run --release --example beamformer_blocks
//! ```

use prafd::beamforming::{
    optimal_uplink_power, update_receive_beamformer, update_transmit_beamformer, update_uplink_power, BisectionOptions,
};
use prafd::channel::sample_trial_realization;
use prafd::objective::{quadratic_objective, refresh_auxiliary, weighted_sum_rate};
use prafd::rng::{trial_rng, Stream};
use prafd::solver::{initial_beams, initialize_layout};
use prafd::{Beamformers, Channels, ScenarioConfig};

fn main() -> prafd::Result<()> {
    let cfg = ScenarioConfig::default();
    let real = sample_trial_realization(&cfg, 3, 0)?;
    let layout = initialize_layout(&cfg, &mut trial_rng(3, 0, Stream::Layout))?;
    let ch = Channels::build(&layout, &real)?;
    let mut beams = initial_beams(&ch, &cfg);

    for round in 0..3 {
        let aux = refresh_auxiliary(&beams, &ch, &cfg)?;
        let f = |b: &Beamformers| quadratic_objective(b, &aux, &ch, &cfg);
        println!("round {round}: rate {:.4}", weighted_sum_rate(&beams, &ch, &cfg)?);

        let tx = update_transmit_beamformer(&beams, &aux, &ch, &cfg, &BisectionOptions::default())?;
        println!(
            "  W_t: μ = {:.3e}, power {:.4} / {:.4} W, {} bisection steps",
            tx.mu, tx.power, cfg.p_d_max, tx.iterations
        );
        let before = f(&beams)?;
        beams.w_t = tx.w;
        let after_t = f(&beams)?;
        beams.w_r = update_receive_beamformer(&beams, &aux, &ch, &cfg)?;
        let after_r = f(&beams)?;
        beams.p_u = update_uplink_power(&beams, &aux, &ch, &cfg);
        let after_p = f(&beams)?;
        println!("  surrogate {before:.4} -> W_t {after_t:.4} -> W_r {after_r:.4} -> p_U {after_p:.4}");
        println!("  p_U = {:?} W", beams.p_u.iter().map(|p| format!("{p:.2e}")).collect::<Vec<_>>());
    }

    // The scalar power subproblem max c1√p − c2 p on [0, p_max].
    for (c1, c2) in [(-1.0, 1.0), (2.0, 4.0), (10.0, 1.0)] {
        println!("c1 = {c1}, c2 = {c2}: p* = {}", optimal_uplink_power(c1, c2, 1.0));
    }
    Ok(())
}
