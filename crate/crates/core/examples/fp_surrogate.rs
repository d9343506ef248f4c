//! The quadratic-transform surrogate is tight once γ and y are refreshed,
//! and any other choice of the auxiliaries lower-bounds the rate.
//!
//! ```text
//! cargo run --release --example fp_surrogate
//! ```

use prafd::channel::sample_trial_realization;
use prafd::objective::{quadratic_objective, refresh_auxiliary, sinr_downlink, sinr_uplink, weighted_sum_rate};
use prafd::rng::{trial_rng, Stream};
use prafd::solver::{initial_beams, initialize_layout};
use prafd::{Channels, ScenarioConfig};

fn main() -> prafd::Result<()> {
    let cfg = ScenarioConfig::default().with_users(2).with_antennas(2);
    let real = sample_trial_realization(&cfg, 7, 0)?;
    let layout = initialize_layout(&cfg, &mut trial_rng(7, 0, Stream::Layout))?;
    let ch = Channels::build(&layout, &real)?;
    let beams = initial_beams(&ch, &cfg);

    let rate = weighted_sum_rate(&beams, &ch, &cfg)?;
    println!("DL SINR {:?}", sinr_downlink(&beams, &ch, &cfg)?.as_slice());
    println!("UL SINR {:?}", sinr_uplink(&beams, &ch, &cfg)?.as_slice());

    let aux = refresh_auxiliary(&beams, &ch, &cfg)?;
    let tight = quadratic_objective(&beams, &aux, &ch, &cfg)?;
    println!("rate {rate:.9}, surrogate at refreshed aux {tight:.9}, gap {:.1e}", (tight - rate).abs());

    // Stale auxiliaries from a different point.
    let mut stale = aux.clone();
    stale.gamma.iter_mut().for_each(|g| *g *= 0.5);
    stale.y.iter_mut().for_each(|y| *y *= 1.3);
    let loose = quadratic_objective(&beams, &stale, &ch, &cfg)?;
    println!("surrogate at stale aux {loose:.9} (≤ rate: {})", loose <= rate);
    Ok(())
}
