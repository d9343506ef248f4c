//! Draws one channel realization, places antennas, and prints the channel
//! gains a layout sees.
//!
//! ```text
//! cargo run --release --example channel_realization -- [seed]
//! ```

use prafd::channel::{field_response_vector, sample_trial_realization};
use prafd::rng::{trial_rng, Stream};
use prafd::solver::initialize_layout;
use prafd::{Channels, ScenarioConfig};

fn main() -> prafd::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let cfg = ScenarioConfig::default().with_users(2).with_antennas(3);
    let real = sample_trial_realization(&cfg, seed, 0)?;
    let layout = initialize_layout(&cfg, &mut trial_rng(seed, 0, Stream::Layout))?;
    let lambda = cfg.wavelength();

    println!("λ = {:.2} mm, region {}λ × {}λ", lambda * 1e3, cfg.region_wavelengths, cfg.region_wavelengths);
    for (k, d) in real.geometry.downlink_distances.iter().enumerate() {
        println!("DL user {k}: {d:.1} m, {} paths", real.geometry.downlink[k].len());
    }
    for (n, t) in layout.transmit.iter().enumerate() {
        println!("tx {n}: ({:+.2}λ, {:+.2}λ)", t.x / lambda, t.y / lambda);
    }

    // Moving one antenna by a fraction of a wavelength changes the field
    // response phase of every path.
    let angles = &real.geometry.downlink[0];
    let here = field_response_vector(&layout.transmit[0], angles, lambda)?;
    let nudged = layout.transmit[0] + prafd::Point::new(lambda / 4.0, 0.0);
    let there = field_response_vector(&nudged, angles, lambda)?;
    let phase: Vec<String> = here.iter().zip(there.iter()).map(|(a, b)| format!("{:+.2}", (b / a).arg())).collect();
    println!("path phase shifts after a λ/4 move: [{}]", phase.join(", "));

    let ch = Channels::build(&layout, &real)?;
    println!("‖H_D‖_F² = {:.3e}", ch.h_d.norm_squared());
    println!("‖H_U‖_F² = {:.3e}", ch.h_u.norm_squared());
    println!("‖H_SI‖_F² = {:.3e}  (residual SI after cancellation)", ch.h_si.norm_squared());
    Ok(())
}
