//! Antenna-by-antenna placement on the transmit side with beamformers held
//! fixed, compared with a brute-force grid for a single antenna.
//!
//! ```text
//! cargo run --release --example placement_bsum
//! ```

use prafd::channel::sample_trial_realization;
use prafd::objective::refresh_auxiliary;
use prafd::placement::{
    bsum_optimize_side, curvature_bound, placement_objective, BsumOptions, Side, SurrogateContext,
};
use prafd::rng::{trial_rng, Stream};
use prafd::solver::{initial_beams, initialize_layout};
use prafd::{Channels, Point, ScenarioConfig};

fn main() -> prafd::Result<()> {
    for n in [1, 4] {
        let cfg = ScenarioConfig::default().with_users(2).with_antennas(n);
        let real = sample_trial_realization(&cfg, 11, 0)?;
        let layout = initialize_layout(&cfg, &mut trial_rng(11, 0, Stream::Layout))?;
        let ch = Channels::build(&layout, &real)?;
        let beams = initial_beams(&ch, &cfg);
        let aux = refresh_auxiliary(&beams, &ch, &cfg)?;
        let ctx = SurrogateContext::new(Side::Transmit, &real, &layout, &beams, &aux, &cfg)?;

        let (grad, tau) = curvature_bound(&ctx, &layout.transmit, 0)?;
        println!("N = {n}: antenna 0 gradient ({:+.3e}, {:+.3e}), τ = {tau:.3e}", grad.x, grad.y);

        let mut rng = trial_rng(11, 0, Stream::Placement);
        let opts = BsumOptions { epsilon: 1e-6, ..Default::default() };
        let out = bsum_optimize_side(&ctx, &layout.transmit, cfg.half_width(), cfg.d_min, &opts, &mut rng)?;
        let trace: Vec<String> = out.trace.iter().map(|v| format!("{v:.5}")).collect();
        println!("  f_4 per sweep: {}", trace.join(" -> "));

        if n == 1 {
            // λ/100 grid over the whole region.
            let h = cfg.half_width();
            let steps = (2.0 * h / (cfg.wavelength() / 100.0)).round() as usize;
            let mut best = f64::INFINITY;
            for i in 0..=steps {
                for j in 0..=steps {
                    let p = Point::new(-h + 2.0 * h * i as f64 / steps as f64, -h + 2.0 * h * j as f64 / steps as f64);
                    best = best.min(placement_objective(&ctx, &[p])?);
                }
            }
            println!("  grid minimum {best:.5}; BSUM stops at a stationary point {:.5}", out.trace.last().unwrap());
        }
    }
    Ok(())
}
