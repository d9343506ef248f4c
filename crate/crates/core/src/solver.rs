//! Alternating optimization over auxiliaries, beamformers, powers and
//! antenna positions.
//!
//! Each outer iteration refreshes `γ` and `y` at the current point (making
//! the surrogate tight), then improves the surrogate block by block: transmit
//! precoder, receive combiner, uplink powers, transmit positions, receive
//! positions. Since the surrogate lower-bounds the weighted sum-rate and is
//! tight at the start of the iteration, the rate never decreases.

use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::baselines::{gradient_descent_positions, GdOptions};
use crate::beamforming::{
    mrc_combiner, mrt_precoder, normalize_receive_columns, update_receive_beamformer, update_transmit_beamformer,
    update_uplink_power, BisectionOptions,
};
use crate::channel::{AntennaLayout, ChannelRealization, Channels, Point};
use crate::config::ScenarioConfig;
use crate::error::{config as config_error, Result};
use crate::objective::{quadratic_objective, refresh_auxiliary, user_rates, weighted_sum_rate, Auxiliary, Beamformers};
use crate::placement::{bsum_optimize_side, BsumOptions, HessianMode, Side, SurrogateContext};
use crate::rng::{trial_rng, Stream};

/// Rejection budget of [`initialize_layout`].
pub const MAX_LAYOUT_REJECTIONS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlacementMethod {
    /// Antenna-by-antenna surrogate minimization.
    #[default]
    Bsum,
    /// Joint projected gradient descent with backtracking.
    GradientDescent,
    /// Positions stay where they start.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoOptions {
    pub max_outer: usize,
    pub placement: PlacementMethod,
    pub max_sweeps: usize,
    pub simplified_geometry: bool,
    pub hessian: HessianMode,
    pub bisection: BisectionOptions,
    pub gd: GdOptions,
    /// Trial index; selects the random streams derived from the config seed.
    pub trial: u64,
}

impl Default for AoOptions {
    fn default() -> Self {
        Self {
            max_outer: 100,
            placement: PlacementMethod::Bsum,
            max_sweeps: 50,
            simplified_geometry: false,
            hessian: HessianMode::Analytic,
            bisection: BisectionOptions::default(),
            gd: GdOptions::default(),
            trial: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    /// Final weighted sum-rate, evaluated on the true channel.
    pub weighted_sum_rate: f64,
    pub dl_rates: Vec<f64>,
    pub ul_rates: Vec<f64>,
    pub outer_iterations: usize,
    pub bsum_sweeps: usize,
    pub wall_time_s: f64,
    pub layout: AntennaLayout,
    /// Final beamformers, receive columns normalized.
    pub beams: Beamformers,
    /// Rate seen by the optimizer: initial point, then after every iteration.
    pub objective_trace: Vec<f64>,
    /// The same points evaluated on the true channel (equal to
    /// `objective_trace` when the optimizer's CSI is exact).
    pub evaluated_trace: Vec<f64>,
    /// `|surrogate − rate| / rate` right after each auxiliary refresh.
    pub sandwich_gaps: Vec<f64>,
    /// Block updates that lowered the surrogate by more than 1e-9 relative.
    pub block_violations: usize,
    pub converged: bool,
    pub geometry_failures: usize,
    pub geometry_fallbacks: usize,
}

/// Uniform rejection sampling of both sides; fails after
/// [`MAX_LAYOUT_REJECTIONS`] rejected draws.
pub fn initialize_layout<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<AntennaLayout> {
    config.validate()?;
    let h = config.half_width();
    let mut rejections = 0;
    let mut side = |n: usize, rng: &mut R| -> Result<Vec<Point>> {
        let mut placed: Vec<Point> = Vec::with_capacity(n);
        while placed.len() < n {
            let p = Point::new(rng.random_range(-h..=h), rng.random_range(-h..=h));
            if placed.iter().all(|q| (p - q).norm() >= config.d_min) {
                placed.push(p);
            } else {
                rejections += 1;
                if rejections >= MAX_LAYOUT_REJECTIONS {
                    return Err(config_error(format!(
                        "could not place {n} antennas {} m apart in a {} m square",
                        config.d_min,
                        2.0 * h
                    )));
                }
            }
        }
        Ok(placed)
    };
    let transmit = side(config.n_t, rng)?;
    let receive = side(config.n_r, rng)?;
    Ok(AntennaLayout { transmit, receive })
}

/// MRT precoder at full DL power, MRC combiner, full UL power.
pub fn initial_beams(channels: &Channels, config: &ScenarioConfig) -> Beamformers {
    Beamformers {
        w_t: mrt_precoder(&channels.h_d, config.p_d_max),
        w_r: mrc_combiner(&channels.h_u),
        p_u: DVector::from_element(channels.h_u.ncols(), config.p_u_max),
    }
}

/// Runs the alternating optimization with exact CSI.
pub fn alternating_optimize(
    config: &ScenarioConfig,
    realization: &ChannelRealization,
    initial_layout: Option<&AntennaLayout>,
    options: &AoOptions,
) -> Result<TrialResult> {
    alternating_optimize_mismatched(config, realization, realization, initial_layout, options)
}

/// Optimizes against `estimate` while recording the rate each iterate
/// achieves on `truth`.
pub fn alternating_optimize_mismatched(
    config: &ScenarioConfig,
    estimate: &ChannelRealization,
    truth: &ChannelRealization,
    initial_layout: Option<&AntennaLayout>,
    options: &AoOptions,
) -> Result<TrialResult> {
    let started = Instant::now();
    config.validate()?;
    let mut layout = match initial_layout {
        Some(l) => l.clone(),
        None => initialize_layout(config, &mut trial_rng(config.seed, options.trial, Stream::Layout))?,
    };
    layout.validate(config.half_width(), config.d_min)?;
    if layout.transmit.len() != config.n_t || layout.receive.len() != config.n_r {
        return Err(config_error("initial layout does not match the antenna counts"));
    }
    let mut rng: ChaCha8Rng = trial_rng(config.seed, options.trial, Stream::Placement);

    let mut channels = Channels::build(&layout, estimate)?;
    let mut beams = initial_beams(&channels, config);
    let evaluate = |beams: &Beamformers, layout: &AntennaLayout| -> Result<f64> {
        weighted_sum_rate(beams, &Channels::build(layout, truth)?, config)
    };
    let same_csi = std::ptr::eq(estimate, truth);

    let mut rate = weighted_sum_rate(&beams, &channels, config)?;
    let mut objective_trace = vec![rate];
    let mut evaluated_trace = vec![if same_csi { rate } else { evaluate(&beams, &layout)? }];
    let mut sandwich_gaps = Vec::new();
    let mut block_violations = 0;
    let mut bsum_sweeps = 0;
    let mut geometry_failures = 0;
    let mut geometry_fallbacks = 0;
    let mut converged = false;
    let mut iterations = 0;

    let bsum_opts = BsumOptions {
        max_sweeps: options.max_sweeps,
        epsilon: config.epsilon_bsum,
        simplified_geometry: options.simplified_geometry,
        ..BsumOptions::default()
    };

    while iterations < options.max_outer {
        iterations += 1;
        let aux = refresh_auxiliary(&beams, &channels, config)?;
        let mut surrogate = quadratic_objective(&beams, &aux, &channels, config)?;
        let gap = (surrogate - rate).abs();
        sandwich_gaps.push(if rate > 0.0 { gap / rate } else { gap });

        // Keeps a block update only if it does not lower the surrogate.
        let mut accept = |candidate: Beamformers, beams: &mut Beamformers, channels: &Channels| -> Result<()> {
            let value = quadratic_objective(&candidate, &aux, channels, config)?;
            if value >= surrogate {
                *beams = candidate;
                surrogate = value;
            } else if value < surrogate - 1e-9 * surrogate.abs() {
                block_violations += 1;
            }
            Ok(())
        };

        let w_t = update_transmit_beamformer(&beams, &aux, &channels, config, &options.bisection)?.w;
        accept(Beamformers { w_t, ..beams.clone() }, &mut beams, &channels)?;
        let w_r = update_receive_beamformer(&beams, &aux, &channels, config)?;
        accept(Beamformers { w_r, ..beams.clone() }, &mut beams, &channels)?;
        let p_u = update_uplink_power(&beams, &aux, &channels, config);
        accept(Beamformers { p_u, ..beams.clone() }, &mut beams, &channels)?;

        if options.placement != PlacementMethod::Fixed {
            for side in [Side::Transmit, Side::Receive] {
                let ctx = SurrogateContext::new(side, estimate, &layout, &beams, &aux, config)?.with_hessian(options.hessian);
                let start = match side {
                    Side::Transmit => &layout.transmit,
                    Side::Receive => &layout.receive,
                };
                let positions = match options.placement {
                    PlacementMethod::Bsum => {
                        let out = bsum_optimize_side(&ctx, start, config.half_width(), config.d_min, &bsum_opts, &mut rng)?;
                        bsum_sweeps += out.sweeps;
                        geometry_failures += out.geometry_failures;
                        geometry_fallbacks += out.geometry_fallbacks;
                        out.positions
                    }
                    PlacementMethod::GradientDescent => {
                        let gd = GdOptions {
                            epsilon: config.epsilon_bsum,
                            simplified_geometry: options.simplified_geometry,
                            ..options.gd
                        };
                        let out = gradient_descent_positions(&ctx, start, config.half_width(), config.d_min, &gd)?;
                        bsum_sweeps += out.steps;
                        out.positions
                    }
                    PlacementMethod::Fixed => unreachable!(),
                };
                let mut next = layout.clone();
                match side {
                    Side::Transmit => next.transmit = positions,
                    Side::Receive => next.receive = positions,
                }
                let next_channels = Channels::build(&next, estimate)?;
                let value = quadratic_objective(&beams, &aux, &next_channels, config)?;
                if value >= surrogate {
                    layout = next;
                    channels = next_channels;
                    surrogate = value;
                } else if value < surrogate - 1e-9 * surrogate.abs() {
                    block_violations += 1;
                }
            }
        }

        let new_rate = weighted_sum_rate(&beams, &channels, config)?;
        objective_trace.push(new_rate);
        evaluated_trace.push(if same_csi { new_rate } else { evaluate(&beams, &layout)? });
        let change = (new_rate - rate).abs();
        rate = new_rate;
        if change <= config.epsilon * rate.abs() || change <= 1e-12 {
            converged = true;
            break;
        }
    }

    let mut final_beams = beams;
    if final_beams.w_r.iter().all(|z| z.norm_sqr().is_finite()) {
        if let Ok(w) = normalize_receive_columns(&final_beams.w_r) {
            final_beams.w_r = w;
        }
    }
    let true_channels = Channels::build(&layout, truth)?;
    let (dl, ul) = user_rates(&final_beams, &true_channels, config)?;
    let weighted_sum_rate = dl.iter().chain(ul.iter()).zip(&config.weights).map(|(r, a)| r * a).sum();

    Ok(TrialResult {
        weighted_sum_rate,
        dl_rates: dl.iter().copied().collect(),
        ul_rates: ul.iter().copied().collect(),
        outer_iterations: iterations,
        bsum_sweeps,
        wall_time_s: started.elapsed().as_secs_f64(),
        layout,
        beams: final_beams,
        objective_trace,
        evaluated_trace,
        sandwich_gaps,
        block_violations,
        converged,
        geometry_failures,
        geometry_fallbacks,
    })
}

/// Auxiliary variables at the final point of a result, for inspection.
pub fn final_auxiliary(result: &TrialResult, realization: &ChannelRealization, config: &ScenarioConfig) -> Result<Auxiliary> {
    let channels = Channels::build(&result.layout, realization)?;
    refresh_auxiliary(&result.beams, &channels, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_trial_realization, PathGeometry, PathAngle};
    use crate::linalg::{c, CMatrix, CVector};
    use rand::SeedableRng;

    #[test]
    fn layouts_are_feasible_and_reproducible() {
        let cfg = ScenarioConfig::default();
        let a = initialize_layout(&cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = initialize_layout(&cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
        a.validate(cfg.half_width(), cfg.d_min).unwrap();

        let one = ScenarioConfig::default().with_antennas(1);
        assert_eq!(initialize_layout(&one, &mut ChaCha8Rng::seed_from_u64(0)).unwrap().transmit.len(), 1);
    }

    #[test]
    fn crowded_region_is_a_config_error() {
        let mut cfg = ScenarioConfig::default().with_antennas(40);
        cfg.region_wavelengths = 2.0;
        // Rejected either by the packing heuristic or by the rejection budget.
        let r = initialize_layout(&cfg, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(r, Err(crate::Error::Config(_))));
    }

    #[test]
    fn line_of_sight_smoke_scenario() {
        let mut cfg = ScenarioConfig::default().with_users(1).with_antennas(1);
        cfg.paths = 1;
        cfg.si_paths = 1;
        let real = ChannelRealization {
            geometry: PathGeometry {
                downlink: vec![vec![PathAngle::new(1.0, 0.4)]],
                uplink: vec![vec![PathAngle::new(2.0, 1.4)]],
                si_transmit: vec![PathAngle::new(0.7, 2.2)],
                si_receive: vec![PathAngle::new(1.9, 0.1)],
                downlink_distances: vec![40.0],
                uplink_distances: vec![60.0],
            },
            prm_downlink: vec![CVector::from_element(1, c(1e-4, 2e-5))],
            prm_uplink: vec![CVector::from_element(1, c(-3e-5, 1e-4))],
            prm_si: CMatrix::from_element(1, 1, c(1e-5, 1e-5)),
            h_iui: CMatrix::from_element(1, 1, c(1e-5, 0.0)),
            wavelength: cfg.wavelength(),
        };
        let res = alternating_optimize(&cfg, &real, None, &AoOptions::default()).unwrap();
        assert!(res.objective_trace.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        assert!(res.outer_iterations <= 20);
        assert!(res.converged);
    }

    #[test]
    fn no_power_means_no_rate() {
        let mut cfg = ScenarioConfig::default().with_users(1).with_antennas(2);
        cfg.p_d_max = 1e-40;
        cfg.p_u_max = 1e-40;
        let real = sample_trial_realization(&cfg, 1, 0).unwrap();
        let res = alternating_optimize(&cfg, &real, None, &AoOptions::default()).unwrap();
        assert!(res.weighted_sum_rate < 1e-12);
        assert!(res.outer_iterations <= 2);
    }

    #[test]
    fn default_trial_is_monotone_tight_and_deterministic() {
        let cfg = ScenarioConfig::default().with_users(2).with_antennas(2);
        let real = sample_trial_realization(&cfg, 5, 3).unwrap();
        let opts = AoOptions { trial: 3, ..Default::default() };
        let a = alternating_optimize(&cfg, &real, None, &opts).unwrap();
        assert!(a.objective_trace.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0)));
        assert!(a.sandwich_gaps.iter().all(|g| *g < 1e-9), "{:?}", a.sandwich_gaps);
        assert_eq!(a.block_violations, 0);
        a.layout.validate(cfg.half_width(), cfg.d_min).unwrap();
        assert!(a.beams.downlink_power() <= cfg.p_d_max * (1.0 + 1e-9));
        for u in 0..a.beams.w_r.ncols() {
            assert!((a.beams.w_r.column(u).norm() - 1.0).abs() < 1e-12);
        }
        let b = alternating_optimize(&cfg, &real, None, &opts).unwrap();
        assert_eq!(a.objective_trace, b.objective_trace);
        assert_eq!(a.layout, b.layout);
    }

    #[test]
    fn infeasible_initial_layout_is_rejected() {
        let cfg = ScenarioConfig::default().with_users(1).with_antennas(2);
        let real = sample_trial_realization(&cfg, 1, 0).unwrap();
        let bad = AntennaLayout {
            transmit: vec![Point::zeros(), Point::new(1e-4, 0.0)],
            receive: vec![Point::zeros(), Point::new(0.004, 0.0)],
        };
        assert!(alternating_optimize(&cfg, &real, Some(&bad), &AoOptions::default()).is_err());
    }
}
