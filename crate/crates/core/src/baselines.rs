//! Reference schemes: fixed planar arrays, half-duplex downlink-only
//! operation, and joint projected gradient descent over positions.

use crate::channel::{AntennaLayout, ChannelRealization, Point};
use crate::config::ScenarioConfig;
use crate::error::{config as config_error, Result};
use crate::geometry::{nearest_feasible_point, FeasibleRegionSpec};
use crate::placement::{placement_gradient, placement_objective, SurrogateContext};
use crate::solver::{alternating_optimize_mismatched, AoOptions, PlacementMethod, TrialResult};

/// Centred `⌈√N⌉ × ⌈√N⌉` grid with the given spacing, filled row by row.
pub fn upa_layout(n: usize, spacing: f64, half_width: f64) -> Result<Vec<Point>> {
    let side = (n as f64).sqrt().ceil() as usize;
    let extent = (side.saturating_sub(1)) as f64 * spacing;
    if extent > 2.0 * half_width * (1.0 + 1e-12) {
        return Err(config_error(format!(
            "{side}×{side} array with spacing {spacing} m does not fit a {} m region",
            2.0 * half_width
        )));
    }
    let offset = 0.5 * extent;
    Ok((0..n)
        .map(|i| {
            let (row, col) = (i / side, i % side);
            Point::new(col as f64 * spacing - offset, offset - row as f64 * spacing)
        })
        .collect())
}

/// Both sides as λ/2-spaced planar arrays.
pub fn upa_antenna_layout(config: &ScenarioConfig) -> Result<AntennaLayout> {
    let spacing = config.wavelength() / 2.0;
    Ok(AntennaLayout {
        transmit: upa_layout(config.n_t, spacing, config.half_width())?,
        receive: upa_layout(config.n_r, spacing, config.half_width())?,
    })
}

/// Fixed-position full-duplex baseline: beamformers and powers optimized,
/// antennas frozen in planar arrays.
pub fn solve_fpas(config: &ScenarioConfig, realization: &ChannelRealization, options: &AoOptions) -> Result<TrialResult> {
    solve_fpas_mismatched(config, realization, realization, options)
}

/// [`solve_fpas`] optimizing on `estimate` and evaluating on `truth`.
pub fn solve_fpas_mismatched(
    config: &ScenarioConfig,
    estimate: &ChannelRealization,
    truth: &ChannelRealization,
    options: &AoOptions,
) -> Result<TrialResult> {
    let layout = upa_antenna_layout(config)?;
    let opts = AoOptions {
        placement: PlacementMethod::Fixed,
        ..*options
    };
    alternating_optimize_mismatched(config, estimate, truth, Some(&layout), &opts)
}

/// Scenario with the uplink removed and the DL weights renormalized.
/// Returns the config and the original total DL weight.
pub fn downlink_only_config(config: &ScenarioConfig) -> Result<(ScenarioConfig, f64)> {
    if config.k_d == 0 {
        return Err(config_error("half-duplex baseline needs at least one DL user"));
    }
    let dl_weight: f64 = config.weights[..config.k_d].iter().sum();
    let mut cfg = config.clone();
    cfg.k_u = 0;
    cfg.weights = if dl_weight > 0.0 {
        config.weights[..config.k_d].iter().map(|w| w / dl_weight).collect()
    } else {
        crate::config::equal_weights(config.k_d)
    };
    Ok((cfg, dl_weight))
}

/// Half-duplex baseline: the DL is served alone (no UL power, SI or IUI)
/// with positions optimized, and the reported rate is
/// `duplex_factor × Σ_k a_k R_k` over the DL users with their original weights.
pub fn solve_half_duplex(
    config: &ScenarioConfig,
    realization: &ChannelRealization,
    duplex_factor: f64,
    options: &AoOptions,
) -> Result<TrialResult> {
    solve_half_duplex_mismatched(config, realization, realization, duplex_factor, options)
}

/// [`solve_half_duplex`] optimizing on `estimate` and evaluating on `truth`.
pub fn solve_half_duplex_mismatched(
    config: &ScenarioConfig,
    estimate: &ChannelRealization,
    truth: &ChannelRealization,
    duplex_factor: f64,
    options: &AoOptions,
) -> Result<TrialResult> {
    if !(duplex_factor.is_finite() && duplex_factor >= 0.0) {
        return Err(config_error(format!("duplex factor must be nonnegative, got {duplex_factor}")));
    }
    let (cfg, dl_weight) = downlink_only_config(config)?;
    let est = estimate.downlink_only();
    let mut result = if std::ptr::eq(estimate, truth) {
        alternating_optimize_mismatched(&cfg, &est, &est, None, options)?
    } else {
        alternating_optimize_mismatched(&cfg, &est, &truth.downlink_only(), None, options)?
    };
    let scale = duplex_factor * dl_weight;
    result.weighted_sum_rate *= scale;
    result.objective_trace.iter_mut().for_each(|v| *v *= scale);
    result.evaluated_trace.iter_mut().for_each(|v| *v *= scale);
    result.dl_rates.iter_mut().for_each(|v| *v *= duplex_factor);
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdOptions {
    pub max_steps: usize,
    pub epsilon: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    pub max_halvings: usize,
    pub simplified_geometry: bool,
}

impl Default for GdOptions {
    fn default() -> Self {
        Self {
            max_steps: 200,
            epsilon: 1e-3,
            armijo: 1e-4,
            max_halvings: 40,
            simplified_geometry: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdOutcome {
    pub positions: Vec<Point>,
    pub trace: Vec<f64>,
    pub steps: usize,
}

/// Projects each moved antenna in index order onto the region minus the
/// discs of the antennas already placed.
fn project_sequential(target: &[Point], half_width: f64, d_min: f64, simplified: bool) -> Option<Vec<Point>> {
    let mut placed: Vec<Point> = Vec::with_capacity(target.len());
    for p in target {
        let spec = FeasibleRegionSpec::new(half_width, placed.clone(), d_min);
        placed.push(nearest_feasible_point(p, &spec, simplified).ok()?.point);
    }
    Some(placed)
}

/// Joint projected gradient descent on the placement objective.
///
/// The first trial step moves the fastest antenna by λ/2; steps are halved
/// until the Armijo condition `f(x⁺) ≤ f(x) + c ∇f·(x⁺ − x)` holds.
pub fn gradient_descent_positions(
    ctx: &SurrogateContext,
    start: &[Point],
    half_width: f64,
    d_min: f64,
    opts: &GdOptions,
) -> Result<GdOutcome> {
    let wavelength = 2.0 * std::f64::consts::PI / ctx.wavenumber();
    let mut positions = start.to_vec();
    let mut f = placement_objective(ctx, &positions)?;
    let mut trace = vec![f];
    let mut steps = 0;
    while steps < opts.max_steps {
        let grads = (0..positions.len())
            .map(|n| placement_gradient(ctx, &positions, n))
            .collect::<Result<Vec<_>>>()?;
        let g_max = grads.iter().map(|g| g.norm()).fold(0.0, f64::max);
        if g_max == 0.0 {
            break;
        }
        let mut alpha = 0.5 * wavelength / g_max;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let target: Vec<Point> = positions.iter().zip(&grads).map(|(p, g)| p - g * alpha).collect();
            if let Some(next) = project_sequential(&target, half_width, d_min, opts.simplified_geometry) {
                let f_next = placement_objective(ctx, &next)?;
                let slope: f64 = next.iter().zip(&positions).zip(&grads).map(|((a, b), g)| g.dot(&(a - b))).sum();
                if f_next <= f + opts.armijo * slope && f_next <= f {
                    accepted = Some((next, f_next));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((next, f_next)) = accepted else { break };
        steps += 1;
        let before = f;
        positions = next;
        f = f_next;
        trace.push(f);
        if (before - f).abs() <= opts.epsilon * before.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(GdOutcome { positions, trace, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample_trial_realization;
    use crate::solver::alternating_optimize;

    #[test]
    fn upa_examples() {
        let lambda = 0.01;
        let four = upa_layout(4, lambda / 2.0, 2.0 * lambda).unwrap();
        let q = lambda / 4.0;
        let mut expected = vec![Point::new(-q, q), Point::new(q, q), Point::new(-q, -q), Point::new(q, -q)];
        assert_eq!(four.len(), 4);
        for p in &four {
            let i = expected.iter().position(|e| (e - p).norm() < 1e-15).expect("corner");
            expected.remove(i);
        }
        assert_eq!(upa_layout(1, lambda / 2.0, lambda).unwrap(), vec![Point::zeros()]);
        let three = upa_layout(3, lambda / 2.0, lambda).unwrap();
        for i in 0..3 {
            for j in i + 1..3 {
                assert!((three[i] - three[j]).norm() >= lambda / 2.0 - 1e-15);
            }
        }
        assert!(upa_layout(16, lambda, lambda).is_err());
    }

    #[test]
    fn half_duplex_factor_scales_exactly() {
        let cfg = ScenarioConfig::default().with_users(1).with_antennas(2);
        let real = sample_trial_realization(&cfg, 2, 0).unwrap();
        let opts = AoOptions::default();
        let full = solve_half_duplex(&cfg, &real, 1.0, &opts).unwrap();
        let half = solve_half_duplex(&cfg, &real, 0.5, &opts).unwrap();
        assert_eq!(half.weighted_sum_rate, 0.5 * full.weighted_sum_rate);
        assert!(half.ul_rates.is_empty());
    }

    #[test]
    fn half_duplex_matches_downlink_only_full_duplex() {
        let mut cfg = ScenarioConfig::default().with_antennas(2);
        cfg.k_d = 2;
        cfg.k_u = 0;
        cfg.weights = vec![0.5, 0.5];
        let real = sample_trial_realization(&cfg, 4, 1).unwrap();
        let opts = AoOptions { trial: 1, ..Default::default() };
        let fd = alternating_optimize(&cfg, &real, None, &opts).unwrap();
        let hd = solve_half_duplex(&cfg, &real, 1.0, &opts).unwrap();
        assert!((fd.weighted_sum_rate - hd.weighted_sum_rate).abs() <= cfg.epsilon * fd.weighted_sum_rate);
    }

    #[test]
    fn fpas_keeps_the_array() {
        let cfg = ScenarioConfig::default().with_users(2).with_antennas(4);
        let real = sample_trial_realization(&cfg, 9, 0).unwrap();
        let res = solve_fpas(&cfg, &real, &AoOptions::default()).unwrap();
        assert_eq!(res.layout, upa_antenna_layout(&cfg).unwrap());
        assert!(res.objective_trace.windows(2).all(|w| w[1] >= w[0] - 1e-9));
    }
}
