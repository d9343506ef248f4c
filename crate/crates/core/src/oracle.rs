//! Brute-force verification suites for the closed-form block updates, the
//! placement derivatives and the geometry solver.
//!
//! Each suite draws its own instances from a seed and reports the number of
//! instances, the failures against its tolerance, and a few metrics. The
//! tolerances are those of the acceptance suite.

use std::fmt;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::beamforming::{
    optimal_uplink_power, receive_optimal_value, receive_quadratic_terms, receive_subproblem_objective,
    transmit_quadratic_terms, transmit_subproblem_objective, update_receive_beamformer, update_transmit_beamformer,
    BisectionOptions,
};
use crate::channel::{complex_normal, sample_realization, AntennaLayout, Channels, Point};
use crate::config::{equal_weights, ScenarioConfig};
use crate::error::Result;
use crate::geometry::{grid_nearest, nearest_feasible_point, FeasibleRegionSpec};
use crate::linalg::{frobenius_sq, hermitian_eigen, sym2_min_eigenvalue, CMatrix, C64};
use crate::objective::{refresh_auxiliary, weighted_sum_rate, Auxiliary, Beamformers};
use crate::placement::{finite_difference_hessian, placement_gradient, placement_objective, Side, SurrogateContext};
use crate::solver::initialize_layout;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub name: &'static str,
    pub instances: usize,
    pub failures: usize,
    /// Named summary values (worst errors, means).
    pub metrics: Vec<(&'static str, f64)>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.instances > 0
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {}/{} failures",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.failures,
            self.instances
        )?;
        for (name, v) in &self.metrics {
            write!(f, ", {name} = {v:.3e}")?;
        }
        Ok(())
    }
}

/// Unit-scale problem data: random channels, beamformers and the auxiliaries
/// that make the surrogate tight at them.
#[derive(Debug, Clone)]
pub struct Instance {
    pub config: ScenarioConfig,
    pub channels: Channels,
    pub beams: Beamformers,
    pub aux: Auxiliary,
}

fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, variance: f64) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng, variance))
}

/// Random instance with `N_t, N_r, K_D, K_U ∈ [1, 4]`, noise power in
/// `[0.1, 1]` and budgets of order one.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R) -> Result<Instance> {
    let mut config = ScenarioConfig::default();
    config.n_t = rng.random_range(1..=4);
    config.n_r = rng.random_range(1..=4);
    config.k_d = rng.random_range(1..=4);
    config.k_u = rng.random_range(1..=4);
    config.sigma2 = rng.random_range(0.1..1.0);
    config.p_d_max = rng.random_range(0.5..10.0);
    config.p_u_max = rng.random_range(0.5..5.0);
    let raw: Vec<f64> = (0..config.users()).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    config.weights = raw.iter().map(|w| w / total).collect();
    if (config.weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        config.weights = equal_weights(config.users());
    }
    config.validate()?;
    let si_scale = rng.random_range(0.0..1.0);
    let channels = Channels {
        h_d: random_matrix(rng, config.n_t, config.k_d, 1.0),
        h_u: random_matrix(rng, config.n_r, config.k_u, 1.0),
        h_si: random_matrix(rng, config.n_r, config.n_t, si_scale),
        h_iui: random_matrix(rng, config.k_d, config.k_u, 0.1),
    };
    let mut w_t = random_matrix(rng, config.n_t, config.k_d, 1.0);
    let fill: f64 = rng.random_range(0.1..1.0);
    w_t *= C64::new((fill * config.p_d_max / frobenius_sq(&w_t)).sqrt(), 0.0);
    let w_r = random_matrix(rng, config.n_r, config.k_u, 1.0);
    let p_u = DVector::from_fn(config.k_u, |_, _| rng.random_range(0.05..1.0) * config.p_u_max);
    let beams = Beamformers { w_t, w_r, p_u };
    let aux = refresh_auxiliary(&beams, &channels, &config)?;
    Ok(Instance {
        config,
        channels,
        beams,
        aux,
    })
}

/// Projected (accelerated, restarted) gradient ascent on
/// `2Re Tr(H̄^H W) − Tr(W^H H W)` over the ball `‖W‖_F² ≤ p`.
pub fn projected_gradient_transmit(h: &CMatrix, h_bar: &CMatrix, p: f64, iterations: usize) -> CMatrix {
    let radius = p.sqrt();
    let project = |w: CMatrix| {
        let n = w.norm();
        if n > radius {
            w * C64::new(radius / n, 0.0)
        } else {
            w
        }
    };
    let (lambda, _) = hermitian_eigen(h);
    let lmax = lambda.iter().cloned().fold(0.0, f64::max);
    if lmax <= 0.0 {
        let n = h_bar.norm();
        return if n > 0.0 { h_bar * C64::new(radius / n, 0.0) } else { h_bar.clone() };
    }
    let step = 1.0 / (2.0 * lmax);
    let value = |w: &CMatrix| transmit_subproblem_objective(w, h_bar, h);
    let mut x = CMatrix::zeros(h_bar.nrows(), h_bar.ncols());
    let mut z = x.clone();
    let mut t = 1.0_f64;
    let mut fx = value(&x);
    for _ in 0..iterations {
        let grad = (h_bar - h * &z) * C64::new(2.0, 0.0);
        let next = project(&z + grad * C64::new(step, 0.0));
        let f_next = value(&next);
        if f_next < fx {
            // Restart the momentum when it overshoots.
            z = x.clone();
            t = 1.0;
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = &next + (&next - &x) * C64::new((t - 1.0) / t_next, 0.0);
        x = next;
        fx = f_next;
        t = t_next;
    }
    x
}

/// Transmit update against projected gradient: the closed form must reach
/// at least the oracle value within `rel_tol`, and spend the whole budget
/// (within `slack_tol`) whenever its multiplier is positive.
pub fn transmit_suite(instances: usize, seed: u64, rel_tol: f64, slack_tol: f64) -> Result<OracleReport> {
    let rows = (0..instances)
        .into_par_iter()
        .map(|i| -> Result<(bool, f64, f64, bool)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let inst = random_instance(&mut rng)?;
            let (h_bar, h_t) = transmit_quadratic_terms(&inst.beams, &inst.aux, &inst.channels, &inst.config);
            let upd = update_transmit_beamformer(
                &inst.beams,
                &inst.aux,
                &inst.channels,
                &inst.config,
                &BisectionOptions::default(),
            )?;
            let kkt = transmit_subproblem_objective(&upd.w, &h_bar, &h_t);
            let pg = projected_gradient_transmit(&h_t, &h_bar, inst.config.p_d_max, 20_000);
            let oracle = transmit_subproblem_objective(&pg, &h_bar, &h_t);
            let shortfall = (oracle - kkt) / oracle.abs().max(f64::MIN_POSITIVE);
            let p = inst.config.p_d_max;
            let power = frobenius_sq(&upd.w);
            let slack = if upd.mu > 0.0 { (power - p).abs() / p } else { 0.0 };
            let feasible = power <= p * (1.0 + 1e-12);
            Ok((shortfall <= rel_tol && slack < slack_tol && feasible, shortfall, slack, upd.mu > 0.0))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleReport {
        name: "transmit beamformer vs projected gradient",
        instances,
        failures: rows.iter().filter(|r| !r.0).count(),
        metrics: vec![
            ("worst_relative_shortfall", rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max)),
            ("worst_power_slack", rows.iter().map(|r| r.2).fold(0.0, f64::max)),
            ("active_budget_fraction", rows.iter().filter(|r| r.3).count() as f64 / instances as f64),
        ],
    })
}

/// Receive update against its closed-form optimal value, plus a central
/// finite-difference gradient of the receive objective at the update.
pub fn receive_suite(instances: usize, seed: u64, rel_tol: f64, grad_tol: f64) -> Result<OracleReport> {
    let rows = (0..instances)
        .into_par_iter()
        .map(|i| -> Result<(bool, f64, f64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let inst = random_instance(&mut rng)?;
            let w = update_receive_beamformer(&inst.beams, &inst.aux, &inst.channels, &inst.config)?;
            let (h_bar, h_r) = receive_quadratic_terms(&inst.beams, &inst.aux, &inst.channels, &inst.config);
            let y_u: Vec<C64> = inst.aux.y.iter().skip(inst.config.k_d).copied().collect();
            let value = receive_subproblem_objective(&w, &y_u, &h_bar, &h_r);
            let best = receive_optimal_value(&h_bar, &h_r)?;
            let rel = (value - best).abs() / best.abs().max(f64::MIN_POSITIVE);
            let step = 1e-5;
            let mut grad_sq = 0.0;
            for idx in 0..w.len() {
                for dir in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
                    let mut plus = w.clone();
                    let mut minus = w.clone();
                    plus[idx] += dir * step;
                    minus[idx] -= dir * step;
                    let d = (receive_subproblem_objective(&plus, &y_u, &h_bar, &h_r)
                        - receive_subproblem_objective(&minus, &y_u, &h_bar, &h_r))
                        / (2.0 * step);
                    grad_sq += d * d;
                }
            }
            let grad = grad_sq.sqrt();
            Ok((rel <= rel_tol && grad < grad_tol, rel, grad))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleReport {
        name: "receive beamformer closed form",
        instances,
        failures: rows.iter().filter(|r| !r.0).count(),
        metrics: vec![
            ("worst_relative_value_gap", rows.iter().map(|r| r.1).fold(0.0, f64::max)),
            ("worst_fd_gradient_norm", rows.iter().map(|r| r.2).fold(0.0, f64::max)),
        ],
    })
}

/// `c1 √p − c2 p` on a `grid`-point uniform grid of `[0, p_max]`; returns the
/// best point and the grid step.
pub fn grid_power(c1: f64, c2: f64, p_max: f64, grid: usize) -> (f64, f64) {
    let step = p_max / (grid - 1) as f64;
    let g = |p: f64| c1 * p.sqrt() - c2 * p;
    let best = (0..grid)
        .map(|i| i as f64 * step)
        .fold((f64::NEG_INFINITY, 0.0), |acc, p| if g(p) > acc.0 { (g(p), p) } else { acc });
    (best.1, step)
}

/// Uplink power rule against a 10⁴-point grid search. A quarter of the
/// draws have `c1 ≤ 0`, a tenth have `c2 = 0` and many have the cap binding.
pub fn power_suite(instances: usize, seed: u64) -> OracleReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst = 0.0_f64;
    let (mut zero_cases, mut cap_cases) = (0, 0);
    for _ in 0..instances {
        let u: f64 = rng.random();
        let c1 = if u < 0.25 { -rng.random_range(0.0..2.0) } else { rng.random_range(0.0..4.0) };
        let c2 = if rng.random::<f64>() < 0.1 { 0.0 } else { rng.random_range(0.0..2.0) };
        let p_max = rng.random_range(0.01..5.0);
        let p = optimal_uplink_power(c1, c2, p_max);
        let (p_grid, step) = grid_power(c1, c2, p_max, 10_000);
        let err = (p - p_grid).abs() / step;
        worst = worst.max(err);
        if !(err <= 1.0 && (0.0..=p_max).contains(&p)) {
            failures += 1;
        }
        zero_cases += usize::from(p == 0.0);
        cap_cases += usize::from(p == p_max);
    }
    OracleReport {
        name: "uplink power vs grid search",
        instances,
        failures,
        metrics: vec![
            ("worst_error_in_grid_steps", worst),
            ("zero_power_cases", zero_cases as f64),
            ("cap_binding_cases", cap_cases as f64),
        ],
    }
}

/// Analytic placement gradient against central differences with step
/// `1e-6 λ`, and the curvature bound against the finite-difference Hessian.
///
/// The gradient error is relative to `max(‖g_fd‖, τ_min/κ)`, which keeps
/// near-stationary antennas from dividing by round-off.
pub fn placement_suite(instances: usize, seed: u64, grad_tol: f64, psd_tol: f64) -> Result<OracleReport> {
    let rows = (0..instances)
        .into_par_iter()
        .map(|i| -> Result<(bool, f64, f64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let k = rng.random_range(1..=3);
            let mut config = ScenarioConfig::default().with_users(k);
            config.n_t = rng.random_range(1..=4);
            config.n_r = rng.random_range(1..=4);
            config.paths = rng.random_range(1..=8);
            let real = sample_realization(&config, &mut rng)?;
            let layout: AntennaLayout = initialize_layout(&config, &mut rng)?;
            let channels = Channels::build(&layout, &real)?;
            let mut w_t = channels.h_d.clone() + random_matrix(&mut rng, config.n_t, config.k_d, 1e-8);
            w_t *= C64::new((config.p_d_max / frobenius_sq(&w_t)).sqrt(), 0.0);
            let w_r = channels.h_u.clone() + random_matrix(&mut rng, config.n_r, config.k_u, 1e-8);
            let p_u = DVector::from_element(config.k_u, config.p_u_max);
            let beams = Beamformers { w_t, w_r, p_u };
            let aux = refresh_auxiliary(&beams, &channels, &config)?;
            let side = if rng.random() { Side::Transmit } else { Side::Receive };
            let ctx = SurrogateContext::new(side, &real, &layout, &beams, &aux, &config)?;
            let positions = match side {
                Side::Transmit => &layout.transmit,
                Side::Receive => &layout.receive,
            };
            let n = rng.random_range(0..positions.len());
            let step = 1e-6 * config.wavelength();
            let g = placement_gradient(&ctx, positions, n)?;
            let mut g_fd = Point::zeros();
            for a in 0..2 {
                let mut plus = positions.clone();
                let mut minus = positions.clone();
                plus[n][a] += step;
                minus[n][a] -= step;
                g_fd[a] = (placement_objective(&ctx, &plus)? - placement_objective(&ctx, &minus)?) / (2.0 * step);
            }
            let floor = ctx.tau_min / ctx.wavenumber();
            let grad_err = (g - g_fd).norm() / g_fd.norm().max(floor);
            let (_, tau) = crate::placement::curvature_bound(&ctx, positions, n)?;
            let h = finite_difference_hessian(&ctx, positions, n, step)?;
            let margin = sym2_min_eigenvalue(tau - h[0], -h[1], tau - h[2]);
            let h_scale = tau.max(h[0].abs().max(h[2].abs()).max(h[1].abs()));
            let psd_err = (-margin / h_scale).max(0.0);
            Ok((grad_err <= grad_tol && psd_err <= psd_tol, grad_err, psd_err))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleReport {
        name: "placement gradient and curvature bound",
        instances,
        failures: rows.iter().filter(|r| !r.0).count(),
        metrics: vec![
            ("worst_gradient_relative_error", rows.iter().map(|r| r.1).fold(0.0, f64::max)),
            ("worst_psd_violation", rows.iter().map(|r| r.2).fold(0.0, f64::max)),
        ],
    })
}

/// Random geometry problem: up to six pairwise-separated obstacles in the
/// square of side `A λ`, and a target that may lie outside it.
pub fn random_geometry<R: Rng + ?Sized>(rng: &mut R, region_wavelengths: f64, wavelength: f64) -> (FeasibleRegionSpec, Point) {
    let h = 0.5 * region_wavelengths * wavelength;
    let d_min = 0.5 * wavelength;
    let count = rng.random_range(0..=6);
    let mut obstacles: Vec<Point> = Vec::new();
    while obstacles.len() < count {
        let p = Point::new(rng.random_range(-h..=h), rng.random_range(-h..=h));
        if obstacles.iter().all(|o| (p - o).norm() >= d_min) {
            obstacles.push(p);
        }
    }
    // Half the targets sit near an obstacle, where the discs bind.
    let sp = if !obstacles.is_empty() && rng.random::<bool>() {
        let o = obstacles[rng.random_range(0..obstacles.len())];
        o + Point::new(rng.random_range(-d_min..d_min), rng.random_range(-d_min..d_min))
    } else {
        Point::new(rng.random_range(-1.3 * h..1.3 * h), rng.random_range(-1.3 * h..1.3 * h))
    };
    (FeasibleRegionSpec::new(h, obstacles, d_min).with_seed(rng.random()), sp)
}

/// Exact and simplified geometry against a `λ/200` grid oracle at `A = 4`.
/// Exact mode must be feasible and within one grid diagonal of the grid
/// optimum; simplified mode must be feasible with mean extra distance (over
/// exact mode) at most `simplified_tol · D_min`.
pub fn geometry_suite(instances: usize, seed: u64, simplified_tol: f64) -> Result<OracleReport> {
    let wavelength = ScenarioConfig::default().wavelength();
    let step = wavelength / 200.0;
    let diagonal = step * std::f64::consts::SQRT_2;
    let rows = (0..instances)
        .into_par_iter()
        .map(|i| -> Result<(bool, bool, f64, f64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let (spec, sp) = random_geometry(&mut rng, 4.0, wavelength);
            let exact = nearest_feasible_point(&sp, &spec, false)?.point;
            let simple = nearest_feasible_point(&sp, &spec, true)?.point;
            let grid = grid_nearest(&sp, &spec, step).expect("grid has a feasible point");
            let d_exact = (exact - sp).norm();
            let excess = d_exact - (grid - sp).norm();
            let exact_ok = spec.is_feasible(&exact) && excess <= diagonal;
            Ok((exact_ok, spec.is_feasible(&simple), excess / diagonal, (simple - sp).norm() - d_exact))
        })
        .collect::<Result<Vec<_>>>()?;
    let d_min = 0.5 * wavelength;
    let mean_extra = rows.iter().map(|r| r.3).sum::<f64>() / instances.max(1) as f64;
    let failures = rows.iter().filter(|r| !(r.0 && r.1)).count() + usize::from(mean_extra > simplified_tol * d_min);
    Ok(OracleReport {
        name: "nearest feasible point vs grid",
        instances,
        failures,
        metrics: vec![
            ("worst_excess_in_grid_diagonals", rows.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max)),
            ("simplified_infeasible", rows.iter().filter(|r| !r.1).count() as f64),
            ("simplified_mean_extra_over_d_min", mean_extra / d_min),
            ("simplified_worst_extra_over_d_min", rows.iter().map(|r| r.3).fold(0.0, f64::max) / d_min),
        ],
    })
}

/// Weighted sum-rate under positive rescaling of one receive column.
pub fn receive_scaling_suite(instances: usize, seed: u64, rel_tol: f64) -> Result<OracleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst = 0.0_f64;
    for _ in 0..instances {
        let inst = random_instance(&mut rng)?;
        let base = weighted_sum_rate(&inst.beams, &inst.channels, &inst.config)?;
        let mut beams = inst.beams.clone();
        let u = rng.random_range(0..beams.w_r.ncols());
        let c: f64 = rng.random_range(0.1..10.0);
        beams.w_r.column_mut(u).scale_mut(c);
        let scaled = weighted_sum_rate(&beams, &inst.channels, &inst.config)?;
        let rel = (scaled - base).abs() / base.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        if rel >= rel_tol {
            failures += 1;
        }
    }
    Ok(OracleReport {
        name: "receive column scaling invariance",
        instances,
        failures,
        metrics: vec![("worst_relative_change", worst)],
    })
}

/// Every suite at its acceptance size and tolerance.
pub fn run_all(seed: u64) -> Result<Vec<OracleReport>> {
    Ok(vec![
        transmit_suite(500, seed, 1e-4, 1e-6)?,
        receive_suite(500, seed, 1e-9, 1e-8)?,
        power_suite(1000, seed),
        placement_suite(1000, seed, 1e-4, 1e-6)?,
        geometry_suite(1000, seed, 0.05)?,
        receive_scaling_suite(1000, seed, 1e-9)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projected_gradient_matches_a_scalar_case() {
        // max 2·3·w − 2w² on |w|² ≤ 1: unconstrained optimum 1.5, clipped to 1.
        let h = CMatrix::from_element(1, 1, C64::new(2.0, 0.0));
        let hb = CMatrix::from_element(1, 1, C64::new(3.0, 0.0));
        let w = projected_gradient_transmit(&h, &hb, 1.0, 200);
        assert!((w[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn grid_power_examples() {
        let (p, step) = grid_power(2.0, 1.0, 4.0, 10_001);
        assert!((p - 1.0).abs() <= step);
        assert_eq!(grid_power(-1.0, 1.0, 4.0, 100).0, 0.0);
        assert_eq!(grid_power(1.0, 0.0, 4.0, 100).0, 4.0);
    }

    #[test]
    fn small_suites_pass() {
        for report in [
            transmit_suite(20, 1, 1e-4, 1e-6).unwrap(),
            receive_suite(20, 1, 1e-9, 1e-8).unwrap(),
            power_suite(50, 1),
            placement_suite(20, 1, 1e-4, 1e-6).unwrap(),
            receive_scaling_suite(50, 1, 1e-9).unwrap(),
        ] {
            assert!(report.passed(), "{report}");
        }
    }

    #[test]
    fn random_instances_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            let inst = random_instance(&mut rng).unwrap();
            inst.beams.check_power(&inst.config, 1e-12).unwrap();
            assert_eq!(inst.aux.y.len(), inst.config.users());
        }
    }
}
