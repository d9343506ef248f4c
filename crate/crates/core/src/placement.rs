//! Antenna placement by block successive upper-bound minimization.
//!
//! With the beamformers and auxiliary variables fixed, the part of the
//! quadratic-transform objective that depends on one side's positions is
//! (up to sign and a constant) a real quadratic form in that side's channel
//! entries. For the transmit side
//!
//! ```text
//! f_t = −2 Σ_k a'_k Re{ȳ_k h_k^H w_k} + Σ_k |y_k|² ‖W_t^H h_k‖² + Tr(H_SI^H Q H_SI R)
//! ```
//!
//! and for the receive side
//!
//! ```text
//! f_r = −2 Σ_u a'_u √p_u Re{ȳ_u h_u^H w_u} + Σ_u p_u h_u^H Q h_u + Tr(H_SI^H Q H_SI R)
//! ```
//!
//! with `a'_i = √(a_i(1+γ_i))`, `R = W_t W_t^H` and `Q = W_r diag(|y_U|²) W_r^H`.
//! Lowering `f` raises the surrogate by the same amount (in nats).
//!
//! Each antenna is moved in turn: the local gradient and Hessian give a
//! quadratic upper model whose constrained minimizer is the nearest feasible
//! point to `pos − ∇f/τ`.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::channel::{
    build_downlink_channel, build_si_channel, build_uplink_channel, field_response_matrix, wave_vector, AntennaLayout,
    ChannelRealization, PathAngle, Point,
};
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::geometry::{nearest_feasible_point, FeasibleRegionSpec};
use crate::linalg::{sym2_max_eigenvalue, trace_re, CMatrix, CVector, C64};
use crate::objective::{fp_amplitudes, Auxiliary, Beamformers};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Transmit,
    Receive,
}

/// How the 2×2 Hessian behind the curvature bound is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HessianMode {
    #[default]
    Analytic,
    /// Central differences of the analytic gradient.
    FiniteDifference,
}

/// Sum of plane-wave terms `Σ_l c_l exp(j s κ u_l·p)` with its first and
/// second derivatives in the position `p`.
#[derive(Debug, Clone, Copy)]
struct Jet {
    d: [C64; 2],
    /// xx, xy, yy.
    dd: [C64; 3],
}

fn jet(coeffs: impl Iterator<Item = C64>, dirs: &[Point], sign: f64, kappa: f64, pos: &Point) -> Jet {
    let mut out = Jet {
        d: [C64::new(0.0, 0.0); 2],
        dd: [C64::new(0.0, 0.0); 3],
    };
    for (c, u) in coeffs.zip(dirs) {
        let phase = sign * kappa * u.dot(pos);
        let e = c * C64::new(phase.cos(), phase.sin());
        let de = e * C64::new(0.0, sign * kappa);
        out.d[0] += de * u.x;
        out.d[1] += de * u.y;
        let k2 = -kappa * kappa;
        out.dd[0] += e * (k2 * u.x * u.x);
        out.dd[1] += e * (k2 * u.x * u.y);
        out.dd[2] += e * (k2 * u.y * u.y);
    }
    out
}

fn dirs(angles: &[PathAngle]) -> Result<Vec<Point>> {
    angles.iter().map(|a| wave_vector(a.elevation, a.azimuth)).collect()
}

/// Everything the placement objective of one side holds fixed.
#[derive(Debug, Clone)]
pub struct SurrogateContext<'a> {
    pub side: Side,
    realization: &'a ChannelRealization,
    /// Positions of the other side.
    other: Vec<Point>,
    w_t: CMatrix,
    w_r: CMatrix,
    p_u: DVector<f64>,
    y_d: CVector,
    y_u: CVector,
    amp_d: DVector<f64>,
    amp_u: DVector<f64>,
    r: CMatrix,
    q: CMatrix,
    kappa: f64,
    user_dirs: Vec<Vec<Point>>,
    si_dirs: Vec<Point>,
    /// SI entry coefficients: N_r × L_SI (transmit side) or L_SI × N_t (receive side).
    si_coef: CMatrix,
    pub tau_min: f64,
    pub hessian: HessianMode,
}

impl<'a> SurrogateContext<'a> {
    pub fn new(
        side: Side,
        realization: &'a ChannelRealization,
        layout: &AntennaLayout,
        beams: &Beamformers,
        aux: &Auxiliary,
        config: &ScenarioConfig,
    ) -> Result<Self> {
        let k_d = beams.w_t.ncols();
        let k_u = beams.w_r.ncols();
        let amp = fp_amplitudes(&aux.gamma, config);
        let y_d = aux.y.rows(0, k_d).into_owned();
        let y_u = aux.y.rows(k_d, k_u).into_owned();
        let r = &beams.w_t * beams.w_t.adjoint();
        let mut wy = beams.w_r.clone();
        for u in 0..k_u {
            let m = y_u[u].norm();
            wy.column_mut(u).scale_mut(m);
        }
        let q = &wy * wy.adjoint();
        let geo = &realization.geometry;
        let (other, user_angles, si_dirs, si_coef) = match side {
            Side::Transmit => {
                let f = field_response_matrix(&layout.receive, &geo.si_receive, realization.wavelength)?;
                (
                    layout.receive.clone(),
                    &geo.downlink,
                    dirs(&geo.si_transmit)?,
                    f.adjoint() * &realization.prm_si,
                )
            }
            Side::Receive => {
                let g = field_response_matrix(&layout.transmit, &geo.si_transmit, realization.wavelength)?;
                (
                    layout.transmit.clone(),
                    &geo.uplink,
                    dirs(&geo.si_receive)?,
                    &realization.prm_si * g,
                )
            }
        };
        let user_dirs = user_angles.iter().map(|a| dirs(a)).collect::<Result<Vec<_>>>()?;
        let mut ctx = Self {
            side,
            realization,
            other,
            w_t: beams.w_t.clone(),
            w_r: beams.w_r.clone(),
            p_u: beams.p_u.clone(),
            y_d,
            y_u,
            amp_d: amp.rows(0, k_d).into_owned(),
            amp_u: amp.rows(k_d, k_u).into_owned(),
            r,
            q,
            kappa: 2.0 * PI / realization.wavelength,
            user_dirs,
            si_dirs,
            si_coef,
            tau_min: 0.0,
            hessian: HessianMode::Analytic,
        };
        let own = match side {
            Side::Transmit => &layout.transmit,
            Side::Receive => &layout.receive,
        };
        let scale: f64 = objective_terms(&ctx, own)?.iter().map(|t| t.abs()).sum();
        ctx.tau_min = 1e-6 * ctx.kappa * ctx.kappa * scale.max(f64::EPSILON);
        Ok(ctx)
    }

    pub fn with_hessian(mut self, mode: HessianMode) -> Self {
        self.hessian = mode;
        self
    }

    pub fn wavenumber(&self) -> f64 {
        self.kappa
    }

    fn layout_with(&self, positions: &[Point]) -> (Vec<Point>, Vec<Point>) {
        match self.side {
            Side::Transmit => (positions.to_vec(), self.other.clone()),
            Side::Receive => (self.other.clone(), positions.to_vec()),
        }
    }
}

/// The three traces of the placement objective: linear, user quadratic, SI quadratic.
fn objective_terms(ctx: &SurrogateContext, positions: &[Point]) -> Result<[f64; 3]> {
    let (t, r) = ctx.layout_with(positions);
    let h_si = build_si_channel(&t, &r, ctx.realization)?;
    let si = trace_re(&(h_si.adjoint() * &ctx.q * &h_si * &ctx.r));
    match ctx.side {
        Side::Transmit => {
            let h = build_downlink_channel(&t, ctx.realization)?;
            let g = h.adjoint() * &ctx.w_t;
            let mut lin = 0.0;
            let mut quad = 0.0;
            for k in 0..g.nrows() {
                lin -= 2.0 * ctx.amp_d[k] * (ctx.y_d[k].conj() * g[(k, k)]).re;
                quad += ctx.y_d[k].norm_sqr() * g.row(k).norm_squared();
            }
            Ok([lin, quad, si])
        }
        Side::Receive => {
            let h = build_uplink_channel(&r, ctx.realization)?;
            let qh = &ctx.q * &h;
            let mut lin = 0.0;
            let mut quad = 0.0;
            for u in 0..h.ncols() {
                let z = h.column(u).dotc(&ctx.w_r.column(u));
                lin -= 2.0 * ctx.amp_u[u] * ctx.p_u[u].sqrt() * (ctx.y_u[u].conj() * z).re;
                quad += ctx.p_u[u] * h.column(u).dotc(&qh.column(u)).re;
            }
            Ok([lin, quad, si])
        }
    }
}

/// Placement objective of the context's side at `positions`.
pub fn placement_objective(ctx: &SurrogateContext, positions: &[Point]) -> Result<f64> {
    Ok(objective_terms(ctx, positions)?.iter().sum())
}

/// Analytic gradient and Hessian (xx, xy, yy) of the placement objective in
/// the coordinates of antenna `n`.
///
/// For a real quadratic `f` of complex entries `z` with `D = ∂f/∂z̄`,
/// `∂f/∂a = 2Re Σ D̄ ∂_a z` and
/// `∂²f/∂a∂b = 2Re[Σ D̄ ∂_ab z + Σ conj(∂_b D) ∂_a z]`, where `∂_b D` is linear
/// in `∂_b z`.
pub fn placement_derivatives(ctx: &SurrogateContext, positions: &[Point], n: usize) -> Result<([f64; 2], [f64; 3])> {
    let (t, r) = ctx.layout_with(positions);
    let pos = positions[n];
    let h_si = build_si_channel(&t, &r, ctx.realization)?;
    let qfr = &ctx.q * &h_si * &ctx.r;
    let real = ctx.realization;
    let mut grad = [0.0; 2];
    let mut hess = [0.0; 3];
    let pairs = [(0, 0), (0, 1), (1, 1)];
    let mut accumulate = |d: C64, jt: &Jet, dlin: &dyn Fn(usize) -> C64| {
        for a in 0..2 {
            grad[a] += 2.0 * (d.conj() * jt.d[a]).re;
        }
        for (idx, &(a, b)) in pairs.iter().enumerate() {
            hess[idx] += 2.0 * ((d.conj() * jt.dd[idx]).re + (dlin(b).conj() * jt.d[a]).re);
        }
    };
    match ctx.side {
        Side::Transmit => {
            let h = build_downlink_channel(&t, real)?;
            let rh = &ctx.r * &h;
            let r_nn = ctx.r[(n, n)].re;
            for k in 0..h.ncols() {
                let y2 = ctx.y_d[k].norm_sqr();
                let d = -ctx.w_t[(n, k)] * ctx.y_d[k].conj() * ctx.amp_d[k] + rh[(n, k)] * y2;
                let jt = jet(real.prm_downlink[k].iter().copied(), &ctx.user_dirs[k], -1.0, ctx.kappa, &pos);
                accumulate(d, &jt, &|b| jt.d[b] * (r_nn * y2));
            }
            // SI column n: entries i = 0..N_r, coefficients si_coef[i, :], sign +1.
            let jets: Vec<Jet> = (0..h_si.nrows())
                .map(|i| jet(ctx.si_coef.row(i).iter().copied(), &ctx.si_dirs, 1.0, ctx.kappa, &pos))
                .collect();
            let q_dz: Vec<CVector> = (0..2)
                .map(|b| &ctx.q * CVector::from_iterator(jets.len(), jets.iter().map(|j| j.d[b])))
                .collect();
            for (i, jt) in jets.iter().enumerate() {
                accumulate(qfr[(i, n)], jt, &|b| q_dz[b][i] * r_nn);
            }
        }
        Side::Receive => {
            let h = build_uplink_channel(&r, real)?;
            let qh = &ctx.q * &h;
            let q_nn = ctx.q[(n, n)].re;
            for k in 0..h.ncols() {
                let p = ctx.p_u[k];
                let d = -ctx.w_r[(n, k)] * ctx.y_u[k].conj() * (ctx.amp_u[k] * p.sqrt()) + qh[(n, k)] * p;
                let jt = jet(real.prm_uplink[k].iter().copied(), &ctx.user_dirs[k], -1.0, ctx.kappa, &pos);
                accumulate(d, &jt, &|b| jt.d[b] * (q_nn * p));
            }
            // SI row n: entries j = 0..N_t, coefficients si_coef[:, j], sign −1.
            let jets: Vec<Jet> = (0..h_si.ncols())
                .map(|j| jet(ctx.si_coef.column(j).iter().copied(), &ctx.si_dirs, -1.0, ctx.kappa, &pos))
                .collect();
            let dz_r: Vec<CVector> = (0..2)
                .map(|b| {
                    let row = CVector::from_iterator(jets.len(), jets.iter().map(|j| j.d[b]));
                    ctx.r.transpose() * row
                })
                .collect();
            for (j, jt) in jets.iter().enumerate() {
                accumulate(qfr[(n, j)], jt, &|b| dz_r[b][j] * q_nn);
            }
        }
    }
    Ok((grad, hess))
}

pub fn placement_gradient(ctx: &SurrogateContext, positions: &[Point], n: usize) -> Result<Point> {
    let (g, _) = placement_derivatives(ctx, positions, n)?;
    Ok(Point::new(g[0], g[1]))
}

/// Hessian by central differences of the analytic gradient.
pub fn finite_difference_hessian(ctx: &SurrogateContext, positions: &[Point], n: usize, step: f64) -> Result<[f64; 3]> {
    let mut cols = [[0.0; 2]; 2];
    for (a, col) in cols.iter_mut().enumerate() {
        let mut plus = positions.to_vec();
        let mut minus = positions.to_vec();
        plus[n][a] += step;
        minus[n][a] -= step;
        let gp = placement_gradient(ctx, &plus, n)?;
        let gm = placement_gradient(ctx, &minus, n)?;
        *col = [(gp.x - gm.x) / (2.0 * step), (gp.y - gm.y) / (2.0 * step)];
    }
    Ok([cols[0][0], 0.5 * (cols[0][1] + cols[1][0]), cols[1][1]])
}

/// Curvature `τ = max(λ_max(∇²f), τ_min)` at antenna `n`, along with the gradient.
pub fn curvature_bound(ctx: &SurrogateContext, positions: &[Point], n: usize) -> Result<(Point, f64)> {
    let (g, analytic) = placement_derivatives(ctx, positions, n)?;
    let hess = match ctx.hessian {
        HessianMode::Analytic => analytic,
        HessianMode::FiniteDifference => finite_difference_hessian(ctx, positions, n, 1e-6 * ctx.realization.wavelength)?,
    };
    let lmax = sym2_max_eigenvalue(hess[0], hess[1], hess[2]);
    Ok((Point::new(g[0], g[1]), lmax.max(ctx.tau_min)))
}

/// Unconstrained minimizer of the quadratic upper model, `pos − ∇f/τ`.
pub fn surrogate_stationary_point(current: &Point, gradient: &Point, tau: f64) -> Point {
    current - gradient / tau
}

/// Value of the quadratic upper model `f(t_m) + ∇f·(t − t_m) + τ/2 ‖t − t_m‖²`.
pub fn surrogate_value(f_current: f64, current: &Point, gradient: &Point, tau: f64, at: &Point) -> f64 {
    let d = at - current;
    f_current + gradient.dot(&d) + 0.5 * tau * d.norm_squared()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsumOptions {
    pub max_sweeps: usize,
    /// Relative objective change per sweep below which the side is converged.
    pub epsilon: f64,
    pub simplified_geometry: bool,
    /// Times τ may be doubled when a move fails to descend.
    pub max_backtracks: usize,
}

impl Default for BsumOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 50,
            epsilon: 1e-3,
            simplified_geometry: false,
            max_backtracks: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BsumOutcome {
    pub positions: Vec<Point>,
    /// Objective before the first sweep and after every sweep.
    pub trace: Vec<f64>,
    pub sweeps: usize,
    /// Antenna updates abandoned because no descending move was found.
    pub rejected_moves: usize,
    /// Antenna updates skipped because the geometry search failed.
    pub geometry_failures: usize,
    pub geometry_fallbacks: usize,
}

/// Moves each antenna of the context's side in a fresh random order per
/// sweep until the relative objective change falls below `epsilon` or
/// `max_sweeps` is reached. The objective never increases.
pub fn bsum_optimize_side<R: Rng + ?Sized>(
    ctx: &SurrogateContext,
    start: &[Point],
    half_width: f64,
    d_min: f64,
    opts: &BsumOptions,
    rng: &mut R,
) -> Result<BsumOutcome> {
    let mut positions = start.to_vec();
    let mut f = placement_objective(ctx, &positions)?;
    let mut out = BsumOutcome {
        positions: vec![],
        trace: vec![f],
        sweeps: 0,
        rejected_moves: 0,
        geometry_failures: 0,
        geometry_fallbacks: 0,
    };
    let mut order: Vec<usize> = (0..positions.len()).collect();
    for _ in 0..opts.max_sweeps {
        let before = f;
        order.shuffle(rng);
        for &n in &order {
            let (g, tau0) = curvature_bound(ctx, &positions, n)?;
            if g.norm() == 0.0 {
                continue;
            }
            let obstacles: Vec<Point> = positions
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != n)
                .map(|(_, p)| *p)
                .collect();
            let spec = FeasibleRegionSpec::new(half_width, obstacles, d_min).with_seed(rng.random());
            let mut tau = tau0;
            let mut moved = false;
            for _ in 0..=opts.max_backtracks {
                let sp = surrogate_stationary_point(&positions[n], &g, tau);
                let cand = match nearest_feasible_point(&sp, &spec, opts.simplified_geometry) {
                    Ok(o) => {
                        out.geometry_fallbacks += o.used_fallback as usize;
                        o.point
                    }
                    Err(_) => {
                        out.geometry_failures += 1;
                        moved = true;
                        break;
                    }
                };
                let mut trial = positions.clone();
                trial[n] = cand;
                let f_new = placement_objective(ctx, &trial)?;
                if f_new <= f {
                    positions = trial;
                    f = f_new;
                    moved = true;
                    break;
                }
                tau *= 2.0;
            }
            if !moved {
                out.rejected_moves += 1;
            }
        }
        out.sweeps += 1;
        out.trace.push(f);
        if (before - f).abs() <= opts.epsilon * before.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    out.positions = positions;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamforming::{mrc_combiner, mrt_precoder};
    use crate::channel::{sample_realization, Channels};
    use crate::objective::{quadratic_objective, refresh_auxiliary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::LN_2;

    fn setup(seed: u64, n: usize, k: usize) -> (ScenarioConfig, ChannelRealization, AntennaLayout, Beamformers, Auxiliary) {
        let cfg = ScenarioConfig::default().with_users(k).with_antennas(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let real = sample_realization(&cfg, &mut rng).unwrap();
        let h = cfg.half_width();
        let layout = AntennaLayout {
            transmit: (0..n).map(|i| Point::new(-h + (i as f64 + 0.5) * 2.0 * h / n as f64, 0.3 * h)).collect(),
            receive: (0..n).map(|i| Point::new(0.2 * h, -h + (i as f64 + 0.5) * 2.0 * h / n as f64)).collect(),
        };
        let ch = Channels::build(&layout, &real).unwrap();
        let beams = Beamformers {
            w_t: mrt_precoder(&ch.h_d, cfg.p_d_max),
            w_r: mrc_combiner(&ch.h_u),
            p_u: DVector::from_element(k, cfg.p_u_max),
        };
        let aux = refresh_auxiliary(&beams, &ch, &cfg).unwrap();
        (cfg, real, layout, beams, aux)
    }

    fn fd_gradient(ctx: &SurrogateContext, pos: &[Point], n: usize, step: f64) -> Point {
        let mut g = Point::zeros();
        for a in 0..2 {
            let mut p = pos.to_vec();
            let mut m = pos.to_vec();
            p[n][a] += step;
            m[n][a] -= step;
            g[a] = (placement_objective(ctx, &p).unwrap() - placement_objective(ctx, &m).unwrap()) / (2.0 * step);
        }
        g
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        for seed in 0..6 {
            let (cfg, real, layout, beams, aux) = setup(seed, 3, 2);
            for side in [Side::Transmit, Side::Receive] {
                let ctx = SurrogateContext::new(side, &real, &layout, &beams, &aux, &cfg).unwrap();
                let pos = match side {
                    Side::Transmit => &layout.transmit,
                    Side::Receive => &layout.receive,
                };
                for n in 0..3 {
                    let (g, h) = placement_derivatives(&ctx, pos, n).unwrap();
                    let fd = fd_gradient(&ctx, pos, n, 1e-6 * cfg.wavelength());
                    let g = Point::new(g[0], g[1]);
                    assert!((g - fd).norm() <= 1e-5 * fd.norm().max(1e-6 * ctx.kappa), "{side:?} {g} vs {fd}");
                    let hf = finite_difference_hessian(&ctx, pos, n, 1e-6 * cfg.wavelength()).unwrap();
                    let scale = h.iter().map(|v| v.abs()).fold(0.0, f64::max);
                    for i in 0..3 {
                        assert!((h[i] - hf[i]).abs() <= 1e-5 * scale, "{side:?} {h:?} vs {hf:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn objective_change_mirrors_surrogate_change() {
        let (cfg, real, layout, beams, aux) = setup(3, 2, 2);
        for side in [Side::Transmit, Side::Receive] {
            let ctx = SurrogateContext::new(side, &real, &layout, &beams, &aux, &cfg).unwrap();
            let mut moved = layout.clone();
            match side {
                Side::Transmit => moved.transmit[1] += Point::new(0.0011, -0.0007),
                Side::Receive => moved.receive[0] += Point::new(-0.0013, 0.0004),
            }
            let own = |l: &AntennaLayout| match side {
                Side::Transmit => l.transmit.clone(),
                Side::Receive => l.receive.clone(),
            };
            let df = placement_objective(&ctx, &own(&moved)).unwrap() - placement_objective(&ctx, &own(&layout)).unwrap();
            let p0 = quadratic_objective(&beams, &aux, &Channels::build(&layout, &real).unwrap(), &cfg).unwrap();
            let p1 = quadratic_objective(&beams, &aux, &Channels::build(&moved, &real).unwrap(), &cfg).unwrap();
            assert!((df + (p1 - p0) * LN_2).abs() <= 1e-9 * p0.abs().max(1.0), "{df} vs {}", (p1 - p0) * LN_2);
        }
    }

    #[test]
    fn zero_precoder_gives_flat_objective() {
        let (cfg, real, layout, mut beams, aux) = setup(1, 2, 1);
        beams.w_t.fill(C64::new(0.0, 0.0));
        let ctx = SurrogateContext::new(Side::Transmit, &real, &layout, &beams, &aux, &cfg).unwrap();
        assert_eq!(placement_objective(&ctx, &layout.transmit).unwrap(), 0.0);
        let (g, tau) = curvature_bound(&ctx, &layout.transmit, 0).unwrap();
        assert_eq!(g, Point::zeros());
        assert_eq!(tau, ctx.tau_min);
        assert!(tau > 0.0);
    }

    #[test]
    fn stationary_point_examples() {
        let p = Point::new(0.3, -0.2);
        assert_eq!(surrogate_stationary_point(&p, &Point::zeros(), 5.0), p);
        assert_eq!(surrogate_stationary_point(&Point::zeros(), &Point::new(1.0, 0.0), 2.0), Point::new(-0.5, 0.0));
        let g = Point::new(0.7, -1.1);
        let sp = surrogate_stationary_point(&p, &g, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let at_sp = surrogate_value(1.0, &p, &g, 3.0, &sp);
        for _ in 0..100 {
            let q = Point::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            assert!(at_sp <= surrogate_value(1.0, &p, &g, 3.0, &q));
        }
        assert_eq!(surrogate_value(1.0, &p, &g, 3.0, &p), 1.0);
    }

    #[test]
    fn bsum_trace_is_monotone_and_layout_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for seed in 0..4 {
            let (cfg, real, layout, beams, aux) = setup(seed, 4, 2);
            for (side, pos) in [(Side::Transmit, &layout.transmit), (Side::Receive, &layout.receive)] {
                let ctx = SurrogateContext::new(side, &real, &layout, &beams, &aux, &cfg).unwrap();
                let out = bsum_optimize_side(&ctx, pos, cfg.half_width(), cfg.d_min, &BsumOptions::default(), &mut rng).unwrap();
                assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
                crate::channel::side_is_feasible(&out.positions, cfg.half_width(), cfg.d_min).unwrap();
            }
        }
    }
}
