//! Closed-form block updates for the transmit precoder, receive combiner and
//! uplink powers, each maximizing the quadratic-transform objective with the
//! other blocks and the auxiliary variables held fixed.

use nalgebra::DVector;

use crate::channel::Channels;
use crate::config::ScenarioConfig;
use crate::error::{domain, Error, Result};
use crate::linalg::{frobenius_sq, hermitian_eigen, solve_hermitian, trace_re, CMatrix, C64};
use crate::objective::{fp_amplitudes, Auxiliary, Beamformers};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionOptions {
    /// Stop once `(p - f(μ)) / p` drops below this.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for BisectionOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_iter: 200,
        }
    }
}

/// Result of the power-constrained quadratic maximization.
#[derive(Debug, Clone)]
pub struct TransmitUpdate {
    pub w: CMatrix,
    /// Lagrange multiplier of the power constraint; zero when it is inactive.
    pub mu: f64,
    pub power: f64,
    pub iterations: usize,
    /// `f` at the ends of the final bisection bracket (equal when μ = 0).
    pub bracket_power: (f64, f64),
}

/// `(H̄_D, H_t)` of the transmit subproblem
/// `max 2Re Tr(H̄_D^H W) − Tr(W^H H_t W)  s.t.  Tr(W W^H) ≤ p`.
pub fn transmit_quadratic_terms(
    beams: &Beamformers,
    aux: &Auxiliary,
    channels: &Channels,
    config: &ScenarioConfig,
) -> (CMatrix, CMatrix) {
    let k_d = channels.h_d.ncols();
    let amp = fp_amplitudes(&aux.gamma, config);
    let mut h_bar = channels.h_d.clone();
    let mut hy = channels.h_d.clone();
    for k in 0..k_d {
        let yk = aux.y[k];
        h_bar.column_mut(k).iter_mut().for_each(|v| *v *= yk * amp[k]);
        hy.column_mut(k).iter_mut().for_each(|v| *v *= yk);
    }
    let mut h_t = &hy * hy.adjoint();
    if beams.w_r.ncols() > 0 {
        let mut wy = beams.w_r.clone();
        for u in 0..wy.ncols() {
            let yu = aux.y[k_d + u].conj();
            wy.column_mut(u).iter_mut().for_each(|v| *v *= yu);
        }
        let a = channels.h_si.adjoint() * wy;
        h_t += &a * a.adjoint();
    }
    (h_bar, h_t)
}

/// Maximizes `2Re Tr(H̄^H W) − Tr(W^H H W)` over `Tr(W W^H) ≤ p` for Hermitian
/// PSD `H`.
///
/// With `H = V Λ V^H` and `B = V^H H̄`, the stationary point for multiplier μ
/// is `W(μ) = V (Λ + μI)^{-1} B` and its power
/// `f(μ) = Σ_i ‖B_i‖² / (λ_i + μ)²` decreases strictly in μ. If the
/// unconstrained maximizer already fits the budget it is returned with μ = 0,
/// otherwise `f(μ) = p` is solved by bisection on
/// `[0, √(Tr(H̄ H̄^H) / p)]`, returning the upper end so the result is
/// always feasible.
pub fn solve_power_constrained_quadratic(
    h: &CMatrix,
    h_bar: &CMatrix,
    p: f64,
    opts: &BisectionOptions,
) -> Result<TransmitUpdate> {
    if !(p > 0.0) {
        return Err(domain(format!("power budget must be positive, got {p}")));
    }
    let n = h.nrows();
    let (lambda, v) = hermitian_eigen(h);
    let lambda = lambda.map(|l| l.max(0.0));
    let b = v.adjoint() * h_bar;
    let b_norm: Vec<f64> = (0..n).map(|i| b.row(i).norm_squared()).collect();
    let total: f64 = b_norm.iter().sum();
    let build = |scale: &dyn Fn(usize) -> f64| {
        let mut scaled = b.clone();
        for i in 0..n {
            let s = scale(i);
            scaled.row_mut(i).iter_mut().for_each(|z| *z *= s);
        }
        &v * scaled
    };
    if total == 0.0 {
        return Ok(TransmitUpdate {
            w: CMatrix::zeros(n, h_bar.ncols()),
            mu: 0.0,
            power: 0.0,
            iterations: 0,
            bracket_power: (0.0, 0.0),
        });
    }
    let power_at = |mu: f64| -> f64 {
        b_norm
            .iter()
            .zip(lambda.iter())
            .map(|(&bi, &li)| if bi == 0.0 { 0.0 } else { bi / (li + mu).powi(2) })
            .sum()
    };

    let lambda_max = lambda.iter().cloned().fold(0.0, f64::max);
    let null_tol = 1e-12 * lambda_max;
    let singular = lambda.iter().any(|&l| l <= null_tol);
    let null_mass: f64 = (0..n).filter(|&i| lambda[i] <= null_tol).map(|i| b_norm[i]).sum();
    if null_mass <= 1e-24 * total {
        let pinv = |i: usize| if lambda[i] > null_tol { 1.0 / lambda[i] } else { 0.0 };
        let unconstrained: f64 = (0..n).map(|i| b_norm[i] * pinv(i).powi(2)).sum();
        if unconstrained <= p {
            return Ok(TransmitUpdate {
                w: build(&pinv),
                mu: 0.0,
                power: unconstrained,
                iterations: 0,
                bracket_power: (unconstrained, unconstrained),
            });
        }
    }

    let mut lo = if singular { 1e-12 * trace_re(h).max(0.0) / n as f64 } else { 0.0 };
    let mut hi = (total / p).sqrt();
    let mut f_lo = power_at(lo);
    let mut f_hi = power_at(hi);
    if f_hi > p * (1.0 + 1e-12) {
        return Err(Error::Numerical(format!(
            "bisection upper bracket infeasible: f({hi}) = {f_hi} > {p}"
        )));
    }
    let mut iterations = 0;
    if f_lo <= p {
        // Only reachable with the singular-H floor: the floor itself is feasible.
        hi = lo;
        f_hi = f_lo;
    } else {
        while iterations < opts.max_iter && (p - f_hi) / p >= opts.rel_tol {
            iterations += 1;
            let mid = 0.5 * (lo + hi);
            let f_mid = power_at(mid);
            if f_mid > p {
                lo = mid;
                f_lo = f_mid;
            } else {
                hi = mid;
                f_hi = f_mid;
            }
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
    }
    let mu = hi;
    Ok(TransmitUpdate {
        w: build(&|i| 1.0 / (lambda[i] + mu)),
        mu,
        power: f_hi,
        iterations,
        bracket_power: (f_lo, f_hi),
    })
}

/// Transmit precoder block update.
pub fn update_transmit_beamformer(
    beams: &Beamformers,
    aux: &Auxiliary,
    channels: &Channels,
    config: &ScenarioConfig,
    opts: &BisectionOptions,
) -> Result<TransmitUpdate> {
    let (h_bar, h_t) = transmit_quadratic_terms(beams, aux, channels, config);
    solve_power_constrained_quadratic(&h_t, &h_bar, config.p_d_max, opts)
}

/// Value of the transmit subproblem objective.
pub fn transmit_subproblem_objective(w: &CMatrix, h_bar: &CMatrix, h_t: &CMatrix) -> f64 {
    2.0 * trace_re(&(h_bar.adjoint() * w)) - trace_re(&(w.adjoint() * h_t * w))
}

/// `(H̄_U, H_r)` of the receive subproblem; `H_r` is the total received
/// covariance `H_U P H_U^H + H_SI W_t W_t^H H_SI^H + σ² I`.
pub fn receive_quadratic_terms(
    beams: &Beamformers,
    aux: &Auxiliary,
    channels: &Channels,
    config: &ScenarioConfig,
) -> (CMatrix, CMatrix) {
    let k_d = channels.h_d.ncols();
    let amp = fp_amplitudes(&aux.gamma, config);
    let n_r = channels.h_u.nrows();
    let mut h_bar = channels.h_u.clone();
    let mut hp = channels.h_u.clone();
    for u in 0..h_bar.ncols() {
        let sp = beams.p_u[u].sqrt();
        h_bar.column_mut(u).scale_mut(amp[k_d + u] * sp);
        hp.column_mut(u).scale_mut(sp);
    }
    let leak = &channels.h_si * &beams.w_t;
    let mut h_r = &hp * hp.adjoint() + &leak * leak.adjoint();
    for i in 0..n_r {
        h_r[(i, i)] += C64::new(config.sigma2, 0.0);
    }
    (h_bar, h_r)
}

/// Receive combiner block update: column `u` is `H_r^{-1} h̄_u / conj(y_u)`.
/// Columns whose `y_u` is zero are left unchanged.
pub fn update_receive_beamformer(
    beams: &Beamformers,
    aux: &Auxiliary,
    channels: &Channels,
    config: &ScenarioConfig,
) -> Result<CMatrix> {
    let (h_bar, h_r) = receive_quadratic_terms(beams, aux, channels, config);
    let solved = solve_hermitian(&h_r, &h_bar)?;
    let k_d = channels.h_d.ncols();
    let mut w = beams.w_r.clone();
    for u in 0..w.ncols() {
        let y = aux.y[k_d + u];
        if y.norm_sqr() == 0.0 {
            continue;
        }
        let inv = y.conj().inv();
        w.set_column(u, &solved.column(u).map(|v| v * inv));
    }
    Ok(w)
}

/// Receive subproblem objective `Σ_u 2Re{ȳ_u h̄_u^H w_u} − |y_u|² w_u^H H_r w_u`.
pub fn receive_subproblem_objective(w: &CMatrix, y_u: &[C64], h_bar: &CMatrix, h_r: &CMatrix) -> f64 {
    (0..w.ncols())
        .map(|u| {
            let col = w.column(u);
            let lin = (y_u[u].conj() * h_bar.column(u).dotc(&col)).re;
            let quad = col.dotc(&(h_r * col)).re;
            2.0 * lin - y_u[u].norm_sqr() * quad
        })
        .sum()
}

/// Optimal value of the receive subproblem, `Tr(H̄^H H_r^{-1} H̄)` (over users with nonzero `y`).
pub fn receive_optimal_value(h_bar: &CMatrix, h_r: &CMatrix) -> Result<f64> {
    let solved = solve_hermitian(h_r, h_bar)?;
    Ok(trace_re(&(h_bar.adjoint() * solved)))
}

/// Scales every column to unit Euclidean norm.
pub fn normalize_receive_columns(w: &CMatrix) -> Result<CMatrix> {
    let mut out = w.clone();
    for u in 0..out.ncols() {
        let norm = out.column(u).norm();
        if norm == 0.0 {
            return Err(domain(format!("cannot normalize zero receive column {u}")));
        }
        out.column_mut(u).unscale_mut(norm);
    }
    Ok(out)
}

/// Coefficients of the per-user power objective `c1 √p − c2 p`.
pub fn uplink_power_coefficients(
    beams: &Beamformers,
    aux: &Auxiliary,
    channels: &Channels,
    config: &ScenarioConfig,
) -> (DVector<f64>, DVector<f64>) {
    let k_d = channels.h_d.ncols();
    let k_u = channels.h_u.ncols();
    let amp = fp_amplitudes(&aux.gamma, config);
    // m[(k, u)] = w_k^H h_u
    let m = beams.w_r.adjoint() * &channels.h_u;
    let c1 = DVector::from_fn(k_u, |u, _| {
        let z = m[(u, u)].conj();
        2.0 * amp[k_d + u] * (aux.y[k_d + u].conj() * z).re
    });
    let c2 = DVector::from_fn(k_u, |u, _| {
        let iui: f64 = (0..k_d)
            .map(|k| aux.y[k].norm_sqr() * channels.h_iui[(k, u)].norm_sqr())
            .sum();
        let mui: f64 = (0..k_u).map(|k| aux.y[k_d + k].norm_sqr() * m[(k, u)].norm_sqr()).sum();
        iui + mui
    });
    (c1, c2)
}

/// Maximizer of `c1 √p − c2 p` over `[0, p_max]`.
pub fn optimal_uplink_power(c1: f64, c2: f64, p_max: f64) -> f64 {
    if c1 <= 0.0 {
        0.0
    } else if c2 <= 0.0 {
        p_max
    } else {
        (c1 * c1 / (4.0 * c2 * c2)).min(p_max)
    }
}

/// Uplink power block update.
pub fn update_uplink_power(
    beams: &Beamformers,
    aux: &Auxiliary,
    channels: &Channels,
    config: &ScenarioConfig,
) -> DVector<f64> {
    let (c1, c2) = uplink_power_coefficients(beams, aux, channels, config);
    c1.zip_map(&c2, |a, b| optimal_uplink_power(a, b, config.p_u_max))
}

/// Matched-filter precoder scaled to the full DL budget.
pub fn mrt_precoder(h_d: &CMatrix, p_d_max: f64) -> CMatrix {
    let norm = frobenius_sq(h_d);
    if norm == 0.0 {
        return h_d.clone();
    }
    h_d * C64::new((p_d_max / norm).sqrt(), 0.0)
}

/// Matched-filter combiner with unit-norm columns (zero channels map to `e_1`).
pub fn mrc_combiner(h_u: &CMatrix) -> CMatrix {
    let mut w = h_u.clone();
    for u in 0..w.ncols() {
        let norm = w.column(u).norm();
        if norm > 0.0 {
            w.column_mut(u).unscale_mut(norm);
        } else {
            w.column_mut(u).fill(C64::new(0.0, 0.0));
            w[(0, u)] = C64::new(1.0, 0.0);
        }
    }
    w
}
