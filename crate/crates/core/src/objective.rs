//! SINRs, rates and the fractional-programming reformulation.
//!
//! The sum-of-logs objective is handled with two transforms. The Lagrangian
//! dual transform introduces one real `γ` per user and moves the ratio out of
//! the log; the quadratic transform then introduces one complex `y` per user
//! so that every term is quadratic in the beamformers. Both auxiliary
//! variables have closed-form optima, at which the transformed objective
//! equals the weighted sum-rate exactly.
//!
//! Users are indexed DL first (`0..K_D`) then UL (`K_D..K_D+K_U`), both in the
//! weight vector and in [`Auxiliary`].

use std::f64::consts::LN_2;

use nalgebra::DVector;

use crate::channel::Channels;
use crate::config::ScenarioConfig;
use crate::error::{domain, Result};
use crate::linalg::{CMatrix, CVector};

/// Transmit precoder, receive combiner and uplink powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformers {
    /// N_t × K_D.
    pub w_t: CMatrix,
    /// N_r × K_U.
    pub w_r: CMatrix,
    /// Uplink transmit powers, length K_U.
    pub p_u: DVector<f64>,
}

impl Beamformers {
    pub fn downlink_power(&self) -> f64 {
        crate::linalg::frobenius_sq(&self.w_t)
    }

    /// Checks the DL sum-power budget and the UL per-user caps.
    pub fn check_power(&self, config: &ScenarioConfig, rel_tol: f64) -> Result<()> {
        let p = self.downlink_power();
        if p > config.p_d_max * (1.0 + rel_tol) {
            return Err(domain(format!("DL power {p} exceeds budget {}", config.p_d_max)));
        }
        for (u, &pu) in self.p_u.iter().enumerate() {
            if !(pu >= 0.0 && pu <= config.p_u_max * (1.0 + rel_tol)) {
                return Err(domain(format!("UL user {u} power {pu} outside [0, {}]", config.p_u_max)));
            }
        }
        Ok(())
    }
}

/// Auxiliary variables of the transformed problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Auxiliary {
    pub gamma: DVector<f64>,
    pub y: CVector,
}

impl Auxiliary {
    pub fn zeros(users: usize) -> Self {
        Self {
            gamma: DVector::zeros(users),
            y: CVector::zeros(users),
        }
    }
}

/// Everything the block updates read and write.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub beams: Beamformers,
    pub aux: Auxiliary,
    pub channels: Channels,
}

/// Per-user signal and interference terms shared by every evaluation.
///
/// `z` holds `h^H w` for each user's own beam; `signal` is the desired power
/// (`|z|²` for DL, `p|z|²` for UL) and `interference` the rest of the
/// denominator. The full denominator used by the quadratic transform is their
/// sum.
#[derive(Debug, Clone)]
pub struct LinkTerms {
    pub z: CVector,
    pub signal: DVector<f64>,
    pub interference: DVector<f64>,
}

impl LinkTerms {
    pub fn sinr(&self) -> DVector<f64> {
        self.signal.zip_map(&self.interference, |s, i| s / i)
    }

    pub fn denominator(&self) -> DVector<f64> {
        &self.signal + &self.interference
    }
}

fn check_noise(config: &ScenarioConfig) -> Result<()> {
    if !(config.sigma2 > 0.0) {
        return Err(domain(format!("noise power must be positive, got {}", config.sigma2)));
    }
    Ok(())
}

pub fn downlink_terms(beams: &Beamformers, channels: &Channels, config: &ScenarioConfig) -> Result<LinkTerms> {
    check_noise(config)?;
    // g[(k, i)] = h_k^H w_i
    let g = channels.h_d.adjoint() * &beams.w_t;
    let k_d = g.nrows();
    let mut z = CVector::zeros(k_d);
    let mut signal = DVector::zeros(k_d);
    let mut interference = DVector::zeros(k_d);
    for k in 0..k_d {
        z[k] = g[(k, k)];
        signal[k] = g[(k, k)].norm_sqr();
        let mui: f64 = (0..k_d).filter(|&i| i != k).map(|i| g[(k, i)].norm_sqr()).sum();
        let iui: f64 = (0..beams.p_u.len())
            .map(|u| channels.h_iui[(k, u)].norm_sqr() * beams.p_u[u])
            .sum();
        interference[k] = mui + iui + config.sigma2;
    }
    Ok(LinkTerms { z, signal, interference })
}

pub fn uplink_terms(beams: &Beamformers, channels: &Channels, config: &ScenarioConfig) -> Result<LinkTerms> {
    check_noise(config)?;
    // m[(k, i)] = w_k^H h_i
    let m = beams.w_r.adjoint() * &channels.h_u;
    let si = beams.w_r.adjoint() * &channels.h_si * &beams.w_t;
    let k_u = m.nrows();
    let mut z = CVector::zeros(k_u);
    let mut signal = DVector::zeros(k_u);
    let mut interference = DVector::zeros(k_u);
    for k in 0..k_u {
        let w_norm_sq = beams.w_r.column(k).norm_squared();
        if w_norm_sq == 0.0 {
            return Err(domain(format!("receive beamformer column {k} is zero")));
        }
        z[k] = m[(k, k)].conj();
        signal[k] = beams.p_u[k] * m[(k, k)].norm_sqr();
        let mui: f64 = (0..k_u)
            .filter(|&i| i != k)
            .map(|i| beams.p_u[i] * m[(k, i)].norm_sqr())
            .sum();
        let si_power: f64 = si.row(k).iter().map(|v| v.norm_sqr()).sum();
        interference[k] = mui + si_power + w_norm_sq * config.sigma2;
    }
    Ok(LinkTerms { z, signal, interference })
}

pub fn sinr_downlink(beams: &Beamformers, channels: &Channels, config: &ScenarioConfig) -> Result<DVector<f64>> {
    Ok(downlink_terms(beams, channels, config)?.sinr())
}

pub fn sinr_uplink(beams: &Beamformers, channels: &Channels, config: &ScenarioConfig) -> Result<DVector<f64>> {
    Ok(uplink_terms(beams, channels, config)?.sinr())
}

/// Achievable rates `log2(1 + SINR)` of the DL and UL users.
pub fn user_rates(
    beams: &Beamformers,
    channels: &Channels,
    config: &ScenarioConfig,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let dl = sinr_downlink(beams, channels, config)?.map(|g| (1.0 + g).log2());
    let ul = sinr_uplink(beams, channels, config)?.map(|g| (1.0 + g).log2());
    Ok((dl, ul))
}

/// Weighted sum-rate in bits/s/Hz.
pub fn weighted_sum_rate(beams: &Beamformers, channels: &Channels, config: &ScenarioConfig) -> Result<f64> {
    let (dl, ul) = user_rates(beams, channels, config)?;
    Ok(dl.iter().chain(ul.iter()).zip(&config.weights).map(|(r, a)| a * r).sum())
}

/// Closed-form optimal `γ`: the current SINRs, DL entries first.
pub fn update_gamma(beams: &Beamformers, channels: &Channels, config: &ScenarioConfig) -> Result<DVector<f64>> {
    let dl = sinr_downlink(beams, channels, config)?;
    let ul = sinr_uplink(beams, channels, config)?;
    Ok(DVector::from_iterator(dl.len() + ul.len(), dl.iter().chain(ul.iter()).copied()))
}

/// `√(a_i (1 + γ_i))` for every user.
pub fn fp_amplitudes(gamma: &DVector<f64>, config: &ScenarioConfig) -> DVector<f64> {
    DVector::from_iterator(
        gamma.len(),
        gamma.iter().zip(&config.weights).map(|(g, a)| (a * (1.0 + g)).sqrt()),
    )
}

/// Closed-form optimal `y` for fixed `γ`.
///
/// DL: `y_k = √(a_k(1+γ_k)) h_k^H w_k / s_1k`.
/// UL: `y_u = √(a_u p_u (1+γ_u)) h_u^H w_u / s_2u`.
/// The denominators are the full received powers including the desired term.
pub fn update_y(
    beams: &Beamformers,
    gamma: &DVector<f64>,
    channels: &Channels,
    config: &ScenarioConfig,
) -> Result<CVector> {
    let dl = downlink_terms(beams, channels, config)?;
    let ul = uplink_terms(beams, channels, config)?;
    let amp = fp_amplitudes(gamma, config);
    let k_d = dl.z.len();
    let s1 = dl.denominator();
    let s2 = ul.denominator();
    let mut y = CVector::zeros(k_d + ul.z.len());
    for k in 0..k_d {
        y[k] = dl.z[k] * (amp[k] / s1[k]);
    }
    for u in 0..ul.z.len() {
        y[k_d + u] = ul.z[u] * (amp[k_d + u] * beams.p_u[u].sqrt() / s2[u]);
    }
    Ok(y)
}

/// Lagrangian dual transform objective, in bits, at the given `γ`.
pub fn lagrangian_objective(
    beams: &Beamformers,
    gamma: &DVector<f64>,
    channels: &Channels,
    config: &ScenarioConfig,
) -> Result<f64> {
    let dl = downlink_terms(beams, channels, config)?;
    let ul = uplink_terms(beams, channels, config)?;
    let signal = dl.signal.iter().chain(ul.signal.iter());
    let denom: Vec<f64> = dl.denominator().iter().chain(ul.denominator().iter()).copied().collect();
    Ok(signal
        .zip(&denom)
        .zip(gamma.iter().zip(&config.weights))
        .map(|((s, d), (g, a))| a * ((1.0 + g).log2() + (-g + (1.0 + g) * s / d) / LN_2))
        .sum())
}

/// Quadratic-transform objective, in bits, at the given `(γ, y)`.
///
/// The natural-log form
/// `Σ a(ln(1+γ) − γ) + Σ [2√(a(1+γ)) Re{ȳ·√p·h^H w} − |y|² s]`
/// divided by ln 2, so that at the optimal auxiliaries it equals the
/// weighted sum-rate in bits.
pub fn quadratic_objective(
    beams: &Beamformers,
    aux: &Auxiliary,
    channels: &Channels,
    config: &ScenarioConfig,
) -> Result<f64> {
    let dl = downlink_terms(beams, channels, config)?;
    let ul = uplink_terms(beams, channels, config)?;
    let amp = fp_amplitudes(&aux.gamma, config);
    let k_d = dl.z.len();
    let mut nats = 0.0;
    for (i, (g, a)) in aux.gamma.iter().zip(&config.weights).enumerate() {
        nats += a * ((1.0 + g).ln() - g);
        let (z, s, scale) = if i < k_d {
            (dl.z[i], dl.signal[i] + dl.interference[i], 1.0)
        } else {
            let u = i - k_d;
            (ul.z[u], ul.signal[u] + ul.interference[u], beams.p_u[u].sqrt())
        };
        let y = aux.y[i];
        nats += 2.0 * amp[i] * scale * (y.conj() * z).re - y.norm_sqr() * s;
    }
    Ok(nats / LN_2)
}

/// Updates `γ` then `y` in place and returns the new auxiliaries.
pub fn refresh_auxiliary(beams: &Beamformers, channels: &Channels, config: &ScenarioConfig) -> Result<Auxiliary> {
    let gamma = update_gamma(beams, channels, config)?;
    let y = update_y(beams, &gamma, channels, config)?;
    Ok(Auxiliary { gamma, y })
}

/// Splits a per-user vector into its DL and UL parts.
pub fn split_users<T: nalgebra::Scalar>(v: &DVector<T>, k_d: usize) -> (DVector<T>, DVector<T>) {
    (v.rows(0, k_d).into_owned(), v.rows(k_d, v.len() - k_d).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_matrix(rng: &mut ChaCha8Rng, r: usize, cols: usize, scale: f64) -> CMatrix {
        CMatrix::from_fn(r, cols, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * scale)
    }

    fn test_config(k_d: usize, k_u: usize) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        cfg.k_d = k_d;
        cfg.k_u = k_u;
        cfg.weights = crate::config::equal_weights(k_d + k_u);
        cfg.sigma2 = 0.1;
        cfg
    }

    fn random_instance(seed: u64, k_d: usize, k_u: usize, n: usize) -> (Beamformers, Channels, ScenarioConfig) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = test_config(k_d, k_u);
        let channels = Channels {
            h_d: random_matrix(&mut rng, n, k_d, 2.0),
            h_u: random_matrix(&mut rng, n, k_u, 2.0),
            h_si: random_matrix(&mut rng, n, n, 0.5),
            h_iui: random_matrix(&mut rng, k_d, k_u, 0.5),
        };
        let beams = Beamformers {
            w_t: random_matrix(&mut rng, n, k_d, 1.0),
            w_r: random_matrix(&mut rng, n, k_u, 1.0),
            p_u: DVector::from_fn(k_u, |_, _| rng.random_range(0.1..1.0)),
        };
        (beams, channels, cfg)
    }

    /// Straight re-evaluation of the SINR definitions, one user at a time.
    fn scratch_sinrs(b: &Beamformers, ch: &Channels, sigma2: f64) -> Vec<f64> {
        let mut out = vec![];
        for k in 0..b.w_t.ncols() {
            let h = ch.h_d.column(k);
            let num = h.dotc(&b.w_t.column(k)).norm_sqr();
            let mut den = sigma2;
            for i in 0..b.w_t.ncols() {
                if i != k {
                    den += h.dotc(&b.w_t.column(i)).norm_sqr();
                }
            }
            for u in 0..b.p_u.len() {
                den += ch.h_iui[(k, u)].norm_sqr() * b.p_u[u];
            }
            out.push(num / den);
        }
        for k in 0..b.w_r.ncols() {
            let w = b.w_r.column(k);
            let num = b.p_u[k] * w.dotc(&ch.h_u.column(k)).norm_sqr();
            let mut den = w.norm_squared() * sigma2;
            for i in 0..b.w_r.ncols() {
                if i != k {
                    den += b.p_u[i] * w.dotc(&ch.h_u.column(i)).norm_sqr();
                }
            }
            for j in 0..b.w_t.ncols() {
                let leak = ch.h_si.clone() * b.w_t.column(j);
                den += w.dotc(&leak).norm_sqr();
            }
            out.push(num / den);
        }
        out
    }

    #[test]
    fn matched_single_user_gives_one_bit() {
        let cfg = test_config(1, 0);
        let channels = Channels {
            h_d: CMatrix::from_element(1, 1, c(1.0, 0.0)),
            h_u: CMatrix::zeros(1, 0),
            h_si: CMatrix::zeros(1, 1),
            h_iui: CMatrix::zeros(1, 0),
        };
        let beams = Beamformers {
            w_t: CMatrix::from_element(1, 1, c(0.0, cfg.sigma2.sqrt())),
            w_r: CMatrix::zeros(1, 0),
            p_u: DVector::zeros(0),
        };
        let g = sinr_downlink(&beams, &channels, &cfg).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-12);
        assert!((weighted_sum_rate(&beams, &channels, &cfg).unwrap() - 1.0).abs() < 1e-12);

        let zero = Beamformers { w_t: CMatrix::zeros(1, 1), ..beams };
        assert_eq!(sinr_downlink(&zero, &channels, &cfg).unwrap()[0], 0.0);
        assert_eq!(weighted_sum_rate(&zero, &channels, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn uplink_unit_sinr_and_zero_column_error() {
        let cfg = test_config(0, 1);
        let channels = Channels {
            h_d: CMatrix::zeros(1, 0),
            h_u: CMatrix::from_element(1, 1, c(0.0, 1.0)),
            h_si: CMatrix::from_element(1, 1, c(3.0, 0.0)),
            h_iui: CMatrix::zeros(0, 1),
        };
        let beams = Beamformers {
            w_t: CMatrix::zeros(1, 0),
            w_r: CMatrix::from_element(1, 1, c(1.0, 0.0)),
            p_u: DVector::from_element(1, cfg.sigma2),
        };
        assert!((sinr_uplink(&beams, &channels, &cfg).unwrap()[0] - 1.0).abs() < 1e-12);
        let zero = Beamformers { w_r: CMatrix::zeros(1, 1), ..beams };
        assert!(sinr_uplink(&zero, &channels, &cfg).is_err());
    }

    #[test]
    fn nonpositive_noise_is_rejected() {
        let (b, ch, mut cfg) = random_instance(1, 1, 1, 2);
        cfg.sigma2 = 0.0;
        assert!(sinr_downlink(&b, &ch, &cfg).is_err());
    }

    #[test]
    fn sinrs_match_scratch_evaluation() {
        for seed in 0..20 {
            let (b, ch, cfg) = random_instance(seed, 2, 2, 3);
            let fast = update_gamma(&b, &ch, &cfg).unwrap();
            let slow = scratch_sinrs(&b, &ch, cfg.sigma2);
            for (f, s) in fast.iter().zip(&slow) {
                assert!((f - s).abs() <= 1e-12 * s.max(1.0), "{f} vs {s}");
            }
        }
    }

    #[test]
    fn rate_from_sinr_three() {
        let cfg = test_config(1, 0);
        let channels = Channels {
            h_d: CMatrix::from_element(1, 1, c(1.0, 0.0)),
            h_u: CMatrix::zeros(1, 0),
            h_si: CMatrix::zeros(1, 1),
            h_iui: CMatrix::zeros(1, 0),
        };
        let beams = Beamformers {
            w_t: CMatrix::from_element(1, 1, c((3.0 * cfg.sigma2).sqrt(), 0.0)),
            w_r: CMatrix::zeros(1, 0),
            p_u: DVector::zeros(0),
        };
        assert!((weighted_sum_rate(&beams, &channels, &cfg).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn uplink_gamma_excludes_desired_term_but_y_denominator_includes_it() {
        let (b, ch, cfg) = random_instance(7, 1, 2, 3);
        let ul = uplink_terms(&b, &ch, &cfg).unwrap();
        let gamma = update_gamma(&b, &ch, &cfg).unwrap();
        let y = update_y(&b, &gamma, &ch, &cfg).unwrap();
        for u in 0..2 {
            let g = gamma[1 + u];
            assert!((g - ul.signal[u] / ul.interference[u]).abs() < 1e-12 * g.max(1.0));
            let s2 = ul.signal[u] + ul.interference[u];
            let expected = ul.z[u] * ((cfg.weights[1 + u] * b.p_u[u] * (1.0 + g)).sqrt() / s2);
            assert!((y[1 + u] - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn y_substitution_example() {
        // a = 1, γ = 1, h^H w = 1, s_1 = 2  →  y = √2 / 2
        let mut cfg = test_config(1, 0);
        cfg.sigma2 = 1.0;
        let channels = Channels {
            h_d: CMatrix::from_element(1, 1, c(1.0, 0.0)),
            h_u: CMatrix::zeros(1, 0),
            h_si: CMatrix::zeros(1, 1),
            h_iui: CMatrix::zeros(1, 0),
        };
        let beams = Beamformers {
            w_t: CMatrix::from_element(1, 1, c(1.0, 0.0)),
            w_r: CMatrix::zeros(1, 0),
            p_u: DVector::zeros(0),
        };
        let y = update_y(&beams, &DVector::from_element(1, 1.0), &channels, &cfg).unwrap();
        assert!((y[0] - c(0.5f64.sqrt(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn muted_uplink_user_gets_zero_y() {
        let (mut b, ch, cfg) = random_instance(3, 2, 2, 3);
        b.p_u[1] = 0.0;
        let aux = refresh_auxiliary(&b, &ch, &cfg).unwrap();
        assert_eq!(aux.y[3], c(0.0, 0.0));
    }

    #[test]
    fn transforms_are_tight_and_locally_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for seed in 0..10 {
            let (b, ch, cfg) = random_instance(seed, 2, 2, 4);
            let wsr = weighted_sum_rate(&b, &ch, &cfg).unwrap();
            let aux = refresh_auxiliary(&b, &ch, &cfg).unwrap();
            let p2 = lagrangian_objective(&b, &aux.gamma, &ch, &cfg).unwrap();
            let p3 = quadratic_objective(&b, &aux, &ch, &cfg).unwrap();
            assert!((p2 - wsr).abs() <= 1e-9 * wsr);
            assert!((p3 - wsr).abs() <= 1e-9 * wsr);
            for _ in 0..100 {
                let gamma = aux.gamma.map(|g| (g + 0.5 * (rng.random::<f64>() - 0.5)).max(0.0));
                assert!(lagrangian_objective(&b, &gamma, &ch, &cfg).unwrap() <= p2 + 1e-12);
                let y = aux.y.map(|y| y + c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * 0.1);
                let moved = Auxiliary { gamma: aux.gamma.clone(), y };
                assert!(quadratic_objective(&b, &moved, &ch, &cfg).unwrap() <= p3 + 1e-12);
            }
        }
    }

    #[test]
    fn receive_column_scaling_keeps_rate() {
        let (mut b, ch, cfg) = random_instance(5, 2, 2, 3);
        let before = weighted_sum_rate(&b, &ch, &cfg).unwrap();
        b.w_r.column_mut(1).scale_mut(7.5);
        let after = weighted_sum_rate(&b, &ch, &cfg).unwrap();
        assert!((before - after).abs() < 1e-12 * before);
    }
}
