//! Finite-scattering far-field channel model.
//!
//! Every antenna of a side sees the same path gains and angles; its position
//! only changes the phase of each path through `2π/λ · n·p`, where `n` is the
//! path's normalized wave vector projected on the region plane.

use std::f64::consts::PI;

use nalgebra::{DVector, Vector2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::ScenarioConfig;
use crate::error::{domain, Error, Result};
use crate::linalg::{cis, CMatrix, CVector, C64};

/// A 2-D coordinate in meters, origin at the region centre.
pub type Point = Vector2<f64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathAngle {
    /// Elevation θ in [0, π].
    pub elevation: f64,
    /// Azimuth φ in [0, π].
    pub azimuth: f64,
}

impl PathAngle {
    pub fn new(elevation: f64, azimuth: f64) -> Self {
        Self { elevation, azimuth }
    }
}

/// Normalized wave vector `[sin θ cos φ, cos θ]` of a path.
pub fn wave_vector(theta: f64, phi: f64) -> Result<Point> {
    let in_range = |a: f64| (0.0..=PI).contains(&a);
    if !(in_range(theta) && in_range(phi)) {
        return Err(domain(format!("path angles ({theta}, {phi}) outside [0, π]")));
    }
    Ok(Point::new(theta.sin() * phi.cos(), theta.cos()))
}

fn wave_vectors(angles: &[PathAngle]) -> Result<Vec<Point>> {
    angles.iter().map(|a| wave_vector(a.elevation, a.azimuth)).collect()
}

/// Field response of an antenna at `position`: element `l` is
/// `exp(j 2π/λ (x sinθ_l cosφ_l + y cosθ_l))`.
pub fn field_response_vector(position: &Point, angles: &[PathAngle], wavelength: f64) -> Result<CVector> {
    if angles.is_empty() {
        return Err(domain("field response needs at least one path"));
    }
    let k = 2.0 * PI / wavelength;
    let dirs = wave_vectors(angles)?;
    Ok(CVector::from_iterator(dirs.len(), dirs.iter().map(|u| cis(k * u.dot(position)))))
}

/// Stacks field response vectors of all `positions` as columns (L × N).
pub fn field_response_matrix(positions: &[Point], angles: &[PathAngle], wavelength: f64) -> Result<CMatrix> {
    if angles.is_empty() {
        return Err(domain("field response needs at least one path"));
    }
    let k = 2.0 * PI / wavelength;
    let dirs = wave_vectors(angles)?;
    Ok(CMatrix::from_fn(dirs.len(), positions.len(), |l, n| cis(k * dirs[l].dot(&positions[n]))))
}

/// Sampled propagation geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGeometry {
    /// AoDs of each DL user channel.
    pub downlink: Vec<Vec<PathAngle>>,
    /// AoAs of each UL user channel.
    pub uplink: Vec<Vec<PathAngle>>,
    /// AoDs of the SI channel at the transmit region.
    pub si_transmit: Vec<PathAngle>,
    /// AoAs of the SI channel at the receive region.
    pub si_receive: Vec<PathAngle>,
    pub downlink_distances: Vec<f64>,
    pub uplink_distances: Vec<f64>,
}

impl PathGeometry {
    pub fn angles_mut(&mut self) -> impl Iterator<Item = &mut PathAngle> {
        self.downlink
            .iter_mut()
            .flatten()
            .chain(self.uplink.iter_mut().flatten())
            .chain(self.si_transmit.iter_mut())
            .chain(self.si_receive.iter_mut())
    }

    pub fn angles(&self) -> impl Iterator<Item = &PathAngle> {
        self.downlink
            .iter()
            .flatten()
            .chain(self.uplink.iter().flatten())
            .chain(self.si_transmit.iter())
            .chain(self.si_receive.iter())
    }
}

/// One channel realization: geometry plus path response matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub geometry: PathGeometry,
    /// Diagonal of each DL user's path response matrix.
    pub prm_downlink: Vec<CVector>,
    /// Diagonal of each UL user's path response matrix.
    pub prm_uplink: Vec<CVector>,
    /// Full SI path response matrix, receive paths × transmit paths.
    pub prm_si: CMatrix,
    /// UL-to-DL inter-user interference, K_D × K_U.
    pub h_iui: CMatrix,
    pub wavelength: f64,
}

impl ChannelRealization {
    pub fn k_d(&self) -> usize {
        self.prm_downlink.len()
    }

    pub fn k_u(&self) -> usize {
        self.prm_uplink.len()
    }

    pub fn is_finite(&self) -> bool {
        let finite = |z: &C64| z.re.is_finite() && z.im.is_finite();
        self.prm_downlink.iter().all(|v| v.iter().all(finite))
            && self.prm_uplink.iter().all(|v| v.iter().all(finite))
            && self.prm_si.iter().all(finite)
            && self.h_iui.iter().all(finite)
    }

    /// Drops every uplink user: no UL paths, gains or IUI.
    pub fn downlink_only(&self) -> Self {
        let mut out = self.clone();
        out.geometry.uplink.clear();
        out.geometry.uplink_distances.clear();
        out.prm_uplink.clear();
        out.h_iui = CMatrix::zeros(self.k_d(), 0);
        out
    }
}

/// Transmit and receive antenna coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaLayout {
    pub transmit: Vec<Point>,
    pub receive: Vec<Point>,
}

/// Relative slack applied to the region and spacing checks.
pub const FEASIBILITY_SLACK: f64 = 1e-9;

impl AntennaLayout {
    /// Checks the region and minimum-spacing constraints on both sides.
    pub fn validate(&self, half_width: f64, d_min: f64) -> Result<()> {
        for (label, side) in [("transmit", &self.transmit), ("receive", &self.receive)] {
            side_is_feasible(side, half_width, d_min)
                .map_err(|msg| Error::Domain(format!("{label} layout infeasible: {msg}")))?;
        }
        Ok(())
    }
}

pub(crate) fn side_is_feasible(positions: &[Point], half_width: f64, d_min: f64) -> std::result::Result<(), String> {
    let edge = half_width * (1.0 + FEASIBILITY_SLACK);
    for (i, p) in positions.iter().enumerate() {
        if !(p.x.abs() <= edge && p.y.abs() <= edge) {
            return Err(format!("antenna {i} at ({}, {}) outside the region", p.x, p.y));
        }
        for (j, q) in positions.iter().enumerate().skip(i + 1) {
            let d = (p - q).norm();
            if d < d_min * (1.0 - FEASIBILITY_SLACK) {
                return Err(format!("antennas {i} and {j} are {d} m apart"));
            }
        }
    }
    Ok(())
}

fn user_channels(positions: &[Point], angles: &[Vec<PathAngle>], gains: &[CVector], wavelength: f64) -> Result<CMatrix> {
    if angles.len() != gains.len() {
        return Err(domain("number of path-angle sets does not match number of path gain sets"));
    }
    let mut h = CMatrix::zeros(positions.len(), gains.len());
    for (k, (ang, sigma)) in angles.iter().zip(gains).enumerate() {
        if ang.len() != sigma.len() {
            return Err(domain(format!(
                "user {k}: {} path angles but {} path gains",
                ang.len(),
                sigma.len()
            )));
        }
        // h_k = G_k^H Σ_k 1
        let g = field_response_matrix(positions, ang, wavelength)?;
        h.set_column(k, &(g.adjoint() * sigma));
    }
    Ok(h)
}

/// DL channel matrix `H_D` (N_t × K_D).
pub fn build_downlink_channel(transmit: &[Point], realization: &ChannelRealization) -> Result<CMatrix> {
    user_channels(
        transmit,
        &realization.geometry.downlink,
        &realization.prm_downlink,
        realization.wavelength,
    )
}

/// UL channel matrix `H_U` (N_r × K_U).
pub fn build_uplink_channel(receive: &[Point], realization: &ChannelRealization) -> Result<CMatrix> {
    user_channels(
        receive,
        &realization.geometry.uplink,
        &realization.prm_uplink,
        realization.wavelength,
    )
}

/// SI channel `H_SI = F_SI^H Σ_SI G_SI` (N_r × N_t).
pub fn build_si_channel(transmit: &[Point], receive: &[Point], realization: &ChannelRealization) -> Result<CMatrix> {
    let geo = &realization.geometry;
    let sigma = &realization.prm_si;
    if sigma.nrows() != geo.si_receive.len() || sigma.ncols() != geo.si_transmit.len() {
        return Err(domain(format!(
            "SI path response is {}×{} but there are {} receive and {} transmit SI paths",
            sigma.nrows(),
            sigma.ncols(),
            geo.si_receive.len(),
            geo.si_transmit.len()
        )));
    }
    let g = field_response_matrix(transmit, &geo.si_transmit, realization.wavelength)?;
    let f = field_response_matrix(receive, &geo.si_receive, realization.wavelength)?;
    Ok(f.adjoint() * sigma * g)
}

/// Channel matrices for one antenna layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Channels {
    pub h_d: CMatrix,
    pub h_u: CMatrix,
    pub h_si: CMatrix,
    pub h_iui: CMatrix,
}

impl Channels {
    pub fn build(layout: &AntennaLayout, realization: &ChannelRealization) -> Result<Self> {
        Ok(Self {
            h_d: build_downlink_channel(&layout.transmit, realization)?,
            h_u: build_uplink_channel(&layout.receive, realization)?,
            h_si: build_si_channel(&layout.transmit, &layout.receive, realization)?,
            h_iui: realization.h_iui.clone(),
        })
    }
}

/// Circularly-symmetric complex Gaussian sample with the given variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(s * re, s * im)
}

fn sample_angles<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<PathAngle> {
    (0..count)
        .map(|_| PathAngle::new(rng.random_range(0.0..=PI), rng.random_range(0.0..=PI)))
        .collect()
}

/// Draws one realization: user distances ~ U(20, 100) m, angles ~ U(0, π),
/// user path gains ~ CN(0, ρ0 d^-α / L), SI gains ~ CN(0, ρ_SI / L_SI) and
/// IUI ~ CN(0, ρ_IUI). Draw order is fixed, so the result depends only on the
/// RNG state.
pub fn sample_realization<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<ChannelRealization> {
    config.validate()?;
    let l = config.paths;
    let l_si = config.si_paths;
    let downlink_distances: Vec<f64> = (0..config.k_d).map(|_| rng.random_range(20.0..=100.0)).collect();
    let uplink_distances: Vec<f64> = (0..config.k_u).map(|_| rng.random_range(20.0..=100.0)).collect();
    let downlink: Vec<_> = (0..config.k_d).map(|_| sample_angles(rng, l)).collect();
    let uplink: Vec<_> = (0..config.k_u).map(|_| sample_angles(rng, l)).collect();
    let si_transmit = sample_angles(rng, l_si);
    let si_receive = sample_angles(rng, l_si);

    let gains = |d: f64, rng: &mut R| {
        let var = config.rho_0 * d.powf(-config.alpha) / l as f64;
        CVector::from_iterator(l, (0..l).map(|_| complex_normal(rng, var)))
    };
    let prm_downlink: Vec<_> = downlink_distances.iter().map(|&d| gains(d, rng)).collect();
    let prm_uplink: Vec<_> = uplink_distances.iter().map(|&d| gains(d, rng)).collect();
    let si_var = config.si_path_variance();
    let prm_si = CMatrix::from_fn(l_si, l_si, |_, _| complex_normal(rng, si_var));
    let h_iui = CMatrix::from_fn(config.k_d, config.k_u, |_, _| complex_normal(rng, config.rho_iui));

    Ok(ChannelRealization {
        geometry: PathGeometry {
            downlink,
            uplink,
            si_transmit,
            si_receive,
            downlink_distances,
            uplink_distances,
        },
        prm_downlink,
        prm_uplink,
        prm_si,
        h_iui,
        wavelength: config.wavelength(),
    })
}

/// Realization for `trial` of an experiment keyed by `seed`.
pub fn sample_trial_realization(config: &ScenarioConfig, seed: u64, trial: u64) -> Result<ChannelRealization> {
    let mut rng = crate::rng::trial_rng(seed, trial, crate::rng::Stream::Realization);
    sample_realization(config, &mut rng)
}

/// Convenience: diagonal vector of path gains from a slice.
pub fn gains(values: &[C64]) -> CVector {
    DVector::from_column_slice(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const LAMBDA: f64 = 0.01;

    fn single_user(angles: Vec<PathAngle>, sigma: Vec<C64>) -> ChannelRealization {
        let l = angles.len();
        ChannelRealization {
            geometry: PathGeometry {
                downlink: vec![angles.clone()],
                uplink: vec![angles],
                si_transmit: vec![PathAngle::new(0.3, 0.2)],
                si_receive: vec![PathAngle::new(1.1, 2.0)],
                downlink_distances: vec![50.0],
                uplink_distances: vec![50.0],
            },
            prm_downlink: vec![gains(&sigma)],
            prm_uplink: vec![gains(&sigma)],
            prm_si: CMatrix::from_element(1, 1, c(0.7, -0.2)),
            h_iui: CMatrix::zeros(1, 1),
            wavelength: LAMBDA,
        }
        .tap(|r| assert_eq!(r.prm_downlink[0].len(), l))
    }

    trait Tap: Sized {
        fn tap(self, f: impl FnOnce(&Self)) -> Self {
            f(&self);
            self
        }
    }
    impl<T> Tap for T {}

    #[test]
    fn wave_vector_examples() {
        let v = wave_vector(PI / 2.0, 0.0).unwrap();
        assert!((v - Point::new(1.0, 0.0)).norm() < 1e-15);
        let v = wave_vector(0.0, 1.234).unwrap();
        assert!((v - Point::new(0.0, 1.0)).norm() < 1e-15);
        let v = wave_vector(PI / 3.0, PI / 4.0).unwrap();
        assert!((v.x - 0.612_372_435_695_794_5).abs() < 1e-12);
        assert!((v.y - 0.5).abs() < 1e-12);
        assert!(v.norm() <= 1.0);
        assert!(wave_vector(-0.1, 0.0).is_err());
        assert!(wave_vector(0.1, 3.5).is_err());
    }

    #[test]
    fn field_response_examples() {
        let angles = vec![PathAngle::new(0.4, 1.0), PathAngle::new(2.0, 0.3)];
        let g = field_response_vector(&Point::zeros(), &angles, LAMBDA).unwrap();
        assert!(g.iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-15));

        let g = field_response_vector(&Point::new(LAMBDA / 2.0, 0.0), &[PathAngle::new(PI / 2.0, 0.0)], LAMBDA).unwrap();
        assert!((g[0] - c(-1.0, 0.0)).norm() < 1e-12);

        assert!(field_response_vector(&Point::zeros(), &[], LAMBDA).is_err());
    }

    #[test]
    fn single_path_collapse() {
        let sigma = c(0.3, -0.4);
        let real = single_user(vec![PathAngle::new(1.0, 0.5)], vec![sigma]);
        let h = build_downlink_channel(&[Point::zeros()], &real).unwrap();
        assert!((h[(0, 0)] - sigma).norm() < 1e-15);
        let h = build_uplink_channel(&[Point::zeros()], &real).unwrap();
        assert!((h[(0, 0)] - sigma).norm() < 1e-15);
        let h = build_si_channel(&[Point::zeros()], &[Point::zeros()], &real).unwrap();
        assert!((h[(0, 0)] - c(0.7, -0.2)).norm() < 1e-15);
    }

    #[test]
    fn common_translation_keeps_single_path_magnitude() {
        let real = single_user(vec![PathAngle::new(1.0, 0.5)], vec![c(0.3, -0.4)]);
        let base = [Point::new(0.001, 0.002), Point::new(-0.003, 0.0)];
        let shift = Point::new(0.0017, -0.0041);
        let moved: Vec<Point> = base.iter().map(|p| p + shift).collect();
        let h0 = build_downlink_channel(&base, &real).unwrap();
        let h1 = build_downlink_channel(&moved, &real).unwrap();
        for n in 0..2 {
            assert!((h0[(n, 0)].norm() - h1[(n, 0)].norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_mismatch_is_a_domain_error() {
        let mut real = single_user(vec![PathAngle::new(1.0, 0.5)], vec![c(0.3, -0.4)]);
        real.prm_downlink[0] = gains(&[c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(build_downlink_channel(&[Point::zeros()], &real), Err(Error::Domain(_))));
        real.prm_si = CMatrix::zeros(2, 1);
        assert!(build_si_channel(&[Point::zeros()], &[Point::zeros()], &real).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_in_range() {
        let cfg = ScenarioConfig::default();
        let a = sample_trial_realization(&cfg, 11, 5).unwrap();
        let b = sample_trial_realization(&cfg, 11, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.is_finite());
        assert!(a.geometry.angles().all(|p| (0.0..=PI).contains(&p.elevation) && (0.0..=PI).contains(&p.azimuth)));
        assert!(a
            .geometry
            .downlink_distances
            .iter()
            .chain(&a.geometry.uplink_distances)
            .all(|d| (20.0..=100.0).contains(d)));
        assert_eq!(a.prm_si.shape(), (cfg.si_paths, cfg.si_paths));
        assert_eq!(a.h_iui.shape(), (cfg.k_d, cfg.k_u));
        let c = sample_trial_realization(&cfg, 11, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn path_gain_variance_matches_law_of_large_numbers() {
        let cfg = ScenarioConfig::default();
        let d: f64 = 50.0;
        let target = cfg.rho_0 * d.powf(-cfg.alpha) / cfg.paths as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let mean_power: f64 = (0..n).map(|_| complex_normal(&mut rng, target).norm_sqr()).sum::<f64>() / n as f64;
        assert!((mean_power / target - 1.0).abs() < 0.05, "ratio {}", mean_power / target);
    }
}
