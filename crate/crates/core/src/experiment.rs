//! Seeded Monte Carlo campaigns over one swept parameter.
//!
//! Every (sweep value, algorithm, trial) job samples its realization from
//! `(seed, trial)` alone, so algorithms at the same trial index see the same
//! channel and the same initial layout. Jobs run on a rayon pool and are
//! gathered back in job order.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::baselines::{solve_fpas_mismatched, solve_half_duplex_mismatched};
use crate::channel::{complex_normal, sample_trial_realization, ChannelRealization};
use crate::config::{db_to_linear, dbm_to_watts, ScenarioConfig};
use crate::error::{config as config_error, Error, Result};
use crate::rng::{trial_rng, Stream};
use crate::solver::{alternating_optimize_mismatched, AoOptions, PlacementMethod, TrialResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepField {
    /// Antennas per side.
    N,
    /// Users per direction.
    K,
    /// Region side in wavelengths.
    A,
    /// DL budget in watts.
    PDMax,
    PDMaxDbm,
    L,
    /// SI path-gain scale, linear.
    RhoSi,
    RhoSiDb,
    /// Angle-error width (rad).
    ThetaM,
    /// Normalized PRM-error variance.
    SigmaE2,
}

impl SweepField {
    pub fn name(self) -> &'static str {
        match self {
            Self::N => "N",
            Self::K => "K",
            Self::A => "A",
            Self::PDMax => "p_D_max",
            Self::PDMaxDbm => "p_D_max_dbm",
            Self::L => "L",
            Self::RhoSi => "rho_SI",
            Self::RhoSiDb => "rho_SI_db",
            Self::ThetaM => "theta_m",
            Self::SigmaE2 => "sigma_e2",
        }
    }

    fn is_count(self) -> bool {
        matches!(self, Self::N | Self::K | Self::L)
    }
}

impl FromStr for SweepField {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "N" => Self::N,
            "K" => Self::K,
            "A" => Self::A,
            "p_D_max" => Self::PDMax,
            "p_D_max_dbm" => Self::PDMaxDbm,
            "L" => Self::L,
            "rho_SI" => Self::RhoSi,
            "rho_SI_db" => Self::RhoSiDb,
            "theta_m" => Self::ThetaM,
            "sigma_e2" => Self::SigmaE2,
            other => return Err(config_error(format!("unknown sweep field `{other}`"))),
        })
    }
}

impl fmt::Display for SweepField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub field: SweepField,
    pub values: Vec<f64>,
}

impl FromStr for Sweep {
    type Err = Error;
    /// Parses `field=v1,v2,...`.
    fn from_str(s: &str) -> Result<Self> {
        let (field, values) = s
            .split_once('=')
            .ok_or_else(|| config_error(format!("sweep `{s}` is not of the form field=v1,v2")))?;
        let field: SweepField = field.trim().parse()?;
        let values = values
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| config_error(format!("bad sweep value `{v}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { field, values })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    FpBsum,
    FpBsumSimplified,
    FpGd,
    Fpas,
    Hd,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [Self::FpBsum, Self::FpBsumSimplified, Self::FpGd, Self::Fpas, Self::Hd];

    pub fn id(self) -> &'static str {
        match self {
            Self::FpBsum => "fp-bsum",
            Self::FpBsumSimplified => "fp-bsum-simplified",
            Self::FpGd => "fp-gd",
            Self::Fpas => "fpas",
            Self::Hd => "hd",
        }
    }

    /// Parses a comma-separated list.
    pub fn parse_list(s: &str) -> Result<Vec<Algorithm>> {
        s.split(',').map(|a| a.trim().parse()).collect()
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| config_error(format!("unknown algorithm `{s}`")))
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub base: ScenarioConfig,
    pub sweep: Option<Sweep>,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Rate multiplier of the half-duplex baseline.
    pub duplex_factor: f64,
    /// Angle-error width used when `theta_m` is not swept.
    pub theta_m: f64,
    /// PRM-error variance used when `sigma_e2` is not swept.
    pub sigma_e2: f64,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
    /// Forces simplified geometry on every position-optimizing algorithm.
    pub simplified_geometry: bool,
    pub max_outer: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let base = ScenarioConfig::default();
        Self {
            seed: base.seed,
            base,
            sweep: None,
            algorithms: vec![Algorithm::FpBsum],
            trials: 200,
            out: None,
            duplex_factor: 0.5,
            theta_m: 0.0,
            sigma_e2: 0.0,
            threads: None,
            simplified_geometry: false,
            max_outer: AoOptions::default().max_outer,
        }
    }
}

impl ExperimentSpec {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path.as_ref())?)
    }

    /// Reads scenario keys from `[scenario]` (or the top level) and run
    /// settings from `[experiment]`.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        let experiment = match table.remove("experiment") {
            Some(toml::Value::Table(t)) => t,
            Some(_) => return Err(config_error("[experiment] must be a table")),
            None => toml::Table::new(),
        };
        let scenario = match table.remove("scenario") {
            Some(toml::Value::Table(t)) if table.is_empty() => t,
            Some(_) => return Err(config_error("put scenario keys either in [scenario] or at the top level")),
            None => table,
        };
        let base = ScenarioConfig::from_table(&scenario)?;
        let mut spec = Self {
            seed: base.seed,
            base,
            ..Self::default()
        };
        for (key, value) in &experiment {
            let num = || -> Result<f64> {
                value
                    .as_float()
                    .or_else(|| value.as_integer().map(|i| i as f64))
                    .ok_or_else(|| config_error(format!("`{key}` must be a number")))
            };
            let count = || -> Result<u64> {
                value
                    .as_integer()
                    .filter(|v| *v >= 0)
                    .map(|v| v as u64)
                    .ok_or_else(|| config_error(format!("`{key}` must be a nonnegative integer")))
            };
            let text = || -> Result<&str> { value.as_str().ok_or_else(|| config_error(format!("`{key}` must be a string"))) };
            match key.as_str() {
                "trials" => spec.trials = count()? as usize,
                "seed" => spec.seed = count()?,
                "sweep" => spec.sweep = Some(text()?.parse()?),
                "algos" | "algorithms" => {
                    spec.algorithms = match value {
                        toml::Value::Array(items) => items
                            .iter()
                            .map(|v| v.as_str().ok_or_else(|| config_error("algorithm ids must be strings"))?.parse())
                            .collect::<Result<Vec<_>>>()?,
                        _ => Algorithm::parse_list(text()?)?,
                    }
                }
                "out" => spec.out = Some(PathBuf::from(text()?)),
                "duplex_factor" => spec.duplex_factor = num()?,
                "theta_m" => spec.theta_m = num()?,
                "sigma_e2" => spec.sigma_e2 = num()?,
                "threads" => spec.threads = Some(count()? as usize),
                "simplified_geometry" => {
                    spec.simplified_geometry = value
                        .as_bool()
                        .ok_or_else(|| config_error("`simplified_geometry` must be a boolean"))?
                }
                "max_outer" => spec.max_outer = count()? as usize,
                other => return Err(config_error(format!("unknown experiment key `{other}`"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.trials == 0 {
            return Err(config_error("trials must be at least 1"));
        }
        if self.algorithms.is_empty() {
            return Err(config_error("no algorithms selected"));
        }
        if self.max_outer == 0 {
            return Err(config_error("max_outer must be at least 1"));
        }
        if !(self.duplex_factor.is_finite() && self.duplex_factor >= 0.0) {
            return Err(config_error("duplex_factor must be nonnegative"));
        }
        if self.threads == Some(0) {
            return Err(config_error("threads must be at least 1"));
        }
        for (name, v) in [("theta_m", self.theta_m), ("sigma_e2", self.sigma_e2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(config_error(format!("{name} must be nonnegative")));
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(config_error("sweep has no values"));
            }
            for &v in &sweep.values {
                self.point(Some(v))?;
            }
        }
        Ok(())
    }

    /// Sweep values, or a single unswept point.
    pub fn points(&self) -> Vec<Option<f64>> {
        match &self.sweep {
            Some(s) => s.values.iter().copied().map(Some).collect(),
            None => vec![None],
        }
    }

    /// Scenario and error levels at one sweep point.
    pub fn point(&self, value: Option<f64>) -> Result<SweepPoint> {
        let mut point = SweepPoint {
            config: self.base.clone(),
            theta_m: self.theta_m,
            sigma_e2: self.sigma_e2,
        };
        point.config.seed = self.seed;
        let (Some(sweep), Some(v)) = (&self.sweep, value) else {
            return Ok(point);
        };
        let field = sweep.field;
        if !v.is_finite() || (field.is_count() && (v < 0.0 || v.fract() != 0.0)) {
            return Err(config_error(format!("invalid {field} value {v}")));
        }
        let cfg = &mut point.config;
        match field {
            SweepField::N => {
                cfg.n_t = v as usize;
                cfg.n_r = v as usize;
            }
            SweepField::K => *cfg = cfg.clone().with_users(v as usize),
            SweepField::A => cfg.region_wavelengths = v,
            SweepField::PDMax => cfg.p_d_max = v,
            SweepField::PDMaxDbm => cfg.p_d_max = dbm_to_watts(v),
            SweepField::L => cfg.paths = v as usize,
            SweepField::RhoSi => cfg.rho_si = v,
            SweepField::RhoSiDb => cfg.rho_si = db_to_linear(v),
            SweepField::ThetaM => point.theta_m = v,
            SweepField::SigmaE2 => point.sigma_e2 = v,
        }
        if point.theta_m < 0.0 || point.sigma_e2 < 0.0 {
            return Err(config_error(format!("invalid {field} value {v}")));
        }
        point.config.validate()?;
        Ok(point)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub config: ScenarioConfig,
    pub theta_m: f64,
    pub sigma_e2: f64,
}

/// Additive `U(−θ_m/2, θ_m/2)` noise on every path angle, clipped to `[0, π]`.
pub fn perturb_angles<R: Rng + ?Sized>(realization: &ChannelRealization, theta_m: f64, rng: &mut R) -> ChannelRealization {
    let mut out = realization.clone();
    if theta_m > 0.0 {
        let h = 0.5 * theta_m;
        for a in out.geometry.angles_mut() {
            a.elevation = (a.elevation + rng.random_range(-h..=h)).clamp(0.0, std::f64::consts::PI);
            a.azimuth = (a.azimuth + rng.random_range(-h..=h)).clamp(0.0, std::f64::consts::PI);
        }
    }
    out
}

/// Replaces every PRM entry `h` by `h + |h| σ_e g` with `g ~ CN(0, 1)`.
/// The IUI channel is left as is.
pub fn perturb_prm<R: Rng + ?Sized>(realization: &ChannelRealization, sigma_e2: f64, rng: &mut R) -> ChannelRealization {
    let mut out = realization.clone();
    if sigma_e2 > 0.0 {
        let sigma_e = sigma_e2.sqrt();
        let entries = out
            .prm_downlink
            .iter_mut()
            .chain(out.prm_uplink.iter_mut())
            .flat_map(|v| v.iter_mut())
            .chain(out.prm_si.iter_mut());
        for h in entries {
            *h += complex_normal(rng, 1.0) * (h.norm() * sigma_e);
        }
    }
    out
}

/// The solver-visible channel of one trial: angle error first, then PRM error.
pub fn estimated_channel(truth: &ChannelRealization, seed: u64, trial: u64, theta_m: f64, sigma_e2: f64) -> ChannelRealization {
    let est = perturb_angles(truth, theta_m, &mut trial_rng(seed, trial, Stream::AngleError));
    perturb_prm(&est, sigma_e2, &mut trial_rng(seed, trial, Stream::PathGainError))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub algorithm: Algorithm,
    pub sweep_value: Option<f64>,
    pub trial: u64,
    /// The solver output, or the error message of a failed trial.
    pub outcome: std::result::Result<TrialResult, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub algorithm: Algorithm,
    pub sweep_value: Option<f64>,
    pub n_ok: usize,
    pub n_failed: usize,
    pub mean: f64,
    /// Sample standard deviation (0 with fewer than two trials).
    pub std: f64,
    pub min: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
    pub max: f64,
    pub mean_iterations: f64,
    pub median_iterations: f64,
    pub mean_wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResults {
    pub spec: ExperimentSpec,
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<Aggregate>,
}

impl ExperimentResults {
    pub fn aggregate(&self, algorithm: Algorithm, sweep_value: Option<f64>) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.algorithm == algorithm && a.sweep_value == sweep_value)
    }

    /// Successful results of one (algorithm, sweep value) cell, by trial.
    pub fn successes(&self, algorithm: Algorithm, sweep_value: Option<f64>) -> impl Iterator<Item = (u64, &TrialResult)> {
        self.records
            .iter()
            .filter(move |r| r.algorithm == algorithm && r.sweep_value == sweep_value)
            .filter_map(|r| r.outcome.as_ref().ok().map(|res| (r.trial, res)))
    }
}

/// Solves one (point, algorithm, trial) job.
pub fn run_trial(spec: &ExperimentSpec, point: &SweepPoint, algorithm: Algorithm, trial: u64) -> Result<TrialResult> {
    let cfg = &point.config;
    let truth = sample_trial_realization(cfg, spec.seed, trial)?;
    let perturbed = point.theta_m > 0.0 || point.sigma_e2 > 0.0;
    let estimate = if perturbed {
        Some(estimated_channel(&truth, spec.seed, trial, point.theta_m, point.sigma_e2))
    } else {
        None
    };
    let est = estimate.as_ref().unwrap_or(&truth);
    let opts = AoOptions {
        max_outer: spec.max_outer,
        simplified_geometry: spec.simplified_geometry || algorithm == Algorithm::FpBsumSimplified,
        placement: match algorithm {
            Algorithm::FpGd => PlacementMethod::GradientDescent,
            Algorithm::Fpas => PlacementMethod::Fixed,
            _ => PlacementMethod::Bsum,
        },
        trial,
        ..AoOptions::default()
    };
    let result = match algorithm {
        Algorithm::FpBsum | Algorithm::FpBsumSimplified | Algorithm::FpGd => {
            alternating_optimize_mismatched(cfg, est, &truth, None, &opts)
        }
        Algorithm::Fpas => solve_fpas_mismatched(cfg, est, &truth, &opts),
        Algorithm::Hd => solve_half_duplex_mismatched(cfg, est, &truth, spec.duplex_factor, &opts),
    }?;
    if !result.weighted_sum_rate.is_finite() {
        return Err(Error::Numerical("non-finite weighted sum-rate".into()));
    }
    Ok(result)
}

/// Runs every job of the experiment and aggregates per (sweep value, algorithm).
/// Records are ordered by sweep value, then algorithm, then trial.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResults> {
    spec.validate()?;
    let points = spec
        .points()
        .into_iter()
        .map(|v| spec.point(v).map(|p| (v, p)))
        .collect::<Result<Vec<_>>>()?;
    let mut jobs = Vec::new();
    for (pi, (value, _)) in points.iter().enumerate() {
        for &alg in &spec.algorithms {
            for t in 0..spec.trials as u64 {
                jobs.push((pi, *value, alg, t));
            }
        }
    }
    let run = |&(pi, value, alg, t): &(usize, Option<f64>, Algorithm, u64)| TrialRecord {
        algorithm: alg,
        sweep_value: value,
        trial: t,
        outcome: run_trial(spec, &points[pi].1, alg, t).map_err(|e| e.to_string()),
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = spec.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| config_error(format!("thread pool: {e}")))?;
    let records: Vec<TrialRecord> = pool.install(|| jobs.par_iter().map(run).collect());

    let mut aggregates = Vec::new();
    for (value, _) in &points {
        for &alg in &spec.algorithms {
            let cell: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.algorithm == alg && r.sweep_value == *value)
                .collect();
            aggregates.push(aggregate_cell(alg, *value, &cell));
        }
    }
    Ok(ExperimentResults {
        spec: spec.clone(),
        records,
        aggregates,
    })
}

/// Linear interpolation between order statistics of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn aggregate_cell(algorithm: Algorithm, sweep_value: Option<f64>, cell: &[&TrialRecord]) -> Aggregate {
    let ok: Vec<&TrialResult> = cell.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    let mut rates: Vec<f64> = ok.iter().map(|r| r.weighted_sum_rate).collect();
    rates.sort_by(f64::total_cmp);
    let mut iters: Vec<f64> = ok.iter().map(|r| r.outer_iterations as f64).collect();
    iters.sort_by(f64::total_cmp);
    let walls: Vec<f64> = ok.iter().map(|r| r.wall_time_s).collect();
    let m = mean(&rates);
    let std = if rates.len() < 2 {
        0.0
    } else {
        (rates.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (rates.len() - 1) as f64).sqrt()
    };
    Aggregate {
        algorithm,
        sweep_value,
        n_ok: ok.len(),
        n_failed: cell.len() - ok.len(),
        mean: m,
        std,
        min: percentile(&rates, 0.0),
        p25: percentile(&rates, 0.25),
        median: percentile(&rates, 0.5),
        p75: percentile(&rates, 0.75),
        max: percentile(&rates, 1.0),
        mean_iterations: mean(&iters),
        median_iterations: percentile(&iters, 0.5),
        mean_wall_time_s: mean(&walls),
    }
}
