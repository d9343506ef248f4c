//! Scenario parameters.
//!
//! Values are stored in linear units (W, m, Hz). The text config format is a
//! flat TOML table whose keys mirror the field names used in the literature
//! (`K_D`, `N_t`, `rho_SI`, ...). Logarithmic inputs are accepted through
//! explicitly suffixed keys (`rho_SI_db`, `p_D_max_dbm`, ...) and converted
//! when parsed.

use std::f64::consts::PI;
use std::path::Path;

use crate::error::{config, Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Densest packing of equal discs in the plane, used to reject regions that
/// cannot hold the requested number of antennas.
const PACKING_DENSITY: f64 = 0.906_899_682_117_108_9;

/// Divisor used for the variance of the self-interference path gains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SiVarianceDivisor {
    /// `rho_SI / L_SI`: keeps the total SI channel power equal to `rho_SI`.
    #[default]
    SiPaths,
    /// `rho_SI / L`: divide by the user-channel path count instead.
    UserPaths,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Downlink users.
    pub k_d: usize,
    /// Uplink users.
    pub k_u: usize,
    /// Transmit antennas.
    pub n_t: usize,
    /// Receive antennas.
    pub n_r: usize,
    /// Side length of each square region, in wavelengths.
    pub region_wavelengths: f64,
    /// Minimum inter-antenna distance (m).
    pub d_min: f64,
    /// Paths per user channel.
    pub paths: usize,
    /// Paths of the self-interference channel (both ends).
    pub si_paths: usize,
    /// Reference path loss at 1 m (linear).
    pub rho_0: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Residual self-interference coefficient (linear).
    pub rho_si: f64,
    /// Inter-user interference coefficient (linear).
    pub rho_iui: f64,
    /// Noise power (W), shared by DL users and the BS receiver.
    pub sigma2: f64,
    /// Downlink sum-power budget (W).
    pub p_d_max: f64,
    /// Per-user uplink power cap (W).
    pub p_u_max: f64,
    /// Carrier frequency (Hz).
    pub f_c: f64,
    /// Priority weights, DL users first then UL users. Sum to one.
    pub weights: Vec<f64>,
    /// Outer convergence threshold (relative change of the weighted sum-rate).
    pub epsilon: f64,
    /// Inner placement convergence threshold (relative change of the surrogate objective).
    pub epsilon_bsum: f64,
    pub seed: u64,
    pub si_variance_divisor: SiVarianceDivisor,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * db_to_linear(dbm)
}

pub fn equal_weights(users: usize) -> Vec<f64> {
    vec![1.0 / users as f64; users]
}

impl Default for ScenarioConfig {
    /// The reference simulation settings: 4 DL and 4 UL users, 4 antennas per
    /// side, a 4λ×4λ region at 30 GHz.
    fn default() -> Self {
        let f_c = 30e9;
        let wavelength = SPEED_OF_LIGHT / f_c;
        Self {
            k_d: 4,
            k_u: 4,
            n_t: 4,
            n_r: 4,
            region_wavelengths: 4.0,
            d_min: wavelength / 2.0,
            paths: 8,
            si_paths: 6,
            rho_0: db_to_linear(-40.0),
            alpha: 2.8,
            rho_si: db_to_linear(-90.0),
            rho_iui: db_to_linear(-90.0),
            sigma2: dbm_to_watts(-90.0),
            p_d_max: dbm_to_watts(40.0),
            p_u_max: dbm_to_watts(10.0),
            f_c,
            weights: equal_weights(8),
            epsilon: 1e-3,
            epsilon_bsum: 1e-3,
            seed: 0,
            si_variance_divisor: SiVarianceDivisor::SiPaths,
        }
    }
}

impl ScenarioConfig {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.f_c
    }

    /// 2π/λ.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength()
    }

    /// Half the side of each square region (m); the region is centred on the origin.
    pub fn half_width(&self) -> f64 {
        0.5 * self.region_wavelengths * self.wavelength()
    }

    pub fn users(&self) -> usize {
        self.k_d + self.k_u
    }

    /// Same scenario with `k` DL and `k` UL users and equal weights.
    pub fn with_users(mut self, k: usize) -> Self {
        self.k_d = k;
        self.k_u = k;
        self.weights = equal_weights(2 * k);
        self
    }

    /// Same scenario with `n` antennas on each side.
    pub fn with_antennas(mut self, n: usize) -> Self {
        self.n_t = n;
        self.n_r = n;
        self
    }

    /// Variance of each self-interference path gain.
    pub fn si_path_variance(&self) -> f64 {
        match self.si_variance_divisor {
            SiVarianceDivisor::SiPaths => self.rho_si / self.si_paths as f64,
            SiVarianceDivisor::UserPaths => self.rho_si / self.paths as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.users() == 0 {
            return Err(config("at least one DL or UL user is required"));
        }
        if self.n_t == 0 || self.n_r == 0 {
            return Err(config("antenna counts must be positive"));
        }
        if self.paths == 0 || self.si_paths == 0 {
            return Err(config("path counts must be positive"));
        }
        let positive = [
            ("A", self.region_wavelengths),
            ("D_min", self.d_min),
            ("rho_0", self.rho_0),
            ("alpha", self.alpha),
            ("rho_SI", self.rho_si),
            ("rho_IUI", self.rho_iui),
            ("sigma2", self.sigma2),
            ("p_D_max", self.p_d_max),
            ("p_U_max", self.p_u_max),
            ("f_c", self.f_c),
            ("epsilon", self.epsilon),
            ("epsilon_bsum", self.epsilon_bsum),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(config(format!("{name} must be finite and positive, got {value}")));
            }
        }
        if self.weights.len() != self.users() {
            return Err(config(format!(
                "expected {} weights, got {}",
                self.users(),
                self.weights.len()
            )));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(config("weights must be finite and nonnegative"));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(config(format!("weights must sum to 1, got {total}")));
        }
        let side = self.region_wavelengths * self.wavelength();
        if side <= self.d_min {
            return Err(config(format!(
                "region side {side} m must exceed D_min = {} m",
                self.d_min
            )));
        }
        // Discs of radius D_min/2 centred inside the square fit in a square of side A·λ + D_min.
        let disc = PI * (0.5 * self.d_min).powi(2);
        let capacity = PACKING_DENSITY * (side + self.d_min).powi(2);
        for (label, n) in [("N_t", self.n_t), ("N_r", self.n_r)] {
            if n as f64 * disc > capacity {
                return Err(config(format!(
                    "{label} = {n} antennas cannot be packed with spacing {} m in a {side} m square",
                    self.d_min
                )));
            }
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        Self::from_table(&table)
    }

    /// Builds a config from the defaults overridden by the keys in `table`.
    /// Unknown keys are rejected.
    pub fn from_table(table: &toml::Table) -> Result<Self> {
        let mut cfg = Self::default();
        let mut weights: Option<Vec<f64>> = None;
        for (key, value) in table {
            match key.as_str() {
                "K" => {
                    let k = as_count(key, value)?;
                    cfg.k_d = k;
                    cfg.k_u = k;
                }
                "K_D" => cfg.k_d = as_count(key, value)?,
                "K_U" => cfg.k_u = as_count(key, value)?,
                "N" => {
                    let n = as_count(key, value)?;
                    cfg.n_t = n;
                    cfg.n_r = n;
                }
                "N_t" => cfg.n_t = as_count(key, value)?,
                "N_r" => cfg.n_r = as_count(key, value)?,
                "A" => cfg.region_wavelengths = as_f64(key, value)?,
                "L" => cfg.paths = as_count(key, value)?,
                "L_SI" => cfg.si_paths = as_count(key, value)?,
                "rho_0" => cfg.rho_0 = as_f64(key, value)?,
                "rho_0_db" => cfg.rho_0 = db_to_linear(as_f64(key, value)?),
                "alpha" => cfg.alpha = as_f64(key, value)?,
                "rho_SI" => cfg.rho_si = as_f64(key, value)?,
                "rho_SI_db" => cfg.rho_si = db_to_linear(as_f64(key, value)?),
                "rho_IUI" => cfg.rho_iui = as_f64(key, value)?,
                "rho_IUI_db" => cfg.rho_iui = db_to_linear(as_f64(key, value)?),
                "sigma2" => cfg.sigma2 = as_f64(key, value)?,
                "sigma2_dbm" => cfg.sigma2 = dbm_to_watts(as_f64(key, value)?),
                "p_D_max" => cfg.p_d_max = as_f64(key, value)?,
                "p_D_max_dbm" => cfg.p_d_max = dbm_to_watts(as_f64(key, value)?),
                "p_U_max" => cfg.p_u_max = as_f64(key, value)?,
                "p_U_max_dbm" => cfg.p_u_max = dbm_to_watts(as_f64(key, value)?),
                "epsilon" => cfg.epsilon = as_f64(key, value)?,
                "epsilon_bsum" => cfg.epsilon_bsum = as_f64(key, value)?,
                "seed" => {
                    let v = value
                        .as_integer()
                        .filter(|v| *v >= 0)
                        .ok_or_else(|| config("seed must be a nonnegative integer"))?;
                    cfg.seed = v as u64;
                }
                "weights" => {
                    let arr = value
                        .as_array()
                        .ok_or_else(|| config("weights must be an array of numbers"))?;
                    weights = Some(
                        arr.iter()
                            .map(|v| as_f64("weights", v))
                            .collect::<Result<Vec<_>>>()?,
                    );
                }
                "si_variance_divisor" => {
                    cfg.si_variance_divisor = match value.as_str() {
                        Some("L_SI") => SiVarianceDivisor::SiPaths,
                        Some("L") => SiVarianceDivisor::UserPaths,
                        _ => return Err(config("si_variance_divisor must be \"L_SI\" or \"L\"")),
                    }
                }
                // Frequency and spacing are resolved after the loop because D_min
                // in wavelengths depends on f_c.
                "f_c" | "D_min" | "D_min_lambda" => {}
                other => return Err(config(format!("unknown config key `{other}`"))),
            }
        }
        if let Some(v) = table.get("f_c") {
            cfg.f_c = as_f64("f_c", v)?;
        }
        cfg.d_min = cfg.wavelength() / 2.0;
        match (table.get("D_min"), table.get("D_min_lambda")) {
            (Some(_), Some(_)) => return Err(config("give only one of D_min and D_min_lambda")),
            (Some(v), None) => cfg.d_min = as_f64("D_min", v)?,
            (None, Some(v)) => cfg.d_min = as_f64("D_min_lambda", v)? * cfg.wavelength(),
            (None, None) => {}
        }
        cfg.weights = weights.unwrap_or_else(|| equal_weights(cfg.users()));
        cfg.validate()?;
        Ok(cfg)
    }
}

fn as_f64(key: &str, value: &toml::Value) -> Result<f64> {
    match value {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(config(format!("`{key}` must be a number"))),
    }
}

fn as_count(key: &str, value: &toml::Value) -> Result<usize> {
    value
        .as_integer()
        .filter(|v| *v >= 0)
        .map(|v| v as usize)
        .ok_or_else(|| config(format!("`{key}` must be a nonnegative integer")))
}
