//! TOML run configuration.
//!
//! ```toml
//! N = 14
//! J_over_omega = -0.2
//! A_over_omega = 0.8
//! omega_c_over_omega = 1.0
//! n_ph = 14               # defaults to N
//!
//! [coupling]
//! mode = "norm1"          # norm1: g sqrt(N)/omega fixed, norm2: g/omega fixed
//! value = 0.5
//!
//! [time]
//! dt = 0.01
//! t_max = 100.0
//!
//! [sweep]
//! A_min = -0.95
//! A_max = 1.5
//! A_step = 0.05
//! coupling_values = [0.5, 1.2]
//! N_values = [6, 7, 8, 9, 10, 11, 12, 13, 14]
//! n_levels = 100
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::TimeGrid;
use crate::error::{Error, Result};
use crate::params::{AggregateParams, CavityParams, CouplingRepr, CouplingSpec};

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(rename = "J_over_omega")]
    pub j_over_omega: Option<f64>,
    #[serde(rename = "A_over_omega")]
    pub a_over_omega: Option<f64>,
    pub omega_c_over_omega: Option<f64>,
    pub n_ph: Option<usize>,
    pub coupling: Option<CouplingRepr>,
    pub time: Option<RawTime>,
    pub sweep: Option<RawSweep>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawTime {
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    #[serde(rename = "A_min")]
    pub a_min: Option<f64>,
    #[serde(rename = "A_max")]
    pub a_max: Option<f64>,
    #[serde(rename = "A_step")]
    pub a_step: Option<f64>,
    pub coupling_values: Option<Vec<f64>>,
    #[serde(rename = "N_values")]
    pub n_values: Option<Vec<usize>>,
    pub n_levels: Option<usize>,
    pub max_dim: Option<usize>,
}

/// Default interaction grid: step 0.05 on `(-1, 1.5]`.
pub const DEFAULT_A_GRID: (f64, f64, f64) = (-0.95, 1.5, 0.05);
/// Default scaling range; `--extended` appends 16 and 18.
pub const DEFAULT_N_VALUES: [usize; 9] = [6, 7, 8, 9, 10, 11, 12, 13, 14];
pub const EXTENDED_N_VALUES: [usize; 2] = [16, 18];
/// Largest subspace dimension a charging run will diagonalize.
pub const DEFAULT_MAX_DIM: usize = 6000;

/// Fully resolved configuration with defaults applied.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub n_sites: usize,
    pub j_over_omega: f64,
    pub a_over_omega: f64,
    pub omega_c_over_omega: f64,
    /// `None` means one photon per monomer, whatever `N` is.
    pub n_ph: Option<usize>,
    pub coupling: CouplingSpec,
    pub grid: TimeGrid,
    pub a_grid: (f64, f64, f64),
    pub coupling_values: Vec<f64>,
    pub n_values: Vec<usize>,
    pub n_levels: usize,
    pub max_dim: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_sites: 14,
            j_over_omega: -0.2,
            a_over_omega: 0.8,
            omega_c_over_omega: 1.0,
            n_ph: None,
            coupling: CouplingSpec::NormI { gbar: 0.5 },
            grid: TimeGrid::default(),
            a_grid: DEFAULT_A_GRID,
            coupling_values: vec![0.5, 1.2],
            n_values: DEFAULT_N_VALUES.to_vec(),
            n_levels: 100,
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::ReadConfig { path: path.into(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        let d = Self::default();
        let sweep = raw.sweep.unwrap_or_default();
        let a_grid = (
            sweep.a_min.unwrap_or(d.a_grid.0),
            sweep.a_max.unwrap_or(d.a_grid.1),
            sweep.a_step.unwrap_or(d.a_grid.2),
        );
        let grid = match raw.time {
            Some(t) => TimeGrid::new(t.dt.unwrap_or(d.grid.dt), t.t_max.unwrap_or(d.grid.t_max))?,
            None => d.grid,
        };
        let cfg = Self {
            n_sites: raw.n.unwrap_or(d.n_sites),
            j_over_omega: raw.j_over_omega.unwrap_or(d.j_over_omega),
            a_over_omega: raw.a_over_omega.unwrap_or(d.a_over_omega),
            omega_c_over_omega: raw.omega_c_over_omega.unwrap_or(d.omega_c_over_omega),
            n_ph: raw.n_ph,
            coupling: raw.coupling.map(CouplingSpec::try_from).transpose()?.unwrap_or(d.coupling),
            grid,
            a_grid,
            coupling_values: sweep.coupling_values.unwrap_or(d.coupling_values),
            n_values: sweep.n_values.unwrap_or(d.n_values),
            n_levels: sweep.n_levels.unwrap_or(d.n_levels),
            max_dim: sweep.max_dim.unwrap_or(d.max_dim),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        self.params()?;
        self.cavity()?;
        let (lo, hi, step) = self.a_grid;
        if !(step > 0.0 && step.is_finite() && lo.is_finite() && hi.is_finite()) || hi < lo {
            return Err(Error::Config(format!("A grid [{lo}, {hi}] with step {step} is invalid")));
        }
        if self.n_values.is_empty() {
            return Err(Error::Config("sweep.N_values is empty".into()));
        }
        for &v in &self.coupling_values {
            self.coupling.with_value(v)?;
        }
        Ok(())
    }

    pub fn params(&self) -> Result<AggregateParams> {
        self.params_for(self.n_sites, self.a_over_omega)
    }

    pub fn params_for(&self, n_sites: usize, a_over_omega: f64) -> Result<AggregateParams> {
        AggregateParams::dimensionless(n_sites, self.j_over_omega, a_over_omega)
    }

    pub fn cavity(&self) -> Result<CavityParams> {
        self.cavity_for(self.n_sites)
    }

    pub fn cavity_for(&self, n_sites: usize) -> Result<CavityParams> {
        CavityParams::new(self.omega_c_over_omega, self.n_ph.unwrap_or(n_sites))
    }

    /// Interaction values of the sweep grid, `A_min + i * A_step <= A_max`.
    pub fn a_values(&self) -> Vec<f64> {
        let (lo, hi, step) = self.a_grid;
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| round_grid(lo + i as f64 * step)).collect()
    }

    pub fn with_extended(mut self, extended: bool) -> Self {
        if extended {
            for n in EXTENDED_N_VALUES {
                if !self.n_values.contains(&n) {
                    self.n_values.push(n);
                }
            }
        }
        self
    }
}

/// Snap grid values to 12 decimals so accumulated steps print cleanly.
fn round_grid(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}
