//! Experiment configuration, read from TOML.
//!
//! Every section and key is optional; `ExperimentConfig::default()` is what
//! `print-config` dumps.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ModeSelector, ScalarField, Wavenumber};
use crate::maps::{IntMatrix2, PerturbedCatMap, ShearStep};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapConfig {
    /// Row-major `[a, b, c, d]` for `[[a, b], [c, d]]`.
    pub matrix: [i64; 4],
    /// Shears applied after the linear map, in order.
    pub shears: Vec<ShearStep>,
}

impl Default for MapConfig {
    fn default() -> Self {
        MapConfig { matrix: [2, 1, 1, 1], shears: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    pub k0: [i64; 2],
    pub max_mode: usize,
    /// Physical grid size; `0` means the minimal `2 * max_mode + 2`.
    pub grid_size: usize,
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig { k0: [1, 0], max_mode: 128, grid_size: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub kappa: f64,
    /// Target for the certified tail of the stationary series.
    pub tol: f64,
    pub seed: u64,
    /// Steps for `pulses` and the probes.
    pub n_max: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { kappa: 1e-6, tol: 1e-12, seed: 0, n_max: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CumulativeConfig {
    pub n_list: Vec<f64>,
}

impl Default for CumulativeConfig {
    fn default() -> Self {
        CumulativeConfig { n_list: vec![10.0, 25.0, 64.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ShellsConfig {
    /// Shell base `L`; `0` means `lambda^2`.
    pub base: f64,
    /// Last shell index; `None` takes every shell inside the box.
    pub ell_max: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SectorConfig {
    pub min_angle: f64,
    pub fit_lo: f64,
    pub fit_hi: f64,
}

impl Default for SectorConfig {
    fn default() -> Self {
        SectorConfig { min_angle: 0.3, fit_lo: 8.0, fit_hi: 64.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OffpulseConfig {
    pub radius: f64,
}

impl Default for OffpulseConfig {
    fn default() -> Self {
        OffpulseConfig { radius: 20.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayConfig {
    /// Anisotropic orders to probe.
    pub p: Vec<f64>,
    /// Diffusivities for the uniform `H^{-1}` rate and for `tau_kappa`.
    pub kappas: Vec<f64>,
    pub delta: f64,
    /// Growth factor `M` for the critical scales; `0` means `exp(2 Lambda)`.
    pub m_fit: f64,
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig { p: vec![1.0, 2.0], kappas: vec![0.0, 1e-4, 1e-3], delta: 0.5, m_fit: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub selector: ModeSelector,
    pub n_samples: usize,
    /// Chain length; `0` picks the burn-in from the stationary series.
    pub n_steps: usize,
    pub shift_modes: Vec<[i64; 2]>,
    pub shift_kappas: Vec<f64>,
    pub shift_samples: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            selector: ModeSelector::Ball { radius: 10.0 },
            n_samples: 1000,
            n_steps: 0,
            shift_modes: vec![[1, 0], [1, 1], [2, -1]],
            shift_kappas: vec![1e-3, 1e-2, 3e-2],
            shift_samples: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub map: MapConfig,
    pub source: SourceConfig,
    pub run: RunConfig,
    pub cumulative: CumulativeConfig,
    pub shells: ShellsConfig,
    pub sector: SectorConfig,
    pub offpulse: OffpulseConfig,
    pub decay: DecayConfig,
    pub mc: McConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(e.message().replace('\n', " ")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::param("config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn matrix(&self) -> IntMatrix2 {
        let [a, b, c, d] = self.map.matrix;
        IntMatrix2::from_rows([[a, b], [c, d]])
    }

    pub fn build_map(&self) -> Result<PerturbedCatMap> {
        PerturbedCatMap::new(self.matrix(), self.map.shears.clone())
    }

    pub fn k0(&self) -> Wavenumber {
        Wavenumber::new(self.source.k0[0], self.source.k0[1])
    }

    pub fn build_source(&self) -> Result<ScalarField> {
        let field = ScalarField::pure_mode(self.k0(), self.source.max_mode)?;
        if self.source.grid_size == 0 {
            Ok(field)
        } else {
            field.with_grid_size(self.source.grid_size)
        }
    }

    /// Checks shared by every subcommand: the map and source build.
    pub fn validate_common(&self) -> Result<()> {
        self.build_map()?;
        self.build_source()?;
        if !(self.run.kappa >= 0.0) || !self.run.kappa.is_finite() {
            return Err(Error::param("run.kappa", format!("must be finite and >= 0, got {}", self.run.kappa)));
        }
        Ok(())
    }

    pub fn require_positive_kappa(&self) -> Result<()> {
        if self.run.kappa > 0.0 {
            Ok(())
        } else {
            Err(Error::param("run.kappa", format!("must be > 0 for the stationary series, got {}", self.run.kappa)))
        }
    }
}
