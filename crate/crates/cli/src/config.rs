//! Run configuration: defaults, file layer, flag layer. Later layers win
//! field by field, and the merged result is validated once at the end so
//! error messages always name the offending key.

use std::fmt;
use std::path::{Path, PathBuf};

use levyslow_core::fastslow_system::{NoiseSpec, SystemSpec};
use levyslow_core::presets;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemId {
    Example1,
    Example2,
    /// Noise-ready linear benchmark (f = 0.1 y on the first mode, J = 1)
    /// whose graph has a closed form.
    Custom,
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemId::Example1 => write!(f, "example1"),
            SystemId::Example2 => write!(f, "example2"),
            SystemId::Custom => write!(f, "custom"),
        }
    }
}

/// Fully resolved run configuration. Serializes losslessly: every field
/// lands in the manifest and reading it back reproduces the struct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub system: SystemId,
    pub alpha: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub epsilon: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub b: f64,
    pub n_modes: usize,
    pub dt: f64,
    /// Backward window length; None picks the default saturation window.
    pub horizon: Option<f64>,
    pub seeds: Vec<u64>,
    pub y0_grid: Vec<f64>,
    pub out_dir: PathBuf,
}

/// One configuration layer; unknown keys are rejected with their name.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub system: Option<SystemId>,
    pub alpha: Option<f64>,
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    pub epsilon: Option<f64>,
    pub sigma1: Option<f64>,
    pub sigma2: Option<f64>,
    pub b: Option<f64>,
    pub n_modes: Option<usize>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub seeds: Option<Vec<u64>>,
    pub y0_grid: Option<Vec<f64>>,
    pub out_dir: Option<PathBuf>,
}

impl PartialConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("config file {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::config(format!("config file {}: {e}", path.display())))
    }
}

fn default_y0_grid() -> Vec<f64> {
    (0..21).map(|i| -2.0 + 0.2 * i as f64).collect()
}

impl ExperimentConfig {
    pub fn defaults(system: SystemId) -> Self {
        Self {
            system,
            alpha: 1.5,
            alpha1: 1.5,
            alpha2: 1.5,
            epsilon: 0.01,
            sigma1: 0.1,
            sigma2: 0.0,
            b: 1.0,
            n_modes: 8,
            dt: 1e-4,
            horizon: None,
            seeds: (1..=8).collect(),
            y0_grid: default_y0_grid(),
            out_dir: PathBuf::from("out"),
        }
    }

    /// defaults <- file <- flags, then validation. `alpha1`/`alpha2`
    /// follow `alpha` unless a layer pins them separately.
    pub fn resolve(
        system: SystemId,
        file: PartialConfig,
        flags: PartialConfig,
    ) -> Result<Self, CliError> {
        let mut config = Self::defaults(system);
        let alpha_tracks = file.alpha1.is_none() && flags.alpha1.is_none();
        let alpha2_tracks = file.alpha2.is_none() && flags.alpha2.is_none();
        for layer in [file, flags] {
            if let Some(v) = layer.system {
                config.system = v;
            }
            if let Some(v) = layer.alpha {
                config.alpha = v;
            }
            if let Some(v) = layer.alpha1 {
                config.alpha1 = v;
            }
            if let Some(v) = layer.alpha2 {
                config.alpha2 = v;
            }
            if let Some(v) = layer.epsilon {
                config.epsilon = v;
            }
            if let Some(v) = layer.sigma1 {
                config.sigma1 = v;
            }
            if let Some(v) = layer.sigma2 {
                config.sigma2 = v;
            }
            if let Some(v) = layer.b {
                config.b = v;
            }
            if let Some(v) = layer.n_modes {
                config.n_modes = v;
            }
            if let Some(v) = layer.dt {
                config.dt = v;
            }
            if let Some(v) = layer.horizon {
                config.horizon = Some(v);
            }
            if let Some(v) = layer.seeds {
                config.seeds = v;
            }
            if let Some(v) = layer.y0_grid {
                config.y0_grid = v;
            }
            if let Some(v) = layer.out_dir {
                config.out_dir = v;
            }
        }
        if alpha_tracks {
            config.alpha1 = config.alpha;
        }
        if alpha2_tracks {
            config.alpha2 = config.alpha;
        }
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        let in_range = |name: &str, v: f64| -> Result<(), CliError> {
            if v > 1.0 && v <= 2.0 {
                Ok(())
            } else {
                Err(CliError::config(format!("{name}: must lie in (1, 2], got {v}")))
            }
        };
        in_range("alpha", self.alpha)?;
        in_range("alpha1", self.alpha1)?;
        in_range("alpha2", self.alpha2)?;
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(CliError::config(format!(
                "epsilon: must lie in (0, 1], got {}",
                self.epsilon
            )));
        }
        if self.sigma1 < 0.0 {
            return Err(CliError::config(format!("sigma1: must be >= 0, got {}", self.sigma1)));
        }
        if self.sigma2 < 0.0 {
            return Err(CliError::config(format!("sigma2: must be >= 0, got {}", self.sigma2)));
        }
        if self.system == SystemId::Example2 && self.sigma2 > 0.0 {
            return Err(CliError::config(
                "sigma2: example2 has J = -1, whose backward slow convolution diverges; \
                 set sigma2 = 0"
                    .into(),
            ));
        }
        if !(self.b > 0.0) {
            return Err(CliError::config(format!("b: must be > 0, got {}", self.b)));
        }
        if self.n_modes == 0 {
            return Err(CliError::config("n_modes: need at least one mode".into()));
        }
        if !(self.dt > 0.0) {
            return Err(CliError::config(format!("dt: must be > 0, got {}", self.dt)));
        }
        if let Some(t) = self.horizon {
            if !(t > self.dt) {
                return Err(CliError::config(format!(
                    "horizon: must exceed dt = {}, got {t}",
                    self.dt
                )));
            }
        }
        if self.seeds.is_empty() {
            return Err(CliError::config("seeds: need at least one seed".into()));
        }
        if self.y0_grid.is_empty() {
            return Err(CliError::config("y0_grid: need at least one point".into()));
        }
        if !self.y0_grid.iter().all(|v| v.is_finite()) {
            return Err(CliError::config("y0_grid: entries must be finite".into()));
        }
        Ok(())
    }

    pub fn noise(&self) -> NoiseSpec {
        NoiseSpec {
            sigma1: self.sigma1,
            sigma2: self.sigma2,
            alpha1: self.alpha1,
            alpha2: self.alpha2,
        }
    }

    /// Instantiates the configured system; optionally with the noise
    /// intensities overridden (the asymptotic sweep reuses this across
    /// epsilon values).
    pub fn build_system(&self, epsilon: f64, noise: NoiseSpec) -> Result<SystemSpec, CliError> {
        let spec = match self.system {
            SystemId::Example1 => {
                presets::example1_with(epsilon, self.alpha, self.n_modes, noise)
            }
            SystemId::Example2 => {
                presets::example2_with(epsilon, self.alpha, self.n_modes, self.b, noise)
            }
            SystemId::Custom => {
                presets::linear_oracle_with(0.1, 1.0, epsilon, self.alpha, self.n_modes, noise)
            }
        };
        spec.map_err(|e| CliError::config(format!("system construction: {e}")))
    }

    pub fn spec(&self) -> Result<SystemSpec, CliError> {
        self.build_system(self.epsilon, self.noise())
    }
}
