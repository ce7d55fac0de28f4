use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laser_fpe::{LaserParams, DEFAULT_STRICTNESS};
use crate::pia::PiaParams;

/// One binary-channel experiment: bit "0" on the vacuum, bit "1" on `input`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_label")]
    pub label: String,
    /// Master seed; there is no entropy-based default.
    pub seed: u64,
    pub amplifier: AmplifierConfig,
    pub input: InputState,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default, skip_serializing_if = "OutputConfig::is_empty")]
    pub output: OutputConfig,
}

/// Where results go; the command line's `--out-dir` takes precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<std::path::PathBuf>,
}

impl OutputConfig {
    fn is_empty(&self) -> bool {
        self.dir.is_none()
    }
}

fn default_label() -> String {
    "experiment".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AmplifierConfig {
    Pia {
        gain_n: f64,
        idler_photons: f64,
    },
    Pna {
        gain_n: u32,
    },
    LaserFpe {
        cooperation: f64,
        sigma0: f64,
        atoms: u32,
        gamma: f64,
        f: f64,
        n_s: f64,
        /// Duration in units of 1/γ.
        gamma_t: f64,
        /// FPE time = time_factor · γt / γ.
        #[serde(default = "unit")]
        time_factor: f64,
        /// Proceed when the validity conditions fail; recorded in the report.
        #[serde(default)]
        validity_override: bool,
    },
    Qjump {
        cooperation: f64,
        sigma0: f64,
        gamma: f64,
        f: f64,
        n_s: f64,
        gamma_t: f64,
        #[serde(default = "unit")]
        time_factor: f64,
    },
}

fn unit() -> f64 {
    1.0
}

impl AmplifierConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            AmplifierConfig::Pia { .. } => "pia",
            AmplifierConfig::Pna { .. } => "pna",
            AmplifierConfig::LaserFpe { .. } => "laser_fpe",
            AmplifierConfig::Qjump { .. } => "qjump",
        }
    }

    pub fn laser_params(&self) -> Option<Result<LaserParams>> {
        match *self {
            AmplifierConfig::LaserFpe {
                cooperation,
                sigma0,
                atoms,
                gamma,
                f,
                n_s,
                ..
            } => Some(LaserParams::new(cooperation, sigma0, atoms, gamma, f, n_s)),
            AmplifierConfig::Qjump {
                cooperation,
                sigma0,
                gamma,
                f,
                n_s,
                ..
            } => Some(LaserParams::new(cooperation, sigma0, 1, gamma, f, n_s)),
            _ => None,
        }
    }

    /// Evolution time in the time units of γ.
    pub fn evolution_time(&self) -> Option<f64> {
        match *self {
            AmplifierConfig::LaserFpe {
                gamma,
                gamma_t,
                time_factor,
                ..
            }
            | AmplifierConfig::Qjump {
                gamma,
                gamma_t,
                time_factor,
                ..
            } => Some(time_factor * gamma_t / gamma),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputState {
    Coherent {
        alpha: f64,
        #[serde(default)]
        phase: f64,
    },
    Fock {
        photons: usize,
    },
}

impl InputState {
    pub fn mean_photons(&self) -> f64 {
        match *self {
            InputState::Coherent { alpha, .. } => alpha * alpha,
            InputState::Fock { photons } => photons as f64,
        }
    }

    pub fn photon_variance(&self) -> f64 {
        match *self {
            InputState::Coherent { alpha, .. } => alpha * alpha,
            InputState::Fock { .. } => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    /// Wigner samples (laser_fpe) or trajectories (qjump) per bit.
    #[serde(default = "default::samples")]
    pub samples: usize,
    /// Initial step in units of 1/γ.
    #[serde(default = "default::gamma_dt")]
    pub gamma_dt: f64,
    /// Halve dt until the mean photon number moves by less than one standard error.
    #[serde(default = "default::adaptive")]
    pub adaptive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Histogram cutoff; derived from the expected output when absent.
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default = "default::strictness")]
    pub strictness: f64,
    /// Largest tolerated top-level population in quantum-jump snapshots.
    #[serde(default = "default::cutoff_tolerance")]
    pub cutoff_tolerance: f64,
}

pub(crate) mod default {
    pub fn samples() -> usize {
        100_000
    }
    pub fn gamma_dt() -> f64 {
        1e-3
    }
    pub fn adaptive() -> bool {
        true
    }
    pub fn strictness() -> f64 {
        super::DEFAULT_STRICTNESS
    }
    pub fn cutoff_tolerance() -> f64 {
        crate::qjump::DEFAULT_CUTOFF_TOLERANCE
    }
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            samples: default::samples(),
            gamma_dt: default::gamma_dt(),
            adaptive: default::adaptive(),
        }
    }
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            n_max: None,
            strictness: default::strictness(),
            cutoff_tolerance: default::cutoff_tolerance(),
        }
    }
}

fn invalid(origin: &str, message: impl Into<String>) -> Error {
    Error::Config {
        origin: origin.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| invalid(origin, e.to_string()))?;
        cfg.validate(origin)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self, origin: &str) -> Result<()> {
        let wrap = |e: Error| invalid(origin, e.to_string());
        match &self.amplifier {
            AmplifierConfig::Pia {
                gain_n,
                idler_photons,
            } => {
                PiaParams::new(*gain_n, *idler_photons).map_err(wrap)?;
            }
            AmplifierConfig::Pna { gain_n } => {
                if *gain_n == 0 {
                    return Err(invalid(
                        origin,
                        "amplifier.gain_n must be a positive integer",
                    ));
                }
            }
            amp @ (AmplifierConfig::LaserFpe { .. } | AmplifierConfig::Qjump { .. }) => {
                amp.laser_params()
                    .expect("laser kinds carry parameters")
                    .map_err(wrap)?;
                let t = amp.evolution_time().expect("laser kinds carry a time");
                if !(t >= 0.0 && t.is_finite()) {
                    return Err(invalid(
                        origin,
                        "amplifier.gamma_t and time_factor must give a finite time >= 0",
                    ));
                }
                if matches!(amp, AmplifierConfig::LaserFpe { .. })
                    && matches!(self.input, InputState::Fock { .. })
                {
                    return Err(invalid(
                        origin,
                        "Fock inputs have a non-positive Wigner function and cannot be sampled for laser_fpe",
                    ));
                }
            }
        }
        match self.input {
            InputState::Coherent { alpha, phase } => {
                if !(alpha.is_finite() && phase.is_finite()) {
                    return Err(invalid(
                        origin,
                        "input.alpha and input.phase must be finite",
                    ));
                }
            }
            InputState::Fock { .. } => {}
        }
        if self.ensemble.samples < 2 {
            return Err(invalid(origin, "ensemble.samples must be at least 2"));
        }
        if !(self.ensemble.gamma_dt > 0.0) {
            return Err(invalid(origin, "ensemble.gamma_dt must be positive"));
        }
        if !(self.analysis.strictness > 0.0) {
            return Err(invalid(origin, "analysis.strictness must be positive"));
        }
        if !(self.analysis.cutoff_tolerance > 0.0) {
            return Err(invalid(
                origin,
                "analysis.cutoff_tolerance must be positive",
            ));
        }
        Ok(())
    }
}
