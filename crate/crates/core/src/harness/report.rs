use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::infotheory::{binary_mutual_information, optimal_threshold, BinaryErrorPair};
use crate::laser_fpe::ValidityReport;
use crate::pia::NoiseFigure;
use crate::states::PhotonDistribution;

/// Summary of one binary-channel run: bit "0" on the vacuum, bit "1" on the signal state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub label: String,
    pub gain_linear: f64,
    pub gain_db: f64,
    /// Standard error of the measured gain (ensemble amplifiers only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gain_stderr: Option<f64>,
    pub noise_figure_linear: f64,
    pub noise_figure_db: f64,
    /// Delta-method standard error of `noise_figure_linear` (ensemble amplifiers only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub noise_figure_stderr: Option<f64>,
    pub ber: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ber_stderr: Option<f64>,
    pub mutual_information_bits: f64,
    pub threshold: usize,
    pub errors: BinaryErrorPair,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub validity: Option<ValidityReport>,
    #[serde(default)]
    pub validity_overridden: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// Output histograms; persisted as separate numeric files.
    #[serde(skip)]
    pub p0: Option<PhotonDistribution>,
    #[serde(skip)]
    pub p1: Option<PhotonDistribution>,
    /// Never persisted, so reruns stay bit-identical.
    #[serde(skip)]
    pub wall_time_seconds: Option<f64>,
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

impl ChannelReport {
    /// Decodes the two output histograms with the optimal threshold.
    pub fn from_histograms(
        label: &str,
        gain: f64,
        noise_figure: NoiseFigure,
        p0: PhotonDistribution,
        p1: PhotonDistribution,
    ) -> Result<Self> {
        let (p0, p1) = if p0.n_max() == p1.n_max() {
            (p0, p1)
        } else {
            let n = p0.n_max().max(p1.n_max());
            (p0.resized(n), p1.resized(n))
        };
        let decision = optimal_threshold(&p0, &p1)?;
        let mut warnings = Vec::new();
        for (name, d) in [("bit 0", &p0), ("bit 1", &p1)] {
            if d.truncation_warning() {
                warnings.push(format!(
                    "{name} histogram misses {:.3e} of its mass above n_max = {}",
                    d.truncation_mass(),
                    d.n_max()
                ));
            }
        }
        Ok(Self {
            label: label.to_string(),
            gain_linear: gain,
            gain_db: to_db(gain),
            gain_stderr: None,
            noise_figure_linear: noise_figure.linear,
            noise_figure_db: noise_figure.db,
            noise_figure_stderr: None,
            ber: decision.ber,
            ber_stderr: None,
            mutual_information_bits: binary_mutual_information(decision.errors),
            threshold: decision.threshold,
            errors: decision.errors,
            validity: None,
            validity_overridden: false,
            seed: None,
            warnings,
            p0: Some(p0),
            p1: Some(p1),
            wall_time_seconds: None,
        })
    }
}

/// Binary-channel noise figure from signal and noise on both sides of the channel:
/// R = (S_in²/N_in)/(S_out²/N_out); +∞ when N_in = 0 and N_out > 0.
pub fn binary_noise_figure(s_in: f64, n_in: f64, s_out: f64, n_out: f64) -> NoiseFigure {
    if n_in == 0.0 {
        let r = if n_out == 0.0 { 1.0 } else { f64::INFINITY };
        return NoiseFigure::from_linear(r);
    }
    NoiseFigure::from_linear((s_in * s_in / n_in) / (s_out * s_out / n_out))
}
