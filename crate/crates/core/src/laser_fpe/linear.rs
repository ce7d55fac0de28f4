use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::coefficients::drift_at;
use super::engine::{evolve_ensemble, Integration};
use super::params::LaserParams;
use crate::error::{Error, Result};
use crate::pia::PiaParams;
use crate::states::PhaseSpaceEnsemble;

/// Photon-number gain of the mean field, estimated from the SDE engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasuredGain {
    pub gain: f64,
    pub stderr: f64,
}

/// Starts `samples` trajectories at the same small amplitude `u0` and
/// returns |⟨u(t)⟩|² / |u0|² with a delta-method standard error.
pub fn measure_small_signal_gain(
    p: &LaserParams,
    t: f64,
    dt: f64,
    u0: f64,
    samples: usize,
    seed: u64,
) -> Result<MeasuredGain> {
    if !(u0 > 0.0) || samples < 2 {
        return Err(Error::InvalidParameter(
            "small-signal gain needs a positive amplitude and at least two samples".into(),
        ));
    }
    let e = PhaseSpaceEnsemble::new(vec![Complex64::new(u0, 0.0); samples], p.n_s)?;
    let out = evolve_ensemble(
        &e,
        p,
        &Integration {
            t_total: t,
            dt,
            seed,
        },
    )?;
    let m = samples as f64;
    let mean = out.samples().iter().sum::<Complex64>() / m;
    let var_re = out
        .samples()
        .iter()
        .map(|u| (u.re - mean.re).powi(2))
        .sum::<f64>()
        / (m - 1.0);
    let gain = mean.norm_sqr() / (u0 * u0);
    // Only the in-phase component carries the signal when u0 is real.
    let stderr = 2.0 * mean.re.abs() * (var_re / m).sqrt() / (u0 * u0);
    Ok(MeasuredGain { gain, stderr })
}

/// The laser's linear-regime description as a phase-insensitive amplifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearEquivalent {
    /// Idler occupancy from the linearized FPE and the measured gain.
    pub pia: PiaParams,
    pub idler_photons: f64,
    /// exp[2γt(1 − 2σ₀C)], the closed form quoted for the linear regime.
    pub formula_gain: f64,
    /// exp(−2 Re Q_u(0) t), the gain of the linearized drift.
    pub linearized_gain: f64,
    pub measured_gain: MeasuredGain,
    pub above_threshold: bool,
}

/// Idler occupancy min{C(1+σ₀), C(1−σ₀)+1} / |2Cσ₀ − 1|.
pub fn equivalent_idler_photons(p: &LaserParams) -> Result<f64> {
    let c = p.cooperation;
    let s = p.sigma0;
    let denom = (2.0 * c * s - 1.0).abs();
    if denom < 1e-9 {
        return Err(Error::ThresholdSingularity(p.sigma0));
    }
    Ok((c * (1.0 + s)).min(c * (1.0 - s) + 1.0) / denom)
}

/// Builds the equivalent amplifier. The gain used for `pia` is the measured one;
/// the two closed forms are reported alongside for comparison.
pub fn linear_equivalent_pia(
    p: &LaserParams,
    t: f64,
    dt: f64,
    samples: usize,
    seed: u64,
) -> Result<LinearEquivalent> {
    p.validate()?;
    let idler = equivalent_idler_photons(p)?;
    let formula_gain = (2.0 * p.gamma * t * (1.0 - 2.0 * p.sigma0 * p.cooperation)).exp();
    let q0 = drift_at(Complex64::new(0.0, 0.0), p).re;
    let linearized_gain = (-2.0 * q0 * t).exp();
    let u0 = 0.1 / p.n_s.sqrt();
    let measured = measure_small_signal_gain(p, t, dt, u0, samples, seed)?;
    Ok(LinearEquivalent {
        pia: PiaParams::new(measured.gain.max(1.0), idler)?,
        idler_photons: idler,
        formula_gain,
        linearized_gain,
        measured_gain: measured,
        above_threshold: p.above_threshold(),
    })
}
