//! Closed-form Gaussian propagators for constant-coefficient phase-space
//! evolutions, and a bridge that checks the stochastic engine against them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laser_fpe::{evolve_coupled, evolve_ensemble, ConstantCoefficients, Integration};
use crate::rng;
use crate::states::{sample_gaussian, PhaseSpaceEnsemble};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimensionality {
    /// Complex amplitude; variance is ⟨|α − α₀|²⟩.
    TwoD,
    /// A single homodyne quadrature; variance is ⟨(x − x₀)²⟩.
    OneD,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    pub mean: Complex64,
    pub variance: f64,
    pub dimensionality: Dimensionality,
    pub ordering: f64,
}

impl GaussianState {
    pub fn two_d(mean: Complex64, variance: f64) -> Result<Self> {
        Self::checked(mean, variance, Dimensionality::TwoD)
    }

    pub fn one_d(mean: f64, variance: f64) -> Result<Self> {
        Self::checked(Complex64::new(mean, 0.0), variance, Dimensionality::OneD)
    }

    fn checked(mean: Complex64, variance: f64, dimensionality: Dimensionality) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::Validation(format!(
                "Gaussian variance must be positive, got {variance}"
            )));
        }
        if !(mean.re.is_finite() && mean.im.is_finite()) {
            return Err(Error::Validation("Gaussian mean must be finite".into()));
        }
        Ok(Self {
            mean,
            variance,
            dimensionality,
            ordering: 0.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearChannelParams {
    pub drift: f64,
    pub diffusion: f64,
    pub time: f64,
}

impl LinearChannelParams {
    pub fn new(drift: f64, diffusion: f64, time: f64) -> Result<Self> {
        if !(time >= 0.0) || !drift.is_finite() || !diffusion.is_finite() {
            return Err(Error::Validation(format!(
                "linear channel needs finite Q, D_s and t >= 0 (Q = {drift}, D_s = {diffusion}, t = {time})"
            )));
        }
        Ok(Self {
            drift,
            diffusion,
            time,
        })
    }
}

/// Amplitude gain e^{−Qt}.
pub fn gain_of(p: &LinearChannelParams) -> f64 {
    (-p.drift * p.time).exp()
}

/// (1 − e^{−2Qt}) / (2Q), equal to t at Q = 0 and smooth across it.
fn relaxation_window(q: f64, t: f64) -> f64 {
    let x = -2.0 * q * t;
    if x.abs() < 1e-8 {
        t * (1.0 + 0.5 * x + x * x / 6.0)
    } else {
        x.exp_m1() / (-2.0 * q)
    }
}

fn propagate(g: &GaussianState, p: &LinearChannelParams, noise_weight: f64) -> GaussianState {
    let gain = gain_of(p);
    GaussianState {
        mean: g.mean * gain,
        variance: noise_weight * p.diffusion * relaxation_window(p.drift, p.time)
            + g.variance * gain * gain,
        ..*g
    }
}

/// 2-D propagation: mean·e^{−Qt}, variance (D_s/Q)(1 − e^{−2Qt}) + Δ²e^{−2Qt}.
pub fn fpe_propagate(g: &GaussianState, p: &LinearChannelParams) -> Result<GaussianState> {
    if g.dimensionality != Dimensionality::TwoD {
        return Err(Error::InvalidParameter(
            "fpe_propagate needs a 2-D state".into(),
        ));
    }
    Ok(propagate(g, p, 2.0))
}

/// 1-D propagation: mean·e^{−Qt}, variance (D_s/2Q)(1 − e^{−2Qt}) + d²e^{−2Qt}.
pub fn ou_propagate(g: &GaussianState, p: &LinearChannelParams) -> Result<GaussianState> {
    if g.dimensionality != Dimensionality::OneD {
        return Err(Error::InvalidParameter(
            "ou_propagate needs a 1-D state".into(),
        ));
    }
    Ok(propagate(g, p, 1.0))
}

/// Empirical-versus-analytic comparison of one moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub empirical: f64,
    pub analytic: f64,
    pub stderr: f64,
    pub relative_error: f64,
    /// |empirical − analytic| / stderr.
    pub z: f64,
}

impl MomentCheck {
    fn new(empirical: f64, analytic: f64, stderr: f64) -> Self {
        let diff = (empirical - analytic).abs();
        Self {
            empirical,
            analytic,
            stderr,
            relative_error: if analytic != 0.0 {
                diff / analytic.abs()
            } else {
                diff
            },
            z: if stderr > 0.0 {
                diff / stderr
            } else if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeOracleReport {
    pub mean_re: MomentCheck,
    pub variance_2d: MomentCheck,
    pub variance_1d: MomentCheck,
    /// Change of each moment under dt → dt/2 on a shared Brownian path, in standard errors.
    pub halving_shift_mean: f64,
    pub halving_shift_variance_2d: f64,
    pub halving_shift_variance_1d: f64,
    pub samples: usize,
    pub dt: f64,
}

impl SdeOracleReport {
    pub fn max_z(&self) -> f64 {
        self.mean_re
            .z
            .max(self.variance_2d.z)
            .max(self.variance_1d.z)
    }

    pub fn max_halving_shift(&self) -> f64 {
        self.halving_shift_mean
            .max(self.halving_shift_variance_2d)
            .max(self.halving_shift_variance_1d)
    }
}

struct Stats {
    mean: Complex64,
    mean_se: f64,
    var2: f64,
    var2_se: f64,
    var1: f64,
    var1_se: f64,
}

fn stats(e: &PhaseSpaceEnsemble) -> Stats {
    let s = e.samples();
    let m = s.len() as f64;
    let mean = s.iter().sum::<Complex64>() / m;
    let d2: Vec<f64> = s.iter().map(|u| (u - mean).norm_sqr()).collect();
    let d1: Vec<f64> = s.iter().map(|u| (u.re - mean.re).powi(2)).collect();
    let moments = |v: &[f64]| {
        let mu = v.iter().sum::<f64>() / m;
        let var = v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / m;
        (mu, (var / m).sqrt())
    };
    let (var2, var2_se) = moments(&d2);
    let (var1, var1_se) = moments(&d1);
    Stats {
        mean,
        mean_se: (var1 / m).sqrt(),
        var2,
        var2_se,
        var1,
        var1_se,
    }
}

fn shift(a: f64, b: f64, se: f64) -> f64 {
    if se > 0.0 {
        (a - b).abs() / se
    } else {
        0.0
    }
}

/// Runs the laser SDE engine with constant coefficients from `initial`
/// and compares the output moments with [`fpe_propagate`] and [`ou_propagate`].
pub fn sde_oracle_check(
    p: &LinearChannelParams,
    initial: &GaussianState,
    ensemble_size: usize,
    dt: f64,
    seed: u64,
) -> Result<SdeOracleReport> {
    if initial.dimensionality != Dimensionality::TwoD {
        return Err(Error::InvalidParameter(
            "the oracle check starts from a 2-D state".into(),
        ));
    }
    let e = sample_gaussian(initial.mean, initial.variance, 1.0, ensemble_size, seed)?;
    let dynamics = ConstantCoefficients {
        drift: p.drift,
        diffusion: p.diffusion,
    };
    let noise_seed = rng::derive_seed(seed, 1);
    let cfg = Integration {
        t_total: p.time,
        dt,
        seed: noise_seed,
    };
    // dt with two folded increments per step shares its Brownian path with dt/2.
    let coarse = evolve_coupled(&e, &dynamics, &cfg)?;
    let fine = evolve_ensemble(
        &e,
        &dynamics,
        &Integration {
            dt: 0.5 * dt,
            ..cfg
        },
    )?;

    let expected2 = fpe_propagate(initial, p)?;
    let initial1 = GaussianState::one_d(initial.mean.re, 0.5 * initial.variance)?;
    let expected1 = ou_propagate(&initial1, p)?;

    let c = stats(&coarse);
    let f = stats(&fine);
    Ok(SdeOracleReport {
        mean_re: MomentCheck::new(f.mean.re, expected2.mean.re, f.mean_se),
        variance_2d: MomentCheck::new(f.var2, expected2.variance, f.var2_se),
        variance_1d: MomentCheck::new(f.var1, expected1.variance, f.var1_se),
        halving_shift_mean: shift(c.mean.re, f.mean.re, f.mean_se),
        halving_shift_variance_2d: shift(c.var2, f.var2, f.var2_se),
        halving_shift_variance_1d: shift(c.var1, f.var1, f.var1_se),
        samples: ensemble_size,
        dt: 0.5 * dt,
    })
}
