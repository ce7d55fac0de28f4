//! Saturable laser amplifier: the adiabatically eliminated Fokker–Planck
//! equation for the Wigner function of the lasing mode, and its Langevin
//! (Euler–Maruyama) integration over phase-space ensembles.
//!
//! The FPE is written in the rescaled field `u = α/√n_s` as
//!
//! ```text
//! ∂t W = [∂u u Q_u + ∂u* u* Q_u* + ∂²uu D_uu + ∂²u*u* D_uu* + 2 ∂²uu* D_uu*] W
//! ```
//!
//! so the Langevin drift is `−u·Q_u` and the noise covariance per step is
//! `2·D·dt`, with `D` the real-coordinate matrix of [`real_diffusion_matrix`].

mod coefficients;
mod engine;
mod linear;
mod params;
mod validity;

pub use coefficients::{
    diffusion_at, drift_at, real_diffusion_matrix, ConstantCoefficients, DriftDiffusion,
    RealDiffusion, WignerDynamics,
};
pub use engine::{
    em_step, evolve_adaptive, evolve_coupled, evolve_ensemble, evolve_laser,
    time_averaged_histogram, AdaptiveEvolution, Integration, LaserEvolution, TimeAveragedHistogram,
};
pub use linear::{
    equivalent_idler_photons, linear_equivalent_pia, measure_small_signal_gain, LinearEquivalent,
    MeasuredGain,
};
pub use params::{LaserParams, MicroscopicRates};
pub use validity::{validity_check, ValidityMargins, ValidityReport, DEFAULT_STRICTNESS};
