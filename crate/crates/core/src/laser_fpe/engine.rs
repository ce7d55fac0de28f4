use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coefficients::{real_diffusion_matrix, WignerDynamics};
use super::params::LaserParams;
use super::validity::{validity_check, ValidityReport};
use crate::error::{Error, Result};
use crate::rng::{self, Domain};
use crate::states::{binomial_errors, semiclassical_bin, PhaseSpaceEnsemble, PhotonDistribution};

/// Most halvings attempted by [`evolve_adaptive`].
const MAX_HALVINGS: u32 = 6;

/// One Euler–Maruyama step in the Itô convention:
/// u' = u − u·Q_u(u)·dt + √(2dt)·B·ξ with B·Bᵀ the real diffusion matrix at u.
pub fn em_step<D: WignerDynamics + ?Sized>(
    u: Complex64,
    dynamics: &D,
    dt: f64,
    noise: [f64; 2],
) -> Result<Complex64> {
    let dd = dynamics.coefficients(u);
    let b = match real_diffusion_matrix(&dd) {
        Ok(r) => r.factor(),
        Err(Error::NonDiffusiveRegion { eigenvalues, .. }) => {
            return Err(Error::NonDiffusiveRegion {
                u,
                eigenvalues,
                trajectory: None,
                time: None,
            })
        }
        Err(e) => return Err(e),
    };
    let s = (2.0 * dt).sqrt();
    let dx = s * (b[0][0] * noise[0] + b[0][1] * noise[1]);
    let dy = s * (b[1][0] * noise[0] + b[1][1] * noise[1]);
    Ok(u - u * dd.q_u * dt + Complex64::new(dx, dy))
}

/// Fixed-step integration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integration {
    pub t_total: f64,
    pub dt: f64,
    pub seed: u64,
}

impl Integration {
    fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_total >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "integration time must be >= 0, got {}",
                self.t_total
            )));
        }
        Ok((self.t_total / self.dt - 1e-9).ceil().max(0.0) as usize)
    }
}

/// Draws one noise pair at resolution dt/2^refine and folds it to resolution dt.
fn coarse_noise(rng: &mut ChaCha8Rng, refine: u32) -> [f64; 2] {
    let parts = 1usize << refine;
    let mut acc = [0.0f64; 2];
    for _ in 0..parts {
        acc[0] += Distribution::<f64>::sample(&StandardNormal, rng);
        acc[1] += Distribution::<f64>::sample(&StandardNormal, rng);
    }
    let norm = (parts as f64).sqrt().recip();
    [acc[0] * norm, acc[1] * norm]
}

/// Integrates trajectory `index` for `steps` steps of size `dt`.
///
/// With `refine = r` each step consumes 2^r noise pairs, so a run at dt with
/// r = 1 shares its Brownian path with a run at dt/2 and r = 0.
fn integrate<D: WignerDynamics + ?Sized>(
    mut u: Complex64,
    dynamics: &D,
    steps: usize,
    dt: f64,
    refine: u32,
    rng: &mut ChaCha8Rng,
    index: usize,
) -> Result<Complex64> {
    for k in 0..steps {
        let xi = coarse_noise(rng, refine);
        u = em_step(u, dynamics, dt, xi).map_err(|e| locate(e, index, k as f64 * dt))?;
    }
    Ok(u)
}

fn locate(e: Error, index: usize, t: f64) -> Error {
    match e {
        Error::NonDiffusiveRegion { u, eigenvalues, .. } => Error::NonDiffusiveRegion {
            u,
            eigenvalues,
            trajectory: Some(index),
            time: Some(t),
        },
        other => other,
    }
}

/// Lowest-index error wins, so failures are reported deterministically.
fn collect_ordered<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

fn evolve_refined<D: WignerDynamics + Sync + ?Sized>(
    e: &PhaseSpaceEnsemble,
    dynamics: &D,
    steps: usize,
    dt: f64,
    refine: u32,
    seed: u64,
) -> Result<PhaseSpaceEnsemble> {
    let results: Vec<Result<Complex64>> = e
        .samples()
        .par_iter()
        .enumerate()
        .map(|(i, &u)| {
            let mut rng = rng::stream(seed, Domain::FpeNoise, i as u64);
            integrate(u, dynamics, steps, dt, refine, &mut rng, i)
        })
        .collect();
    e.with_samples(collect_ordered(results)?)
}

/// Evolves every sample independently for `t_total`; the step is shortened
/// so that an integer number of steps lands exactly on `t_total`.
pub fn evolve_ensemble<D: WignerDynamics + Sync + ?Sized>(
    e: &PhaseSpaceEnsemble,
    dynamics: &D,
    integration: &Integration,
) -> Result<PhaseSpaceEnsemble> {
    let steps = integration.steps()?;
    if steps == 0 {
        return Ok(e.clone());
    }
    let dt = integration.t_total / steps as f64;
    evolve_refined(e, dynamics, steps, dt, 0, integration.seed)
}

/// Like [`evolve_ensemble`], but every step folds two half-step noise pairs,
/// so the result shares its Brownian path with a run at dt/2 and the same seed.
pub fn evolve_coupled<D: WignerDynamics + Sync + ?Sized>(
    e: &PhaseSpaceEnsemble,
    dynamics: &D,
    integration: &Integration,
) -> Result<PhaseSpaceEnsemble> {
    let steps = integration.steps()?;
    if steps == 0 {
        return Ok(e.clone());
    }
    let dt = integration.t_total / steps as f64;
    evolve_refined(e, dynamics, steps, dt, 1, integration.seed)
}

fn intensity_stats(e: &PhaseSpaceEnsemble) -> (f64, f64) {
    let m = e.len() as f64;
    let mean = e.intensities().sum::<f64>() / m;
    let var = e.intensities().map(|x| (x - mean).powi(2)).sum::<f64>() / m;
    (mean, (var / m).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveEvolution {
    pub ensemble: PhaseSpaceEnsemble,
    /// Step actually used for the returned ensemble.
    pub dt: f64,
    pub halvings: u32,
    /// |⟨n⟩(dt) − ⟨n⟩(dt/2)| in units of the standard error at the accepted step.
    pub last_shift_se: f64,
    pub converged: bool,
}

/// Halves dt until halving moves the mean intensity by less than one
/// standard error, using coupled Brownian paths for the comparison.
pub fn evolve_adaptive<D: WignerDynamics + Sync + ?Sized>(
    e: &PhaseSpaceEnsemble,
    dynamics: &D,
    integration: &Integration,
) -> Result<AdaptiveEvolution> {
    let mut steps = integration.steps()?;
    if steps == 0 {
        return Ok(AdaptiveEvolution {
            ensemble: e.clone(),
            dt: integration.dt,
            halvings: 0,
            last_shift_se: 0.0,
            converged: true,
        });
    }
    let seed = integration.seed;
    let mut halvings = 0;
    loop {
        let dt = integration.t_total / steps as f64;
        let coarse = evolve_refined(e, dynamics, steps, dt, 1, seed)?;
        let fine = evolve_refined(e, dynamics, 2 * steps, 0.5 * dt, 0, seed)?;
        let (m0, _) = intensity_stats(&coarse);
        let (m1, se1) = intensity_stats(&fine);
        let shift = if se1 > 0.0 {
            (m1 - m0).abs() / se1
        } else {
            0.0
        };
        halvings += 1;
        let converged = shift < 1.0 || (se1 == 0.0 && (m1 - m0).abs() < 1e-12 * m1.abs().max(1.0));
        if converged || halvings >= MAX_HALVINGS {
            return Ok(AdaptiveEvolution {
                ensemble: fine,
                dt: 0.5 * dt,
                halvings,
                last_shift_se: shift,
                converged,
            });
        }
        steps *= 2;
    }
}

/// Result of evolving through the laser equation with its validity gate.
#[derive(Debug, Clone, PartialEq)]
pub struct LaserEvolution {
    pub ensemble: PhaseSpaceEnsemble,
    pub validity: ValidityReport,
    /// The validity gate failed and the caller chose to proceed.
    pub validity_overridden: bool,
    pub dt: f64,
    pub halvings: u32,
}

/// Laser evolution with the theory's validity conditions enforced unless
/// `override_validity` is set (the override is recorded in the result).
pub fn evolve_laser(
    e: &PhaseSpaceEnsemble,
    p: &LaserParams,
    integration: &Integration,
    strictness: f64,
    override_validity: bool,
    adaptive: bool,
) -> Result<LaserEvolution> {
    p.validate()?;
    if (e.n_s() - p.n_s).abs() > 1e-12 * p.n_s {
        return Err(Error::InvalidParameter(format!(
            "ensemble is scaled by n_s = {} but the laser has n_s = {}",
            e.n_s(),
            p.n_s
        )));
    }
    let validity = validity_check(p, integration.t_total.max(f64::MIN_POSITIVE), strictness);
    if !validity.all_ok() && !override_validity {
        return Err(Error::InvalidParameter(format!(
            "laser parameters outside the validity region of the FPE: {}",
            validity.summary()
        )));
    }
    let (ensemble, dt, halvings) = if adaptive {
        let r = evolve_adaptive(e, p, integration)?;
        (r.ensemble, r.dt, r.halvings)
    } else {
        let steps = integration.steps()?.max(1);
        (
            evolve_ensemble(e, p, integration)?,
            integration.t_total / steps as f64,
            0,
        )
    };
    Ok(LaserEvolution {
        ensemble,
        validity_overridden: !validity.all_ok(),
        validity,
        dt,
        halvings,
    })
}

/// Photon histogram accumulated over snapshot times of every trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeAveragedHistogram {
    pub dist: PhotonDistribution,
    pub snapshots_per_trajectory: usize,
    pub trajectories: usize,
    /// trajectories × snapshots, used for the binomial error bars.
    pub effective_samples: usize,
    pub clamped_fraction: f64,
}

/// Evolves for `burn_in`, then bins every trajectory each `interval` until
/// `burn_in + t_avg`. Counts are integers, so the reduction is exact in any order.
#[allow(clippy::too_many_arguments)]
pub fn time_averaged_histogram<D: WignerDynamics + Sync + ?Sized>(
    e: &PhaseSpaceEnsemble,
    dynamics: &D,
    burn_in: f64,
    t_avg: f64,
    interval: f64,
    dt: f64,
    seed: u64,
    n_max: usize,
) -> Result<TimeAveragedHistogram> {
    if !(interval > 0.0 && t_avg >= 0.0 && burn_in >= 0.0 && dt > 0.0) {
        return Err(Error::InvalidParameter(
            "burn-in, averaging window, interval and dt must be positive".into(),
        ));
    }
    let burn_steps = (burn_in / dt).round() as usize;
    let every = ((interval / dt).round() as usize).max(1);
    let snapshots = (t_avg / (every as f64 * dt)).floor() as usize + 1;
    let n_s = e.n_s();
    let per_traj: Vec<Result<(Vec<u64>, u64)>> = e
        .samples()
        .par_iter()
        .enumerate()
        .map(|(i, &u0)| {
            let mut rng = rng::stream(seed, Domain::FpeNoise, i as u64);
            let mut counts = vec![0u64; n_max + 1];
            let mut clamped = 0u64;
            let mut u = integrate(u0, dynamics, burn_steps, dt, 0, &mut rng, i)?;
            for s in 0..snapshots {
                if s > 0 {
                    u = integrate(u, dynamics, every, dt, 0, &mut rng, i)?;
                }
                if (n_s * u.norm_sqr() - 0.5).round() > n_max as f64 {
                    clamped += 1;
                }
                counts[semiclassical_bin(n_s, u, n_max)] += 1;
            }
            Ok((counts, clamped))
        })
        .collect();
    let per_traj = collect_ordered(per_traj)?;
    let mut counts = vec![0u64; n_max + 1];
    let mut squares = vec![0u128; n_max + 1];
    let mut clamped = 0u64;
    for r in &per_traj {
        for ((a, q), &b) in counts.iter_mut().zip(squares.iter_mut()).zip(&r.0) {
            *a += b;
            *q += (b as u128) * (b as u128);
        }
        clamped += r.1;
    }
    let total = (e.len() * snapshots) as f64;
    let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    // Snapshots within a trajectory are correlated, so the error bars come
    // from the scatter of per-trajectory histograms, not from binomial counting.
    let errors = if e.len() > 1 {
        let t = e.len() as f64;
        let s = snapshots as f64;
        counts
            .iter()
            .zip(&squares)
            .map(|(&c, &q)| {
                let mean = c as f64 / (t * s);
                let second = q as f64 / (t * s * s);
                ((second - mean * mean).max(0.0) / (t - 1.0)).sqrt()
            })
            .collect()
    } else {
        binomial_errors(&probs, total)
    };
    Ok(TimeAveragedHistogram {
        dist: PhotonDistribution::new(probs)?.with_errors(errors)?,
        snapshots_per_trajectory: snapshots,
        trajectories: e.len(),
        effective_samples: e.len() * snapshots,
        clamped_fraction: clamped as f64 / total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laser_fpe::ConstantCoefficients;
    use crate::states::{moments_from_ensemble, wigner_sample_coherent};

    #[test]
    fn deterministic_flow_is_exponential() {
        let dyn_ = ConstantCoefficients {
            drift: -0.7,
            diffusion: 0.0,
        };
        let dt = 1e-4;
        let n = 10_000;
        let mut u = Complex64::new(0.3, 0.2);
        for _ in 0..n {
            u = em_step(u, &dyn_, dt, [1.0, -1.0]).unwrap();
        }
        let exact = Complex64::new(0.3, 0.2) * (0.7 * n as f64 * dt).exp();
        // EM error of the linear flow is O(dt) relative over the run
        assert!(((u - exact).norm() / exact.norm()) < 0.7 * 0.7 * dt * n as f64 * dt);
    }

    #[test]
    fn zero_time_is_identity() {
        let e = wigner_sample_coherent(Complex64::new(1.0, 0.0), 10.0, 100, 1).unwrap();
        let p = LaserParams::new(4.5, 1.0, 55, 1.0, 1.0, 10.0).unwrap();
        let out = evolve_ensemble(
            &e,
            &p,
            &Integration {
                t_total: 0.0,
                dt: 1e-3,
                seed: 2,
            },
        )
        .unwrap();
        assert_eq!(out.fingerprint(), e.fingerprint());
    }

    #[test]
    fn evolution_is_deterministic_across_thread_counts() {
        let e = wigner_sample_coherent(Complex64::new(2.0, 0.0), 55.0, 500, 1).unwrap();
        let p = LaserParams::new(4.5, 1.0, 55, 1.0, 1.0, 55.0).unwrap();
        let cfg = Integration {
            t_total: 0.1,
            dt: 1e-3,
            seed: 77,
        };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| evolve_ensemble(&e, &p, &cfg).unwrap())
        };
        assert_eq!(run(1).fingerprint(), run(4).fingerprint());
    }

    #[test]
    fn non_diffusive_region_names_the_trajectory() {
        let p = LaserParams::new(4.5, 1.0, 55, 1.0, 2.0, 55.0).unwrap();
        let near = Complex64::new(1.0, 0.0);
        let e = PhaseSpaceEnsemble::new(vec![Complex64::new(0.0, 0.0), near], 55.0).unwrap();
        let err = evolve_ensemble(
            &e,
            &p,
            &Integration {
                t_total: 1e-3,
                dt: 1e-3,
                seed: 1,
            },
        )
        .unwrap_err();
        match err {
            Error::NonDiffusiveRegion {
                trajectory,
                time,
                u,
                ..
            } => {
                assert_eq!(trajectory, Some(1));
                assert_eq!(time, Some(0.0));
                assert_eq!(u, near);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn phase_covariance() {
        let p = LaserParams::new(4.5, 1.0, 55, 1.0, 1.0, 55.0).unwrap();
        let alpha = Complex64::new(3.95, 0.0);
        let e = wigner_sample_coherent(alpha, 55.0, 20_000, 5).unwrap();
        let rotated = e
            .with_samples(e.samples().iter().map(|u| u * Complex64::i()).collect())
            .unwrap();
        let cfg = Integration {
            t_total: 0.2,
            dt: 1e-3,
            seed: 6,
        };
        let a = moments_from_ensemble(&evolve_ensemble(&e, &p, &cfg).unwrap());
        let cfg2 = Integration { seed: 7, ..cfg };
        let b = moments_from_ensemble(&evolve_ensemble(&rotated, &p, &cfg2).unwrap());
        let rot = a.moments.mean_amplitude * Complex64::i();
        let amp_se = (a.moments.photon_variance + 0.5).sqrt() / (20_000f64).sqrt();
        assert!((b.moments.mean_amplitude - rot).norm() < 5.0 * amp_se * 2f64.sqrt());
        let se = (a.mean_photons_stderr.powi(2) + b.mean_photons_stderr.powi(2)).sqrt();
        assert!((a.moments.mean_photons - b.moments.mean_photons).abs() < 5.0 * se);
    }

    #[test]
    fn validity_gate_blocks_unless_overridden() {
        let p = LaserParams::new(4.5, 1.0, 55, 1.0, 1.0, 55.0).unwrap();
        let e = wigner_sample_coherent(Complex64::new(1.0, 0.0), 55.0, 10, 1).unwrap();
        let cfg = Integration {
            t_total: 0.2,
            dt: 1e-3,
            seed: 1,
        };
        assert!(evolve_laser(&e, &p, &cfg, 10.0, false, false).is_err());
        let r = evolve_laser(&e, &p, &cfg, 10.0, true, false).unwrap();
        assert!(r.validity_overridden);
        let wrong_scale = wigner_sample_coherent(Complex64::new(1.0, 0.0), 5.0, 10, 1).unwrap();
        assert!(evolve_laser(&wrong_scale, &p, &cfg, 10.0, true, false).is_err());
    }
}
