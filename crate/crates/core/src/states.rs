//! Photon-number distributions, Wigner-function ensembles and the
//! conversions between them.
//!
//! Phase-space samples are stored in the rescaled amplitude `u = α/√n_s`.
//! Quadratures follow `a = x + iy` with vacuum variance 1/4 per quadrature
//! for the symmetric (s = 0) Wigner function, so that for any state
//! `⟨|α|²⟩_W = ⟨n⟩ + ½` and `⟨|α|⁴⟩_W = ⟨n²⟩ + ⟨n⟩ + ½`.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Domain};
use crate::special::{compensated_sum, ln_factorial};

/// Truncated mass above which an analytic constructor raises its warning flag.
pub const TRUNCATION_WARNING: f64 = 1e-6;

/// Probability of detecting n photons, n = 0..=n_max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonDistribution {
    probs: Vec<f64>,
    /// Per-bin standard errors for estimated (Monte Carlo) distributions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    errors: Option<Vec<f64>>,
}

impl PhotonDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Validation("empty photon distribution".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::Validation(format!("invalid probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if total > 1.0 + 1e-9 {
            return Err(Error::Validation(format!(
                "probabilities sum to {total} > 1"
            )));
        }
        Ok(Self {
            probs,
            errors: None,
        })
    }

    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        Self {
            probs,
            errors: None,
        }
    }

    pub fn with_errors(mut self, errors: Vec<f64>) -> Result<Self> {
        if errors.len() != self.probs.len() {
            return Err(Error::Validation("error vector length mismatch".into()));
        }
        self.errors = Some(errors);
        Ok(self)
    }

    /// δ_{n,m} on 0..=n_max.
    pub fn delta(m: usize, n_max: usize) -> Self {
        let mut probs = vec![0.0; n_max.max(m) + 1];
        probs[m] = 1.0;
        probs.truncate(n_max + 1);
        Self::from_raw(probs)
    }

    pub fn vacuum(n_max: usize) -> Self {
        Self::delta(0, n_max)
    }

    /// Poisson statistics of a coherent state with mean `alpha_sq`.
    pub fn coherent(alpha_sq: f64, n_max: usize) -> Result<Self> {
        if !(alpha_sq >= 0.0 && alpha_sq.is_finite()) {
            return Err(Error::Domain(format!("|α|² must be >= 0, got {alpha_sq}")));
        }
        if alpha_sq == 0.0 {
            return Ok(Self::vacuum(n_max));
        }
        let ln_a = alpha_sq.ln();
        let probs = (0..=n_max)
            .map(|n| (n as f64 * ln_a - alpha_sq - ln_factorial(n)).exp())
            .collect();
        Ok(Self::from_raw(probs))
    }

    /// Bose–Einstein (geometric) distribution P(n) = mⁿ/(1+m)ⁿ⁺¹.
    pub fn thermal(mean: f64, n_max: usize) -> Result<Self> {
        if !(mean >= 0.0 && mean.is_finite()) {
            return Err(Error::Domain(format!(
                "thermal mean must be >= 0, got {mean}"
            )));
        }
        if mean == 0.0 {
            return Ok(Self::vacuum(n_max));
        }
        let ln_r = (mean / (1.0 + mean)).ln();
        let ln_0 = -(mean.ln_1p());
        let probs = (0..=n_max)
            .map(|n| (ln_0 + n as f64 * ln_r).exp())
            .collect();
        Ok(Self::from_raw(probs))
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn errors(&self) -> Option<&[f64]> {
        self.errors.as_deref()
    }

    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn get(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.probs.iter().copied())
    }

    pub fn truncation_mass(&self) -> f64 {
        (1.0 - self.total()).max(0.0)
    }

    pub fn truncation_warning(&self) -> bool {
        self.truncation_mass() > TRUNCATION_WARNING
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.probs.iter().enumerate().map(|(n, p)| n as f64 * p))
    }

    pub fn second_moment(&self) -> f64 {
        compensated_sum(
            self.probs
                .iter()
                .enumerate()
                .map(|(n, p)| (n * n) as f64 * p),
        )
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        compensated_sum(
            self.probs
                .iter()
                .enumerate()
                .map(|(n, p)| (n as f64 - m).powi(2) * p),
        )
    }

    pub fn fano(&self) -> f64 {
        self.variance() / self.mean()
    }

    /// ½ Σ |p(n) − q(n)|, with the shorter vector zero-padded.
    pub fn total_variation(&self, other: &Self) -> f64 {
        let len = self.probs.len().max(other.probs.len());
        0.5 * (0..len)
            .map(|n| (self.get(n) - other.get(n)).abs())
            .sum::<f64>()
    }

    /// Resized to a new cutoff, dropping or zero-filling bins.
    pub fn resized(&self, n_max: usize) -> Self {
        let mut probs = self.probs.clone();
        probs.resize(n_max + 1, 0.0);
        let errors = self.errors.as_ref().map(|e| {
            let mut e = e.clone();
            e.resize(n_max + 1, 0.0);
            e
        });
        Self { probs, errors }
    }

    pub fn moments(&self) -> MomentSet {
        let mean = self.mean();
        let var = self.variance();
        MomentSet {
            mean_amplitude: Complex64::new(0.0, 0.0),
            mean_photons: mean,
            photon_variance: var,
            fano: fano_of(mean, var),
        }
    }
}

/// Cutoff covering a state of the given mean and variance: ⌈mean + 10σ⌉.
pub fn default_n_max(mean: f64, variance: f64) -> usize {
    (mean + 10.0 * variance.max(0.0).sqrt()).ceil().max(1.0) as usize
}

fn fano_of(mean: f64, variance: f64) -> f64 {
    if mean > 0.0 {
        variance / mean
    } else {
        f64::NAN
    }
}

/// Photon-number moments of a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub mean_amplitude: Complex64,
    pub mean_photons: f64,
    pub photon_variance: f64,
    /// ⟨Δn²⟩/⟨n⟩; NaN when ⟨n⟩ = 0.
    pub fano: f64,
}

impl MomentSet {
    pub fn new(mean_amplitude: Complex64, mean_photons: f64, photon_variance: f64) -> Result<Self> {
        if !(photon_variance >= 0.0) {
            return Err(Error::Validation(format!(
                "photon variance must be >= 0, got {photon_variance}"
            )));
        }
        if !(mean_photons >= 0.0) {
            return Err(Error::Validation(format!(
                "mean photon number must be >= 0, got {mean_photons}"
            )));
        }
        Ok(Self {
            mean_amplitude,
            mean_photons,
            photon_variance,
            fano: fano_of(mean_photons, photon_variance),
        })
    }

    pub fn vacuum() -> Self {
        Self {
            mean_amplitude: Complex64::new(0.0, 0.0),
            mean_photons: 0.0,
            photon_variance: 0.0,
            fano: f64::NAN,
        }
    }

    pub fn coherent(alpha: Complex64) -> Self {
        let n = alpha.norm_sqr();
        Self {
            mean_amplitude: alpha,
            mean_photons: n,
            photon_variance: n,
            fano: fano_of(n, n),
        }
    }

    pub fn fock(m: usize) -> Self {
        Self {
            mean_amplitude: Complex64::new(0.0, 0.0),
            mean_photons: m as f64,
            photon_variance: 0.0,
            fano: fano_of(m as f64, 0.0),
        }
    }

    pub fn thermal(mean: f64) -> Self {
        let var = mean * mean + mean;
        Self {
            mean_amplitude: Complex64::new(0.0, 0.0),
            mean_photons: mean,
            photon_variance: var,
            fano: fano_of(mean, var),
        }
    }
}

/// Heterodyne efficiency for an s-ordered Wigner function, η = 2/(1 − s).
pub fn heterodyne_efficiency(s: f64) -> f64 {
    2.0 / (1.0 - s)
}

/// Homodyne efficiency for an s-ordered Wigner function, η = 1/(1 − s).
pub fn homodyne_efficiency(s: f64) -> f64 {
    1.0 / (1.0 - s)
}

/// Empirical Wigner quasi-distribution in the rescaled variable u.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceEnsemble {
    samples: Vec<Complex64>,
    n_s: f64,
    ordering: f64,
}

impl PhaseSpaceEnsemble {
    pub fn new(samples: Vec<Complex64>, n_s: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Validation(
                "ensemble needs at least one sample".into(),
            ));
        }
        if !(n_s > 0.0 && n_s.is_finite()) {
            return Err(Error::Validation(format!(
                "n_s must be positive, got {n_s}"
            )));
        }
        Ok(Self {
            samples,
            n_s,
            ordering: 0.0,
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn n_s(&self) -> f64 {
        self.n_s
    }

    pub fn ordering(&self) -> f64 {
        self.ordering
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Same ensemble with every sample replaced.
    pub fn with_samples(&self, samples: Vec<Complex64>) -> Result<Self> {
        Self::new(samples, self.n_s)
    }

    /// Photon-unit intensity n_s·|u|² of each sample.
    pub fn intensities(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(move |u| self.n_s * u.norm_sqr())
    }

    /// Bit-level fingerprint of the samples, for determinism checks.
    pub fn fingerprint(&self) -> Vec<u64> {
        self.samples
            .iter()
            .flat_map(|u| [u.re.to_bits(), u.im.to_bits()])
            .collect()
    }
}

/// Gaussian Wigner samples around `center` (photon^{1/2} units) with
/// ⟨|α − center|²⟩ = `spread`, one RNG stream per sample index.
pub fn sample_gaussian(
    center: Complex64,
    spread: f64,
    n_s: f64,
    count: usize,
    seed: u64,
) -> Result<PhaseSpaceEnsemble> {
    if count == 0 {
        return Err(Error::Validation("sample count must be >= 1".into()));
    }
    if !(n_s > 0.0) {
        return Err(Error::Validation(format!(
            "n_s must be positive, got {n_s}"
        )));
    }
    let sigma = (0.5 * spread).sqrt();
    let scale = n_s.sqrt().recip();
    let samples = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, Domain::WignerSampling, i as u64);
            let x: f64 = StandardNormal.sample(&mut rng);
            let y: f64 = StandardNormal.sample(&mut rng);
            (center + Complex64::new(sigma * x, sigma * y)) * scale
        })
        .collect();
    PhaseSpaceEnsemble::new(samples, n_s)
}

/// Samples of the symmetric Wigner function of the coherent state |α⟩.
pub fn wigner_sample_coherent(
    alpha: Complex64,
    n_s: f64,
    count: usize,
    seed: u64,
) -> Result<PhaseSpaceEnsemble> {
    sample_gaussian(alpha, 0.5, n_s, count, seed)
}

/// Samples of the symmetric Wigner function of a thermal state with `mean` photons.
pub fn wigner_sample_thermal(
    mean: f64,
    n_s: f64,
    count: usize,
    seed: u64,
) -> Result<PhaseSpaceEnsemble> {
    if !(mean >= 0.0) {
        return Err(Error::Domain(format!(
            "thermal mean must be >= 0, got {mean}"
        )));
    }
    sample_gaussian(Complex64::new(0.0, 0.0), mean + 0.5, n_s, count, seed)
}

/// Moments with their Monte Carlo standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMoments {
    pub moments: MomentSet,
    pub mean_photons_stderr: f64,
    pub photon_variance_stderr: f64,
    pub samples: usize,
    /// The symmetric-to-normal conversion produced ⟨n⟩ below zero by more
    /// than five standard errors.
    pub ordering_pathology: bool,
}

/// Normal-ordered photon moments from symmetric-ordered samples.
///
/// ⟨n⟩ = n_s⟨|u|²⟩ − ½ and ⟨Δn²⟩ = n_s²(⟨|u|⁴⟩ − ⟨|u|²⟩²) − ¼.
pub fn moments_from_ensemble(e: &PhaseSpaceEnsemble) -> EnsembleMoments {
    let m = e.len() as f64;
    let mean_u = Complex64::new(
        compensated_sum(e.samples.iter().map(|u| u.re)) / m,
        compensated_sum(e.samples.iter().map(|u| u.im)) / m,
    );
    let w2 = compensated_sum(e.intensities()) / m;
    let central2 = compensated_sum(e.intensities().map(|x| (x - w2).powi(2))) / m;
    let central4 = compensated_sum(e.intensities().map(|x| (x - w2).powi(4))) / m;
    let mean_photons = w2 - 0.5;
    let raw_variance = central2 - 0.25;
    let mean_se = (central2 / m).sqrt();
    let var_se = ((central4 - central2 * central2).max(0.0) / m).sqrt();
    let photon_variance = raw_variance.max(0.0);
    let clamped_mean = mean_photons.max(0.0);
    EnsembleMoments {
        moments: MomentSet {
            mean_amplitude: mean_u * e.n_s.sqrt(),
            mean_photons: clamped_mean,
            photon_variance,
            fano: fano_of(clamped_mean, photon_variance),
        },
        mean_photons_stderr: mean_se,
        photon_variance_stderr: var_se,
        samples: e.len(),
        ordering_pathology: mean_photons < -5.0 * mean_se,
    }
}

/// Semiclassical photon-number bin of one sample: round(n_s|u|² − ½), clamped.
pub fn semiclassical_bin(n_s: f64, u: Complex64, n_max: usize) -> usize {
    let n = (n_s * u.norm_sqr() - 0.5).round();
    if n <= 0.0 {
        0
    } else if n >= n_max as f64 {
        n_max
    } else {
        n as usize
    }
}

/// Histogram estimate of P(n) from an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct NumberHistogram {
    pub dist: PhotonDistribution,
    /// Fraction of samples that landed on the n_max bin by clamping.
    pub clamped_fraction: f64,
    pub samples: usize,
}

impl NumberHistogram {
    pub fn clamp_warning(&self) -> bool {
        self.clamped_fraction > 0.01
    }
}

/// Binomial standard errors √(p(1−p)/M) for an estimated histogram.
pub fn binomial_errors(probs: &[f64], samples: f64) -> Vec<f64> {
    probs
        .iter()
        .map(|p| (p * (1.0 - p) / samples).sqrt())
        .collect()
}

pub fn number_hist_from_ensemble(e: &PhaseSpaceEnsemble, n_max: usize) -> NumberHistogram {
    let mut counts = vec![0u64; n_max + 1];
    let mut clamped = 0u64;
    for &u in &e.samples {
        if (e.n_s * u.norm_sqr() - 0.5).round() > n_max as f64 {
            clamped += 1;
        }
        counts[semiclassical_bin(e.n_s, u, n_max)] += 1;
    }
    let m = e.len() as f64;
    let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / m).collect();
    let errors = binomial_errors(&probs, m);
    NumberHistogram {
        dist: PhotonDistribution {
            probs,
            errors: Some(errors),
        },
        clamped_fraction: clamped as f64 / m,
        samples: e.len(),
    }
}

/// Empirical homodyne marginal of x = Re(α).
#[derive(Debug, Clone, PartialEq)]
pub struct HomodyneMarginal {
    pub lo: f64,
    pub bin_width: f64,
    /// Probability density per bin (integrates to one).
    pub density: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
}

impl HomodyneMarginal {
    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.density.len()).map(move |i| self.lo + (i as f64 + 0.5) * self.bin_width)
    }
}

pub fn homodyne_marginal(e: &PhaseSpaceEnsemble, bins: usize) -> Result<HomodyneMarginal> {
    if bins == 0 {
        return Err(Error::Validation("need at least one bin".into()));
    }
    let scale = e.n_s.sqrt();
    let xs: Vec<f64> = e.samples.iter().map(|u| u.re * scale).collect();
    let m = xs.len() as f64;
    let mean = compensated_sum(xs.iter().copied()) / m;
    let variance = compensated_sum(xs.iter().map(|x| (x - mean).powi(2))) / m;
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo {
        (hi - lo) / bins as f64
    } else {
        1.0
    };
    let mut counts = vec![0u64; bins];
    for x in &xs {
        let i = (((x - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let density = counts.iter().map(|&c| c as f64 / (m * width)).collect();
    Ok(HomodyneMarginal {
        lo,
        bin_width: width,
        density,
        mean,
        variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coherent_distribution_is_poissonian() {
        let p = PhotonDistribution::coherent(7.5, 120).unwrap();
        assert!((p.mean() - 7.5).abs() < 1e-12);
        assert!((p.fano() - 1.0).abs() < 1e-11);
        assert!(!p.truncation_warning());
        assert_eq!(
            PhotonDistribution::coherent(0.0, 5).unwrap(),
            PhotonDistribution::delta(0, 5)
        );
        assert!(PhotonDistribution::coherent(-1.0, 5).is_err());
    }

    #[test]
    fn truncation_is_tracked() {
        let p = PhotonDistribution::coherent(30.0, 20).unwrap();
        assert!(p.truncation_warning());
        assert!((p.truncation_mass() - (1.0 - p.total())).abs() < 1e-15);
    }

    #[test]
    fn thermal_distribution_moments() {
        let m = 3.0;
        let p = PhotonDistribution::thermal(m, 400).unwrap();
        assert!((p.mean() - m).abs() < 1e-10);
        assert!((p.variance() - (m * m + m)).abs() < 1e-9);
        assert!((p.fano() - (1.0 + m)).abs() < 1e-10);
        assert_eq!(
            PhotonDistribution::thermal(0.0, 3).unwrap().probs(),
            &[1.0, 0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn vacuum_samples_carry_half_a_photon() {
        let e = wigner_sample_coherent(Complex64::new(0.0, 0.0), 4.0, 200_000, 1).unwrap();
        let w2 = e.intensities().sum::<f64>() / e.len() as f64;
        assert!((w2 - 0.5).abs() < 5.0 * 0.5 / (e.len() as f64).sqrt());
        let mom = moments_from_ensemble(&e);
        assert!(mom.moments.mean_photons < 5.0 * mom.mean_photons_stderr);
        assert!(mom.moments.photon_variance < 5.0 * mom.photon_variance_stderr);
        assert!(!mom.ordering_pathology);
    }

    #[test]
    fn coherent_samples_are_centered() {
        let alpha = Complex64::new(2.0, -1.0);
        let n_s = 9.0;
        let e = wigner_sample_coherent(alpha, n_s, 100_000, 2).unwrap();
        let m = e.len() as f64;
        let mean: Complex64 = e.samples().iter().sum::<Complex64>() / m;
        // per-quadrature sd of u is 1/(2√n_s)
        let se = 0.5 / n_s.sqrt() / m.sqrt();
        let target = alpha / n_s.sqrt();
        assert!((mean.re - target.re).abs() < 5.0 * se);
        assert!((mean.im - target.im).abs() < 5.0 * se);
        let mom = moments_from_ensemble(&e);
        assert!((mom.moments.mean_photons - 5.0).abs() < 5.0 * mom.mean_photons_stderr);
        assert!((mom.moments.photon_variance - 5.0).abs() < 5.0 * mom.photon_variance_stderr);
    }

    #[test]
    fn thermal_samples_reproduce_bose_variance() {
        let mean = 4.0;
        let e = wigner_sample_thermal(mean, 10.0, 200_000, 3).unwrap();
        let mom = moments_from_ensemble(&e);
        assert!((mom.moments.mean_photons - mean).abs() < 5.0 * mom.mean_photons_stderr);
        let target = mean * mean + mean;
        assert!(
            (mom.moments.photon_variance - target).abs() < 5.0 * mom.photon_variance_stderr,
            "{} vs {target} ± {}",
            mom.moments.photon_variance,
            mom.photon_variance_stderr
        );
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = wigner_sample_coherent(Complex64::new(1.0, 1.0), 5.0, 1000, 42).unwrap();
        let b = wigner_sample_coherent(Complex64::new(1.0, 1.0), 5.0, 1000, 42).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = wigner_sample_coherent(Complex64::new(1.0, 1.0), 5.0, 1000, 43).unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn histogram_of_constructed_samples_is_a_delta() {
        let n_s = 3.0;
        let m = 7usize;
        let r = ((m as f64 + 0.5) / n_s).sqrt();
        let samples = (0..50)
            .map(|k| Complex64::from_polar(r, k as f64 * 0.1))
            .collect();
        let e = PhaseSpaceEnsemble::new(samples, n_s).unwrap();
        let h = number_hist_from_ensemble(&e, 20);
        assert_eq!(h.dist.probs()[m], 1.0);
        assert_eq!(h.clamped_fraction, 0.0);
        let h = number_hist_from_ensemble(&e, 3);
        assert!(h.clamp_warning());
    }

    #[test]
    fn coherent_histogram_is_close_to_poisson() {
        let alpha_sq = 15.6f64;
        let e =
            wigner_sample_coherent(Complex64::new(alpha_sq.sqrt(), 0.0), 55.0, 100_000, 9).unwrap();
        let h = number_hist_from_ensemble(&e, 80);
        let poisson = PhotonDistribution::coherent(alpha_sq, 80).unwrap();
        let tv = h.dist.total_variation(&poisson);
        assert!(tv <= 0.08, "tv = {tv}");
        // binning bias stays below half a photon
        let mom = moments_from_ensemble(&e);
        assert!(
            (h.dist.mean() - mom.moments.mean_photons).abs() < 0.5 + 5.0 * mom.mean_photons_stderr
        );
    }

    #[test]
    fn vacuum_histogram_concentrates_at_zero() {
        let e = wigner_sample_coherent(Complex64::new(0.0, 0.0), 55.0, 100_000, 10).unwrap();
        let h = number_hist_from_ensemble(&e, 10);
        // |α|² ~ Exp(mean ½) and the rounding rule maps |α|² < 1 to zero,
        // so P(0) = 1 − e⁻².
        let oracle = 1.0 - (-2.0f64).exp();
        let se = (oracle * (1.0 - oracle) / e.len() as f64).sqrt();
        assert!(
            (h.dist.probs()[0] - oracle).abs() < 5.0 * se,
            "{}",
            h.dist.probs()[0]
        );
    }

    #[test]
    fn homodyne_marginal_vacuum_and_displaced() {
        let vac = wigner_sample_coherent(Complex64::new(0.0, 0.0), 2.0, 100_000, 11).unwrap();
        let mv = homodyne_marginal(&vac, 50).unwrap();
        let m = vac.len() as f64;
        assert!(mv.mean.abs() < 5.0 * 0.5 / m.sqrt());
        // var of the sample variance of a Gaussian: 2σ⁴/M
        let var_se = (2.0 * 0.25f64.powi(2) / m).sqrt();
        assert!((mv.variance - 0.25).abs() < 5.0 * var_se);
        let integral: f64 = mv.density.iter().sum::<f64>() * mv.bin_width;
        assert!((integral - 1.0).abs() < 1e-12);

        let coh = wigner_sample_coherent(Complex64::new(3.0, 0.0), 2.0, 100_000, 12).unwrap();
        let mc = homodyne_marginal(&coh, 50).unwrap();
        assert!((mc.mean - 3.0).abs() < 5.0 * 0.5 / m.sqrt());
        assert!((mc.variance - mv.variance).abs() < 5.0 * var_se * 2f64.sqrt());
    }

    #[test]
    fn efficiencies() {
        assert_eq!(heterodyne_efficiency(-1.0), 1.0);
        assert_eq!(homodyne_efficiency(0.0), 1.0);
        assert!(heterodyne_efficiency(-3.0) < 1.0);
    }
}
