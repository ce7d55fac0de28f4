//! Entropies, mutual information, bit-error rate and threshold decoding.
//!
//! All logarithms are base 2 and `0·log 0 = 0`. The binary channel always
//! has equal priors; the decision rule for photon counting is "0" iff
//! `n ≤ θ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{normal_sf, xlog2x};
use crate::states::PhotonDistribution;

const STOCHASTIC_TOL: f64 = 1e-12;

/// The two one-sided error probabilities of a binary channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryErrorPair {
    /// Q₀|₁: "0" detected although "1" was sent.
    pub q01: f64,
    /// Q₁|₀: "1" detected although "0" was sent (false alarm).
    pub q10: f64,
}

impl BinaryErrorPair {
    pub fn new(q01: f64, q10: f64) -> Result<Self> {
        for (name, q) in [("q01", q01), ("q10", q10)] {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::Validation(format!(
                    "{name} = {q} is not a probability"
                )));
            }
        }
        Ok(Self { q01, q10 })
    }

    /// Output relabeling "0" ↔ "1".
    pub fn swapped_outputs(self) -> Self {
        Self {
            q01: 1.0 - self.q01,
            q10: 1.0 - self.q10,
        }
    }

    /// The equivalent 2×2 channel with equal priors (row j = sent symbol).
    pub fn to_channel(self) -> DiscreteChannel {
        DiscreteChannel {
            priors: vec![0.5, 0.5],
            conditionals: vec![
                vec![1.0 - self.q10, self.q10],
                vec![self.q01, 1.0 - self.q01],
            ],
        }
    }
}

/// A discrete memoryless channel: priors p_j and conditionals Q_{k|j}.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteChannel {
    priors: Vec<f64>,
    conditionals: Vec<Vec<f64>>,
}

impl DiscreteChannel {
    pub fn new(priors: Vec<f64>, conditionals: Vec<Vec<f64>>) -> Result<Self> {
        if priors.is_empty() {
            return Err(Error::Validation("channel has no input symbols".into()));
        }
        if conditionals.len() != priors.len() {
            return Err(Error::Validation(format!(
                "{} prior(s) but {} conditional row(s)",
                priors.len(),
                conditionals.len()
            )));
        }
        check_distribution("priors", &priors)?;
        let k = conditionals[0].len();
        for (j, row) in conditionals.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Validation(format!(
                    "conditional row {j} has {} entries, expected {k}",
                    row.len()
                )));
            }
            check_distribution(&format!("conditional row {j}"), row)?;
        }
        Ok(Self {
            priors,
            conditionals,
        })
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn conditionals(&self) -> &[Vec<f64>] {
        &self.conditionals
    }

    pub fn input_count(&self) -> usize {
        self.priors.len()
    }

    pub fn output_count(&self) -> usize {
        self.conditionals[0].len()
    }

    /// Unconditioned output probabilities q_k = Σ_j p_j Q_{k|j}.
    pub fn output_probabilities(&self) -> Vec<f64> {
        (0..self.output_count())
            .map(|k| {
                self.priors
                    .iter()
                    .zip(&self.conditionals)
                    .map(|(p, row)| p * row[k])
                    .sum()
            })
            .collect()
    }

    /// H(X)
    pub fn input_entropy(&self) -> f64 {
        entropy(&self.priors)
    }

    /// H(X|Y) = −Σ_k q_k Σ_j P_{j|k} log₂ P_{j|k}
    pub fn conditional_entropy(&self) -> f64 {
        let q = self.output_probabilities();
        let mut h = 0.0;
        for (k, &qk) in q.iter().enumerate() {
            if qk <= 0.0 {
                continue;
            }
            let inner: f64 = self
                .priors
                .iter()
                .zip(&self.conditionals)
                .map(|(p, row)| xlog2x(p * row[k] / qk))
                .sum();
            h -= qk * inner;
        }
        h
    }
}

fn check_distribution(what: &str, p: &[f64]) -> Result<()> {
    if let Some(x) = p.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::Validation(format!(
            "{what} contains invalid entry {x}"
        )));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::Validation(format!("{what} sums to {s}, not 1")));
    }
    Ok(())
}

/// Shannon entropy in bits.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().copied().map(xlog2x).sum::<f64>()
}

/// Binary entropy H₂(p).
pub fn binary_entropy(p: f64) -> f64 {
    entropy(&[p, 1.0 - p])
}

/// I(X;Y) = Σ_j Σ_k p_j Q_{k|j} log₂(Q_{k|j} / q_k).
pub fn discrete_mutual_information(ch: &DiscreteChannel) -> f64 {
    let q = ch.output_probabilities();
    let mut info = 0.0;
    for (p, row) in ch.priors.iter().zip(&ch.conditionals) {
        for (&qkj, &qk) in row.iter().zip(&q) {
            let w = p * qkj;
            if w > 0.0 {
                info += w * (qkj / qk).log2();
            }
        }
    }
    info
}

/// Mutual information of the equal-prior binary channel, term by term.
pub fn binary_mutual_information(e: BinaryErrorPair) -> f64 {
    let BinaryErrorPair { q01, q10 } = e;
    let term = |w: f64, num: f64, den: f64| if w > 0.0 { w * (num / den).log2() } else { 0.0 };
    let d0 = 1.0 - q10 + q01;
    let d1 = 1.0 - q01 + q10;
    0.5 * (term(1.0 - q10, 2.0 * (1.0 - q10), d0)
        + term(q01, 2.0 * q01, d0)
        + term(q10, 2.0 * q10, d1)
        + term(1.0 - q01, 2.0 * (1.0 - q01), d1))
}

/// B = ½(Q₀|₁ + Q₁|₀)
pub fn ber(e: BinaryErrorPair) -> f64 {
    0.5 * (e.q01 + e.q10)
}

/// |I − (1 − B)|, the error of the first-order small-error expansion.
pub fn small_error_expansion_check(e: BinaryErrorPair) -> Result<f64> {
    if e.q01 > 0.1 || e.q10 > 0.1 {
        return Err(Error::Domain(format!(
            "small-error expansion needs q01, q10 <= 0.1 (got {}, {})",
            e.q01, e.q10
        )));
    }
    Ok((binary_mutual_information(e) - (1.0 - ber(e))).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdDecision {
    pub threshold: usize,
    pub ber: f64,
    pub errors: BinaryErrorPair,
}

impl ThresholdDecision {
    /// Error pair at an arbitrary cut, by direct summation.
    pub fn at(p0: &PhotonDistribution, p1: &PhotonDistribution, threshold: usize) -> Self {
        let q01: f64 = p1.probs().iter().take(threshold + 1).sum();
        let q10: f64 = p0.probs().iter().skip(threshold + 1).sum();
        let errors = BinaryErrorPair {
            q01: q01.clamp(0.0, 1.0),
            q10: q10.clamp(0.0, 1.0),
        };
        Self {
            threshold,
            ber: ber(errors),
            errors,
        }
    }
}

/// Minimum-BER integer threshold for "0" = p0, "1" = p1.
///
/// Scans every cut θ = 0..=n_max with running sums, then re-evaluates the
/// winning cut by direct summation so persisted numbers can be re-derived
/// exactly. Ties go to the smallest θ.
pub fn optimal_threshold(
    p0: &PhotonDistribution,
    p1: &PhotonDistribution,
) -> Result<ThresholdDecision> {
    if p0.n_max() != p1.n_max() {
        return Err(Error::Validation(format!(
            "distributions have different cutoffs ({} vs {})",
            p0.n_max(),
            p1.n_max()
        )));
    }
    let total0: f64 = p0.probs().iter().sum();
    let mut below1 = 0.0;
    let mut below0 = 0.0;
    let mut best = (0usize, f64::INFINITY);
    for (theta, (a, b)) in p0.probs().iter().zip(p1.probs()).enumerate() {
        below0 += a;
        below1 += b;
        let score = below1 + (total0 - below0);
        if score < best.1 {
            best = (theta, score);
        }
    }
    Ok(ThresholdDecision::at(p0, p1, best.0))
}

/// I = ½ log₂(1 + δ²/Δ²) for a Gaussian alphabet through Gaussian noise.
pub fn gaussian_mutual_information(signal_var: f64, noise_var: f64) -> Result<f64> {
    if !(noise_var > 0.0) {
        return Err(Error::Domain(format!(
            "noise variance must be positive, got {noise_var}"
        )));
    }
    if !(signal_var >= 0.0) {
        return Err(Error::Domain(format!(
            "signal variance must be >= 0, got {signal_var}"
        )));
    }
    Ok(0.5 * (signal_var / noise_var).ln_1p() / std::f64::consts::LN_2)
}

/// BER of two equal-variance Gaussians at the midpoint threshold.
///
/// With SNR = S²/N the separation is √SNR standard deviations, so
/// B = 1 − Φ(√SNR / 2) = ½·erfc(√(SNR/8)). B(0) = ½.
pub fn gaussian_ber(snr: f64) -> Result<f64> {
    if !(snr >= 0.0) {
        return Err(Error::Domain(format!("SNR must be >= 0, got {snr}")));
    }
    Ok(normal_sf(0.5 * snr.sqrt()))
}

/// Leading large-SNR behaviour of [`gaussian_ber`]: √(2/(π·SNR))·e^{−SNR/8}.
pub fn gaussian_ber_asymptotic(snr: f64) -> f64 {
    (2.0 / (std::f64::consts::PI * snr)).sqrt() * (-snr / 8.0).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bsc(p: f64) -> DiscreteChannel {
        DiscreteChannel::new(vec![0.5, 0.5], vec![vec![1.0 - p, p], vec![p, 1.0 - p]]).unwrap()
    }

    #[test]
    fn identity_channel_carries_input_entropy() {
        let id: Vec<Vec<f64>> = (0..4)
            .map(|j| (0..4).map(|k| if j == k { 1.0 } else { 0.0 }).collect())
            .collect();
        let ch = DiscreteChannel::new(vec![0.25; 4], id).unwrap();
        assert!((discrete_mutual_information(&ch) - 2.0).abs() < 1e-15);
        assert!((ch.input_entropy() - 2.0).abs() < 1e-15);
        assert_eq!(ch.conditional_entropy(), 0.0);
    }

    #[test]
    fn constant_column_channel_is_uninformative() {
        let row = vec![0.2, 0.5, 0.3];
        let ch =
            DiscreteChannel::new(vec![0.1, 0.6, 0.3], vec![row.clone(), row.clone(), row]).unwrap();
        assert!(discrete_mutual_information(&ch).abs() < 1e-15);
    }

    #[test]
    fn binary_symmetric_channel_matches_binary_entropy() {
        let ch = bsc(0.01);
        // 1 − H₂(0.01) evaluated independently
        let h2 = -(0.01f64 * 0.01f64.log2() + 0.99 * 0.99f64.log2());
        assert!((discrete_mutual_information(&ch) - (1.0 - h2)).abs() < 1e-14);
        let decomposed = ch.input_entropy() - ch.conditional_entropy();
        assert!((discrete_mutual_information(&ch) - decomposed).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        let err = DiscreteChannel::new(vec![0.5, 0.5], vec![vec![0.5, 0.6], vec![1.0, 0.0]]);
        assert!(matches!(err, Err(Error::Validation(_))));
        assert!(DiscreteChannel::new(vec![0.4, 0.5], vec![vec![1.0], vec![1.0]]).is_err());
        assert!(BinaryErrorPair::new(1.2, 0.0).is_err());
    }

    #[test]
    fn binary_information_special_points() {
        let i = |a, b| binary_mutual_information(BinaryErrorPair::new(a, b).unwrap());
        assert_eq!(i(0.0, 0.0), 1.0);
        assert_eq!(i(1.0, 1.0), 1.0);
        assert_eq!(i(0.5, 0.5), 0.0);
    }

    #[test]
    fn ber_is_the_mean_error() {
        let b = |a, c| ber(BinaryErrorPair::new(a, c).unwrap());
        assert_eq!(b(0.0, 0.0), 0.0);
        assert_eq!(b(1.0, 1.0), 1.0);
        assert!((b(0.02, 0.04) - 0.03).abs() < 1e-17);
    }

    #[test]
    fn small_error_residuals() {
        let r = |q| small_error_expansion_check(BinaryErrorPair::new(q, q).unwrap()).unwrap();
        assert_eq!(r(0.0), 0.0);
        // B = 1e-3 carried by one error type, as with a vacuum "0" and threshold 0
        let one_sided =
            small_error_expansion_check(BinaryErrorPair::new(2e-3, 0.0).unwrap()).unwrap();
        assert!(one_sided < 1e-2);
        // an even split carries the extra −q·log q terms and misses 1e-2 slightly
        assert!(r(1e-3) > 1e-2 && r(1e-3) < 1.1e-2);
        assert!(r(1e-2) < 8e-2);
        assert!(r(1e-3) < r(1e-2));
        assert!(small_error_expansion_check(BinaryErrorPair::new(0.2, 0.0).unwrap()).is_err());
    }

    #[test]
    fn gaussian_information_closed_form() {
        assert!((gaussian_mutual_information(2.0, 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((gaussian_mutual_information(3.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(gaussian_mutual_information(0.0, 1.0).unwrap(), 0.0);
        assert!(gaussian_mutual_information(1.0, 0.0).is_err());
    }

    /// Midpoint-threshold overlap of N(0,1) and N(d,1) by Simpson quadrature.
    fn overlap_quadrature(d: f64) -> f64 {
        let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        // Q₁|₀ = ∫_{d/2}^{∞} φ(y) dy, truncated at d/2 + 40
        let (a, b, n) = (0.5 * d, 0.5 * d + 40.0, 200_000usize);
        let h = (b - a) / n as f64;
        let mut s = pdf(a) + pdf(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * pdf(a + i as f64 * h);
        }
        let tail = s * h / 3.0;
        // equal variances: Q₀|₁ = Q₁|₀
        tail
    }

    #[test]
    fn gaussian_ber_matches_overlap_quadrature() {
        assert_eq!(gaussian_ber(0.0).unwrap(), 0.5);
        let snr: f64 = 72.0;
        let q = overlap_quadrature(snr.sqrt());
        let b = gaussian_ber(snr).unwrap();
        assert!(((b - q) / q).abs() < 1e-9, "{b} vs {q}");
        assert!(gaussian_ber(1e4).unwrap() < 1e-200);
        assert!(gaussian_ber(-1.0).is_err());
    }

    #[test]
    fn gaussian_ber_asymptote() {
        for snr in [50.0, 72.0, 200.0, 800.0] {
            let b = gaussian_ber(snr).unwrap();
            let a = gaussian_ber_asymptotic(snr);
            assert!(((b - a) / b).abs() < 0.2, "snr {snr}: {b} vs {a}");
        }
        // the erfc-without-½ form √(8/(π·SNR))·e^{−SNR/8} is twice the overlap
        let snr = 5000.0f64;
        let doubled = (8.0 / (std::f64::consts::PI * snr)).sqrt() * (-snr / 8.0).exp();
        assert!((gaussian_ber(snr).unwrap() / doubled - 0.5).abs() < 1e-3);
    }

    #[test]
    fn gaussian_ber_strictly_decreasing() {
        let grid: Vec<f64> = (0..400).map(|i| i as f64 * 0.5).collect();
        for w in grid.windows(2) {
            assert!(gaussian_ber(w[1]).unwrap() < gaussian_ber(w[0]).unwrap());
        }
    }

    #[test]
    fn threshold_disjoint_and_identical() {
        let p0 = PhotonDistribution::delta(0, 20);
        let p1 = PhotonDistribution::delta(10, 20);
        let d = optimal_threshold(&p0, &p1).unwrap();
        assert_eq!(d.ber, 0.0);
        assert_eq!(d.threshold, 0);
        let same = optimal_threshold(&p1, &p1).unwrap();
        assert!((same.ber - 0.5).abs() < 1e-15);
        assert!(optimal_threshold(&p0, &PhotonDistribution::delta(0, 5)).is_err());
    }

    #[test]
    fn threshold_thermal_vs_poisson_matches_scan() {
        let p0 = PhotonDistribution::thermal(1.0, 200).unwrap();
        let p1 = PhotonDistribution::coherent(16.0, 200).unwrap();
        let d = optimal_threshold(&p0, &p1).unwrap();
        let scan = (0..=200)
            .map(|t| ThresholdDecision::at(&p0, &p1, t).ber)
            .fold(f64::INFINITY, f64::min);
        assert!((d.ber - scan).abs() < 1e-15);
        assert_eq!(d.ber, (d.errors.q01 + d.errors.q10) / 2.0);
    }

    proptest! {
        #[test]
        fn relabeling_outputs_preserves_information(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let e = BinaryErrorPair::new(a, b).unwrap();
            let i1 = binary_mutual_information(e);
            let i2 = binary_mutual_information(e.swapped_outputs());
            prop_assert!((i1 - i2).abs() < 1e-12);
            prop_assert!((-1e-15..=1.0 + 1e-15).contains(&i1));
        }

        #[test]
        fn binary_equals_generic_formula(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let e = BinaryErrorPair::new(a, b).unwrap();
            let generic = discrete_mutual_information(&e.to_channel());
            prop_assert!((generic - binary_mutual_information(e)).abs() < 1e-12);
        }

        #[test]
        fn information_bounds(rows in proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, 3), 2..5)) {
            let conditionals: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| { let s: f64 = r.iter().sum(); r.iter().map(|x| x / s).collect() })
                .collect();
            let j = conditionals.len();
            let ch = DiscreteChannel::new(vec![1.0 / j as f64; j], conditionals).unwrap();
            let i = discrete_mutual_information(&ch);
            prop_assert!(i >= -1e-12);
            prop_assert!(i <= ch.input_entropy().min(3f64.log2()) + 1e-12);
            prop_assert!((i - (ch.input_entropy() - ch.conditional_entropy())).abs() < 1e-12);
        }
    }
}
