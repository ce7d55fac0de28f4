//! Phase-insensitive linear amplifier (PIA) and the ideal photon-number
//! amplifier (PNA) used as its reference.
//!
//! The photon-number gain `G ≥ 1` is the primary parameter. The field
//! transform is `a_out = √G a_in + √(G−1) b_in†` with a thermal idler `b`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::ChannelReport;
use crate::special::ln_binomial;
use crate::states::{MomentSet, PhotonDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiaParams {
    pub gain_n: f64,
    pub idler_photons: f64,
}

impl PiaParams {
    pub fn new(gain_n: f64, idler_photons: f64) -> Result<Self> {
        let p = Self {
            gain_n,
            idler_photons,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn ideal(gain_n: f64) -> Result<Self> {
        Self::new(gain_n, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain_n >= 1.0 && self.gain_n.is_finite()) {
            return Err(Error::Validation(format!(
                "PIA gain must be >= 1, got {}",
                self.gain_n
            )));
        }
        if !(self.idler_photons >= 0.0 && self.idler_photons.is_finite()) {
            return Err(Error::Validation(format!(
                "idler occupancy must be >= 0, got {}",
                self.idler_photons
            )));
        }
        Ok(())
    }

    pub fn is_ideal(&self) -> bool {
        self.idler_photons == 0.0
    }

    /// Mean of the amplified-spontaneous-emission background, (G−1)(n_b+1).
    pub fn spontaneous_photons(&self) -> f64 {
        (self.gain_n - 1.0) * (self.idler_photons + 1.0)
    }
}

fn require_ideal(p: &PiaParams) -> Result<()> {
    p.validate()?;
    if !p.is_ideal() {
        return Err(Error::InvalidParameter(
            "this closed form assumes a vacuum idler".into(),
        ));
    }
    Ok(())
}

/// Output of the ideal PIA for the Fock input |m⟩:
/// P(n) = C(n,m)·(G−1)^{n−m}/G^{n+1} for n ≥ m.
pub fn pia_fock_output(m: usize, params: &PiaParams, n_max: usize) -> Result<PhotonDistribution> {
    require_ideal(params)?;
    let g = params.gain_n;
    let mut probs = vec![0.0; n_max + 1];
    if g == 1.0 {
        if m <= n_max {
            probs[m] = 1.0;
        }
        return Ok(PhotonDistribution::from_raw(probs));
    }
    if m > n_max {
        return Ok(PhotonDistribution::from_raw(probs));
    }
    let ln_ratio = ((g - 1.0) / g).ln();
    let ln_g = g.ln();
    for (n, p) in probs.iter_mut().enumerate().skip(m) {
        let ln_p = ln_binomial(n, m) + (n - m) as f64 * ln_ratio - (m as f64 + 1.0) * ln_g;
        *p = ln_p.exp();
    }
    Ok(PhotonDistribution::from_raw(probs))
}

/// Output for a coherent input with |α|² = `alpha_sq`, for any thermal idler.
///
/// The output is a displaced thermal state with thermal mean
/// m = (G−1)(n_b+1) and displacement |β|² = G|α|²:
/// P(n) = mⁿ/(1+m)^{n+1} · exp(−|β|²/(1+m)) · L_n(−|β|²/(m(1+m))).
/// The Laguerre polynomials at negative argument have only positive terms,
/// and their forward recurrence is run with a running log scale.
pub fn pia_coherent_output(
    alpha_sq: f64,
    params: &PiaParams,
    n_max: usize,
) -> Result<PhotonDistribution> {
    params.validate()?;
    if !(alpha_sq >= 0.0 && alpha_sq.is_finite()) {
        return Err(Error::Domain(format!(
            "|alpha|^2 must be >= 0, got {alpha_sq}"
        )));
    }
    let g = params.gain_n;
    let beta_sq = g * alpha_sq;
    let m = params.spontaneous_photons();
    if m == 0.0 {
        return PhotonDistribution::coherent(beta_sq, n_max);
    }
    let y = -beta_sq / (m * (1.0 + m));
    let ln_m = m.ln();
    let ln_1m = m.ln_1p();
    let base = -beta_sq / (1.0 + m);
    let mut probs = Vec::with_capacity(n_max + 1);
    // Track L_{k-1}, L_k as (value · e^{-scale}).
    let mut prev = 0.0f64;
    let mut cur = 1.0f64;
    let mut scale = 0.0f64;
    for n in 0..=n_max {
        let nf = n as f64;
        let ln_p = nf * ln_m - (nf + 1.0) * ln_1m + base + cur.ln() + scale;
        probs.push(ln_p.exp());
        let next = ((2.0 * nf + 1.0 - y) * cur - nf * prev) / (nf + 1.0);
        prev = cur;
        cur = next;
        if cur > 1e100 {
            prev /= cur;
            scale += cur.ln();
            cur = 1.0;
        }
    }
    Ok(PhotonDistribution::from_raw(probs))
}

/// G·n_in + (G−1)(n_b+1).
pub fn pia_mean_photons(n_in: f64, params: &PiaParams) -> f64 {
    params.gain_n * n_in + params.spontaneous_photons()
}

/// Signal-mode input to the noise formula: moments of bit "1" plus ⟨a²⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeMoments {
    pub moments: MomentSet,
    /// ⟨a²⟩; its conjugate supplies ⟨a†²⟩.
    pub anomalous: Complex64,
}

impl ModeMoments {
    pub fn new(moments: MomentSet, anomalous: Complex64) -> Result<Self> {
        if !(moments.photon_variance >= 0.0) || !(moments.mean_photons >= 0.0) {
            return Err(Error::Validation("inconsistent moment set".into()));
        }
        Ok(Self { moments, anomalous })
    }

    /// |α⟩: ⟨a²⟩ = α².
    pub fn coherent(alpha: Complex64) -> Self {
        Self {
            moments: MomentSet::coherent(alpha),
            anomalous: alpha * alpha,
        }
    }

    pub fn fock(m: usize) -> Self {
        Self {
            moments: MomentSet::fock(m),
            anomalous: Complex64::new(0.0, 0.0),
        }
    }

    pub fn thermal(mean: f64) -> Self {
        Self {
            moments: MomentSet::thermal(mean),
            anomalous: Complex64::new(0.0, 0.0),
        }
    }

    /// ⟨n⟩(F − 1) = ⟨Δn²⟩ − ⟨n⟩, finite also at ⟨n⟩ = 0.
    fn excess(&self) -> f64 {
        self.moments.photon_variance - self.moments.mean_photons
    }
}

/// The seven contributions to the binary-channel output noise, before the
/// overall factor ½, plus their halved sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBreakdown {
    /// Quantum fluctuations of the amplified signal.
    pub signal_quantum: f64,
    /// Amplified spontaneous emission.
    pub spontaneous_emission: f64,
    /// Beat between signal and spontaneous emission.
    pub signal_spontaneous_beat: f64,
    /// Self-beat of spontaneous emission.
    pub spontaneous_self_beat: f64,
    pub signal_excess: f64,
    pub idler_excess: f64,
    pub coherent: f64,
    pub total: f64,
}

impl NoiseBreakdown {
    pub fn terms(&self) -> [f64; 7] {
        [
            self.signal_quantum,
            self.spontaneous_emission,
            self.signal_spontaneous_beat,
            self.spontaneous_self_beat,
            self.signal_excess,
            self.idler_excess,
            self.coherent,
        ]
    }
}

/// Output noise ½(⟨Δn²⟩₀ + ⟨Δn²⟩₁) for bit "0" on the vacuum and bit "1" = `signal`.
pub fn pia_output_noise(
    signal: &ModeMoments,
    params: &PiaParams,
    idler: &ModeMoments,
) -> Result<NoiseBreakdown> {
    params.validate()?;
    for (name, m) in [("signal", signal), ("idler", idler)] {
        if !(m.moments.photon_variance >= 0.0 && m.moments.mean_photons >= 0.0) {
            return Err(Error::Validation(format!("inconsistent {name} moment set")));
        }
    }
    let g = params.gain_n;
    let na = signal.moments.mean_photons;
    let nb = idler.moments.mean_photons;
    let coherent_product =
        idler.anomalous.conj() * signal.anomalous.conj() + idler.anomalous * signal.anomalous;
    let terms = [
        g * na,
        2.0 * (g - 1.0) * (nb + 1.0),
        2.0 * g * (g - 1.0) * (nb + 1.0) * na,
        2.0 * (g - 1.0).powi(2) * (2.0 * nb + 1.0),
        g * g * signal.excess(),
        2.0 * (g - 1.0).powi(2) * idler.excess(),
        2.0 * g * (g - 1.0) * coherent_product.re,
    ];
    Ok(NoiseBreakdown {
        signal_quantum: terms[0],
        spontaneous_emission: terms[1],
        signal_spontaneous_beat: terms[2],
        spontaneous_self_beat: terms[3],
        signal_excess: terms[4],
        idler_excess: terms[5],
        coherent: terms[6],
        total: 0.5 * terms.iter().sum::<f64>(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseFigure {
    /// SNR_in / SNR_out; +∞ when the input noise vanishes.
    pub linear: f64,
    pub db: f64,
}

impl NoiseFigure {
    pub fn from_linear(linear: f64) -> Self {
        Self {
            linear,
            db: if linear.is_infinite() {
                f64::INFINITY
            } else {
                10.0 * linear.log10()
            },
        }
    }
}

/// R = SNR_in / SNR_out with signal ⟨n⟩₁ − ⟨n⟩₀ and noise ½(⟨Δn²⟩₀ + ⟨Δn²⟩₁),
/// bit "0" being the vacuum and the idler thermal.
pub fn pia_noise_figure(signal: &ModeMoments, params: &PiaParams) -> Result<NoiseFigure> {
    params.validate()?;
    let na = signal.moments.mean_photons;
    if !(na > 0.0) {
        return Err(Error::Domain(
            "noise figure needs a nonzero input signal".into(),
        ));
    }
    if params.gain_n == 1.0 && params.is_ideal() {
        return Ok(NoiseFigure::from_linear(1.0));
    }
    let n_out =
        pia_output_noise(signal, params, &ModeMoments::thermal(params.idler_photons))?.total;
    let n_in = 0.5 * signal.moments.photon_variance;
    if n_in == 0.0 {
        return Ok(NoiseFigure::from_linear(f64::INFINITY));
    }
    let g = params.gain_n;
    Ok(NoiseFigure::from_linear(n_out / (g * g * n_in)))
}

/// Ideal photon-number amplifier: n → G·n for integer G.
pub fn pna_output(dist: &PhotonDistribution, gain_n: f64) -> Result<PhotonDistribution> {
    if !(gain_n >= 1.0) || gain_n.fract() != 0.0 || gain_n > u32::MAX as f64 {
        return Err(Error::UnsupportedParameter(format!(
            "the PNA is defined for positive integer gains only, got {gain_n}"
        )));
    }
    let g = gain_n as usize;
    let mut probs = vec![0.0; dist.n_max() * g + 1];
    for (n, &p) in dist.probs().iter().enumerate() {
        probs[n * g] = p;
    }
    Ok(PhotonDistribution::from_raw(probs))
}

/// Binary channel with bit "0" = vacuum and bit "1" = |α⟩ through the PIA.
///
/// BER uses the average of the two one-sided errors, so vacuum against
/// a coherent state at unit gain gives ½e^{−|α|²}, half of the value
/// sometimes quoted for the photon-number amplifier.
pub fn pia_binary_report(alpha_sq: f64, params: &PiaParams, n_max: usize) -> Result<ChannelReport> {
    let p0 = if params.is_ideal() {
        pia_fock_output(0, params, n_max)?
    } else {
        pia_coherent_output(0.0, params, n_max)?
    };
    let p1 = pia_coherent_output(alpha_sq, params, n_max)?;
    let nf = if alpha_sq > 0.0 {
        pia_noise_figure(
            &ModeMoments::coherent(Complex64::new(alpha_sq.sqrt(), 0.0)),
            params,
        )?
    } else {
        NoiseFigure::from_linear(f64::NAN)
    };
    ChannelReport::from_histograms("pia", params.gain_n, nf, p0, p1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infotheory::{binary_mutual_information, optimal_threshold, BinaryErrorPair};
    use crate::special::ln_factorial;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// ln of one term of the literal double-factorial sum.
    fn ln_term_literal(h: usize, n: usize, g: f64, alpha_sq: f64) -> f64 {
        h as f64 * (g - 1.0).ln() - (n as f64 + 1.0) * g.ln() + ln_factorial(n)
            - ln_factorial(h)
            - 2.0 * ln_factorial(n - h)
            - alpha_sq
            + (n - h) as f64 * alpha_sq.ln()
    }

    fn literal_coherent(alpha_sq: f64, g: f64, n_max: usize) -> Vec<f64> {
        (0..=n_max)
            .map(|n| {
                let terms: Vec<f64> = (0..=n)
                    .map(|h| {
                        if alpha_sq == 0.0 {
                            if h == n {
                                ((g - 1.0).powi(h as i32)) / g.powi(n as i32 + 1)
                            } else {
                                0.0
                            }
                        } else if g == 1.0 {
                            if h == 0 {
                                (ln_factorial(n) - 2.0 * ln_factorial(n) - alpha_sq
                                    + n as f64 * alpha_sq.ln())
                                .exp()
                            } else {
                                0.0
                            }
                        } else {
                            ln_term_literal(h, n, g, alpha_sq).exp()
                        }
                    })
                    .collect();
                terms.iter().sum()
            })
            .collect()
    }

    #[test]
    fn vacuum_input_is_thermal() {
        let p = PiaParams::ideal(3.0).unwrap();
        let d = pia_fock_output(0, &p, 200).unwrap();
        let t = PhotonDistribution::thermal(2.0, 200).unwrap();
        for (a, b) in d.probs().iter().zip(t.probs()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn unit_gain_is_identity() {
        let p = PiaParams::ideal(1.0).unwrap();
        assert_eq!(
            pia_fock_output(4, &p, 10).unwrap(),
            PhotonDistribution::delta(4, 10)
        );
    }

    #[test]
    fn fock_mean() {
        for (m, g) in [(0usize, 2.0), (3, 5.0), (10, 1.5)] {
            let p = PiaParams::ideal(g).unwrap();
            let d = pia_fock_output(m, &p, 800).unwrap();
            assert!(d.truncation_mass() < 1e-12);
            assert!((d.mean() - (g * m as f64 + g - 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn non_ideal_fock_is_rejected() {
        assert!(pia_fock_output(1, &PiaParams::new(2.0, 0.5).unwrap(), 10).is_err());
    }

    #[test]
    fn coherent_matches_literal_sum() {
        for (a, g) in [
            (0.0, 2.0),
            (1.0, 1.0),
            (4.0, 1.7),
            (15.6, 4.867),
            (9.0, 10.0),
        ] {
            let p = PiaParams::ideal(g).unwrap();
            let d = pia_coherent_output(a, &p, 120).unwrap();
            let lit = literal_coherent(a, g, 120);
            for (n, (x, y)) in d.probs().iter().zip(&lit).enumerate() {
                assert!(
                    (x - y).abs() <= 1e-12 * y.max(1e-300) + 1e-300,
                    "a={a} g={g} n={n}: {x} vs {y}"
                );
            }
        }
    }

    #[test]
    fn coherent_vacuum_equals_fock_zero() {
        let p = PiaParams::ideal(4.0).unwrap();
        let a = pia_coherent_output(0.0, &p, 100).unwrap();
        let b = pia_fock_output(0, &p, 100).unwrap();
        for (x, y) in a.probs().iter().zip(b.probs()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn mean_photons_arithmetic() {
        assert_eq!(pia_mean_photons(0.0, &PiaParams::ideal(2.0).unwrap()), 1.0);
        assert_eq!(
            pia_mean_photons(10.0, &PiaParams::ideal(10.0).unwrap()),
            109.0
        );
        assert_eq!(
            pia_mean_photons(0.0, &PiaParams::new(10.0, 1.0).unwrap()),
            18.0
        );
    }

    #[test]
    fn moments_match_field_transform() {
        // Displaced thermal: ⟨n⟩ = Ga + m, ⟨Δn²⟩ = m(m+1) + Ga(2m+1), m = (G−1)(n_b+1).
        for (a, g, nb) in [
            (15.6, 4.867, 0.0),
            (5.0, 2.0, 0.3),
            (30.0, 1.2, 1.5),
            (0.0, 3.0, 2.0),
        ] {
            let p = PiaParams::new(g, nb).unwrap();
            let m = (g - 1.0) * (nb + 1.0);
            let mean = g * a + m;
            let var = m * (m + 1.0) + g * a * (2.0 * m + 1.0);
            let d =
                pia_coherent_output(a, &p, crate::states::default_n_max(mean, 9.0 * var)).unwrap();
            assert!(
                (d.mean() - mean).abs() < 1e-8 * mean.max(1.0),
                "{a} {g} {nb}"
            );
            assert!(
                (d.variance() - var).abs() < 1e-8 * var.max(1.0),
                "{} vs {var}",
                d.variance()
            );
        }
    }

    #[test]
    fn noise_matches_distribution_variances() {
        for (a, g, nb) in [(15.6, 4.867, 0.0), (5.0, 2.0, 0.3), (100.0, 100.0, 0.0)] {
            let p = PiaParams::new(g, nb).unwrap();
            let n_max = 40_000;
            let v0 = pia_coherent_output(0.0, &p, n_max).unwrap().variance();
            let v1 = pia_coherent_output(a, &p, n_max).unwrap().variance();
            // Phase-averaging the coherent input leaves photon statistics unchanged
            // for a thermal idler, so the anomalous term must vanish.
            let n = pia_output_noise(
                &ModeMoments::coherent(Complex64::new(a.sqrt(), 0.0)),
                &p,
                &ModeMoments::thermal(nb),
            )
            .unwrap();
            assert_eq!(n.coherent, 0.0);
            assert!(
                (n.total - 0.5 * (v0 + v1)).abs() < 1e-8 * n.total,
                "{} vs {}",
                n.total,
                0.5 * (v0 + v1)
            );
        }
    }

    #[test]
    fn noise_figure_examples() {
        let sig = ModeMoments::coherent(Complex64::new(10.0, 0.0));
        let r = pia_noise_figure(&sig, &PiaParams::ideal(100.0).unwrap()).unwrap();
        assert!((1.9..=2.1).contains(&r.linear));
        assert!((r.linear - 2.0098).abs() < 1e-12);
        let f = pia_noise_figure(&ModeMoments::fock(5), &PiaParams::ideal(10.0).unwrap()).unwrap();
        assert!(f.linear.is_infinite() && f.db.is_infinite());
        let one = pia_noise_figure(&sig, &PiaParams::ideal(1.0).unwrap()).unwrap();
        assert_eq!(one.linear, 1.0);
        assert_eq!(one.db, 0.0);
        assert!(pia_noise_figure(&ModeMoments::fock(0), &PiaParams::ideal(2.0).unwrap()).is_err());
    }

    #[test]
    fn unit_gain_noise_is_input_noise() {
        let sig = ModeMoments::coherent(Complex64::new(2.0, 1.0));
        let n = pia_output_noise(
            &sig,
            &PiaParams::ideal(1.0).unwrap(),
            &ModeMoments::thermal(0.0),
        )
        .unwrap();
        assert!((n.total - 0.5 * 5.0).abs() < 1e-14);
    }

    #[test]
    fn thermal_idler_raises_noise() {
        for g in [1.5, 2.0, 10.0] {
            for na in [0.5f64, 5.0, 50.0] {
                let sig = ModeMoments::coherent(Complex64::new(na.sqrt(), 0.0));
                let p = PiaParams::ideal(g).unwrap();
                let base = pia_output_noise(&sig, &p, &ModeMoments::thermal(0.0)).unwrap();
                let hot = pia_output_noise(&sig, &p, &ModeMoments::thermal(0.7)).unwrap();
                assert!(hot.total > base.total);
                for (h, b) in hot.terms().iter().zip(base.terms()) {
                    assert!(*h >= b);
                }
            }
        }
    }

    #[test]
    fn inconsistent_moments_rejected() {
        let bad = ModeMoments {
            moments: MomentSet {
                mean_amplitude: Complex64::new(0.0, 0.0),
                mean_photons: 1.0,
                photon_variance: -1.0,
                fano: -1.0,
            },
            anomalous: Complex64::new(0.0, 0.0),
        };
        assert!(pia_output_noise(
            &bad,
            &PiaParams::ideal(2.0).unwrap(),
            &ModeMoments::thermal(0.0)
        )
        .is_err());
    }

    #[test]
    fn pna_examples() {
        let d = PhotonDistribution::coherent(9.0, 80).unwrap();
        assert_eq!(pna_output(&d, 1.0).unwrap(), d);
        let v = PhotonDistribution::vacuum(5);
        assert_eq!(pna_output(&v, 7.0).unwrap().get(0), 1.0);
        for g in [1.0, 2.0, 5.0] {
            let out = pna_output(&d, g).unwrap();
            let vac = pna_output(&PhotonDistribution::vacuum(80), g).unwrap();
            let t = optimal_threshold(&vac, &out).unwrap();
            assert!((t.errors.q01 - (-9f64).exp()).abs() < 1e-15);
            assert_eq!(t.errors.q10, 0.0);
        }
        assert!(matches!(
            pna_output(&d, 2.5),
            Err(Error::UnsupportedParameter(_))
        ));
    }

    #[test]
    fn unit_gain_ber_is_half_poisson_zero() {
        let r = pia_binary_report(9.0, &PiaParams::ideal(1.0).unwrap(), 80).unwrap();
        assert_eq!(r.threshold, 0);
        assert!((r.ber - 0.5 * (-9f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn ber_grows_with_gain() {
        let mut last = 0.0;
        for g in [1.0, 1.5, 2.0, 3.0, 4.867, 8.0, 20.0, 100.0] {
            let r = pia_binary_report(15.6, &PiaParams::ideal(g).unwrap(), 8000).unwrap();
            assert!(r.ber >= last - 1e-15, "G={g}: {} < {last}", r.ber);
            last = r.ber;
        }
    }

    #[test]
    fn composition_by_resampling() {
        let (g1, g2, m) = (2.0, 1.5, 2usize);
        let n_max = 200;
        let first = pia_fock_output(m, &PiaParams::ideal(g1).unwrap(), n_max).unwrap();
        let cdf = |d: &PhotonDistribution| {
            let mut acc = 0.0;
            d.probs()
                .iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect::<Vec<f64>>()
        };
        let first_cdf = cdf(&first);
        let p2 = PiaParams::ideal(g2).unwrap();
        let second: Vec<Vec<f64>> = (0..=n_max)
            .map(|k| cdf(&pia_fock_output(k, &p2, n_max).unwrap()))
            .collect();
        let draw = |c: &[f64], r: &mut ChaCha8Rng| {
            let x: f64 = r.random();
            c.partition_point(|&v| v < x).min(n_max)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let samples = 200_000;
        let mut counts = vec![0u64; n_max + 1];
        for _ in 0..samples {
            let k = draw(&first_cdf, &mut rng);
            counts[draw(&second[k], &mut rng)] += 1;
        }
        let direct = pia_fock_output(m, &PiaParams::ideal(g1 * g2).unwrap(), n_max).unwrap();
        for (n, &c) in counts.iter().enumerate().take(40) {
            let p = direct.get(n);
            let se = (p * (1.0 - p) / samples as f64).sqrt();
            assert!(
                ((c as f64 / samples as f64) - p).abs() < 5.0 * se + 1e-12,
                "n={n}"
            );
        }
    }

    proptest! {
        #[test]
        fn pna_keeps_information(raw in proptest::collection::vec(0.0f64..1.0, 2..20), g in 1u32..6) {
            let total: f64 = raw.iter().sum::<f64>() + 1e-9;
            let p1 = PhotonDistribution::new(raw.iter().map(|x| x / total).collect()).unwrap();
            let n_max = p1.n_max();
            let vac = PhotonDistribution::vacuum(n_max);
            let before = optimal_threshold(&vac, &p1).unwrap();
            let a = pna_output(&p1, g as f64).unwrap();
            let b = pna_output(&vac, g as f64).unwrap();
            let after = optimal_threshold(&b, &a).unwrap();
            prop_assert!((before.ber - after.ber).abs() < 1e-15);
            prop_assert!((after.errors.q01 - p1.get(0)).abs() < 1e-15);
            let ib = binary_mutual_information(BinaryErrorPair::new(before.errors.q01, before.errors.q10).unwrap());
            let ia = binary_mutual_information(BinaryErrorPair::new(after.errors.q01, after.errors.q10).unwrap());
            prop_assert!((ib - ia).abs() < 1e-12);
        }

        #[test]
        fn outputs_are_distributions(a in 0.0f64..40.0, g in 1.0f64..20.0, nb in 0.0f64..3.0) {
            let p = PiaParams::new(g, nb).unwrap();
            let mean = g * a + (g - 1.0) * (nb + 1.0);
            // Thermal tails fall off as e^{-n/(m+1)}, so cover 20σ rather than 10σ.
            let n_max = crate::states::default_n_max(mean, 4.0 * (mean * mean + 3.0 * mean + 1.0));
            let d = pia_coherent_output(a, &p, n_max).unwrap();
            prop_assert!(d.probs().iter().all(|&x| x >= 0.0 && x.is_finite()));
            prop_assert!((d.total() + d.truncation_mass() - 1.0).abs() < 1e-12);
            prop_assert!(d.truncation_mass() < 1e-6);
        }
    }
}
