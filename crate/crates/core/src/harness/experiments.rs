use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::{
    AmplifierConfig, AnalysisConfig, EnsembleConfig, ExperimentConfig, InputState, OutputConfig,
};
use super::output::{Manifest, RunArtifacts};
use super::report::{binary_noise_figure, ChannelReport};
use crate::error::{Error, Result};
use crate::laser_fpe::{evolve_laser, time_averaged_histogram, Integration, LaserParams};
use crate::pia::{
    pia_coherent_output, pia_fock_output, pia_output_noise, pna_output, ModeMoments, PiaParams,
};
use crate::qjump::{
    build_generators, qj_ensemble_distribution, stationary_number_dist, tv_noise_scale,
    JointStateVector, DEFAULT_CUTOFF_TOLERANCE,
};
use crate::rng::derive_seed;
use crate::states::{
    default_n_max, moments_from_ensemble, number_hist_from_ensemble, wigner_sample_coherent,
    PhotonDistribution,
};

/// Sub-seed tags, one per independent random ingredient of a run.
mod tag {
    pub const SAMPLE_BIT0: u64 = 0;
    pub const SAMPLE_BIT1: u64 = 1;
    pub const NOISE_BIT0: u64 = 10;
    pub const NOISE_BIT1: u64 = 11;
    pub const QJ: u64 = 20;
    pub const FIG2_FPE_INIT: u64 = 30;
    pub const FIG2_FPE_NOISE: u64 = 31;
    pub const FIG2_QJ: u64 = 32;
    pub const FIG2_REPEAT: u64 = 33;
}

fn signal_moments(input: &InputState) -> ModeMoments {
    match *input {
        InputState::Coherent { alpha, phase } => {
            ModeMoments::coherent(Complex64::from_polar(alpha, phase))
        }
        InputState::Fock { photons } => ModeMoments::fock(photons),
    }
}

fn input_distribution(input: &InputState, n_max: usize) -> Result<PhotonDistribution> {
    match *input {
        InputState::Coherent { alpha, .. } => PhotonDistribution::coherent(alpha * alpha, n_max),
        InputState::Fock { photons } => Ok(PhotonDistribution::delta(photons, n_max)),
    }
}

/// Binomial standard error of the BER for histograms estimated from
/// `samples` independent draws per bit.
fn binomial_ber_stderr(r: &ChannelReport, samples: usize) -> f64 {
    let m = samples as f64;
    let (a, b) = (r.errors.q01, r.errors.q10);
    0.5 * ((a * (1.0 - a) + b * (1.0 - b)) / m).sqrt()
}

/// Variance of a histogram of `samples` independent counts and its standard error.
pub fn histogram_variance(d: &PhotonDistribution, samples: usize) -> (f64, f64) {
    let total = d.total();
    let mean = d
        .probs()
        .iter()
        .enumerate()
        .map(|(n, p)| n as f64 * p)
        .sum::<f64>()
        / total;
    let central = |k: i32| {
        d.probs()
            .iter()
            .enumerate()
            .map(|(n, p)| (n as f64 - mean).powi(k) * p)
            .sum::<f64>()
            / total
    };
    let m2 = central(2);
    let m4 = central(4);
    (m2, ((m4 - m2 * m2).max(0.0) / samples as f64).sqrt())
}

/// Runs one binary-channel experiment: bit "0" on the vacuum, bit "1" on the configured input.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ChannelReport> {
    cfg.validate(&cfg.label)?;
    let start = Instant::now();
    let mut report = match &cfg.amplifier {
        AmplifierConfig::Pia {
            gain_n,
            idler_photons,
        } => run_pia(cfg, *gain_n, *idler_photons),
        AmplifierConfig::Pna { gain_n } => run_pna(cfg, *gain_n),
        AmplifierConfig::LaserFpe {
            validity_override, ..
        } => run_laser(cfg, *validity_override),
        AmplifierConfig::Qjump { .. } => run_qjump(cfg),
    }
    .map_err(|e| e.in_experiment(&cfg.label))?;
    report.label = cfg.label.clone();
    report.seed = Some(cfg.seed);
    report.wall_time_seconds = Some(start.elapsed().as_secs_f64());
    Ok(report)
}

fn run_pia(cfg: &ExperimentConfig, gain_n: f64, idler_photons: f64) -> Result<ChannelReport> {
    let params = PiaParams::new(gain_n, idler_photons)?;
    let signal = signal_moments(&cfg.input);
    let noise = pia_output_noise(&signal, &params, &ModeMoments::thermal(idler_photons))?;
    let spont = params.spontaneous_photons();
    let n_max = cfg.analysis.n_max.unwrap_or_else(|| {
        // The on-off noise is the mean of the two output variances.
        let var0 = spont * (spont + 1.0);
        let var1 = (2.0 * noise.total - var0).max(0.0);
        let mean1 = gain_n * cfg.input.mean_photons() + spont;
        // Triple width on the vacuum side, whose tail is geometric.
        default_n_max(mean1, var1).max(default_n_max(spont, 9.0 * var0))
    });
    let p0 = if params.is_ideal() {
        pia_fock_output(0, &params, n_max)?
    } else {
        pia_coherent_output(0.0, &params, n_max)?
    };
    let p1 = match cfg.input {
        InputState::Coherent { alpha, .. } => pia_coherent_output(alpha * alpha, &params, n_max)?,
        InputState::Fock { photons } => {
            if !params.is_ideal() {
                return Err(Error::UnsupportedParameter(
                    "Fock input through a PIA with a thermal idler has no closed form here".into(),
                ));
            }
            pia_fock_output(photons, &params, n_max)?
        }
    };
    let s_in = cfg.input.mean_photons();
    let nf = binary_noise_figure(
        s_in,
        0.5 * cfg.input.photon_variance(),
        gain_n * s_in,
        noise.total,
    );
    ChannelReport::from_histograms("pia", gain_n, nf, p0, p1)
}

fn run_pna(cfg: &ExperimentConfig, gain_n: u32) -> Result<ChannelReport> {
    let g = f64::from(gain_n);
    let input_cutoff = match cfg.input {
        InputState::Coherent { alpha, .. } => default_n_max(alpha * alpha, alpha * alpha),
        InputState::Fock { photons } => photons,
    };
    let p_in = input_distribution(&cfg.input, input_cutoff)?;
    let mut p1 = pna_output(&p_in, g)?;
    if let Some(n) = cfg.analysis.n_max {
        p1 = p1.resized(n);
    }
    let p0 = PhotonDistribution::vacuum(p1.n_max());
    let s_in = p_in.mean();
    let nf = binary_noise_figure(
        s_in,
        0.5 * p_in.variance(),
        p1.mean() - p0.mean(),
        0.5 * (p0.variance() + p1.variance()),
    );
    ChannelReport::from_histograms("pna", g, nf, p0, p1)
}

fn run_laser(cfg: &ExperimentConfig, validity_override: bool) -> Result<ChannelReport> {
    let p = cfg.amplifier.laser_params().expect("laser config")?;
    let t = cfg.amplifier.evolution_time().expect("laser config");
    let (alpha, phase) = match cfg.input {
        InputState::Coherent { alpha, phase } => (alpha, phase),
        InputState::Fock { .. } => {
            return Err(Error::UnsupportedParameter(
                "Fock inputs cannot be Wigner-sampled".into(),
            ));
        }
    };
    let m = cfg.ensemble.samples;
    let dt = cfg.ensemble.gamma_dt / p.gamma;
    let mut evolved = Vec::with_capacity(2);
    for (amp, sample_tag, noise_tag) in [
        (Complex64::new(0.0, 0.0), tag::SAMPLE_BIT0, tag::NOISE_BIT0),
        (
            Complex64::from_polar(alpha, phase),
            tag::SAMPLE_BIT1,
            tag::NOISE_BIT1,
        ),
    ] {
        let e = wigner_sample_coherent(amp, p.n_s, m, derive_seed(cfg.seed, sample_tag))?;
        let integration = Integration {
            t_total: t,
            dt,
            seed: derive_seed(cfg.seed, noise_tag),
        };
        evolved.push(evolve_laser(
            &e,
            &p,
            &integration,
            cfg.analysis.strictness,
            validity_override,
            cfg.ensemble.adaptive,
        )?);
    }
    let (bit0, bit1) = (&evolved[0], &evolved[1]);
    let m0 = moments_from_ensemble(&bit0.ensemble);
    let m1 = moments_from_ensemble(&bit1.ensemble);
    let s_in = alpha * alpha;
    let s_out = m1.moments.mean_photons - m0.moments.mean_photons;
    let s_out_se = m0.mean_photons_stderr.hypot(m1.mean_photons_stderr);
    let n_out = 0.5 * (m0.moments.photon_variance + m1.moments.photon_variance);
    let nf = binary_noise_figure(s_in, 0.5 * s_in, s_out, n_out);
    let n_max = cfg.analysis.n_max.unwrap_or_else(|| {
        bit0.ensemble
            .samples()
            .iter()
            .chain(bit1.ensemble.samples())
            .map(|u| (p.n_s * u.norm_sqr() - 0.5).round().max(0.0) as usize)
            .max()
            .unwrap_or(0)
            .max(1)
    });
    let h0 = number_hist_from_ensemble(&bit0.ensemble, n_max);
    let h1 = number_hist_from_ensemble(&bit1.ensemble, n_max);
    let mut report = ChannelReport::from_histograms(
        "laser_fpe",
        s_out / s_in,
        nf,
        h0.dist.clone(),
        h1.dist.clone(),
    )?;
    report.gain_stderr = Some(s_out_se / s_in);
    // R ∝ N_out / S_out², so relative errors add as 2·δS/S and δN/N.
    let n_out_se = 0.5 * m0.photon_variance_stderr.hypot(m1.photon_variance_stderr);
    report.noise_figure_stderr = Some(nf.linear * (2.0 * s_out_se / s_out).hypot(n_out_se / n_out));
    report.ber_stderr = Some(binomial_ber_stderr(&report, m));
    report.validity = Some(bit1.validity);
    report.validity_overridden = bit1.validity_overridden;
    if bit1.validity_overridden {
        report.warnings.push(format!(
            "validity conditions overridden: {}",
            bit1.validity.summary()
        ));
    }
    for (name, h) in [("bit 0", &h0), ("bit 1", &h1)] {
        if h.clamp_warning() {
            report.warnings.push(format!(
                "{name}: {:.2}% of samples clamped into the n_max = {n_max} bin",
                100.0 * h.clamped_fraction
            ));
        }
    }
    for (name, moments) in [("bit 0", &m0), ("bit 1", &m1)] {
        if moments.ordering_pathology {
            report.warnings.push(format!(
                "{name}: symmetric-ordered samples gave a negative photon number"
            ));
        }
    }
    for (name, ev) in [("bit 0", bit0), ("bit 1", bit1)] {
        if ev.halvings > 0 {
            report.warnings.push(format!(
                "{name}: dt halved {} times to {:.3e}",
                ev.halvings, ev.dt
            ));
        }
    }
    Ok(report)
}

fn coherent_joint(alpha: Complex64, excited: bool, n_max: usize) -> Result<JointStateVector> {
    let dim = 2 * (n_max + 1);
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    let offset = if excited { 0 } else { n_max + 1 };
    let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..=n_max {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        amps[offset + n] = c;
    }
    let mut psi = JointStateVector::new(amps, n_max)?;
    psi.normalize();
    Ok(psi)
}

/// Atom prepared excited with probability (1+σ₀)/2, sampled in two fixed strata.
fn qj_mixed_start(
    alpha: Complex64,
    cfg: &ExperimentConfig,
    p: &LaserParams,
    n_max: usize,
    seed: u64,
) -> Result<PhotonDistribution> {
    let ops = build_generators(p, n_max)?;
    let t = cfg.amplifier.evolution_time().expect("laser config");
    let dt = cfg.ensemble.gamma_dt / p.gamma;
    let w = 0.5 * (1.0 + p.sigma0);
    let n = cfg.ensemble.samples;
    let n_exc = ((n as f64 * w).round() as usize).clamp(if w > 0.0 { 2 } else { 0 }, n);
    let n_gnd = n.saturating_sub(n_exc).max(if w < 1.0 { 2 } else { 0 });
    let mut probs = vec![0.0; n_max + 1];
    let mut var = vec![0.0; n_max + 1];
    for (excited, weight, count) in [(true, w, n_exc), (false, 1.0 - w, n_gnd)] {
        if weight == 0.0 || count == 0 {
            continue;
        }
        let psi = coherent_joint(alpha, excited, n_max)?;
        let d = qj_ensemble_distribution(
            &psi,
            &ops,
            t,
            dt,
            count,
            derive_seed(seed, u64::from(excited)),
            cfg.analysis.cutoff_tolerance,
        )?;
        let errs = d.errors().expect("ensemble distributions carry errors");
        for k in 0..=n_max {
            probs[k] += weight * d.probs()[k];
            var[k] += (weight * errs[k]).powi(2);
        }
    }
    let total: f64 = probs.iter().sum();
    let scale = if total > 1.0 { total.recip() } else { 1.0 };
    PhotonDistribution::new(probs.into_iter().map(|x| x * scale).collect())?
        .with_errors(var.into_iter().map(f64::sqrt).collect())
}

fn run_qjump(cfg: &ExperimentConfig) -> Result<ChannelReport> {
    let p = cfg.amplifier.laser_params().expect("laser config")?;
    let n_max = cfg.analysis.n_max.ok_or_else(|| {
        Error::InvalidParameter(
            "qjump needs analysis.n_max: it fixes the size of the Hilbert space".into(),
        )
    })?;
    let alpha = match cfg.input {
        InputState::Coherent { alpha, phase } => Complex64::from_polar(alpha, phase),
        InputState::Fock { .. } => {
            return Err(Error::UnsupportedParameter(
                "qjump inputs are coherent states; use a coherent input".into(),
            ));
        }
    };
    let qj_seed = derive_seed(cfg.seed, tag::QJ);
    let p0 = qj_mixed_start(
        Complex64::new(0.0, 0.0),
        cfg,
        &p,
        n_max,
        derive_seed(qj_seed, 0),
    )?;
    let p1 = qj_mixed_start(alpha, cfg, &p, n_max, derive_seed(qj_seed, 1))?;
    let s_in = alpha.norm_sqr();
    let s_out = p1.mean() - p0.mean();
    let nf = binary_noise_figure(
        s_in,
        0.5 * s_in,
        s_out,
        0.5 * (p0.variance() + p1.variance()),
    );
    ChannelReport::from_histograms("qjump", s_out / s_in, nf, p0, p1)
}

/// Laser against an ideal PIA with the laser's measured gain, same input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedGainComparison {
    pub matched_gain: f64,
    pub matched_gain_db: f64,
    /// Histogram variance of the bit-"0" output and its standard error.
    pub laser_bit0_variance: f64,
    pub laser_bit0_variance_stderr: f64,
    pub pia_bit0_variance: f64,
    /// (laser − PIA) bit-"0" variance in laser standard errors.
    pub bit0_variance_z: f64,
    /// B_laser − B_pia and the combined statistical error of that difference.
    pub ber_difference: f64,
    pub ber_difference_stderr: f64,
    pub laser: ChannelReport,
    pub pia: ChannelReport,
}

pub fn compare_at_matched_gain(cfg: &ExperimentConfig) -> Result<MatchedGainComparison> {
    if !matches!(cfg.amplifier, AmplifierConfig::LaserFpe { .. }) {
        return Err(Error::Config {
            origin: cfg.label.clone(),
            message: "compare needs a laser_fpe amplifier".into(),
        });
    }
    let laser = run_experiment(cfg)?;
    if !(laser.gain_linear >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "measured laser gain {} is below 1; no phase-insensitive amplifier matches it",
            laser.gain_linear
        ))
        .in_experiment(&cfg.label));
    }
    let laser_n_max = laser.p0.as_ref().map_or(0, |d| d.n_max());
    let pia_cfg = ExperimentConfig {
        label: format!("{}-matched-pia", cfg.label),
        seed: cfg.seed,
        amplifier: AmplifierConfig::Pia {
            gain_n: laser.gain_linear,
            idler_photons: 0.0,
        },
        input: cfg.input.clone(),
        ensemble: EnsembleConfig::default(),
        analysis: AnalysisConfig {
            n_max: None,
            ..cfg.analysis.clone()
        },
        output: OutputConfig::default(),
    };
    let mut pia_auto = run_experiment(&pia_cfg)?;
    // Common cutoff, so the side-by-side histograms share their bins.
    let n_max = laser_n_max.max(pia_auto.p0.as_ref().map_or(0, |d| d.n_max()));
    if n_max != pia_auto.p0.as_ref().map_or(0, |d| d.n_max()) {
        let fixed = ExperimentConfig {
            analysis: AnalysisConfig {
                n_max: Some(n_max),
                ..pia_cfg.analysis.clone()
            },
            ..pia_cfg
        };
        pia_auto = run_experiment(&fixed)?;
    }
    let pia = pia_auto;
    // Zero-padding the laser side changes no decision or error count.
    let mut laser = laser;
    for d in [&mut laser.p0, &mut laser.p1].into_iter().flatten() {
        if d.n_max() < n_max {
            *d = d.resized(n_max);
        }
    }
    let lp0 = laser.p0.as_ref().expect("histograms are kept in memory");
    let (lv, lv_se) = histogram_variance(lp0, cfg.ensemble.samples);
    let pv = pia
        .p0
        .as_ref()
        .expect("histograms are kept in memory")
        .variance();
    Ok(MatchedGainComparison {
        matched_gain: laser.gain_linear,
        matched_gain_db: laser.gain_db,
        laser_bit0_variance: lv,
        laser_bit0_variance_stderr: lv_se,
        pia_bit0_variance: pv,
        bit0_variance_z: (lv - pv) / lv_se,
        ber_difference: laser.ber - pia.ber,
        ber_difference_stderr: laser.ber_stderr.unwrap_or(0.0),
        laser,
        pia,
    })
}

/// Parameters of the stationary FPE against quantum-jump comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig2Config {
    pub seed: u64,
    pub cooperation: f64,
    pub sigma0: f64,
    pub f: f64,
    pub n_s: f64,
    pub gamma: f64,
    pub n_max: usize,
    /// All times in units of 1/γ.
    pub burn_in: f64,
    pub t_avg: f64,
    pub interval: f64,
    pub fpe_trajectories: usize,
    pub fpe_dt: f64,
    pub qj_trajectories: usize,
    pub qj_dt: f64,
    pub cutoff_tolerance: f64,
    /// Allowed total-variation distance on top of the statistical error.
    pub tv_allowance: f64,
}

impl Default for Fig2Config {
    fn default() -> Self {
        Self {
            seed: 20_240_917,
            cooperation: 30.0,
            sigma0: 0.05,
            f: 1.0,
            n_s: 15.0,
            gamma: 1.0,
            n_max: 160,
            burn_in: 10.0,
            t_avg: 100.0,
            interval: 0.25,
            fpe_trajectories: 1000,
            fpe_dt: 1e-3,
            qj_trajectories: 40,
            qj_dt: 5e-5,
            cutoff_tolerance: DEFAULT_CUTOFF_TOLERANCE,
            tv_allowance: 0.05,
        }
    }
}

impl Fig2Config {
    pub fn laser_params(&self) -> Result<LaserParams> {
        LaserParams::new(
            self.cooperation,
            self.sigma0,
            1,
            self.gamma,
            self.f,
            self.n_s,
        )
    }
}

/// Stationary photon statistics of the one-atom laser from both solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig2Validation {
    pub total_variation: f64,
    /// Expected TV from the error bars of both histograms alone.
    pub combined_error: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub fpe_mean: f64,
    pub qj_mean: f64,
    pub fpe_effective_samples: usize,
    pub qj_effective_samples: usize,
    pub fpe_clamped_fraction: f64,
    pub qj_halves_tv: f64,
    pub qj_halves_tolerance: f64,
    /// FPE rerun with an independent seed.
    pub repeat_total_variation: f64,
    pub repeat_tolerance: f64,
    #[serde(skip)]
    pub fpe: Option<PhotonDistribution>,
    #[serde(skip)]
    pub qj: Option<PhotonDistribution>,
    #[serde(skip)]
    pub fpe_repeat: Option<PhotonDistribution>,
}

fn fpe_stationary(
    cfg: &Fig2Config,
    p: &LaserParams,
    seed: u64,
) -> Result<crate::laser_fpe::TimeAveragedHistogram> {
    let g = cfg.gamma;
    let e = wigner_sample_coherent(
        Complex64::new(0.0, 0.0),
        p.n_s,
        cfg.fpe_trajectories,
        derive_seed(seed, tag::FIG2_FPE_INIT),
    )?;
    time_averaged_histogram(
        &e,
        p,
        cfg.burn_in / g,
        cfg.t_avg / g,
        cfg.interval / g,
        cfg.fpe_dt / g,
        derive_seed(seed, tag::FIG2_FPE_NOISE),
        cfg.n_max,
    )
}

fn total_variation(a: &PhotonDistribution, b: &PhotonDistribution) -> (f64, f64) {
    let none = vec![0.0; a.n_max() + 1];
    let ea = a.errors().unwrap_or(&none);
    let eb = b.errors().unwrap_or(&none);
    (a.total_variation(b), tv_noise_scale(ea, eb))
}

pub fn run_fig2_validation(cfg: &Fig2Config) -> Result<Fig2Validation> {
    let p = cfg.laser_params()?;
    let g = cfg.gamma;
    let fpe = fpe_stationary(cfg, &p, cfg.seed)?;
    let repeat = fpe_stationary(cfg, &p, derive_seed(cfg.seed, tag::FIG2_REPEAT))?;
    let ops = build_generators(&p, cfg.n_max)?;
    let start = JointStateVector::basis(false, 0, cfg.n_max)?;
    let qj = stationary_number_dist(
        &ops,
        &start,
        cfg.burn_in / g,
        cfg.t_avg / g,
        cfg.interval / g,
        cfg.qj_dt / g,
        cfg.qj_trajectories,
        derive_seed(cfg.seed, tag::FIG2_QJ),
        cfg.cutoff_tolerance,
    )?;
    let (tv, combined) = total_variation(&fpe.dist, &qj.dist);
    let (repeat_tv, repeat_scale) = total_variation(&fpe.dist, &repeat.dist);
    let tolerance = cfg.tv_allowance + combined;
    Ok(Fig2Validation {
        total_variation: tv,
        combined_error: combined,
        tolerance,
        passed: tv <= tolerance,
        fpe_mean: fpe.dist.mean(),
        qj_mean: qj.dist.mean(),
        fpe_effective_samples: fpe.effective_samples,
        qj_effective_samples: qj.effective_samples,
        fpe_clamped_fraction: fpe.clamped_fraction,
        qj_halves_tv: qj.halves_tv,
        qj_halves_tolerance: qj.halves_tolerance,
        repeat_total_variation: repeat_tv,
        repeat_tolerance: 3.0 * repeat_scale,
        fpe: Some(fpe.dist),
        qj: Some(qj.dist),
        fpe_repeat: Some(repeat.dist),
    })
}

/// The Fig. 3 laser: C = 4.5, n_s = N = 55, σ₀ = 1, γt = 0.2, |α| = 3.95.
pub fn fig3_config() -> ExperimentConfig {
    ExperimentConfig {
        label: "fig3".into(),
        seed: 20_240_918,
        amplifier: AmplifierConfig::LaserFpe {
            cooperation: 4.5,
            sigma0: 1.0,
            atoms: 55,
            gamma: 1.0,
            f: 1.0,
            n_s: 55.0,
            gamma_t: 0.2,
            time_factor: 2.0,
            validity_override: true,
        },
        input: InputState::Coherent {
            alpha: 3.95,
            phase: 0.0,
        },
        ensemble: EnsembleConfig {
            samples: 100_000,
            ..EnsembleConfig::default()
        },
        analysis: AnalysisConfig::default(),
        output: OutputConfig::default(),
    }
}

/// A command together with everything needed to repeat it.
#[derive(Debug, Clone, PartialEq)]
pub enum Job {
    Run(ExperimentConfig),
    Compare(ExperimentConfig),
    Fig2(Fig2Config),
    Fig3(ExperimentConfig),
}

/// Result of a [`Job`], still in memory.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Outcome {
    Channel(ChannelReport),
    Comparison(MatchedGainComparison),
    Fig2(Fig2Validation),
}

fn to_toml<T: Serialize>(v: &T) -> Result<String> {
    toml::to_string(v).map_err(|e| Error::Validation(format!("report serialization: {e}")))
}

fn to_table<T: Serialize>(v: &T) -> Result<toml::Table> {
    toml::Table::try_from(v).map_err(|e| Error::Validation(format!("config serialization: {e}")))
}

impl Job {
    pub fn command(&self) -> &'static str {
        match self {
            Job::Run(_) => "run",
            Job::Compare(_) => "compare",
            Job::Fig2(_) => "fig2",
            Job::Fig3(_) => "fig3",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Job::Run(c) | Job::Compare(c) | Job::Fig3(c) => c.seed,
            Job::Fig2(c) => c.seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            Job::Run(c) | Job::Compare(c) | Job::Fig3(c) => c.seed = seed,
            Job::Fig2(c) => c.seed = seed,
        }
        self
    }

    /// Output directory requested by the configuration, if any.
    pub fn configured_out_dir(&self) -> Option<&std::path::Path> {
        match self {
            Job::Run(c) | Job::Compare(c) | Job::Fig3(c) => c.output.dir.as_deref(),
            Job::Fig2(_) => None,
        }
    }

    /// Configuration as recorded in the manifest. The output directory is
    /// left out because it does not influence any result.
    pub fn config_table(&self) -> Result<toml::Table> {
        match self {
            Job::Run(c) | Job::Compare(c) | Job::Fig3(c) => {
                let mut c = c.clone();
                c.output = OutputConfig::default();
                to_table(&c)
            }
            Job::Fig2(c) => to_table(c),
        }
    }

    pub fn from_manifest(m: &Manifest) -> Result<Self> {
        let origin = format!("manifest ({})", m.command);
        let bad = |e: toml::de::Error| Error::Config {
            origin: origin.clone(),
            message: e.to_string(),
        };
        let text = toml::to_string(&m.config).map_err(|e| Error::Validation(e.to_string()))?;
        let job = match m.command.as_str() {
            "run" => Job::Run(ExperimentConfig::from_toml_str(&text, &origin)?),
            "compare" => Job::Compare(ExperimentConfig::from_toml_str(&text, &origin)?),
            "fig3" => Job::Fig3(ExperimentConfig::from_toml_str(&text, &origin)?),
            "fig2" => Job::Fig2(toml::from_str(&text).map_err(bad)?),
            other => {
                return Err(Error::Config {
                    origin,
                    message: format!("unknown command '{other}'"),
                })
            }
        };
        if job.seed() != m.seed {
            return Err(Error::Config {
                origin,
                message: format!(
                    "manifest seed {} differs from its config seed {}",
                    m.seed,
                    job.seed()
                ),
            });
        }
        Ok(job)
    }

    pub fn execute(&self) -> Result<Outcome> {
        match self {
            Job::Run(c) => run_experiment(c).map(Outcome::Channel),
            Job::Compare(c) | Job::Fig3(c) => compare_at_matched_gain(c).map(Outcome::Comparison),
            Job::Fig2(c) => run_fig2_validation(c).map(Outcome::Fig2),
        }
    }
}

fn channel_histograms(
    prefix: &str,
    r: &ChannelReport,
    out: &mut Vec<(String, PhotonDistribution)>,
) {
    for (name, d) in [("p0", &r.p0), ("p1", &r.p1)] {
        if let Some(d) = d {
            out.push((format!("{prefix}{name}"), d.clone()));
        }
    }
}

impl Outcome {
    pub fn artifacts(&self) -> Result<RunArtifacts> {
        let mut histograms = Vec::new();
        let report = match self {
            Outcome::Channel(r) => {
                channel_histograms("", r, &mut histograms);
                to_toml(r)?
            }
            Outcome::Comparison(c) => {
                channel_histograms("laser_", &c.laser, &mut histograms);
                channel_histograms("pia_", &c.pia, &mut histograms);
                to_toml(c)?
            }
            Outcome::Fig2(v) => {
                for (name, d) in [
                    ("fpe", &v.fpe),
                    ("qjump", &v.qj),
                    ("fpe_repeat", &v.fpe_repeat),
                ] {
                    if let Some(d) = d {
                        histograms.push((name.to_string(), d.clone()));
                    }
                }
                to_toml(v)?
            }
        };
        Ok(RunArtifacts { report, histograms })
    }

    /// Seconds spent in the computation, not persisted.
    pub fn wall_time_seconds(&self) -> Option<f64> {
        match self {
            Outcome::Channel(r) => r.wall_time_seconds,
            Outcome::Comparison(c) => Some(c.laser.wall_time_seconds? + c.pia.wall_time_seconds?),
            Outcome::Fig2(_) => None,
        }
    }
}

/// Runs `job` and writes its files into `dir`.
pub fn run_and_emit(job: &Job, dir: &std::path::Path) -> Result<(Outcome, Manifest)> {
    let outcome = job.execute()?;
    let manifest = super::output::emit_outputs(
        dir,
        job.command(),
        job.seed(),
        job.config_table()?,
        &outcome.artifacts()?,
    )?;
    Ok((outcome, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infotheory::{ber, binary_mutual_information, ThresholdDecision};

    fn pia_cfg(g: f64, alpha: f64) -> ExperimentConfig {
        ExperimentConfig {
            label: "t".into(),
            seed: 1,
            amplifier: AmplifierConfig::Pia {
                gain_n: g,
                idler_photons: 0.0,
            },
            input: InputState::Coherent { alpha, phase: 0.0 },
            ensemble: EnsembleConfig::default(),
            analysis: AnalysisConfig::default(),
            output: OutputConfig::default(),
        }
    }

    #[test]
    fn unit_gain_pia_channel() {
        let r = run_experiment(&pia_cfg(1.0, 3.0)).unwrap();
        assert_eq!(r.threshold, 0);
        assert!((r.ber - 0.5 * (-9.0f64).exp()).abs() < 1e-15);
        assert!((r.noise_figure_linear - 1.0).abs() < 1e-12);
        assert_eq!(r.gain_db, 0.0);
    }

    #[test]
    fn pia_binary_noise_figure_matches_single_state_formula() {
        let r = run_experiment(&pia_cfg(100.0, 10.0)).unwrap();
        let direct = crate::pia::pia_noise_figure(
            &ModeMoments::coherent(Complex64::new(10.0, 0.0)),
            &PiaParams::ideal(100.0).unwrap(),
        )
        .unwrap();
        assert!((r.noise_figure_linear - direct.linear).abs() < 1e-12 * direct.linear);
    }

    #[test]
    fn report_scalars_rederive_from_histograms() {
        let r = run_experiment(&pia_cfg(5.0, 3.0)).unwrap();
        let d = ThresholdDecision::at(r.p0.as_ref().unwrap(), r.p1.as_ref().unwrap(), r.threshold);
        assert!((ber(d.errors) - r.ber).abs() < 1e-12);
        assert!((binary_mutual_information(d.errors) - r.mutual_information_bits).abs() < 1e-12);
    }

    #[test]
    fn pna_ber_is_gain_independent() {
        let bers: Vec<f64> = [1u32, 2, 5, 10]
            .iter()
            .map(|&g| {
                let mut c = pia_cfg(1.0, 3.0);
                c.amplifier = AmplifierConfig::Pna { gain_n: g };
                let r = run_experiment(&c).unwrap();
                assert!((r.noise_figure_linear - 1.0).abs() < 1e-9);
                r.ber
            })
            .collect();
        for b in &bers {
            assert_eq!(*b, bers[0]);
        }
    }

    #[test]
    fn qjump_needs_explicit_cutoff() {
        let mut c = pia_cfg(1.0, 1.0);
        c.amplifier = AmplifierConfig::Qjump {
            cooperation: 1.0,
            sigma0: 0.5,
            gamma: 1.0,
            f: 1.0,
            n_s: 5.0,
            gamma_t: 0.1,
            time_factor: 1.0,
        };
        let err = run_experiment(&c).unwrap_err();
        assert!(matches!(err, Error::Experiment { .. }));
        assert!(matches!(err.root(), Error::InvalidParameter(_)));
    }

    #[test]
    fn histogram_variance_of_poisson() {
        let d = PhotonDistribution::coherent(4.0, 60).unwrap();
        let (v, se) = histogram_variance(&d, 10_000);
        assert!((v - 4.0).abs() < 1e-9);
        // Poisson: μ₄ − σ⁴ = λ(1 + 3λ) − λ² = λ + 2λ².
        assert!((se - (36.0f64 / 1e4).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn jobs_round_trip_through_manifest_tables() {
        for job in [
            Job::Run(pia_cfg(2.0, 1.0)),
            Job::Fig2(Fig2Config::default()),
            Job::Fig3(fig3_config()),
        ] {
            let m = Manifest {
                tool: "x".into(),
                version: "0".into(),
                command: job.command().into(),
                seed: job.seed(),
                checksums: Default::default(),
                config: job.config_table().unwrap(),
            };
            assert_eq!(Job::from_manifest(&m).unwrap(), job);
        }
    }
}
