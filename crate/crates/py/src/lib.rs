//! Python bindings: photon distributions, the PIA and PNA closed forms,
//! binary-channel information measures, laser validity, quantum-jump
//! ensembles and the experiment harness.

use std::collections::BTreeMap;

use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ampchannel_core::harness::{self, ExperimentConfig};
use ampchannel_core::infotheory::{self, BinaryErrorPair};
use ampchannel_core::laser_fpe::{self, LaserParams};
use ampchannel_core::pia::{self, ModeMoments, PiaParams};
use ampchannel_core::qjump;
use ampchannel_core::states;
use ampchannel_core::Error;

fn to_py(e: Error) -> PyErr {
    match e.root() {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::NonDiffusiveRegion { .. }
        | Error::StepInstability(_)
        | Error::CutoffSaturation { .. }
        | Error::ThresholdSingularity(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Probability of n photons for n = 0..=n_max, with optional error bars.
#[pyclass(name = "PhotonDistribution", frozen, from_py_object)]
#[derive(Clone)]
struct PyPhotonDistribution {
    inner: states::PhotonDistribution,
}

impl From<states::PhotonDistribution> for PyPhotonDistribution {
    fn from(inner: states::PhotonDistribution) -> Self {
        Self { inner }
    }
}

#[pymethods]
impl PyPhotonDistribution {
    #[new]
    #[pyo3(signature = (probs, errors=None))]
    fn new(probs: Vec<f64>, errors: Option<Vec<f64>>) -> PyResult<Self> {
        let d = states::PhotonDistribution::new(probs).map_err(to_py)?;
        let d = match errors {
            Some(e) => d.with_errors(e).map_err(to_py)?,
            None => d,
        };
        Ok(d.into())
    }

    #[staticmethod]
    fn vacuum(n_max: usize) -> Self {
        states::PhotonDistribution::vacuum(n_max).into()
    }

    #[staticmethod]
    fn coherent(alpha_sq: f64, n_max: usize) -> PyResult<Self> {
        states::PhotonDistribution::coherent(alpha_sq, n_max)
            .map(Into::into)
            .map_err(to_py)
    }

    #[staticmethod]
    fn thermal(mean: f64, n_max: usize) -> PyResult<Self> {
        states::PhotonDistribution::thermal(mean, n_max)
            .map(Into::into)
            .map_err(to_py)
    }

    #[getter]
    fn probs(&self) -> Vec<f64> {
        self.inner.probs().to_vec()
    }

    #[getter]
    fn errors(&self) -> Option<Vec<f64>> {
        self.inner.errors().map(<[f64]>::to_vec)
    }

    #[getter]
    fn n_max(&self) -> usize {
        self.inner.n_max()
    }

    fn total(&self) -> f64 {
        self.inner.total()
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn variance(&self) -> f64 {
        self.inner.variance()
    }

    fn total_variation(&self, other: &Self) -> f64 {
        self.inner.total_variation(&other.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.n_max() + 1
    }

    fn __repr__(&self) -> String {
        format!(
            "PhotonDistribution(n_max={}, mean={:.6}, total={:.6})",
            self.inner.n_max(),
            self.inner.mean(),
            self.inner.total()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (m, gain_n, n_max))]
fn pia_fock_output(m: usize, gain_n: f64, n_max: usize) -> PyResult<PyPhotonDistribution> {
    let p = PiaParams::ideal(gain_n).map_err(to_py)?;
    pia::pia_fock_output(m, &p, n_max)
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (alpha_sq, gain_n, n_max, idler_photons=0.0))]
fn pia_coherent_output(
    alpha_sq: f64,
    gain_n: f64,
    n_max: usize,
    idler_photons: f64,
) -> PyResult<PyPhotonDistribution> {
    let p = PiaParams::new(gain_n, idler_photons).map_err(to_py)?;
    pia::pia_coherent_output(alpha_sq, &p, n_max)
        .map(Into::into)
        .map_err(to_py)
}

/// Noise figure of an ideal PIA for a coherent input of real amplitude `alpha`;
/// returns (linear, dB).
#[pyfunction]
fn pia_noise_figure(alpha: f64, gain_n: f64) -> PyResult<(f64, f64)> {
    let p = PiaParams::ideal(gain_n).map_err(to_py)?;
    let nf = pia::pia_noise_figure(&ModeMoments::coherent(Complex64::new(alpha, 0.0)), &p)
        .map_err(to_py)?;
    Ok((nf.linear, nf.db))
}

#[pyfunction]
fn pna_output(dist: &PyPhotonDistribution, gain_n: f64) -> PyResult<PyPhotonDistribution> {
    pia::pna_output(&dist.inner, gain_n)
        .map(Into::into)
        .map_err(to_py)
}

fn pair(q01: f64, q10: f64) -> PyResult<BinaryErrorPair> {
    BinaryErrorPair::new(q01, q10).map_err(to_py)
}

/// I(X;Y) in bits for equiprobable bits with crossover errors q01 = P(0|1), q10 = P(1|0).
#[pyfunction]
fn binary_mutual_information(q01: f64, q10: f64) -> PyResult<f64> {
    Ok(infotheory::binary_mutual_information(pair(q01, q10)?))
}

#[pyfunction]
fn ber(q01: f64, q10: f64) -> PyResult<f64> {
    Ok(infotheory::ber(pair(q01, q10)?))
}

#[pyfunction]
fn binary_entropy(p: f64) -> f64 {
    infotheory::binary_entropy(p)
}

/// Minimum-BER threshold; returns (threshold, ber, q01, q10).
#[pyfunction]
fn optimal_threshold(
    p0: &PyPhotonDistribution,
    p1: &PyPhotonDistribution,
) -> PyResult<(usize, f64, f64, f64)> {
    let d = infotheory::optimal_threshold(&p0.inner, &p1.inner).map_err(to_py)?;
    Ok((d.threshold, d.ber, d.errors.q01, d.errors.q10))
}

#[pyfunction]
fn gaussian_ber(snr: f64) -> PyResult<f64> {
    infotheory::gaussian_ber(snr).map_err(to_py)
}

fn laser(
    cooperation: f64,
    sigma0: f64,
    atoms: u32,
    gamma: f64,
    f: f64,
    n_s: f64,
) -> PyResult<LaserParams> {
    LaserParams::new(cooperation, sigma0, atoms, gamma, f, n_s).map_err(to_py)
}

/// Validity margins of the adiabatic laser equation over a run of length t.
#[pyfunction]
#[pyo3(signature = (cooperation, sigma0, atoms, gamma, f, n_s, t, strictness=laser_fpe::DEFAULT_STRICTNESS))]
#[allow(clippy::too_many_arguments)]
fn validity_check(
    cooperation: f64,
    sigma0: f64,
    atoms: u32,
    gamma: f64,
    f: f64,
    n_s: f64,
    t: f64,
    strictness: f64,
) -> PyResult<BTreeMap<&'static str, f64>> {
    let p = laser(cooperation, sigma0, atoms, gamma, f, n_s)?;
    let r = laser_fpe::validity_check(&p, t, strictness);
    let m = r.margins;
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    Ok(BTreeMap::from([
        ("polarization_adiabatic", m.polarization_adiabatic),
        ("inversion_adiabatic", m.inversion_adiabatic),
        ("polarization_trace_time", m.polarization_trace_time),
        ("inversion_trace_time", m.inversion_trace_time),
        ("saturation", m.saturation),
        ("adiabatic_ok", flag(r.adiabatic_ok)),
        ("trace_time_ok", flag(r.trace_time_ok)),
        ("saturation_ok", flag(r.saturation_ok)),
    ]))
}

/// Idler occupancy of the PIA equivalent to the linearized laser.
#[pyfunction]
fn equivalent_idler_photons(
    cooperation: f64,
    sigma0: f64,
    atoms: u32,
    gamma: f64,
    f: f64,
    n_s: f64,
) -> PyResult<f64> {
    laser_fpe::equivalent_idler_photons(&laser(cooperation, sigma0, atoms, gamma, f, n_s)?)
        .map_err(to_py)
}

/// Field distribution of the one-atom laser at time t from `n_traj` quantum-jump
/// trajectories started in |atom, n0⟩, atom excited if `excited`.
#[pyfunction]
#[pyo3(signature = (cooperation, sigma0, gamma, f, n_s, n_max, excited, n0, t, dt, n_traj, seed, cutoff_tolerance=qjump::DEFAULT_CUTOFF_TOLERANCE))]
#[allow(clippy::too_many_arguments)]
fn qj_ensemble_distribution(
    py: Python<'_>,
    cooperation: f64,
    sigma0: f64,
    gamma: f64,
    f: f64,
    n_s: f64,
    n_max: usize,
    excited: bool,
    n0: usize,
    t: f64,
    dt: f64,
    n_traj: usize,
    seed: u64,
    cutoff_tolerance: f64,
) -> PyResult<PyPhotonDistribution> {
    let p = laser(cooperation, sigma0, 1, gamma, f, n_s)?;
    py.detach(|| {
        let ops = qjump::build_generators(&p, n_max)?;
        let init = qjump::JointStateVector::basis(excited, n0, n_max)?;
        qjump::qj_ensemble_distribution(&init, &ops, t, dt, n_traj, seed, cutoff_tolerance)
    })
    .map(Into::into)
    .map_err(to_py)
}

/// Dense master-equation reference for tiny cutoffs (n_max ≤ 6).
#[pyfunction]
#[allow(clippy::too_many_arguments)]
fn dm_integrate_oracle(
    cooperation: f64,
    sigma0: f64,
    gamma: f64,
    f: f64,
    n_s: f64,
    n_max: usize,
    excited: bool,
    n0: usize,
    t: f64,
) -> PyResult<PyPhotonDistribution> {
    let p = laser(cooperation, sigma0, 1, gamma, f, n_s)?;
    let ops = qjump::build_generators(&p, n_max).map_err(to_py)?;
    let init = qjump::JointStateVector::basis(excited, n0, n_max).map_err(to_py)?;
    qjump::dm_integrate_oracle(&ops, &init, t)
        .map(|r| r.dist.into())
        .map_err(to_py)
}

/// Result of one binary-channel experiment.
#[pyclass(name = "ChannelReport", frozen, from_py_object)]
#[derive(Clone)]
struct PyChannelReport {
    inner: harness::ChannelReport,
}

#[pymethods]
impl PyChannelReport {
    #[getter]
    fn label(&self) -> String {
        self.inner.label.clone()
    }
    #[getter]
    fn gain_linear(&self) -> f64 {
        self.inner.gain_linear
    }
    #[getter]
    fn gain_db(&self) -> f64 {
        self.inner.gain_db
    }
    #[getter]
    fn gain_stderr(&self) -> Option<f64> {
        self.inner.gain_stderr
    }
    #[getter]
    fn noise_figure_linear(&self) -> f64 {
        self.inner.noise_figure_linear
    }
    #[getter]
    fn noise_figure_db(&self) -> f64 {
        self.inner.noise_figure_db
    }
    #[getter]
    fn ber(&self) -> f64 {
        self.inner.ber
    }
    #[getter]
    fn ber_stderr(&self) -> Option<f64> {
        self.inner.ber_stderr
    }
    #[getter]
    fn mutual_information_bits(&self) -> f64 {
        self.inner.mutual_information_bits
    }
    #[getter]
    fn threshold(&self) -> usize {
        self.inner.threshold
    }
    #[getter]
    fn seed(&self) -> Option<u64> {
        self.inner.seed
    }
    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.clone()
    }
    #[getter]
    fn validity_overridden(&self) -> bool {
        self.inner.validity_overridden
    }
    #[getter]
    fn p0(&self) -> Option<PyPhotonDistribution> {
        self.inner.p0.clone().map(Into::into)
    }
    #[getter]
    fn p1(&self) -> Option<PyPhotonDistribution> {
        self.inner.p1.clone().map(Into::into)
    }

    fn __repr__(&self) -> String {
        format!(
            "ChannelReport(label={:?}, gain_db={:.4}, noise_figure_db={:.4}, ber={:.4e}, I={:.6})",
            self.inner.label,
            self.inner.gain_db,
            self.inner.noise_figure_db,
            self.inner.ber,
            self.inner.mutual_information_bits
        )
    }
}

fn parse_config(text: &str) -> PyResult<ExperimentConfig> {
    ExperimentConfig::from_toml_str(text, "<python>").map_err(to_py)
}

/// Runs the experiment described by a TOML config string.
#[pyfunction]
fn run_experiment(py: Python<'_>, config_toml: &str) -> PyResult<PyChannelReport> {
    let cfg = parse_config(config_toml)?;
    py.detach(|| harness::run_experiment(&cfg))
        .map(|inner| PyChannelReport { inner })
        .map_err(to_py)
}

/// Laser config against the ideal PIA at its measured gain; returns
/// (laser report, pia report, bit-0 variances and BER difference as a dict).
#[pyfunction]
fn compare_at_matched_gain(
    py: Python<'_>,
    config_toml: &str,
) -> PyResult<(
    PyChannelReport,
    PyChannelReport,
    BTreeMap<&'static str, f64>,
)> {
    let cfg = parse_config(config_toml)?;
    let c = py
        .detach(|| harness::compare_at_matched_gain(&cfg))
        .map_err(to_py)?;
    let stats = BTreeMap::from([
        ("matched_gain", c.matched_gain),
        ("matched_gain_db", c.matched_gain_db),
        ("laser_bit0_variance", c.laser_bit0_variance),
        ("laser_bit0_variance_stderr", c.laser_bit0_variance_stderr),
        ("pia_bit0_variance", c.pia_bit0_variance),
        ("bit0_variance_z", c.bit0_variance_z),
        ("ber_difference", c.ber_difference),
        ("ber_difference_stderr", c.ber_difference_stderr),
    ]);
    Ok((
        PyChannelReport { inner: c.laser },
        PyChannelReport { inner: c.pia },
        stats,
    ))
}

/// Runs a config and writes report, histograms and manifest into `out_dir`;
/// returns the manifest's file checksums.
#[pyfunction]
#[pyo3(signature = (config_toml, out_dir, compare=false))]
fn run_and_emit(
    py: Python<'_>,
    config_toml: &str,
    out_dir: &str,
    compare: bool,
) -> PyResult<BTreeMap<String, String>> {
    let cfg = parse_config(config_toml)?;
    let job = if compare {
        harness::Job::Compare(cfg)
    } else {
        harness::Job::Run(cfg)
    };
    let (_, manifest) = py
        .detach(|| harness::run_and_emit(&job, std::path::Path::new(out_dir)))
        .map_err(to_py)?;
    Ok(manifest.checksums)
}

/// Built-in saturated-laser comparison config, as TOML.
#[pyfunction]
fn fig3_config_toml() -> String {
    harness::fig3_config().to_toml_string()
}

#[pymodule]
fn ampchannel(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPhotonDistribution>()?;
    m.add_class::<PyChannelReport>()?;
    m.add_function(wrap_pyfunction!(pia_fock_output, m)?)?;
    m.add_function(wrap_pyfunction!(pia_coherent_output, m)?)?;
    m.add_function(wrap_pyfunction!(pia_noise_figure, m)?)?;
    m.add_function(wrap_pyfunction!(pna_output, m)?)?;
    m.add_function(wrap_pyfunction!(binary_mutual_information, m)?)?;
    m.add_function(wrap_pyfunction!(ber, m)?)?;
    m.add_function(wrap_pyfunction!(binary_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_ber, m)?)?;
    m.add_function(wrap_pyfunction!(validity_check, m)?)?;
    m.add_function(wrap_pyfunction!(equivalent_idler_photons, m)?)?;
    m.add_function(wrap_pyfunction!(qj_ensemble_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(dm_integrate_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(compare_at_matched_gain, m)?)?;
    m.add_function(wrap_pyfunction!(run_and_emit, m)?)?;
    m.add_function(wrap_pyfunction!(fig3_config_toml, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
