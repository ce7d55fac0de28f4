use std::path::PathBuf;

use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input failed a structural check (probability out of range, matrix not stochastic, ...).
    #[error("validation failed: {0}")]
    Validation(String),

    /// Argument outside the domain of a closed-form expression.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported parameter: {0}")]
    UnsupportedParameter(String),

    /// The real-coordinate diffusion matrix has a negative eigenvalue: the
    /// trajectory left the region where the Wigner equation is diffusive.
    #[error(
        "non-diffusive region at u = {u}: eigenvalues ({:.6e}, {:.6e}){}",
        eigenvalues.0,
        eigenvalues.1,
        location(trajectory, time)
    )]
    NonDiffusiveRegion {
        u: Complex64,
        eigenvalues: (f64, f64),
        trajectory: Option<usize>,
        time: Option<f64>,
    },

    #[error("laser is at threshold: |2Cσ₀ − 1| = {0:.3e}")]
    ThresholdSingularity(f64),

    #[error(
        "photon-number cutoff saturated: population {population:.3e} at n_max = {n_max}; \
         try n_max >= {suggested}"
    )]
    CutoffSaturation {
        n_max: usize,
        population: f64,
        suggested: usize,
    },

    #[error("integration step unstable: {0}")]
    StepInstability(String),

    #[error("config error in {origin}: {message}")]
    Config { origin: String, message: String },

    /// A module error raised while running the named experiment.
    #[error("experiment '{label}': {source}")]
    Experiment {
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn location(trajectory: &Option<usize>, time: &Option<f64>) -> String {
    match (trajectory, time) {
        (Some(i), Some(t)) => format!(" (trajectory {i}, t = {t})"),
        (Some(i), None) => format!(" (trajectory {i})"),
        (None, Some(t)) => format!(" (t = {t})"),
        (None, None) => String::new(),
    }
}

impl Error {
    /// The innermost error, looking through experiment context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Experiment { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn in_experiment(self, label: &str) -> Self {
        match self {
            e @ Error::Experiment { .. } => e,
            e => Error::Experiment {
                label: label.to_string(),
                source: Box::new(e),
            },
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
