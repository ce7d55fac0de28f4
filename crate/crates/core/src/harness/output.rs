use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::states::PhotonDistribution;

pub const REPORT_FILE: &str = "report.toml";
pub const MANIFEST_FILE: &str = "manifest.toml";

/// Bin index, probability and standard error per line, 17 significant
/// digits, LF endings. Analytic histograms carry a zero error column.
pub fn histogram_text(d: &PhotonDistribution) -> String {
    let mut out = String::with_capacity(48 * (d.n_max() + 1));
    for (n, p) in d.probs().iter().enumerate() {
        let e = d.errors().map_or(0.0, |e| e[n]);
        writeln!(out, "{n} {p:.16e} {e:.16e}").expect("writing to a String cannot fail");
    }
    out
}

/// Parses the format written by [`histogram_text`].
pub fn parse_histogram(text: &str) -> Result<PhotonDistribution> {
    let mut probs = Vec::new();
    let mut errors = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let bad = |what: &str| Error::Validation(format!("histogram line {}: {what}", line_no + 1));
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 3 {
            return Err(bad("expected three columns"));
        }
        let index: usize = cols[0].parse().map_err(|_| bad("bad index"))?;
        if index != probs.len() {
            return Err(bad("indices must run 0, 1, 2, ..."));
        }
        probs.push(cols[1].parse::<f64>().map_err(|_| bad("bad probability"))?);
        errors.push(cols[2].parse::<f64>().map_err(|_| bad("bad error"))?);
    }
    let d = PhotonDistribution::new(probs)?;
    if errors.iter().all(|e| *e == 0.0) {
        Ok(d)
    } else {
        d.with_errors(errors)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Everything a command produces, before it touches the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    /// Serialized report (TOML).
    pub report: String,
    /// File stem (without `.dat`) and histogram.
    pub histograms: Vec<(String, PhotonDistribution)>,
}

/// Record of a run sufficient to repeat it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// `run`, `compare`, `fig2` or `fig3`.
    pub command: String,
    pub seed: u64,
    /// SHA-256 of every file written next to the manifest.
    pub checksums: BTreeMap<String, String>,
    /// The full configuration after any seed override, as TOML.
    pub config: toml::Table,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config {
            origin: origin.to_string(),
            message: e.to_string(),
        })
    }

    /// Compares the recorded checksums with the files in `dir`.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>> {
        let mut mismatched = Vec::new();
        for (name, sum) in &self.checksums {
            let path = dir.join(name);
            let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
            if &sha256_hex(&bytes) != sum {
                mismatched.push(name.clone());
            }
        }
        Ok(mismatched)
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes the report, one `.dat` file per histogram and the manifest into `dir`.
/// Files are written one after another; returns the manifest.
pub fn emit_outputs(
    dir: &Path,
    command: &str,
    seed: u64,
    config: toml::Table,
    artifacts: &RunArtifacts,
) -> Result<Manifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut checksums = BTreeMap::new();
    let mut files: Vec<(String, Vec<u8>)> = vec![(
        REPORT_FILE.to_string(),
        artifacts.report.clone().into_bytes(),
    )];
    for (stem, d) in &artifacts.histograms {
        files.push((format!("{stem}.dat"), histogram_text(d).into_bytes()));
    }
    for (name, bytes) in &files {
        if checksums.insert(name.clone(), sha256_hex(bytes)).is_some() {
            return Err(Error::Validation(format!("two outputs named {name}")));
        }
        write_file(&dir.join(name), bytes)?;
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        seed,
        checksums,
        config,
    };
    let text =
        toml::to_string(&manifest).map_err(|e| Error::Validation(format!("manifest: {e}")))?;
    write_file(&dir.join(MANIFEST_FILE), text.as_bytes())?;
    Ok(manifest)
}

/// All files of a finished run, for byte-level comparison of reruns.
pub fn output_files(dir: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>> {
    let mut out = BTreeMap::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_file() {
            let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
            out.insert(PathBuf::from(entry.file_name()), bytes);
        }
    }
    Ok(out)
}
