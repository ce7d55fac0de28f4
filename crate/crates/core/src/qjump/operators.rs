use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laser_fpe::{LaserParams, MicroscopicRates};

pub(crate) const EXCITED: usize = 0;
pub(crate) const GROUND: usize = 1;

/// Joint atom–field amplitudes on the truncated space.
#[derive(Debug, Clone, PartialEq)]
pub struct JointStateVector {
    amplitudes: Vec<Complex64>,
    n_max: usize,
}

impl JointStateVector {
    pub fn new(amplitudes: Vec<Complex64>, n_max: usize) -> Result<Self> {
        if amplitudes.len() != 2 * (n_max + 1) {
            return Err(Error::Validation(format!(
                "joint state needs {} amplitudes for n_max = {n_max}, got {}",
                2 * (n_max + 1),
                amplitudes.len()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !(norm > 0.0 && norm <= 1.0 + 1e-12) {
            return Err(Error::Validation(format!(
                "joint state norm {norm} is not in (0, 1]"
            )));
        }
        Ok(Self { amplitudes, n_max })
    }

    /// |atom, n⟩ with `excited` selecting the upper level.
    pub fn basis(excited: bool, n: usize, n_max: usize) -> Result<Self> {
        if n > n_max {
            return Err(Error::Validation(format!(
                "photon number {n} exceeds n_max = {n_max}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 2 * (n_max + 1)];
        amplitudes[index(if excited { EXCITED } else { GROUND }, n, n_max)] =
            Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes, n_max })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let s = self.norm_sqr().sqrt().recip();
        for a in &mut self.amplitudes {
            *a *= s;
        }
    }

    /// P(n) = Σ_atom |⟨a, n|ψ⟩|² / ⟨ψ|ψ⟩.
    pub fn photon_distribution(&self) -> Vec<f64> {
        let d = self.n_max + 1;
        let norm = self.norm_sqr();
        (0..d)
            .map(|n| (self.amplitudes[n].norm_sqr() + self.amplitudes[d + n].norm_sqr()) / norm)
            .collect()
    }
}

pub(crate) fn index(atom: usize, n: usize, n_max: usize) -> usize {
    atom * (n_max + 1) + n
}

/// A unit-normalized jump operator A and its rate Γ, acting as √Γ·A.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseOperator {
    pub label: String,
    pub rate: f64,
    /// Nonzero matrix elements (row, column, value) of A.
    pub entries: Vec<(usize, usize, f64)>,
}

impl CollapseOperator {
    /// out = A·ψ.
    pub(crate) fn apply(&self, psi: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        for &(r, c, v) in &self.entries {
            out[r] += psi[c] * v;
        }
    }

    /// ⟨ψ|A†A|ψ⟩ without forming Aψ explicitly (each column of A has at most one entry).
    pub(crate) fn expectation(&self, psi: &[Complex64]) -> f64 {
        self.entries
            .iter()
            .map(|&(_, c, v)| v * v * psi[c].norm_sqr())
            .sum()
    }
}

/// Collapse channels, the atom–field Hamiltonian and the no-jump decay of
/// the one-atom laser with a vacuum cavity bath.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpOperatorSet {
    pub rates: MicroscopicRates,
    pub n_max: usize,
    /// Channels with zero rate are dropped at construction.
    pub collapse: Vec<CollapseOperator>,
    /// Nonzero Hamiltonian elements (row, column, H_rc).
    pub hamiltonian: Vec<(usize, usize, Complex64)>,
    /// Diagonal of Σ Γ_k A_k†A_k, the anti-Hermitian part of H_eff times −2.
    pub decay: Vec<f64>,
}

impl JumpOperatorSet {
    pub fn dim(&self) -> usize {
        2 * (self.n_max + 1)
    }

    /// Largest total decay rate of any basis state.
    pub fn max_decay(&self) -> f64 {
        self.decay.iter().cloned().fold(0.0, f64::max)
    }

    /// Checks that Σ Γ_k A_k†A_k is exactly the stored diagonal decay.
    pub fn check_consistency(&self) -> Result<()> {
        let d = self.dim();
        let mut gram = vec![0.0f64; d * d];
        for op in &self.collapse {
            for &(r1, c1, v1) in &op.entries {
                for &(r2, c2, v2) in &op.entries {
                    if r1 == r2 {
                        gram[c1 * d + c2] += op.rate * v1 * v2;
                    }
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                let expected = if i == j { self.decay[i] } else { 0.0 };
                let got = gram[i * d + j];
                if (got - expected).abs() > 1e-12 * (1.0 + expected.abs()) {
                    return Err(Error::Validation(format!(
                        "collapse operators disagree with the effective generator at ({i}, {j}): {got} vs {expected}"
                    )));
                }
            }
        }
        for &(r, c, v) in &self.hamiltonian {
            let twin = self
                .hamiltonian
                .iter()
                .find(|&&(r2, c2, _)| r2 == c && c2 == r)
                .map(|&(_, _, w)| w);
            if twin.map_or(true, |w| (w - v.conj()).norm() > 1e-12 * (1.0 + v.norm())) {
                return Err(Error::Validation(format!(
                    "Hamiltonian is not Hermitian at ({r}, {c})"
                )));
            }
        }
        Ok(())
    }
}

/// Generators for the FPE parameter set, which must describe one atom.
pub fn build_generators(p: &LaserParams, n_max: usize) -> Result<JumpOperatorSet> {
    p.validate()?;
    build_generators_from_rates(&p.rates(), n_max)
}

/// Builds the collapse set
/// √(γ∥(1+σ₀)/2)·σ₊, √(γ∥(1−σ₀)/2)·σ₋, √(½(γ⊥ − γ∥/2))·σ_z, √γ·a
/// and H = i·g·(σ₊a − a†σ₋) on the space truncated at `n_max` photons.
pub fn build_generators_from_rates(r: &MicroscopicRates, n_max: usize) -> Result<JumpOperatorSet> {
    if r.atoms != 1 {
        return Err(Error::UnsupportedParameter(format!(
            "quantum jumps are implemented for one atom, got N = {}",
            r.atoms
        )));
    }
    if !(r.gamma >= 0.0 && r.gamma_par >= 0.0 && r.coupling >= 0.0) || r.sigma0.abs() > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "invalid master-equation rates {r:?}"
        )));
    }
    let dephasing = 0.5 * (r.gamma_perp - 0.5 * r.gamma_par);
    if dephasing < -1e-12 * r.gamma_perp.abs().max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma_perp = {} is below gamma_par/2 = {}, giving a negative dephasing rate",
            r.gamma_perp,
            0.5 * r.gamma_par
        )));
    }
    let dephasing = dephasing.max(0.0);
    let idx = |a, n| index(a, n, n_max);
    let fock = 0..=n_max;
    let raise: Vec<_> = fock
        .clone()
        .map(|n| (idx(EXCITED, n), idx(GROUND, n), 1.0))
        .collect();
    let lower: Vec<_> = fock
        .clone()
        .map(|n| (idx(GROUND, n), idx(EXCITED, n), 1.0))
        .collect();
    let sigma_z: Vec<_> = fock
        .clone()
        .flat_map(|n| {
            [
                (idx(EXCITED, n), idx(EXCITED, n), 1.0),
                (idx(GROUND, n), idx(GROUND, n), -1.0),
            ]
        })
        .collect();
    let annihilate: Vec<_> = (1..=n_max)
        .flat_map(|n| {
            let s = (n as f64).sqrt();
            [
                (idx(EXCITED, n - 1), idx(EXCITED, n), s),
                (idx(GROUND, n - 1), idx(GROUND, n), s),
            ]
        })
        .collect();
    let candidates = [
        ("pump", 0.5 * r.gamma_par * (1.0 + r.sigma0), raise),
        ("decay", 0.5 * r.gamma_par * (1.0 - r.sigma0), lower),
        ("dephasing", dephasing, sigma_z),
        ("cavity", r.gamma, annihilate),
    ];
    let collapse: Vec<CollapseOperator> = candidates
        .into_iter()
        .filter(|(_, rate, _)| *rate > 0.0)
        .map(|(label, rate, entries)| CollapseOperator {
            label: label.to_string(),
            rate,
            entries,
        })
        .collect();

    // ⟨e,n|H|g,n+1⟩ = i g √(n+1) from σ₊a; the conjugate element from −a†σ₋.
    let mut hamiltonian = Vec::new();
    if r.coupling > 0.0 {
        for n in 0..n_max {
            let v = Complex64::new(0.0, r.coupling * ((n + 1) as f64).sqrt());
            hamiltonian.push((idx(EXCITED, n), idx(GROUND, n + 1), v));
            hamiltonian.push((idx(GROUND, n + 1), idx(EXCITED, n), v.conj()));
        }
    }

    let mut decay = vec![0.0; 2 * (n_max + 1)];
    for n in 0..=n_max {
        let cavity = r.gamma * n as f64;
        decay[idx(EXCITED, n)] = 0.5 * r.gamma_par * (1.0 - r.sigma0) + dephasing + cavity;
        decay[idx(GROUND, n)] = 0.5 * r.gamma_par * (1.0 + r.sigma0) + dephasing + cavity;
    }
    let set = JumpOperatorSet {
        rates: *r,
        n_max,
        collapse,
        hamiltonian,
        decay,
    };
    set.check_consistency()?;
    Ok(set)
}
