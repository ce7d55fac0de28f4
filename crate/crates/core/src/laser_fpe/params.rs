use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The six independent parameters of the laser Fokker–Planck equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserParams {
    /// Cooperation parameter C = g²N/(γγ⊥).
    pub cooperation: f64,
    /// Unsaturated population inversion σ₀.
    pub sigma0: f64,
    /// Number of lasing atoms N.
    pub atoms: u32,
    /// Cavity decay rate γ.
    pub gamma: f64,
    /// f = γ∥/(2γ⊥).
    pub f: f64,
    /// Saturation photon number n_s = γ∥γ⊥/(4g²).
    pub n_s: f64,
}

impl LaserParams {
    pub fn new(
        cooperation: f64,
        sigma0: f64,
        atoms: u32,
        gamma: f64,
        f: f64,
        n_s: f64,
    ) -> Result<Self> {
        let p = Self {
            cooperation,
            sigma0,
            atoms,
            gamma,
            f,
            n_s,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cooperation", self.cooperation),
            ("gamma", self.gamma),
            ("f", self.f),
            ("n_s", self.n_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.atoms == 0 {
            return Err(Error::InvalidParameter("need at least one atom".into()));
        }
        if !(self.sigma0.abs() <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "|sigma0| must be <= 1, got {}",
                self.sigma0
            )));
        }
        Ok(())
    }

    /// Lasing threshold σ₀ > 1/(2C).
    pub fn above_threshold(&self) -> bool {
        self.sigma0 > 1.0 / (2.0 * self.cooperation)
    }

    pub fn rates(&self) -> MicroscopicRates {
        MicroscopicRates::from_params(self)
    }
}

/// Rates of the underlying atom–field master equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicroscopicRates {
    pub gamma: f64,
    pub gamma_par: f64,
    pub gamma_perp: f64,
    pub coupling: f64,
    pub sigma0: f64,
    pub atoms: u32,
}

impl MicroscopicRates {
    /// Inverts f = γ∥/(2γ⊥), C = g²N/(γγ⊥), n_s = γ∥γ⊥/(4g²):
    /// γ⊥ = 2Cγn_s/(fN), γ∥ = 2fγ⊥, g² = Cγγ⊥/N.
    pub fn from_params(p: &LaserParams) -> Self {
        let n = p.atoms as f64;
        let gamma_perp = 2.0 * p.cooperation * p.gamma * p.n_s / (p.f * n);
        let gamma_par = 2.0 * p.f * gamma_perp;
        let coupling = (p.cooperation * p.gamma * gamma_perp / n).sqrt();
        Self {
            gamma: p.gamma,
            gamma_par,
            gamma_perp,
            coupling,
            sigma0: p.sigma0,
            atoms: p.atoms,
        }
    }

    /// Back to FPE parameters; fails for g = 0 (n_s is infinite).
    pub fn to_params(&self) -> Result<LaserParams> {
        if !(self.coupling > 0.0) {
            return Err(Error::InvalidParameter(
                "zero coupling has no finite saturation photon number".into(),
            ));
        }
        let g2 = self.coupling * self.coupling;
        LaserParams::new(
            g2 * self.atoms as f64 / (self.gamma * self.gamma_perp),
            self.sigma0,
            self.atoms,
            self.gamma,
            self.gamma_par / (2.0 * self.gamma_perp),
            self.gamma_par * self.gamma_perp / (4.0 * g2),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_round_trip() {
        let p = LaserParams::new(30.0, 0.05, 1, 1.0, 1.0, 15.0).unwrap();
        let r = p.rates();
        assert!((r.gamma_par - 2.0 * r.gamma_perp).abs() < 1e-12);
        let q = r.to_params().unwrap();
        for (a, b) in [
            (p.cooperation, q.cooperation),
            (p.f, q.f),
            (p.n_s, q.n_s),
            (p.sigma0, q.sigma0),
        ] {
            assert!(((a - b) / a).abs() < 1e-12);
        }
        let r2 = q.rates();
        assert!(((r2.coupling - r.coupling) / r.coupling).abs() < 1e-12);
        assert!(((r2.gamma_perp - r.gamma_perp) / r.gamma_perp).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid() {
        assert!(LaserParams::new(0.0, 0.5, 1, 1.0, 1.0, 1.0).is_err());
        assert!(LaserParams::new(1.0, 1.5, 1, 1.0, 1.0, 1.0).is_err());
        assert!(LaserParams::new(1.0, 0.5, 0, 1.0, 1.0, 1.0).is_err());
        assert!(LaserParams::new(1.0, 0.5, 1, 1.0, 1.0, -2.0).is_err());
    }

    #[test]
    fn threshold_predicate() {
        assert!(LaserParams::new(30.0, 0.05, 1, 1.0, 1.0, 15.0)
            .unwrap()
            .above_threshold());
        assert!(!LaserParams::new(30.0, 0.0, 1, 1.0, 1.0, 15.0)
            .unwrap()
            .above_threshold());
    }
}
