use serde::{Deserialize, Serialize};

use super::params::LaserParams;

/// Default factor by which each "≫" condition must hold.
pub const DEFAULT_STRICTNESS: f64 = 10.0;

/// Raw ratios behind each validity condition. A condition holds when its
/// margin is at least the strictness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityMargins {
    /// γ⊥/γ = 2 C n_s / (f N): polarization follows the field adiabatically.
    pub polarization_adiabatic: f64,
    /// γ∥/γ = 4 C n_s / N: inversion follows the field adiabatically.
    pub inversion_adiabatic: f64,
    /// γ⊥·t, the number of polarization lifetimes in the run.
    pub polarization_trace_time: f64,
    /// γ∥·t.
    pub inversion_trace_time: f64,
    /// 4 n_s against a unit-scale intensity: the gain-saturation expansion parameter.
    pub saturation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub adiabatic_ok: bool,
    pub trace_time_ok: bool,
    pub saturation_ok: bool,
    pub margins: ValidityMargins,
    pub strictness: f64,
}

impl ValidityReport {
    pub fn all_ok(&self) -> bool {
        self.adiabatic_ok && self.trace_time_ok && self.saturation_ok
    }

    pub fn summary(&self) -> String {
        let m = &self.margins;
        format!(
            "strictness {s}: gamma_perp/gamma = {:.4} , gamma_par/gamma = {:.4} (adiabatic {}), \
             gamma_perp*t = {:.4}, gamma_par*t = {:.4} (trace time {}), 4 n_s = {:.4} (saturation {})",
            m.polarization_adiabatic,
            m.inversion_adiabatic,
            ok(self.adiabatic_ok),
            m.polarization_trace_time,
            m.inversion_trace_time,
            ok(self.trace_time_ok),
            m.saturation,
            ok(self.saturation_ok),
            s = self.strictness,
        )
    }
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "violated"
    }
}

/// Checks the adiabatic-elimination, trace-time and weak-saturation
/// conditions for an evolution of duration `t` (same time units as γ).
pub fn validity_check(p: &LaserParams, t: f64, strictness: f64) -> ValidityReport {
    let n = p.atoms as f64;
    let inv = 4.0 * p.cooperation * p.n_s / n;
    let pol = 2.0 * p.cooperation * p.n_s / (n * p.f);
    let margins = ValidityMargins {
        polarization_adiabatic: pol,
        inversion_adiabatic: inv,
        polarization_trace_time: p.gamma * t * pol,
        inversion_trace_time: p.gamma * t * inv,
        saturation: 4.0 * p.n_s,
    };
    ValidityReport {
        adiabatic_ok: pol >= strictness && inv >= strictness,
        trace_time_ok: margins.polarization_trace_time >= strictness
            && margins.inversion_trace_time >= strictness,
        saturation_ok: margins.saturation >= strictness,
        margins,
        strictness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stationary_laser_set_is_valid() {
        let p = LaserParams::new(30.0, 0.05, 1, 1.0, 1.0, 15.0).unwrap();
        for t in [1.0, 3.0, 100.0] {
            let r = validity_check(&p, t, DEFAULT_STRICTNESS);
            assert!(r.all_ok(), "{}", r.summary());
        }
        let r = validity_check(&p, 1.0, DEFAULT_STRICTNESS);
        assert_eq!(r.margins.inversion_adiabatic, 4.0 * 30.0 * 15.0);
        assert_eq!(r.margins.polarization_adiabatic, 2.0 * 30.0 * 15.0);
    }

    #[test]
    fn quarter_photon_scale_never_saturation_valid() {
        let p = LaserParams::new(30.0, 0.05, 1, 1.0, 1.0, 0.25).unwrap();
        for s in [1.0001, 2.0, 10.0] {
            assert!(!validity_check(&p, 1.0, s).saturation_ok);
        }
    }

    #[test]
    fn short_amplifier_run_fails_trace_time() {
        let p = LaserParams::new(4.5, 1.0, 55, 1.0, 1.0, 55.0).unwrap();
        let r = validity_check(&p, 0.4, DEFAULT_STRICTNESS);
        assert!((r.margins.polarization_adiabatic - 9.0).abs() < 1e-12);
        assert!(!r.adiabatic_ok);
        assert!(!r.trace_time_ok);
        assert!((r.margins.polarization_trace_time - 3.6).abs() < 1e-12);
        assert!(!r.all_ok());
    }

    #[test]
    fn strictness_is_monotone() {
        let p = LaserParams::new(4.5, 1.0, 55, 1.0, 1.0, 55.0).unwrap();
        let loose = validity_check(&p, 0.4, 1.0);
        assert!(loose.all_ok());
    }
}
