use num_complex::Complex64;

use super::operators::{JointStateVector, JumpOperatorSet};
use crate::error::{Error, Result};
use crate::states::PhotonDistribution;

/// Largest cutoff accepted by the dense integrator.
const MAX_CUTOFF: usize = 6;
const TRACE_TOLERANCE: f64 = 1e-8;
const HERMITICITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrixResult {
    pub dist: PhotonDistribution,
    pub trace_drift: f64,
    /// max |ρ_f − ρ_f†| of the reduced field matrix at the end of the run.
    pub hermiticity_defect: f64,
    pub steps: usize,
}

type Matrix = Vec<Complex64>;

/// dρ/dt = −i[H, ρ] + Σ Γ_k (A ρ A† − ½{A†A, ρ}), with the anticommutator
/// folded into the diagonal decay vector.
fn lindblad(ops: &JumpOperatorSet, rho: &Matrix, out: &mut Matrix) {
    let d = ops.dim();
    let zero = Complex64::new(0.0, 0.0);
    out.iter_mut().for_each(|x| *x = zero);
    let minus_i = Complex64::new(0.0, -1.0);
    for &(r, c, h) in &ops.hamiltonian {
        // (Hρ)_{r,j} += h ρ_{c,j};  (ρH)_{i,c} += ρ_{i,r} h
        for j in 0..d {
            out[r * d + j] += minus_i * h * rho[c * d + j];
        }
        for i in 0..d {
            out[i * d + c] -= minus_i * rho[i * d + r] * h;
        }
    }
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] -= 0.5 * (ops.decay[i] + ops.decay[j]) * rho[i * d + j];
        }
    }
    for op in &ops.collapse {
        for &(r1, c1, v1) in &op.entries {
            for &(r2, c2, v2) in &op.entries {
                out[r1 * d + r2] += op.rate * v1 * v2 * rho[c1 * d + c2];
            }
        }
    }
}

fn field_matrix(rho: &Matrix, n_max: usize) -> Matrix {
    let f = n_max + 1;
    let d = 2 * f;
    let mut out = vec![Complex64::new(0.0, 0.0); f * f];
    for a in 0..2 {
        for n in 0..f {
            for m in 0..f {
                out[n * f + m] += rho[(a * f + n) * d + a * f + m];
            }
        }
    }
    out
}

/// Dense RK4 integration of the master equation from the pure state
/// `initial` for time `t`; the step is chosen from the generator's norm.
pub fn dm_integrate_oracle(
    ops: &JumpOperatorSet,
    initial: &JointStateVector,
    t: f64,
) -> Result<DensityMatrixResult> {
    if ops.n_max > MAX_CUTOFF {
        return Err(Error::InvalidParameter(format!(
            "the dense integrator is limited to n_max <= {MAX_CUTOFF}, got {}",
            ops.n_max
        )));
    }
    if initial.n_max() != ops.n_max || !(t >= 0.0) {
        return Err(Error::InvalidParameter(
            "state cutoff mismatch or negative time".into(),
        ));
    }
    let d = ops.dim();
    let norm = initial.norm_sqr();
    let psi = initial.amplitudes();
    let mut rho: Matrix = (0..d * d)
        .map(|k| psi[k / d] * psi[k % d].conj() / norm)
        .collect();

    let h_scale = ops
        .hamiltonian
        .iter()
        .map(|e| e.2.norm())
        .fold(0.0, f64::max);
    let rate_scale = ops.max_decay() + 2.0 * h_scale * (ops.n_max as f64 + 1.0).sqrt();
    let steps = ((t * rate_scale / 0.02).ceil() as usize).max(1);
    let dt = t / steps as f64;

    let mut k1 = vec![Complex64::new(0.0, 0.0); d * d];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();
    let mut trace_drift: f64 = 0.0;
    for _ in 0..steps {
        lindblad(ops, &rho, &mut k1);
        for i in 0..d * d {
            tmp[i] = rho[i] + 0.5 * dt * k1[i];
        }
        lindblad(ops, &tmp, &mut k2);
        for i in 0..d * d {
            tmp[i] = rho[i] + 0.5 * dt * k2[i];
        }
        lindblad(ops, &tmp, &mut k3);
        for i in 0..d * d {
            tmp[i] = rho[i] + dt * k3[i];
        }
        lindblad(ops, &tmp, &mut k4);
        for i in 0..d * d {
            rho[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let trace: Complex64 = (0..d).map(|i| rho[i * d + i]).sum();
        trace_drift = trace_drift.max((trace - 1.0).norm());
        if !(trace_drift <= TRACE_TOLERANCE) {
            return Err(Error::StepInstability(format!(
                "density-matrix trace drifted by {trace_drift:e}"
            )));
        }
    }
    let field = field_matrix(&rho, ops.n_max);
    let f = ops.n_max + 1;
    let mut hermiticity_defect: f64 = 0.0;
    for n in 0..f {
        for m in 0..f {
            hermiticity_defect =
                hermiticity_defect.max((field[n * f + m] - field[m * f + n].conj()).norm());
        }
    }
    if hermiticity_defect > HERMITICITY_TOLERANCE {
        return Err(Error::StepInstability(format!(
            "reduced field matrix lost hermiticity ({hermiticity_defect:e})"
        )));
    }
    let probs: Vec<f64> = (0..f).map(|n| field[n * f + n].re.max(0.0)).collect();
    Ok(DensityMatrixResult {
        dist: PhotonDistribution::new(probs)?,
        trace_drift,
        hermiticity_defect,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laser_fpe::LaserParams;
    use crate::qjump::{build_generators, build_generators_from_rates};
    use crate::special::ln_binomial;

    #[test]
    fn decoupled_decay_is_binomial() {
        let mut r = LaserParams::new(2.0, 0.3, 1, 1.0, 1.0, 2.0)
            .unwrap()
            .rates();
        r.coupling = 0.0;
        let ops = build_generators_from_rates(&r, 3).unwrap();
        let init = JointStateVector::basis(true, 3, 3).unwrap();
        let t = 0.4;
        let res = dm_integrate_oracle(&ops, &init, t).unwrap();
        let s = (-t).exp();
        for k in 0..=3usize {
            let exact = ln_binomial(3, k).exp() * s.powi(k as i32) * (1.0 - s).powi(3 - k as i32);
            assert!((res.dist.get(k) - exact).abs() < 1e-10, "k={k}");
        }
        assert!(res.trace_drift < 1e-8);
    }

    #[test]
    fn coupled_run_keeps_trace_and_hermiticity() {
        let p = LaserParams::new(3.0, 0.6, 1, 1.0, 1.0, 1.0).unwrap();
        let ops = build_generators(&p, 4).unwrap();
        let init = JointStateVector::basis(true, 1, 4).unwrap();
        let res = dm_integrate_oracle(&ops, &init, 1.0).unwrap();
        assert!(res.trace_drift < 1e-8);
        assert!(res.hermiticity_defect < 1e-10);
        assert!((res.dist.total() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn large_cutoff_is_refused() {
        let p = LaserParams::new(3.0, 0.6, 1, 1.0, 1.0, 1.0).unwrap();
        let ops = build_generators(&p, 7).unwrap();
        let init = JointStateVector::basis(true, 1, 7).unwrap();
        assert!(dm_integrate_oracle(&ops, &init, 1.0).is_err());
    }
}
