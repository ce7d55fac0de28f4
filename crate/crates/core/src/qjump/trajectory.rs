use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::operators::{JointStateVector, JumpOperatorSet};
use crate::error::{Error, Result};
use crate::rng::{self, Domain};
use crate::states::PhotonDistribution;

/// Upper bound on the per-step jump probability, enforced through dt.
pub const MAX_JUMP_PROBABILITY: f64 = 0.1;
/// Largest tolerated population of the top Fock level in any snapshot.
pub const DEFAULT_CUTOFF_TOLERANCE: f64 = 1e-6;

/// Time grid of a trajectory: step `dt`, run to `t_total`, record from
/// `record_from` every `record_interval`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QjSchedule {
    pub dt: f64,
    pub t_total: f64,
    pub record_from: f64,
    pub record_interval: f64,
}

struct Grid {
    steps: usize,
    first: usize,
    every: usize,
}

impl QjSchedule {
    fn grid(&self) -> Result<Grid> {
        if !(self.dt > 0.0
            && self.t_total >= 0.0
            && self.record_interval > 0.0
            && self.record_from >= 0.0)
        {
            return Err(Error::InvalidParameter(format!(
                "invalid quantum-jump schedule {self:?}"
            )));
        }
        if self.record_from > self.t_total + 0.5 * self.dt {
            return Err(Error::InvalidParameter(
                "recording starts after the end of the run".into(),
            ));
        }
        Ok(Grid {
            steps: (self.t_total / self.dt).round() as usize,
            first: (self.record_from / self.dt).round() as usize,
            every: ((self.record_interval / self.dt).round() as usize).max(1),
        })
    }
}

/// Exact no-jump propagator exp(−i·H_eff·dt), which is block diagonal.
struct NoJumpPropagator {
    /// (i, j, [[u_ii, u_ij], [u_ji, u_jj]]) for each coupled pair.
    pairs: Vec<(usize, usize, [[Complex64; 2]; 2])>,
    /// Uncoupled states and their amplitude damping factor.
    singles: Vec<(usize, f64)>,
}

fn expm2(m: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let half_tr = 0.5 * (m[0][0] + m[1][1]);
    let a = m[0][0] - half_tr;
    let d = m[1][1] - half_tr;
    let delta = (a * a + m[0][1] * m[1][0]).sqrt();
    let cosh = delta.cosh();
    // sinh(δ)/δ, with its series where δ is tiny
    let sinhc = if delta.norm() < 1e-6 {
        Complex64::new(1.0, 0.0) + delta * delta / 6.0
    } else {
        delta.sinh() / delta
    };
    let e = half_tr.exp();
    [
        [e * (cosh + sinhc * a), e * sinhc * m[0][1]],
        [e * sinhc * m[1][0], e * (cosh + sinhc * d)],
    ]
}

impl NoJumpPropagator {
    fn new(ops: &JumpOperatorSet, dt: f64) -> Result<Self> {
        let dim = ops.dim();
        let mut partner = vec![None; dim];
        for &(r, c, v) in &ops.hamiltonian {
            if r == c {
                return Err(Error::Validation(
                    "diagonal Hamiltonian terms are not supported".into(),
                ));
            }
            match partner[r] {
                None => partner[r] = Some((c, v)),
                Some((c0, _)) if c0 == c => {}
                Some(_) => {
                    return Err(Error::Validation(
                        "Hamiltonian couples a state to more than one partner".into(),
                    ))
                }
            }
        }
        let minus_i = Complex64::new(0.0, -1.0);
        let mut pairs = Vec::new();
        let mut singles = Vec::new();
        for i in 0..dim {
            match partner[i] {
                Some((j, h_ij)) if j > i => {
                    let h_ji = partner[j].map(|(_, v)| v).unwrap_or(h_ij.conj());
                    let m = [
                        [
                            Complex64::new(-0.5 * ops.decay[i] * dt, 0.0),
                            minus_i * h_ij * dt,
                        ],
                        [
                            minus_i * h_ji * dt,
                            Complex64::new(-0.5 * ops.decay[j] * dt, 0.0),
                        ],
                    ];
                    pairs.push((i, j, expm2(m)));
                }
                Some(_) => {}
                None => singles.push((i, (-0.5 * ops.decay[i] * dt).exp())),
            }
        }
        Ok(Self { pairs, singles })
    }

    fn apply(&self, psi: &mut [Complex64]) {
        for &(i, j, u) in &self.pairs {
            let (a, b) = (psi[i], psi[j]);
            psi[i] = u[0][0] * a + u[0][1] * b;
            psi[j] = u[1][0] * a + u[1][1] * b;
        }
        for &(i, s) in &self.singles {
            psi[i] *= s;
        }
    }
}

/// Recorded output of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QjTrajectory {
    pub times: Vec<f64>,
    /// P(n|ψ(t)) at each recorded time.
    pub distributions: Vec<Vec<f64>>,
    /// Number of jumps per channel, in the order of `JumpOperatorSet::collapse`.
    pub jumps: Vec<u64>,
}

fn check_cutoff(p: &[f64], tolerance: f64) -> Result<()> {
    let n_max = p.len() - 1;
    let top = p[n_max];
    if top > tolerance {
        return Err(Error::CutoffSaturation {
            n_max,
            population: top,
            suggested: n_max + n_max / 2 + 10,
        });
    }
    Ok(())
}

fn run<F: FnMut(usize, &JointStateVector) -> Result<()>>(
    initial: &JointStateVector,
    ops: &JumpOperatorSet,
    schedule: &QjSchedule,
    rng: &mut ChaCha8Rng,
    mut record: F,
) -> Result<Vec<u64>> {
    if initial.n_max() != ops.n_max {
        return Err(Error::Validation(format!(
            "state cutoff {} does not match operator cutoff {}",
            initial.n_max(),
            ops.n_max
        )));
    }
    let grid = schedule.grid()?;
    let bound = ops.max_decay() * schedule.dt;
    if bound >= MAX_JUMP_PROBABILITY {
        return Err(Error::StepInstability(format!(
            "jump probability per step can reach {bound:.3}; reduce dt below {:.3e}",
            MAX_JUMP_PROBABILITY / ops.max_decay()
        )));
    }
    let prop = NoJumpPropagator::new(ops, schedule.dt)?;
    let mut psi = initial.clone();
    psi.normalize();
    let mut trial = psi.clone();
    let mut jumped = psi.clone();
    let mut jumps = vec![0u64; ops.collapse.len()];
    let mut weights = vec![0.0f64; ops.collapse.len()];
    for step in 0..=grid.steps {
        if step >= grid.first && (step - grid.first) % grid.every == 0 {
            record(step, &psi)?;
        }
        if step == grid.steps {
            break;
        }
        trial.amplitudes_mut().copy_from_slice(psi.amplitudes());
        prop.apply(trial.amplitudes_mut());
        let loss = 1.0 - trial.norm_sqr();
        let r: f64 = rng.random();
        if r < loss {
            let mut total = 0.0;
            for (w, op) in weights.iter_mut().zip(&ops.collapse) {
                *w = op.rate * op.expectation(psi.amplitudes());
                total += *w;
            }
            let mut pick: f64 = rng.random::<f64>() * total;
            // zero-weight channels can never be chosen
            let mut k = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
            for (i, &w) in weights.iter().enumerate() {
                if w > 0.0 && pick < w {
                    k = i;
                    break;
                }
                pick -= w;
            }
            if total > 0.0 {
                ops.collapse[k].apply(psi.amplitudes(), jumped.amplitudes_mut());
                std::mem::swap(&mut psi, &mut jumped);
                jumps[k] += 1;
            } else {
                std::mem::swap(&mut psi, &mut trial);
            }
        } else {
            std::mem::swap(&mut psi, &mut trial);
        }
        psi.normalize();
    }
    Ok(jumps)
}

/// One quantum-jump trajectory with photon-number snapshots.
pub fn qj_trajectory(
    initial: &JointStateVector,
    ops: &JumpOperatorSet,
    schedule: &QjSchedule,
    seed: u64,
    index: u64,
    cutoff_tolerance: f64,
) -> Result<QjTrajectory> {
    let mut rng = rng::stream(seed, Domain::QuantumJump, index);
    let mut times = Vec::new();
    let mut distributions = Vec::new();
    let jumps = run(initial, ops, schedule, &mut rng, |step, psi| {
        let p = psi.photon_distribution();
        check_cutoff(&p, cutoff_tolerance)?;
        times.push(step as f64 * schedule.dt);
        distributions.push(p);
        Ok(())
    })?;
    Ok(QjTrajectory {
        times,
        distributions,
        jumps,
    })
}

struct Accumulated {
    first: Vec<f64>,
    second: Vec<f64>,
    first_count: usize,
    second_count: usize,
}

fn accumulate(
    initial: &JointStateVector,
    ops: &JumpOperatorSet,
    schedule: &QjSchedule,
    seed: u64,
    index: u64,
    cutoff_tolerance: f64,
    split_step: usize,
) -> Result<Accumulated> {
    let d = ops.n_max + 1;
    let mut acc = Accumulated {
        first: vec![0.0; d],
        second: vec![0.0; d],
        first_count: 0,
        second_count: 0,
    };
    let mut rng = rng::stream(seed, Domain::QuantumJump, index);
    run(initial, ops, schedule, &mut rng, |step, psi| {
        let p = psi.photon_distribution();
        check_cutoff(&p, cutoff_tolerance)?;
        let (sum, count) = if step < split_step {
            (&mut acc.first, &mut acc.first_count)
        } else {
            (&mut acc.second, &mut acc.second_count)
        };
        for (s, x) in sum.iter_mut().zip(&p) {
            *s += x;
        }
        *count += 1;
        Ok(())
    })?;
    Ok(acc)
}

/// Mean over trajectories with the across-trajectory standard error per bin.
fn mean_and_stderr(per_traj: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let t = per_traj.len() as f64;
    let d = per_traj[0].len();
    let mut mean = vec![0.0; d];
    for v in per_traj {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= t);
    let mut var = vec![0.0; d];
    for v in per_traj {
        for ((s, x), m) in var.iter_mut().zip(v).zip(&mean) {
            *s += (x - m).powi(2);
        }
    }
    let se = var
        .iter()
        .map(|s| {
            if t > 1.0 {
                (s / (t - 1.0) / t).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    (mean, se)
}

fn distribution(mean: Vec<f64>, se: Vec<f64>) -> Result<PhotonDistribution> {
    let total: f64 = mean.iter().sum();
    let scale = if total > 1.0 { total.recip() } else { 1.0 };
    PhotonDistribution::new(mean.into_iter().map(|x| x * scale).collect())?.with_errors(se)
}

/// Ensemble-averaged photon distribution at `t`, from `n_traj` trajectories
/// started in `initial`, with across-trajectory error bars.
pub fn qj_ensemble_distribution(
    initial: &JointStateVector,
    ops: &JumpOperatorSet,
    t: f64,
    dt: f64,
    n_traj: usize,
    seed: u64,
    cutoff_tolerance: f64,
) -> Result<PhotonDistribution> {
    if n_traj == 0 {
        return Err(Error::InvalidParameter(
            "need at least one trajectory".into(),
        ));
    }
    let schedule = QjSchedule {
        dt,
        t_total: t,
        record_from: t,
        record_interval: t.max(dt),
    };
    let finals: Vec<Result<Vec<f64>>> = (0..n_traj)
        .into_par_iter()
        .map(|i| {
            let tr = qj_trajectory(initial, ops, &schedule, seed, i as u64, cutoff_tolerance)?;
            tr.distributions
                .into_iter()
                .last()
                .ok_or_else(|| Error::InvalidParameter("no snapshot recorded".into()))
        })
        .collect();
    let finals: Vec<Vec<f64>> = finals.into_iter().collect::<Result<_>>()?;
    let (mean, se) = mean_and_stderr(&finals);
    distribution(mean, se)
}

/// Time- and ensemble-averaged stationary distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    pub dist: PhotonDistribution,
    pub trajectories: usize,
    pub snapshots_per_trajectory: usize,
    pub effective_samples: usize,
    /// Total-variation distance between the first and second halves of the window.
    pub halves_tv: f64,
    /// Expected size of `halves_tv` from statistical noise alone.
    pub halves_tolerance: f64,
}

impl StationaryDistribution {
    pub fn is_stationary(&self) -> bool {
        self.halves_tv <= self.halves_tolerance
    }
}

/// Combined statistical scale of a total-variation distance between two
/// histograms with per-bin standard errors: ½ Σ √(2/π)·√(σ₁² + σ₂²),
/// the expected TV of two noisy copies of the same distribution.
pub fn tv_noise_scale(a: &[f64], b: &[f64]) -> f64 {
    let k = (2.0 / std::f64::consts::PI).sqrt();
    0.5 * a
        .iter()
        .zip(b)
        .map(|(x, y)| k * (x * x + y * y).sqrt())
        .sum::<f64>()
}

/// Stationary photon statistics of the one-atom laser.
///
/// Each trajectory starts in `initial`, is discarded for `burn_in`, and is
/// sampled every `interval` over `t_avg`. Burn-in must cover ten of the
/// slowest relaxation times among γ, γ∥ and γ⊥.
#[allow(clippy::too_many_arguments)]
pub fn stationary_number_dist(
    ops: &JumpOperatorSet,
    initial: &JointStateVector,
    burn_in: f64,
    t_avg: f64,
    interval: f64,
    dt: f64,
    n_traj: usize,
    seed: u64,
    cutoff_tolerance: f64,
) -> Result<StationaryDistribution> {
    let r = &ops.rates;
    let slowest = [r.gamma, r.gamma_par, r.gamma_perp]
        .into_iter()
        .filter(|x| *x > 0.0)
        .fold(f64::INFINITY, f64::min);
    if burn_in < 10.0 / slowest {
        return Err(Error::InvalidParameter(format!(
            "burn-in {burn_in} is shorter than 10 relaxation times ({})",
            10.0 / slowest
        )));
    }
    if n_traj < 2 {
        return Err(Error::InvalidParameter(
            "need at least two trajectories for error bars".into(),
        ));
    }
    let schedule = QjSchedule {
        dt,
        t_total: burn_in + t_avg,
        record_from: burn_in,
        record_interval: interval,
    };
    let split_step = ((burn_in + 0.5 * t_avg) / dt).round() as usize;
    let per: Vec<Result<Accumulated>> = (0..n_traj)
        .into_par_iter()
        .map(|i| {
            accumulate(
                initial,
                ops,
                &schedule,
                seed,
                i as u64,
                cutoff_tolerance,
                split_step,
            )
        })
        .collect();
    let per: Vec<Accumulated> = per.into_iter().collect::<Result<_>>()?;
    let snapshots = per[0].first_count + per[0].second_count;
    let whole: Vec<Vec<f64>> = per
        .iter()
        .map(|a| {
            a.first
                .iter()
                .zip(&a.second)
                .map(|(x, y)| (x + y) / snapshots as f64)
                .collect()
        })
        .collect();
    let halves = |pick: fn(&Accumulated) -> (&Vec<f64>, usize)| -> Vec<Vec<f64>> {
        per.iter()
            .map(|a| {
                let (v, c) = pick(a);
                v.iter().map(|x| x / c.max(1) as f64).collect()
            })
            .collect()
    };
    let (m1, s1) = mean_and_stderr(&halves(|a| (&a.first, a.first_count)));
    let (m2, s2) = mean_and_stderr(&halves(|a| (&a.second, a.second_count)));
    let halves_tv = 0.5 * m1.iter().zip(&m2).map(|(a, b)| (a - b).abs()).sum::<f64>();
    // Three times the noise scale, as a TV between halves is a sum of |N(0, σ)| terms.
    let halves_tolerance = 3.0 * tv_noise_scale(&s1, &s2);
    let (mean, se) = mean_and_stderr(&whole);
    Ok(StationaryDistribution {
        dist: distribution(mean, se)?,
        trajectories: n_traj,
        snapshots_per_trajectory: snapshots,
        effective_samples: n_traj * snapshots,
        halves_tv,
        halves_tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laser_fpe::LaserParams;
    use crate::qjump::{build_generators, build_generators_from_rates};

    fn decoupled(n_max: usize) -> JumpOperatorSet {
        let mut r = LaserParams::new(2.0, 0.5, 1, 1.0, 1.0, 2.0)
            .unwrap()
            .rates();
        r.coupling = 0.0;
        build_generators_from_rates(&r, n_max).unwrap()
    }

    #[test]
    fn two_by_two_exponential() {
        // rotation generator
        let th = 0.3;
        let z = Complex64::new(0.0, 0.0);
        let u = expm2([[z, Complex64::new(th, 0.0)], [Complex64::new(-th, 0.0), z]]);
        assert!((u[0][0].re - th.cos()).abs() < 1e-15);
        assert!((u[0][1].re - th.sin()).abs() < 1e-15);
        let d = expm2([
            [Complex64::new(-0.2, 0.0), z],
            [z, Complex64::new(-0.5, 0.0)],
        ]);
        assert!((d[0][0].re - (-0.2f64).exp()).abs() < 1e-15);
        assert!((d[1][1].re - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn cavity_decay_of_fock_five() {
        let ops = decoupled(6);
        let init = JointStateVector::basis(false, 5, 6).unwrap();
        let t = 0.7;
        let d = qj_ensemble_distribution(&init, &ops, t, 1e-3, 4000, 3, 1.0).unwrap();
        let mean = d.mean();
        // ⟨n⟩ of the cavity decays as e^{−γt}
        let exact = 5.0 * (-t).exp();
        let se: f64 = {
            let e = d.errors().unwrap();
            (0..=6)
                .map(|n| (n as f64 * e[n]).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        assert!(
            (mean - exact).abs() < 5.0 * se.max(1e-3),
            "{mean} vs {exact} (se {se})"
        );
    }

    #[test]
    fn snapshots_are_normalized_and_deterministic() {
        let p = LaserParams::new(2.0, 0.8, 1, 1.0, 1.0, 2.0).unwrap();
        let ops = build_generators(&p, 12).unwrap();
        let init = JointStateVector::basis(true, 0, 12).unwrap();
        let s = QjSchedule {
            dt: 2e-3,
            t_total: 2.0,
            record_from: 0.0,
            record_interval: 0.1,
        };
        let a = qj_trajectory(&init, &ops, &s, 5, 0, 1.0).unwrap();
        let b = qj_trajectory(&init, &ops, &s, 5, 0, 1.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.times.len(), 21);
        for p in &a.distributions {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|x| *x >= 0.0));
        }
        assert!(a.jumps.iter().sum::<u64>() > 0);
    }

    #[test]
    fn zero_rate_channels_never_fire() {
        // σ₀ = 1 removes the atomic decay channel entirely; f = 1 removes dephasing.
        let p = LaserParams::new(2.0, 1.0, 1, 1.0, 1.0, 2.0).unwrap();
        let ops = build_generators(&p, 10).unwrap();
        assert!(ops.collapse.iter().all(|c| c.rate > 0.0));
        assert!(!ops.collapse.iter().any(|c| c.label == "decay"));
        // A channel with zero weight on the current state is also never chosen:
        // with no photons the cavity cannot jump first.
        let init = JointStateVector::basis(false, 0, 10).unwrap();
        let s = QjSchedule {
            dt: 1e-3,
            t_total: 1e-3,
            record_from: 0.0,
            record_interval: 1e-3,
        };
        for seed in 0..200 {
            let tr = qj_trajectory(&init, &ops, &s, seed, 0, 1.0).unwrap();
            let cavity = ops
                .collapse
                .iter()
                .position(|c| c.label == "cavity")
                .unwrap();
            assert_eq!(tr.jumps[cavity], 0);
        }
    }

    #[test]
    fn step_too_large_is_refused() {
        let ops = build_generators(
            &LaserParams::new(30.0, 0.05, 1, 1.0, 1.0, 15.0).unwrap(),
            20,
        )
        .unwrap();
        let init = JointStateVector::basis(false, 0, 20).unwrap();
        let s = QjSchedule {
            dt: 1e-3,
            t_total: 1.0,
            record_from: 0.0,
            record_interval: 0.5,
        };
        assert!(matches!(
            qj_trajectory(&init, &ops, &s, 1, 0, 1e-6),
            Err(Error::StepInstability(_))
        ));
    }

    #[test]
    fn saturated_cutoff_is_reported() {
        let p = LaserParams::new(30.0, 1.0, 1, 1.0, 1.0, 15.0).unwrap();
        let ops = build_generators(&p, 4).unwrap();
        let init = JointStateVector::basis(true, 3, 4).unwrap();
        let s = QjSchedule {
            dt: 2e-5,
            t_total: 0.5,
            record_from: 0.0,
            record_interval: 0.05,
        };
        match qj_trajectory(&init, &ops, &s, 1, 0, 1e-6) {
            Err(Error::CutoffSaturation {
                n_max, suggested, ..
            }) => {
                assert_eq!(n_max, 4);
                assert!(suggested > 4);
            }
            other => panic!("expected cutoff error, got {other:?}"),
        }
    }

    #[test]
    fn below_threshold_stays_near_vacuum() {
        // σ₀C = 0.01; the linear-regime idler estimate puts ⟨n⟩ near 0.2.
        let p = LaserParams::new(0.2, 0.05, 1, 1.0, 1.0, 2.0).unwrap();
        let ops = build_generators(&p, 15).unwrap();
        let init = JointStateVector::basis(false, 0, 15).unwrap();
        let s = stationary_number_dist(&ops, &init, 15.0, 40.0, 0.5, 2e-3, 16, 9, 1e-6).unwrap();
        assert!(s.dist.get(0) > 0.7, "{:?}", s.dist.probs());
        assert!(s.dist.mean() < 0.5);
    }

    #[test]
    fn short_burn_in_is_refused() {
        let p = LaserParams::new(2.0, 0.05, 1, 1.0, 1.0, 2.0).unwrap();
        let ops = build_generators(&p, 15).unwrap();
        let init = JointStateVector::basis(false, 0, 15).unwrap();
        assert!(stationary_number_dist(&ops, &init, 1.0, 20.0, 0.5, 2e-3, 8, 9, 1e-6).is_err());
    }
}
