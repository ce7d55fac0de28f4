//! Quantum-jump (Monte Carlo wave-function) integration of the one-atom
//! laser master equation, and a dense density-matrix integrator used to
//! check it on tiny cutoffs.
//!
//! The joint space is atom ⊗ field with the atom index first: basis state
//! `|a, n⟩` sits at `a·(n_max+1) + n`, where `a = 0` is the excited level.

mod operators;
mod oracle;
mod trajectory;

pub use operators::{
    build_generators, build_generators_from_rates, CollapseOperator, JointStateVector,
    JumpOperatorSet,
};
pub use oracle::{dm_integrate_oracle, DensityMatrixResult};
pub use trajectory::{
    qj_ensemble_distribution, qj_trajectory, stationary_number_dist, tv_noise_scale, QjSchedule,
    QjTrajectory, StationaryDistribution, DEFAULT_CUTOFF_TOLERANCE, MAX_JUMP_PROBABILITY,
};
