//! Binary optical channels through linear and saturable amplifiers.
//!
//! The crate models a two-symbol channel, bit "0" on the vacuum and bit "1"
//! on a coherent or Fock state, passed through one of:
//!
//! * an exact phase-insensitive amplifier ([`pia`]) or an ideal
//!   photon-number amplifier,
//! * a saturable laser amplifier described by a Fokker–Planck equation for
//!   the Wigner function ([`laser_fpe`]),
//! * a one-atom laser integrated by quantum jumps ([`qjump`]).
//!
//! [`infotheory`] turns output photon statistics into bit error rates and
//! mutual information; [`harness`] runs configured experiments and writes
//! reproducible outputs.

// Validation writes `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gaussian_channel;
pub mod harness;
pub mod infotheory;
pub mod laser_fpe;
pub mod pia;
pub mod qjump;
pub mod rng;
pub mod special;
pub mod states;

pub use error::{Error, Result};
