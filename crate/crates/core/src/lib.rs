//! Optimal mixtures of entanglement purification protocols.
//!
//! The crate covers the whole pipeline from a noisy Bell pair to exact
//! finite-pool guarantees:
//!
//! * [`bell`]: Bell-diagonal states, noise channels, fidelities and the
//!   relative-entropy rate ceiling.
//! * [`dejmps`]: the DEJMPS recurrence and the ladder of iterated protocols
//!   (with a gate-level oracle in [`circuit`]).
//! * [`interpolate`]: the best two-protocol mixture for a target rate or
//!   fidelity, and the cutoff on how many protocols need considering.
//! * [`finite`]: exact distributions of pairs produced and consumed, the
//!   joint law of the last protocol used and of success within a finite
//!   pool, and the bounds on the achievable output count derived from it.
//! * [`montecarlo`]: seeded simulation used as an oracle for `finite`.
//! * [`sweep`]: the per-grid-point computations behind the CLI sweeps.

pub mod bell;
pub mod circuit;
pub mod dejmps;
pub mod error;
pub mod finite;
pub mod interpolate;
pub mod montecarlo;
pub mod sum;
pub mod sweep;
pub mod validation;

pub use error::{Error, Result};
