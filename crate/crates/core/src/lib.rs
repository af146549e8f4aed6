//! Truncated Fock-space toolkit for states built from superposed displacements
//! and squeezes, their phase-space interference structure, and displacement-sensing
//! Fisher information.
//!
//! The crate is organized bottom-up:
//!
//! * [`linalg`]: dense complex matrices, matrix exponential, symmetric
//!   tridiagonal eigensolver, scalar root finding.
//! * [`fock`]: the `FockVector` state representation, operator construction,
//!   truncation control, and fast displacement/squeeze application.
//! * [`states`]: the state zoo (coherent, cat, four-component compass, squeezed
//!   families) and the photon-added pairings used by the locus solver.
//! * [`metrics`]: QFI, fidelity, photon statistics, small-parameter checks.
//! * [`phasespace`]: Wigner grids, displacement-overlap fields, first-zero
//!   extraction, central fringe area.
//! * [`oracle`]: an independent closed-form route to the same moments via
//!   truncated bivariate series, used to cross-validate the Fock route.
//! * [`loci`]: equal-QFI locus solving, fidelity sweeps, dataset emission.

pub mod error;
pub mod fock;
pub mod linalg;
pub mod loci;
pub mod metrics;
pub mod oracle;
pub mod phasespace;
pub mod states;

pub use error::{Error, Result};

/// Default tail-mass tolerance used when callers do not supply one.
pub const DEFAULT_EPS: f64 = 1e-10;

/// Hard ceiling for the cutoff ladder.
pub const MAX_CUTOFF: usize = 4096;
