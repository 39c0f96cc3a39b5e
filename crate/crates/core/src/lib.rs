//! Cyclic sign-variation analysis for matrices and linear time-varying systems.
//!
//! * [`signvar`]: the integer counters `s⁻`, `s⁺`, `s_c⁻`, `s_c⁺` and the sets V, V_c.
//! * [`compound`]: minors, lexicographic index sets, multiplicative and additive compounds.
//! * [`classify`]: sign regularity, Metzler/irreducible tests, the classes M, M⁺, Q, Q⁺.
//! * [`vdp`]: variation diminishing property checkers with sampled witnesses.
//! * [`lindyn`]: transition matrices, compound dynamics and sign-count monitoring.
//! * [`rfmr`]: the ribosome flow model on a ring and its variational system.

pub mod classify;
pub mod compound;
pub mod error;
pub mod io;
pub mod lindyn;
pub mod monitor;
pub mod rfmr;
pub mod signvar;
pub mod vdp;

pub use compound::{CompoundKind, CompoundMatrix, IndexSet, Matrix};
pub use error::{Error, Result};
pub use signvar::{sign_report, SignCountReport, DEFAULT_ZERO_TOL};

/// Version tag written into every JSON report.
pub const SCHEMA_VERSION: u32 = 1;
