//! bornlab — a numerical laboratory for quantum measurement assignment rules.
//!
//! The crate provides a catalog of measurement assignments (the trace rule
//! and a family of structured counterexamples), sampling-based checkers for
//! the properties such assignments may or may not satisfy (additivity,
//! non-contextuality, normalization variants, non-negativity, state
//! affinity), a least-squares regularity fitter for frame functions,
//! executable cores of several entanglement and fine-graining arguments, and
//! a finite-copy frequency-operator analysis. A batch CLI turns declarative
//! scenario files into deterministic JSON/CSV reports.

pub mod assignments;
pub mod derivations;
pub mod error;
pub mod exact;
pub mod frequency;
pub mod gleason;
pub mod linalg;
pub mod properties;
pub mod report;
pub mod runner;
pub mod scenario;
pub mod seeds;

pub use error::{Error, Result};

/// Version stamp recorded in every report.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
