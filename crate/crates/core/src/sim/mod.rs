//! Simulation harness: data-generating processes, truth oracles and
//! Monte Carlo studies.

pub mod dgp;
pub mod rng;
pub mod study;

pub use dgp::{generate, truth_ace, truth_psi, Dgp, DgpSpec};
pub use study::{run_study, SimReport, StudyConfig, Target};
