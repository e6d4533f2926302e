//! Estimators of the front-door functional
//! `ψ(a0) = E_X[ Σ_a π(a|X) ∫ μ(m, a, X) f_M(m | a0, X) dm ]`.
//!
//! The crate provides plug-in, one-step and targeted minimum loss estimators
//! under two nuisance parameterizations (mediator density and density ratio),
//! cross-fitted variants, Wald inference, and a Monte Carlo harness.

pub mod cli;
pub mod config;
pub mod crossfit;
pub mod data;
pub mod eif;
pub mod error;
pub mod estimate;
pub mod density;
pub mod estimators;
pub mod glm;
pub mod nuisance;
pub mod sim;

pub use config::{EstimatorConfig, EstimatorKind, Learner, MediatorDensity, NuisanceLearners, OutcomeKind};
pub use data::{Dataset, Folds, MediatorKind, Schema};
pub use error::{Error, Result};
