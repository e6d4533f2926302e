//! Estimator and learner configuration shared by the library, the CLI and the
//! simulation harness.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which estimator of the front-door functional to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Plugin1,
    Plugin2,
    OneStep1,
    OneStep2a,
    OneStep2b,
    Tmle1,
    Tmle1Mod,
    Tmle2a,
    Tmle2b,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 9] = [
        EstimatorKind::Plugin1,
        EstimatorKind::Plugin2,
        EstimatorKind::OneStep1,
        EstimatorKind::OneStep2a,
        EstimatorKind::OneStep2b,
        EstimatorKind::Tmle1,
        EstimatorKind::Tmle1Mod,
        EstimatorKind::Tmle2a,
        EstimatorKind::Tmle2b,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Plugin1 => "plugin-1",
            EstimatorKind::Plugin2 => "plugin-2",
            EstimatorKind::OneStep1 => "onestep-1",
            EstimatorKind::OneStep2a => "onestep-2a",
            EstimatorKind::OneStep2b => "onestep-2b",
            EstimatorKind::Tmle1 => "tmle-1",
            EstimatorKind::Tmle1Mod => "tmle-1-mod",
            EstimatorKind::Tmle2a => "tmle-2a",
            EstimatorKind::Tmle2b => "tmle-2b",
        }
    }

    /// Estimators built on the mediator density (`f_M`) parameterization.
    pub fn uses_density(self) -> bool {
        matches!(
            self,
            EstimatorKind::Plugin1
                | EstimatorKind::OneStep1
                | EstimatorKind::Tmle1
                | EstimatorKind::Tmle1Mod
        )
    }

    /// Ratio-family estimators that obtain the density ratio through Bayes' rule.
    pub fn uses_bayes_ratio(self) -> bool {
        matches!(self, EstimatorKind::OneStep2b | EstimatorKind::Tmle2b)
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = EstimatorKind::ALL.iter().map(|k| k.name()).collect();
                Error::InvalidConfig(format!(
                    "unknown estimator `{s}` (valid: {})",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomeKind {
    #[default]
    Continuous,
    Binary,
}

/// Working-model family used for a regression nuisance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Learner {
    /// Intercept only; ignores every regressor.
    InterceptOnly,
    /// Intercept plus main terms.
    #[default]
    MainTerms,
    /// Intercept, main terms and every pairwise product of distinct regressors.
    PairwiseInteractions,
}

impl Learner {
    pub fn name(self) -> &'static str {
        match self {
            Learner::InterceptOnly => "intercept-only",
            Learner::MainTerms => "main-terms",
            Learner::PairwiseInteractions => "pairwise",
        }
    }
}

impl FromStr for Learner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intercept-only" => Ok(Learner::InterceptOnly),
            "main-terms" => Ok(Learner::MainTerms),
            "pairwise" | "with-pairwise-interactions" => Ok(Learner::PairwiseInteractions),
            other => Err(Error::InvalidConfig(format!(
                "unknown learner `{other}` (valid: intercept-only, main-terms, pairwise)"
            ))),
        }
    }
}

/// Conditional density estimator for a continuous univariate mediator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MediatorDensity {
    #[default]
    Kernel,
    Normal,
}

/// Per-component learner choice. `mediator` drives the binary-mediator logistic
/// model and the mean model of the parametric normal density; `sequential`
/// drives the gamma/kappa regressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NuisanceLearners {
    pub outcome: Learner,
    pub propensity: Learner,
    pub mediator: Learner,
    pub treatment_given_mediator: Learner,
    pub sequential: Learner,
    pub density: MediatorDensity,
}

impl NuisanceLearners {
    pub fn uniform(learner: Learner) -> Self {
        NuisanceLearners {
            outcome: learner,
            propensity: learner,
            mediator: learner,
            treatment_given_mediator: learner,
            sequential: learner,
            density: MediatorDensity::Kernel,
        }
    }

    pub fn with_density(mut self, density: MediatorDensity) -> Self {
        self.density = density;
        self
    }
}

impl Default for NuisanceLearners {
    fn default() -> Self {
        NuisanceLearners::uniform(Learner::MainTerms)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub a0: u8,
    pub estimator: EstimatorKind,
    pub outcome_kind: OutcomeKind,
    /// 1 disables cross-fitting.
    pub crossfit_folds: usize,
    pub seed: u64,
    pub max_tmle_iter: usize,
    /// Multiplies the default targeting tolerance `1 / (sqrt(n) ln n)`.
    pub score_tolerance_scale: f64,
    pub prob_clip: f64,
    pub integration_grid_size: usize,
    pub learners: NuisanceLearners,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            a0: 1,
            estimator: EstimatorKind::Tmle1,
            outcome_kind: OutcomeKind::Continuous,
            crossfit_folds: 1,
            seed: 0,
            max_tmle_iter: 500,
            score_tolerance_scale: 1.0,
            prob_clip: 1e-3,
            integration_grid_size: 200,
            learners: NuisanceLearners::default(),
        }
    }
}

impl EstimatorConfig {
    pub fn new(estimator: EstimatorKind, a0: u8) -> Self {
        EstimatorConfig {
            estimator,
            a0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.a0 > 1 {
            return Err(Error::InvalidConfig(format!("a0 must be 0 or 1, got {}", self.a0)));
        }
        if self.crossfit_folds == 0 {
            return Err(Error::InvalidConfig("crossfit_folds must be at least 1".into()));
        }
        if !(self.prob_clip > 0.0 && self.prob_clip < 0.5) {
            return Err(Error::InvalidConfig(format!(
                "prob_clip must lie in (0, 0.5), got {}",
                self.prob_clip
            )));
        }
        if self.integration_grid_size < 3 {
            return Err(Error::InvalidConfig("integration_grid_size must be at least 3".into()));
        }
        if !(self.score_tolerance_scale > 0.0) {
            return Err(Error::InvalidConfig("score_tolerance_scale must be positive".into()));
        }
        Ok(())
    }

    /// Targeting stopping threshold `C_n` for a sample of size `n`.
    pub fn score_tolerance(&self, n: usize) -> f64 {
        let n = n.max(2) as f64;
        self.score_tolerance_scale / (n.sqrt() * n.ln())
    }
}
