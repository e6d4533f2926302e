//! Plug-in, one-step and targeted estimators operating on evaluated nuisance
//! rows.

pub mod onestep;
pub mod submodels;
pub mod tmle_density;
pub mod tmle_ratio;

pub use onestep::{onestep_density, onestep_ratio, plugin_density, plugin_ratio};
pub use tmle_density::{
    tmle_psi1, tmle_psi1_binary_m, tmle_psi1_binary_y, tmle_psi1_continuous_m, tmle_psi1_mod,
};
pub use tmle_ratio::tmle_psi2;

use crate::eif::{self, EifDecomposition, EpsilonStep, EstimateResult};
use crate::error::Error;
use crate::glm;

/// Fluctuation history and warnings collected during targeting.
#[derive(Debug, Default)]
pub(crate) struct Trace {
    pub history: Vec<EpsilonStep>,
    pub warnings: Vec<String>,
}

impl Trace {
    pub fn warn(&mut self, msg: String) {
        log::warn!("{msg}");
        self.warnings.push(msg);
    }

    pub fn record(&mut self, iteration: usize, component: &str, value: f64) {
        self.history.push(EpsilonStep::new(iteration, component, value));
    }

    /// No-intercept logistic fluctuation; fitting failures give `ε = 0`.
    pub fn logistic_eps(
        &mut self,
        iteration: usize,
        component: &str,
        y: &[f64],
        h: &[f64],
        offset: &[f64],
        weights: Option<&[f64]>,
    ) -> f64 {
        if h.iter().all(|&v| v == 0.0) {
            self.record(iteration, component, 0.0);
            return 0.0;
        }
        let eps = match glm::fluctuate_logistic(y, h, offset, weights) {
            Ok(e) => e,
            Err(e @ (Error::SeparationDetected { .. } | Error::DegenerateOutcome | Error::AllZeroWeights)) => {
                self.warn(format!("epsilon_{component} set to 0 at iteration {iteration}: {e}"));
                0.0
            }
            Err(e) => {
                self.warn(format!("epsilon_{component} set to 0 at iteration {iteration}: {e}"));
                0.0
            }
        };
        self.record(iteration, component, eps);
        eps
    }

    pub fn finish(self, psi: f64, eif: EifDecomposition, iterations: usize, converged: bool) -> EstimateResult {
        let mut out = eif::wald(psi, eif, 0.95);
        out.epsilon_history = self.history;
        out.warnings = self.warnings;
        out.iterations = iterations;
        out.converged = converged;
        out
    }
}

pub(crate) fn logit_all(p: impl Iterator<Item = f64>) -> Vec<f64> {
    p.map(glm::logit).collect()
}
