//! End-to-end estimation from a dataset and a configuration.

use serde::Serialize;

use crate::config::{EstimatorConfig, EstimatorKind, OutcomeKind};
use crate::crossfit;
use crate::data::{Dataset, Folds, MediatorKind};
use crate::eif::{self, EstimateResult};
use crate::error::{Error, Result};
use crate::estimators;
use crate::nuisance::RatioSource;

/// Checks that the estimator can run on this dataset.
pub fn check_compatible(data: &Dataset, cfg: &EstimatorConfig) -> Result<()> {
    cfg.validate()?;
    if cfg.outcome_kind == OutcomeKind::Binary && !data.outcome_is_binary() {
        return Err(Error::InvalidDataset("binary outcome requested but the outcome is not 0/1".into()));
    }
    if cfg.estimator.uses_density() && data.mediator_kind() == MediatorKind::Multivariate {
        return Err(Error::Unsupported(format!(
            "{} needs a univariate mediator; use tmle-2b, onestep-2b or a plugged density ratio",
            cfg.estimator
        )));
    }
    if cfg.estimator == EstimatorKind::Tmle1Mod && data.mediator_kind() != MediatorKind::Binary {
        return Err(Error::Unsupported("tmle-1-mod requires a binary mediator".into()));
    }
    if cfg.crossfit_folds > data.n() {
        return Err(Error::TooManyFolds { n: data.n(), k: cfg.crossfit_folds });
    }
    Ok(())
}

/// Density-ratio source for ratio-parameterized estimators.
pub fn ratio_source(data: &Dataset, cfg: &EstimatorConfig, plugged: Option<&[f64]>) -> Result<RatioSource> {
    if let Some(v) = plugged {
        if v.len() != data.n() {
            return Err(Error::RowMismatch(format!("ratio table has {} rows, data has {}", v.len(), data.n())));
        }
        return Ok(RatioSource::Plugged(v.to_vec()));
    }
    if cfg.estimator.uses_bayes_ratio() {
        return Ok(RatioSource::BayesRule);
    }
    if data.mediator_kind() == MediatorKind::Multivariate {
        return Err(Error::Unsupported(format!(
            "{} with a multivariate mediator needs a plugged density ratio (--ratio-file); or use tmle-2b",
            cfg.estimator
        )));
    }
    Ok(RatioSource::FromDensity)
}

/// Estimates `ψ(a0)` with the configured estimator. `plugged` supplies
/// `f(M_i | a0, X_i) / f(M_i | A_i, X_i)` for every row.
pub fn estimate(data: &Dataset, cfg: &EstimatorConfig, plugged: Option<&[f64]>) -> Result<EstimateResult> {
    check_compatible(data, cfg)?;
    let folds = Folds::random(data.n(), cfg.crossfit_folds, cfg.seed)?;
    let a0 = cfg.a0;
    use EstimatorKind::*;
    match cfg.estimator {
        Plugin1 | OneStep1 | Tmle1 | Tmle1Mod => {
            let rows = crossfit::density_rows(data, cfg, &folds)?;
            match cfg.estimator {
                Plugin1 => estimators::plugin_density(&rows, data, a0, &folds),
                OneStep1 => estimators::onestep_density(&rows, data, a0, &folds),
                Tmle1 => estimators::tmle_psi1(&rows, data, a0, cfg, &folds),
                _ => match rows {
                    crate::nuisance::DensityRows::Binary(r) => estimators::tmle_psi1_mod(&r, data, a0, cfg, &folds),
                    _ => Err(Error::Unsupported("tmle-1-mod requires a binary mediator".into())),
                },
            }
        }
        Plugin2 | OneStep2a | OneStep2b | Tmle2a | Tmle2b => {
            let source = ratio_source(data, cfg, plugged)?;
            let by_fold = crossfit::ratio_rows_by_fold(data, cfg, &source, &folds)?;
            match cfg.estimator {
                Tmle2a | Tmle2b => estimators::tmle_psi2(&by_fold, data, a0, cfg, &folds),
                _ => {
                    let own = crossfit::own_fold_rows(&by_fold, &folds);
                    if cfg.estimator == Plugin2 {
                        estimators::plugin_ratio(&own, data, a0, &folds)
                    } else {
                        estimators::onestep_ratio(&own, data, a0, &folds)
                    }
                }
            }
        }
    }
}

/// Both counterfactual means and their contrast.
#[derive(Debug, Clone, Serialize)]
pub struct AceEstimate {
    pub psi1: EstimateResult,
    pub psi0: EstimateResult,
    pub ace: EstimateResult,
}

/// `ψ(1) − ψ(0)`. Plugged ratios depend on `a0`, so one table per arm is
/// taken (`plugged[a0]`).
pub fn estimate_ace(data: &Dataset, cfg: &EstimatorConfig, plugged: [Option<&[f64]>; 2]) -> Result<AceEstimate> {
    let run = |a0: u8| {
        let mut c = cfg.clone();
        c.a0 = a0;
        estimate(data, &c, plugged[a0 as usize])
    };
    let psi1 = run(1)?;
    let psi0 = run(0)?;
    let ace = eif::ace(&psi1, &psi0)?;
    Ok(AceEstimate { psi1, psi0, ace })
}
