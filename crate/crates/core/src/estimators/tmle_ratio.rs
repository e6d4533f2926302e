//! Single-pass TMLE under the density-ratio parameterization.

use super::submodels::{shift_logit, shift_logit_clipped};
use super::{logit_all, Trace};
use crate::config::{EstimatorConfig, OutcomeKind};
use crate::data::{Dataset, Folds};
use crate::eif::{self, EstimateResult};
use crate::error::{Error, Result};
use crate::glm::clip_prob;
use crate::nuisance::{fit_sequential, prob_of, RatioRow};

/// TMLE of `ψ2`.
///
/// `fold_rows[k]` holds fold `k`'s nuisances evaluated on every row
/// (a single entry without cross-fitting). Row `i` is scored with the models
/// of its own fold; `γ` is refit on each fold's training rows after the
/// outcome and propensity fluctuations.
pub fn tmle_psi2(
    fold_rows: &[Vec<RatioRow>],
    data: &Dataset,
    a0: u8,
    cfg: &EstimatorConfig,
    folds: &Folds,
) -> Result<EstimateResult> {
    let n = data.n();
    if fold_rows.len() != folds.k() {
        return Err(Error::RowMismatch(format!("{} fold row sets for {} folds", fold_rows.len(), folds.k())));
    }
    if let Some(r) = fold_rows.iter().find(|r| r.len() != n) {
        return Err(Error::RowMismatch(format!("{} nuisance rows for {n} data rows", r.len())));
    }
    let mut fr: Vec<Vec<RatioRow>> = fold_rows.to_vec();
    let own = |fr: &[Vec<RatioRow>], i: usize| fr[folds.fold_of(i)][i];
    let mut trace = Trace::default();

    // Outcome: weighted intercept with ratio weights.
    let w: Vec<f64> = (0..n).map(|i| own(&fr, i).ratio).collect();
    let mu_own: Vec<f64> = (0..n).map(|i| own(&fr, i).mu[data.a()[i] as usize]).collect();
    match cfg.outcome_kind {
        OutcomeKind::Continuous => {
            let sw: f64 = w.iter().sum();
            let ey = if sw > 0.0 {
                (0..n).map(|i| w[i] * (data.y()[i] - mu_own[i])).sum::<f64>() / sw
            } else {
                0.0
            };
            trace.record(1, "Y", ey);
            fr.iter_mut().flatten().for_each(|r| r.mu.iter_mut().for_each(|v| *v += ey));
        }
        OutcomeKind::Binary => {
            let off = logit_all(mu_own.iter().map(|&p| clip_prob(p, 1e-12)));
            let ones = vec![1.0; n];
            let ey = trace.logistic_eps(1, "Y", data.y(), &ones, &off, Some(&w));
            fr.iter_mut()
                .flatten()
                .for_each(|r| r.mu.iter_mut().for_each(|v| *v = clip_prob(shift_logit(*v, ey, 1.0), 1e-12)));
        }
    }

    // Propensity along H_A = κ1 − κ0.
    let h: Vec<f64> = (0..n).map(|i| own(&fr, i).kappa[1] - own(&fr, i).kappa[0]).collect();
    let a: Vec<f64> = (0..n).map(|i| data.a_f64(i)).collect();
    let off = logit_all((0..n).map(|i| own(&fr, i).pi1));
    let ea = trace.logistic_eps(1, "A", &a, &h, &off, None);
    for rows in fr.iter_mut() {
        for r in rows.iter_mut() {
            r.pi1 = shift_logit_clipped(r.pi1, ea, r.kappa[1] - r.kappa[0], cfg.prob_clip);
        }
    }

    // Refit γ on ξ⋆ within each fold's training rows.
    for (k, rows) in fr.iter_mut().enumerate() {
        let xi: Vec<f64> = rows.iter().map(RatioRow::xi).collect();
        let fit = fit_sequential(data, &xi, a0, &folds.rows_outside(k), cfg.learners.sequential)?;
        for (i, r) in rows.iter_mut().enumerate() {
            r.gamma = fit.predict_row(&data.x_row(i));
        }
    }

    // Intercept on γ with weights 1(A = a0) / π⋆(a0).
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        if data.a()[i] == a0 {
            let r = own(&fr, i);
            let wi = 1.0 / prob_of(r.pi1, a0);
            num += wi * (r.xi() - r.gamma);
            den += wi;
        }
    }
    let eg = if den > 0.0 { num / den } else { 0.0 };
    trace.record(1, "gamma", eg);
    fr.iter_mut().flatten().for_each(|r| r.gamma += eg);

    let rows: Vec<RatioRow> = (0..n).map(|i| own(&fr, i)).collect();
    let mut psi = eif::plugin_psi2(&rows, folds);
    if cfg.outcome_kind == OutcomeKind::Binary {
        psi = psi.clamp(0.0, 1.0);
    }
    let e = eif::eif_ratio(&rows, data, a0, psi)?;
    Ok(trace.finish(psi, e, 1, true))
}
