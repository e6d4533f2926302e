//! Targeted estimators under the mediator-density parameterization.

use super::submodels::{minimize_on_interval, risk_density, shift_logit, shift_logit_clipped, valid_epsilon_range};
use super::{logit_all, Trace};
use crate::config::{EstimatorConfig, OutcomeKind};
use crate::data::{Dataset, Folds};
use crate::eif::{self, EstimateResult};
use crate::error::{Error, Result};
use crate::glm::clip_prob;
use crate::nuisance::{prob_of, BinaryMediatorRow, ContinuousMediatorRow, DensityRows, RowSummary};

fn mean(v: impl Iterator<Item = f64>, n: usize) -> f64 {
    v.sum::<f64>() / n as f64
}

fn indicator(a: u8, a0: u8) -> f64 {
    if a == a0 {
        1.0
    } else {
        0.0
    }
}

/// `(P_n Φ_A, P_n Φ_M)` from row summaries.
fn scores_am(s: &[RowSummary], data: &Dataset, a0: u8) -> (f64, f64) {
    let n = s.len();
    let a = mean(s.iter().enumerate().map(|(i, s)| (s.eta[1] - s.eta[0]) * (data.a_f64(i) - s.pi1)), n);
    let m = mean(
        s.iter()
            .enumerate()
            .map(|(i, s)| indicator(data.a()[i], a0) / prob_of(s.pi1, a0) * (s.xi_obs - s.theta)),
        n,
    );
    (a, m)
}

fn score_y(s: &[RowSummary], data: &Dataset) -> f64 {
    mean(s.iter().enumerate().map(|(i, s)| s.ratio * (data.y()[i] - s.mu_own)), s.len())
}

fn summaries_binary(rows: &[BinaryMediatorRow], data: &Dataset, a0: u8) -> Vec<RowSummary> {
    rows.iter().enumerate().map(|(i, r)| r.summarize(data.a()[i], data.m_scalar(i), a0)).collect()
}

fn summaries_continuous(rows: &[ContinuousMediatorRow], data: &Dataset) -> Vec<RowSummary> {
    rows.iter().enumerate().map(|(i, r)| r.summarize(data.a()[i])).collect()
}

fn check_len(rows: usize, data: &Dataset) -> Result<()> {
    if rows != data.n() {
        return Err(Error::RowMismatch(format!("{rows} nuisance rows for {} data rows", data.n())));
    }
    Ok(())
}

/// Weighted intercept `Σ w r / Σ w`.
fn intercept_shift(resid: &[f64], weight: &[f64]) -> f64 {
    let sw: f64 = weight.iter().sum();
    if sw <= 0.0 {
        return 0.0;
    }
    resid.iter().zip(weight).map(|(r, w)| r * w).sum::<f64>() / sw
}

fn constant_outcome(data: &Dataset) -> Option<f64> {
    let y0 = data.y()[0];
    data.y().iter().all(|&v| v == y0).then_some(y0)
}

fn clamp_unit(psi: f64, kind: OutcomeKind) -> f64 {
    match kind {
        OutcomeKind::Binary => psi.clamp(0.0, 1.0),
        OutcomeKind::Continuous => psi,
    }
}

/// Iterative TMLE of `ψ1`, dispatching on the mediator type and outcome kind.
pub fn tmle_psi1(
    rows: &DensityRows,
    data: &Dataset,
    a0: u8,
    cfg: &EstimatorConfig,
    folds: &Folds,
) -> Result<EstimateResult> {
    match (rows, cfg.outcome_kind) {
        (DensityRows::Binary(r), OutcomeKind::Continuous) => tmle_psi1_binary_m(r, data, a0, cfg, folds),
        (DensityRows::Binary(r), OutcomeKind::Binary) => tmle_psi1_binary_y(r, data, a0, cfg, folds),
        (DensityRows::Continuous(r), OutcomeKind::Continuous) => tmle_psi1_continuous_m(r, data, a0, cfg, folds),
        (DensityRows::Continuous(_), OutcomeKind::Binary) => Err(Error::Unsupported(
            "tmle-1 with a binary outcome requires a binary mediator; use tmle-2a or tmle-2b".into(),
        )),
    }
}

/// Fluctuates `π` along `H_A = η(1) − η(0)`.
fn step_propensity(
    rows: &mut [BinaryMediatorRow],
    s: &[RowSummary],
    data: &Dataset,
    clip: f64,
    it: usize,
    trace: &mut Trace,
) -> f64 {
    let h: Vec<f64> = s.iter().map(|s| s.eta[1] - s.eta[0]).collect();
    let a: Vec<f64> = (0..data.n()).map(|i| data.a_f64(i)).collect();
    let off = logit_all(rows.iter().map(|r| r.pi1));
    let eps = trace.logistic_eps(it, "A", &a, &h, &off, None);
    for (r, h) in rows.iter_mut().zip(&h) {
        r.pi1 = shift_logit_clipped(r.pi1, eps, *h, clip);
    }
    eps
}

/// Fluctuates `f(1 | a0, X)` along `H_M = (ξ(1) − ξ(0)) / π(a0)` using rows with `A = a0`.
fn step_binary_mediator(
    rows: &mut [BinaryMediatorRow],
    data: &Dataset,
    a0: u8,
    clip: f64,
    it: usize,
    trace: &mut Trace,
) -> f64 {
    let k = a0 as usize;
    let h: Vec<f64> = rows.iter().map(|r| (r.xi(1) - r.xi(0)) / prob_of(r.pi1, a0)).collect();
    let w: Vec<f64> = data.a().iter().map(|&a| indicator(a, a0)).collect();
    let m: Vec<f64> = (0..data.n()).map(|i| data.m_scalar(i)).collect();
    let off = logit_all(rows.iter().map(|r| r.fm1[k]));
    let eps = trace.logistic_eps(it, "M", &m, &h, &off, Some(&w));
    for (r, h) in rows.iter_mut().zip(&h) {
        r.fm1[k] = shift_logit_clipped(r.fm1[k], eps, *h, clip);
    }
    eps
}

/// Final `ε_Y` for a continuous outcome: weighted intercept with weights equal
/// to the density ratio; shifts `μ` everywhere.
fn step_outcome_shift(s: &[RowSummary], data: &Dataset, it: usize, trace: &mut Trace) -> f64 {
    let resid: Vec<f64> = s.iter().enumerate().map(|(i, s)| data.y()[i] - s.mu_own).collect();
    let w: Vec<f64> = s.iter().map(|s| s.ratio).collect();
    let eps = intercept_shift(&resid, &w);
    trace.record(it, "Y", eps);
    eps
}

/// Iterative TMLE of `ψ1` for a binary mediator and continuous outcome.
pub fn tmle_psi1_binary_m(
    rows: &[BinaryMediatorRow],
    data: &Dataset,
    a0: u8,
    cfg: &EstimatorConfig,
    folds: &Folds,
) -> Result<EstimateResult> {
    check_len(rows.len(), data)?;
    let mut rows = rows.to_vec();
    let mut trace = Trace::default();
    let tol = cfg.score_tolerance(data.n());
    let mut it = 0;
    let converged = loop {
        let s = summaries_binary(&rows, data, a0);
        let (sa, sm) = scores_am(&s, data, a0);
        if sa.abs().max(sm.abs()) <= tol {
            break true;
        }
        if it >= cfg.max_tmle_iter {
            trace.warn(format!("targeting stopped after {it} iterations with score {:.3e}", sa.abs().max(sm.abs())));
            break false;
        }
        it += 1;
        let ea = step_propensity(&mut rows, &s, data, cfg.prob_clip, it, &mut trace);
        let em = step_binary_mediator(&mut rows, data, a0, cfg.prob_clip, it, &mut trace);
        if ea == 0.0 && em == 0.0 {
            trace.warn(format!("targeting stalled at iteration {it}"));
            break false;
        }
    };
    let s = summaries_binary(&rows, data, a0);
    let ey = step_outcome_shift(&s, data, it, &mut trace);
    for r in rows.iter_mut() {
        for m in 0..2 {
            for a in 0..2 {
                r.mu[m][a] += ey;
            }
        }
    }
    let s = summaries_binary(&rows, data, a0);
    let psi = eif::plugin_psi1_from(&s, folds);
    let e = eif::eif_from_summaries(&s, data, a0, psi);
    Ok(trace.finish(psi, e, it, converged))
}

/// Single-step variant: one `ε_M` step with the initial `π`, then `ε_Y`;
/// the estimate averages `η⋆(A_i, X_i)` so the `Φ_A + Φ_X` score vanishes.
pub fn tmle_psi1_mod(
    rows: &[BinaryMediatorRow],
    data: &Dataset,
    a0: u8,
    cfg: &EstimatorConfig,
    folds: &Folds,
) -> Result<EstimateResult> {
    check_len(rows.len(), data)?;
    let mut rows = rows.to_vec();
    let mut trace = Trace::default();
    if cfg.outcome_kind == OutcomeKind::Binary {
        if let Some(c) = constant_outcome(data) {
            return Ok(constant_result(&mut rows, data, a0, c, trace));
        }
    }
    step_binary_mediator(&mut rows, data, a0, cfg.prob_clip, 1, &mut trace);
    let s = summaries_binary(&rows, data, a0);
    match cfg.outcome_kind {
        OutcomeKind::Continuous => {
            let ey = step_outcome_shift(&s, data, 1, &mut trace);
            rows.iter_mut().for_each(|r| r.mu.iter_mut().flatten().for_each(|v| *v += ey));
        }
        OutcomeKind::Binary => {
            step_binary_outcome(&mut rows, &s, data, a0, 1, &mut trace);
        }
    }
    let s = summaries_binary(&rows, data, a0);
    let eta_own: Vec<f64> = s.iter().enumerate().map(|(i, s)| s.eta[data.a()[i] as usize]).collect();
    let psi = clamp_unit(folds.fold_average(&eta_own), cfg.outcome_kind);
    let e = eif::eif_from_summaries(&s, data, a0, psi);
    Ok(trace.finish(psi, e, 1, true))
}

/// Logistic `ε_Y` with clever covariate equal to the density ratio; updates
/// `μ(m, a)` at all four cells.
fn step_binary_outcome(
    rows: &mut [BinaryMediatorRow],
    s: &[RowSummary],
    data: &Dataset,
    a0: u8,
    it: usize,
    trace: &mut Trace,
) -> f64 {
    let k = a0 as usize;
    let h: Vec<f64> = s.iter().map(|s| s.ratio).collect();
    let off = logit_all(s.iter().map(|s| clip_prob(s.mu_own, 1e-12)));
    let eps = trace.logistic_eps(it, "Y", data.y(), &h, &off, None);
    if eps != 0.0 {
        for r in rows.iter_mut() {
            let f = *r;
            for m in 0..2 {
                for a in 0..2 {
                    let ratio = if a == k { 1.0 } else { f.f(m, k) / f.f(m, a) };
                    r.mu[m][a] = clip_prob(shift_logit(f.mu[m][a], eps, ratio), 1e-12);
                }
            }
        }
    }
    eps
}

fn constant_result(rows: &mut [BinaryMediatorRow], data: &Dataset, a0: u8, c: f64, mut trace: Trace) -> EstimateResult {
    trace.warn(format!("outcome is constant ({c}); estimate is that constant"));
    for r in rows.iter_mut() {
        r.mu = [[c; 2]; 2];
    }
    let s = summaries_binary(rows, data, a0);
    let mut e = eif::eif_from_summaries(&s, data, a0, c);
    e.phi_x.iter_mut().for_each(|v| *v = 0.0);
    e.phi_m.iter_mut().for_each(|v| *v = 0.0);
    e.phi_a.iter_mut().for_each(|v| *v = 0.0);
    let e = eif::EifDecomposition::new(e.phi_y, e.phi_m, e.phi_a, e.phi_x);
    trace.finish(c, e, 0, true)
}

/// Iterative TMLE of `ψ1` for a binary mediator and binary outcome, with a
/// logistic outcome fluctuation inside the loop.
pub fn tmle_psi1_binary_y(
    rows: &[BinaryMediatorRow],
    data: &Dataset,
    a0: u8,
    cfg: &EstimatorConfig,
    folds: &Folds,
) -> Result<EstimateResult> {
    check_len(rows.len(), data)?;
    let mut rows = rows.to_vec();
    let trace = Trace::default();
    if let Some(c) = constant_outcome(data) {
        return Ok(constant_result(&mut rows, data, a0, c, trace));
    }
    let mut trace = trace;
    let tol = cfg.score_tolerance(data.n());
    let mut it = 0;
    let converged = loop {
        let s = summaries_binary(&rows, data, a0);
        let (sa, sm) = scores_am(&s, data, a0);
        let worst = sa.abs().max(sm.abs()).max(score_y(&s, data).abs());
        if worst <= tol {
            break true;
        }
        if it >= cfg.max_tmle_iter {
            trace.warn(format!("targeting stopped after {it} iterations with score {worst:.3e}"));
            break false;
        }
        it += 1;
        let ea = step_propensity(&mut rows, &s, data, cfg.prob_clip, it, &mut trace);
        let em = step_binary_mediator(&mut rows, data, a0, cfg.prob_clip, it, &mut trace);
        let s = summaries_binary(&rows, data, a0);
        let ey = step_binary_outcome(&mut rows, &s, data, a0, it, &mut trace);
        if ea == 0.0 && em == 0.0 && ey == 0.0 {
            trace.warn(format!("targeting stalled at iteration {it}"));
            break false;
        }
    };
    let s = summaries_binary(&rows, data, a0);
    let psi = clamp_unit(eif::plugin_psi1_from(&s, folds), OutcomeKind::Binary);
    let e = eif::eif_from_summaries(&s, data, a0, psi);
    Ok(trace.finish(psi, e, it, converged))
}

/// Iterative TMLE of `ψ1` for a continuous univariate mediator. The density
/// `f(· | a0, X)` is tilted by `1 + ε D` with `D = (ξ − θ) / π(a0)`, with `ε`
/// restricted so the tilted density stays positive on the quadrature grid and
/// at every observed mediator value.
pub fn tmle_psi1_continuous_m(
    rows: &[ContinuousMediatorRow],
    data: &Dataset,
    a0: u8,
    cfg: &EstimatorConfig,
    folds: &Folds,
) -> Result<EstimateResult> {
    check_len(rows.len(), data)?;
    if cfg.outcome_kind == OutcomeKind::Binary {
        return Err(Error::Unsupported("tmle-1 with a continuous mediator requires a continuous outcome".into()));
    }
    let mut rows = rows.to_vec();
    let mut trace = Trace::default();
    let tol = cfg.score_tolerance(data.n());
    let n = data.n();
    let w: Vec<f64> = data.a().iter().map(|&a| indicator(a, a0)).collect();
    let mut it = 0;
    let converged = loop {
        let s = summaries_continuous(&rows, data);
        let (sa, sm) = scores_am(&s, data, a0);
        if sa.abs().max(sm.abs()) <= tol {
            break true;
        }
        if it >= cfg.max_tmle_iter {
            trace.warn(format!("targeting stopped after {it} iterations with score {:.3e}", sa.abs().max(sm.abs())));
            break false;
        }
        it += 1;

        let h: Vec<f64> = s.iter().map(|s| s.eta[1] - s.eta[0]).collect();
        let a: Vec<f64> = (0..n).map(|i| data.a_f64(i)).collect();
        let off = logit_all(rows.iter().map(|r| r.pi1));
        let ea = trace.logistic_eps(it, "A", &a, &h, &off, None);
        for (r, h) in rows.iter_mut().zip(&h) {
            r.pi1 = shift_logit_clipped(r.pi1, ea, *h, cfg.prob_clip);
        }

        let mut d_grid = Vec::with_capacity(n);
        let mut d_obs = Vec::with_capacity(n);
        for r in &rows {
            let theta = r.theta();
            let p = prob_of(r.pi1, a0);
            d_grid.push(r.xi_grid().into_iter().map(|v| (v - theta) / p).collect::<Vec<f64>>());
            d_obs.push((r.xi_obs() - theta) / p);
        }
        let (lo, hi) = valid_epsilon_range(d_grid.iter().flatten().chain(&d_obs), 1.0);
        let em = if lo >= hi {
            trace.warn(format!("empty fluctuation range at iteration {it}; epsilon_M set to 0"));
            0.0
        } else {
            let pad = 1e-6 * (hi - lo);
            let risk = |e: f64| risk_density(&d_obs, &w, e);
            let e = minimize_on_interval(risk, lo + pad, hi - pad, 200);
            if risk(e) < risk(0.0) {
                e
            } else {
                0.0
            }
        };
        trace.record(it, "M", em);
        if em != 0.0 {
            for (i, r) in rows.iter_mut().enumerate() {
                for (f, d) in r.f_grid.iter_mut().zip(&d_grid[i]) {
                    *f *= 1.0 + em * d;
                }
                r.f_obs_a0 *= 1.0 + em * d_obs[i];
                if data.a()[i] == a0 {
                    r.f_obs_own = r.f_obs_a0;
                }
            }
        }
        if ea == 0.0 && em == 0.0 {
            trace.warn(format!("targeting stalled at iteration {it}"));
            break false;
        }
    };
    let s = summaries_continuous(&rows, data);
    let ey = step_outcome_shift(&s, data, it, &mut trace);
    for r in rows.iter_mut() {
        for g in r.mu_grid.iter_mut() {
            g.iter_mut().for_each(|v| *v += ey);
        }
        r.mu_obs.iter_mut().for_each(|v| *v += ey);
    }
    let s = summaries_continuous(&rows, data);
    let psi = eif::plugin_psi1_from(&s, folds);
    let e = eif::eif_from_summaries(&s, data, a0, psi);
    Ok(trace.finish(psi, e, it, converged))
}
