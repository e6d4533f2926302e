//! Weighted least squares and IRLS logistic regression.
//!
//! Every nuisance regression and every targeting fluctuation goes through the
//! two fitters here. Regressors are passed as raw inputs and expanded by a
//! [`DesignSpec`], which the fitted model keeps so prediction takes the same
//! raw inputs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::Learner;
use crate::error::{Error, Result};

pub const SEPARATION_THRESHOLD: f64 = 30.0;
const RIDGE: f64 = 1e-8;

pub fn expit(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `ln(1 + e^v)` without overflow.
fn softplus(v: f64) -> f64 {
    if v > 0.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

pub fn clip_prob(p: f64, clip: f64) -> f64 {
    p.clamp(clip, 1.0 - clip)
}

/// How raw regressors map onto design columns (the intercept is separate).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub learner: Learner,
    pub n_inputs: usize,
}

impl DesignSpec {
    pub fn new(learner: Learner, n_inputs: usize) -> Self {
        DesignSpec { learner, n_inputs }
    }

    /// Raw columns used as-is.
    pub fn identity(n_inputs: usize) -> Self {
        DesignSpec::new(Learner::MainTerms, n_inputs)
    }

    pub fn n_columns(&self) -> usize {
        let p = self.n_inputs;
        match self.learner {
            Learner::InterceptOnly => 0,
            Learner::MainTerms => p,
            Learner::PairwiseInteractions => p + p * p.saturating_sub(1) / 2,
        }
    }

    pub fn expand_row_into(&self, raw: &[f64], out: &mut Vec<f64>) {
        debug_assert_eq!(raw.len(), self.n_inputs);
        match self.learner {
            Learner::InterceptOnly => {}
            Learner::MainTerms => out.extend_from_slice(raw),
            Learner::PairwiseInteractions => {
                out.extend_from_slice(raw);
                for i in 0..raw.len() {
                    for j in (i + 1)..raw.len() {
                        out.push(raw[i] * raw[j]);
                    }
                }
            }
        }
    }

    pub fn expand(&self, raw: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if raw.ncols() != self.n_inputs {
            return Err(Error::DimensionMismatch(format!(
                "design expects {} inputs, got {}",
                self.n_inputs,
                raw.ncols()
            )));
        }
        if self.learner == Learner::MainTerms {
            return Ok(raw.clone());
        }
        let cols = self.n_columns();
        let mut data = Vec::with_capacity(raw.nrows() * cols);
        let mut row = Vec::with_capacity(self.n_inputs);
        let mut buf = Vec::with_capacity(cols);
        for i in 0..raw.nrows() {
            row.clear();
            row.extend(raw.row(i).iter().copied());
            buf.clear();
            self.expand_row_into(&row, &mut buf);
            data.extend_from_slice(&buf);
        }
        Ok(DMatrix::from_row_slice(raw.nrows(), cols, &data))
    }
}

/// Design with an optional leading intercept column.
fn full_design(spec: &DesignSpec, raw: &DMatrix<f64>, intercept: bool) -> Result<DMatrix<f64>> {
    let expanded = spec.expand(raw)?;
    if !intercept {
        return Ok(expanded);
    }
    let n = expanded.nrows();
    let p = expanded.ncols();
    Ok(DMatrix::from_fn(n, p + 1, |r, c| if c == 0 { 1.0 } else { expanded[(r, c - 1)] }))
}

fn check_lengths(n: usize, y: usize, weights: Option<&[f64]>, offset: Option<&[f64]>) -> Result<()> {
    if y != n {
        return Err(Error::DimensionMismatch(format!("design has {n} rows, response has {y}")));
    }
    if let Some(w) = weights {
        if w.len() != n {
            return Err(Error::DimensionMismatch(format!("{} weights for {n} rows", w.len())));
        }
        if w.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidConfig("weights must be finite and nonnegative".into()));
        }
        if w.iter().all(|&v| v == 0.0) {
            return Err(Error::AllZeroWeights);
        }
    }
    if let Some(o) = offset {
        if o.len() != n {
            return Err(Error::DimensionMismatch(format!("{} offsets for {n} rows", o.len())));
        }
    }
    Ok(())
}

/// `Z' diag(w) Z` and `Z' diag(w) r`.
fn weighted_cross(z: &DMatrix<f64>, w: &[f64], r: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let p = z.ncols();
    let mut zw = z.clone();
    for (i, &wi) in w.iter().enumerate() {
        zw.row_mut(i).scale_mut(wi);
    }
    let xtx = zw.tr_mul(z);
    let rhs = zw.tr_mul(&DVector::from_column_slice(r));
    debug_assert_eq!(xtx.nrows(), p);
    (xtx, rhs)
}

/// Solves a symmetric positive semidefinite system, falling back to a small
/// ridge and then to a pseudo-inverse.
fn solve_spd(a: DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if let Some(ch) = a.clone().cholesky() {
        let x = ch.solve(b);
        if x.iter().all(|v| v.is_finite()) {
            return x;
        }
    }
    let p = a.nrows();
    let scale = (a.trace() / p.max(1) as f64).abs().max(1.0);
    let ridged = &a + DMatrix::identity(p, p) * (RIDGE * scale);
    if let Some(ch) = ridged.cholesky() {
        return ch.solve(b);
    }
    let svd = a.svd(true, true);
    svd.solve(b, 1e-12).unwrap_or_else(|_| DVector::zeros(p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    /// Intercept first when `intercept` is set.
    pub coefficients: Vec<f64>,
    pub intercept: bool,
    pub spec: DesignSpec,
}

impl LinearFit {
    pub fn from_coefficients(spec: DesignSpec, intercept: bool, coefficients: Vec<f64>) -> Self {
        LinearFit { coefficients, intercept, spec }
    }

    /// Constant prediction `c` for any input of width `n_inputs`.
    pub fn constant(n_inputs: usize, c: f64) -> Self {
        LinearFit::from_coefficients(DesignSpec::new(Learner::InterceptOnly, n_inputs), true, vec![c])
    }

    /// Linear predictor for one raw input row (offset excluded).
    pub fn predict_row(&self, raw: &[f64]) -> f64 {
        let mut buf = Vec::with_capacity(self.spec.n_columns());
        self.spec.expand_row_into(raw, &mut buf);
        let (b0, rest) = if self.intercept {
            (self.coefficients[0], &self.coefficients[1..])
        } else {
            (0.0, &self.coefficients[..])
        };
        b0 + buf.iter().zip(rest).map(|(x, b)| x * b).sum::<f64>()
    }
}

/// Minimizes `Σ w (y − offset − Zβ)²`.
pub fn fit_linear(
    raw: &DMatrix<f64>,
    spec: DesignSpec,
    y: &[f64],
    weights: Option<&[f64]>,
    offset: Option<&[f64]>,
    intercept: bool,
) -> Result<LinearFit> {
    let n = raw.nrows();
    check_lengths(n, y.len(), weights, offset)?;
    let z = full_design(&spec, raw, intercept)?;
    if z.ncols() == 0 {
        return Ok(LinearFit::from_coefficients(spec, intercept, Vec::new()));
    }
    let ones;
    let w = match weights {
        Some(w) => w,
        None => {
            ones = vec![1.0; n];
            &ones
        }
    };
    let r: Vec<f64> = match offset {
        Some(o) => y.iter().zip(o).map(|(y, o)| y - o).collect(),
        None => y.to_vec(),
    };
    let (xtx, rhs) = weighted_cross(&z, w, &r);
    let beta = solve_spd(xtx, &rhs);
    Ok(LinearFit::from_coefficients(spec, intercept, beta.iter().copied().collect()))
}

pub fn predict_linear(fit: &LinearFit, raw: &DMatrix<f64>, offset: Option<&[f64]>) -> Result<Vec<f64>> {
    if raw.ncols() != fit.spec.n_inputs {
        return Err(Error::DimensionMismatch(format!(
            "fit expects {} inputs, got {}",
            fit.spec.n_inputs,
            raw.ncols()
        )));
    }
    let mut row = Vec::with_capacity(raw.ncols());
    Ok((0..raw.nrows())
        .map(|i| {
            row.clear();
            row.extend(raw.row(i).iter().copied());
            fit.predict_row(&row) + offset.map_or(0.0, |o| o[i])
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub linear: LinearFit,
    pub converged: bool,
    pub iterations: usize,
    /// Deviance at the start and after each accepted IRLS step.
    pub deviance_trace: Vec<f64>,
}

impl LogisticFit {
    pub fn from_coefficients(spec: DesignSpec, intercept: bool, coefficients: Vec<f64>) -> Self {
        LogisticFit {
            linear: LinearFit::from_coefficients(spec, intercept, coefficients),
            converged: true,
            iterations: 0,
            deviance_trace: Vec::new(),
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.linear.coefficients
    }

    /// Unclipped probability for one raw input row.
    pub fn prob_row(&self, raw: &[f64], offset: f64) -> f64 {
        expit(self.linear.predict_row(raw) + offset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrlsOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        IrlsOptions { max_iter: 100, tol: 1e-10 }
    }
}

fn deviance(eta: &[f64], y: &[f64], w: &[f64]) -> f64 {
    2.0 * eta
        .iter()
        .zip(y)
        .zip(w)
        .map(|((&e, &y), &w)| w * (y * softplus(-e) + (1.0 - y) * softplus(e)))
        .sum::<f64>()
}

/// IRLS maximizer of the weighted Bernoulli log-likelihood, starting at zero,
/// with step-halving whenever the deviance would increase.
pub fn fit_logistic(
    raw: &DMatrix<f64>,
    spec: DesignSpec,
    y: &[f64],
    weights: Option<&[f64]>,
    offset: Option<&[f64]>,
    intercept: bool,
    opts: IrlsOptions,
) -> Result<LogisticFit> {
    let n = raw.nrows();
    check_lengths(n, y.len(), weights, offset)?;
    if let Some(i) = y.iter().position(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidDataset(format!(
            "logistic response must be 0/1, found {} at row {i}",
            y[i]
        )));
    }
    let ones = vec![1.0; n];
    let w = weights.unwrap_or(&ones);
    let zeros = vec![0.0; n];
    let o = offset.unwrap_or(&zeros);

    let active: Vec<usize> = (0..n).filter(|&i| w[i] > 0.0).collect();
    let y_const = active.iter().all(|&i| y[i] == y[active[0]]);
    let o_const = active.iter().all(|&i| o[i] == o[active[0]]);
    if y_const && o_const {
        return Err(Error::DegenerateOutcome);
    }

    let z = full_design(&spec, raw, intercept)?;
    let p = z.ncols();
    let mut beta = DVector::<f64>::zeros(p);
    let mut eta: Vec<f64> = o.to_vec();
    let mut dev = deviance(&eta, y, w);
    let mut trace = vec![dev];
    if p == 0 {
        return Ok(LogisticFit {
            linear: LinearFit::from_coefficients(spec, intercept, Vec::new()),
            converged: true,
            iterations: 0,
            deviance_trace: trace,
        });
    }

    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=opts.max_iter {
        iterations = it;
        let prob: Vec<f64> = eta.iter().map(|&e| expit(e)).collect();
        let resid: Vec<f64> = prob.iter().zip(y).map(|(p, y)| y - p).collect();
        let fisher_w: Vec<f64> = prob.iter().zip(w).map(|(p, w)| w * p * (1.0 - p)).collect();
        let (info, _) = weighted_cross(&z, &fisher_w, &resid);
        let score = {
            let wr: Vec<f64> = resid.iter().zip(w).map(|(r, w)| r * w).collect();
            z.tr_mul(&DVector::from_column_slice(&wr))
        };
        let delta = solve_spd(info, &score);

        let newton = delta.amax();
        if newton < 1e-6 {
            // Quadratic regime: deviance differences are at rounding level, so
            // take the full Newton step and record it only if it did not rise.
            beta += &delta;
            let zb = &z * &beta;
            eta = zb.iter().zip(o).map(|(a, b)| a + b).collect();
            let new_dev = deviance(&eta, y, w);
            if new_dev <= dev {
                dev = new_dev;
                trace.push(dev);
            }
            if newton < opts.tol {
                converged = true;
                break;
            }
            continue;
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=10 {
            let cand = &beta + &delta * step;
            let zb = &z * &cand;
            let cand_eta: Vec<f64> = zb.iter().zip(o).map(|(a, b)| a + b).collect();
            let cand_dev = deviance(&cand_eta, y, w);
            if cand_dev.is_finite() && cand_dev <= dev {
                accepted = Some((cand, cand_eta, cand_dev));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, cand_eta, cand_dev)) = accepted else {
            break;
        };
        beta = cand;
        eta = cand_eta;
        dev = cand_dev;
        trace.push(dev);
        if beta.amax() > SEPARATION_THRESHOLD {
            return Err(Error::SeparationDetected { threshold: SEPARATION_THRESHOLD });
        }
    }

    Ok(LogisticFit {
        linear: LinearFit::from_coefficients(spec, intercept, beta.iter().copied().collect()),
        converged,
        iterations,
        deviance_trace: trace,
    })
}

/// Fitted probabilities clipped to `[clip, 1 − clip]`.
pub fn predict_logistic(
    fit: &LogisticFit,
    raw: &DMatrix<f64>,
    offset: Option<&[f64]>,
    clip: f64,
) -> Result<Vec<f64>> {
    Ok(predict_linear(&fit.linear, raw, offset)?
        .into_iter()
        .map(|e| clip_prob(expit(e), clip))
        .collect())
}

/// Closed-form no-intercept weighted fluctuation `Σ w h (r − ε h) = 0`, used
/// when the clever covariate enters a Gaussian loss.
pub fn weighted_mean(values: &[f64], weights: &[f64]) -> Result<f64> {
    let sw: f64 = weights.iter().sum();
    if sw <= 0.0 {
        return Err(Error::AllZeroWeights);
    }
    Ok(values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / sw)
}

/// One-column no-intercept logistic fluctuation with offset: returns ε.
pub fn fluctuate_logistic(y: &[f64], h: &[f64], offset: &[f64], weights: Option<&[f64]>) -> Result<f64> {
    let design = DMatrix::from_column_slice(h.len(), 1, h);
    let fit = fit_logistic(
        &design,
        DesignSpec::identity(1),
        y,
        weights,
        Some(offset),
        false,
        IrlsOptions::default(),
    )?;
    Ok(fit.coefficients()[0])
}
