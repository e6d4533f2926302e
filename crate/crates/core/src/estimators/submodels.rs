//! Fluctuation submodels and their empirical risks.
//!
//! Each submodel reproduces its input at `ε = 0` exactly, and the derivative
//! of the matching risk at `ε = 0` is minus the empirical mean of the
//! corresponding EIF component.

use crate::glm::{clip_prob, expit, logit};

/// `expit(logit p + ε h)`.
pub fn shift_logit(p: f64, eps: f64, h: f64) -> f64 {
    if eps == 0.0 || h == 0.0 {
        return p;
    }
    expit(logit(p) + eps * h)
}

/// Logistic submodel followed by clipping into `[clip, 1 − clip]`.
pub fn shift_logit_clipped(p: f64, eps: f64, h: f64, clip: f64) -> f64 {
    if eps == 0.0 || h == 0.0 {
        return p;
    }
    clip_prob(shift_logit(p, eps, h), clip)
}

/// Truncated-linear density submodel `f (1 + ε D)`.
pub fn tilt_density(f: f64, eps: f64, d: f64) -> f64 {
    if eps == 0.0 {
        return f;
    }
    f * (1.0 + eps * d)
}

fn bernoulli_nll(y: f64, p: f64) -> f64 {
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// `P_n L_A`: Bernoulli loss of `A` under `π_ε = expit(logit π + ε H_A)`.
pub fn risk_propensity(pi1: &[f64], h: &[f64], a: &[u8], eps: f64) -> f64 {
    let n = pi1.len() as f64;
    pi1.iter()
        .zip(h)
        .zip(a)
        .map(|((&p, &h), &a)| bernoulli_nll(a as f64, shift_logit(p, eps, h)))
        .sum::<f64>()
        / n
}

/// `P_n L_M` for a binary mediator: weighted Bernoulli loss of `M` under
/// `f_ε(1) = expit(logit f(1) + ε H_M)`.
pub fn risk_binary_mediator(f1: &[f64], h: &[f64], m: &[f64], weight: &[f64], eps: f64) -> f64 {
    let n = f1.len() as f64;
    (0..f1.len())
        .filter(|&i| weight[i] != 0.0)
        .map(|i| weight[i] * bernoulli_nll(m[i], shift_logit(f1[i], eps, h[i])))
        .sum::<f64>()
        / n
}

/// `P_n L_M` for a continuous mediator: `−w log f_ε(M)` up to the `ε`-free
/// term `−w log f(M)`.
pub fn risk_density(d: &[f64], weight: &[f64], eps: f64) -> f64 {
    let n = d.len() as f64;
    let mut total = 0.0;
    for (&d, &w) in d.iter().zip(weight) {
        if w == 0.0 {
            continue;
        }
        let v = 1.0 + eps * d;
        if v <= 0.0 {
            return f64::INFINITY;
        }
        total -= w * v.ln();
    }
    total / n
}

/// `½ P_n w (r − ε)²`: squared-error loss for an intercept shift.
pub fn risk_shift(resid: &[f64], weight: &[f64], eps: f64) -> f64 {
    let n = resid.len() as f64;
    0.5 * resid.iter().zip(weight).map(|(r, w)| w * (r - eps).powi(2)).sum::<f64>() / n
}

/// Bernoulli loss of a binary `Y` under `μ_ε = expit(logit μ + ε H_Y)`.
pub fn risk_binary_outcome(mu: &[f64], h: &[f64], y: &[f64], eps: f64) -> f64 {
    let n = mu.len() as f64;
    (0..mu.len()).map(|i| bernoulli_nll(y[i], shift_logit(mu[i], eps, h[i]))).sum::<f64>() / n
}

/// Range `(L, R)` of `ε` keeping `1 + ε D` positive for every `D`,
/// intersected with `[−cap, cap]`.
pub fn valid_epsilon_range<'a>(d: impl IntoIterator<Item = &'a f64>, cap: f64) -> (f64, f64) {
    let mut lo = -cap;
    let mut hi = cap;
    for &v in d {
        if v > 0.0 {
            lo = lo.max(-1.0 / v);
        } else if v < 0.0 {
            hi = hi.min(-1.0 / v);
        }
    }
    (lo, hi)
}

/// Minimizes a convex function on `[lo, hi]` by a grid scan and
/// golden-section refinement around the best grid point.
pub fn minimize_on_interval<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, grid: usize) -> f64 {
    let grid = grid.max(3);
    let step = (hi - lo) / (grid - 1) as f64;
    let mut best = 0usize;
    let mut best_val = f64::INFINITY;
    for k in 0..grid {
        let v = f(lo + step * k as f64);
        if v < best_val {
            best_val = v;
            best = k;
        }
    }
    let mut a = lo + step * best.saturating_sub(1) as f64;
    let mut b = (lo + step * (best + 1) as f64).min(hi);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-12 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
