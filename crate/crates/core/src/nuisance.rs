//! Nuisance fits for both parameterizations and their per-row evaluations.
//!
//! Estimators never touch fitted models directly. They work on evaluated rows
//! ([`BinaryMediatorRow`], [`ContinuousMediatorRow`], [`RatioRow`]) so the same
//! targeting code serves ordinary fits, cross-fitting and injected oracle
//! nuisances.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::config::{EstimatorConfig, Learner, MediatorDensity, OutcomeKind};
use crate::data::{Dataset, MediatorKind};
use crate::density::{
    self, BandwidthRule, CondDensityModel, DensityKind, DensityRatioModel, Grid,
};
use crate::error::{Error, Result};
use crate::glm::{self, clip_prob, DesignSpec, IrlsOptions, LinearFit, LogisticFit};

#[derive(Debug, Clone)]
pub enum OutcomeFit {
    Linear(LinearFit),
    Logistic(LogisticFit),
}

/// `μ(m, a, x) = E[Y | M = m, A = a, X = x]` over inputs `[M..., A, X...]`.
#[derive(Debug, Clone)]
pub struct OutcomeModel {
    pub fit: OutcomeFit,
    pub clip: f64,
}

fn max_row(m: &[f64], a: u8, x: &[f64]) -> Vec<f64> {
    let mut row = Vec::with_capacity(m.len() + 1 + x.len());
    row.extend_from_slice(m);
    row.push(a as f64);
    row.extend_from_slice(x);
    row
}

impl OutcomeModel {
    pub fn fit(data: &Dataset, kind: OutcomeKind, learner: Learner, clip: f64) -> Result<Self> {
        let d = data.n_mediators();
        let p = data.n_covariates();
        let design = DMatrix::from_fn(data.n(), d + 1 + p, |r, c| {
            if c < d {
                data.m()[(r, c)]
            } else if c == d {
                data.a_f64(r)
            } else {
                data.x()[(r, c - d - 1)]
            }
        });
        let spec = DesignSpec::new(learner, d + 1 + p);
        let fit = match kind {
            OutcomeKind::Continuous => OutcomeFit::Linear(glm::fit_linear(&design, spec, data.y(), None, None, true)?),
            OutcomeKind::Binary => {
                if !data.outcome_is_binary() {
                    return Err(Error::InvalidDataset("binary outcome must be coded 0/1".into()));
                }
                match glm::fit_logistic(&design, spec, data.y(), None, None, true, IrlsOptions::default()) {
                    Ok(f) => OutcomeFit::Logistic(f),
                    Err(Error::DegenerateOutcome) => {
                        let b0 = glm::logit(clip_prob(data.y()[0], clip));
                        OutcomeFit::Logistic(LogisticFit::from_coefficients(
                            DesignSpec::new(Learner::InterceptOnly, d + 1 + p),
                            true,
                            vec![b0],
                        ))
                    }
                    Err(e) => return Err(e),
                }
            }
        };
        Ok(OutcomeModel { fit, clip })
    }

    pub fn predict(&self, m: &[f64], a: u8, x: &[f64]) -> f64 {
        let row = max_row(m, a, x);
        match &self.fit {
            OutcomeFit::Linear(f) => f.predict_row(&row),
            OutcomeFit::Logistic(f) => clip_prob(f.prob_row(&row, 0.0), self.clip),
        }
    }
}

/// `π(1 | x)`, clipped.
#[derive(Debug, Clone)]
pub struct PropensityModel {
    pub fit: LogisticFit,
    pub clip: f64,
}

impl PropensityModel {
    pub fn fit(data: &Dataset, learner: Learner, clip: f64) -> Result<Self> {
        for arm in [0u8, 1] {
            if data.arm_size(arm) == 0 {
                return Err(Error::EmptyTreatmentArm { arm });
            }
        }
        let a: Vec<f64> = (0..data.n()).map(|i| data.a_f64(i)).collect();
        let spec = DesignSpec::new(learner, data.n_covariates());
        let fit = glm::fit_logistic(data.x(), spec, &a, None, None, true, IrlsOptions::default())?;
        Ok(PropensityModel { fit, clip })
    }

    pub fn pi1(&self, x: &[f64]) -> f64 {
        clip_prob(self.fit.prob_row(x, 0.0), self.clip)
    }
}

pub fn prob_of(pi1: f64, a: u8) -> f64 {
    if a == 1 {
        pi1
    } else {
        1.0 - pi1
    }
}

/// Per-row quantities every density-parameterized estimator needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowSummary {
    /// `ξ(M_i, X_i)`.
    pub xi_obs: f64,
    pub theta: f64,
    /// `η(a, X_i)` for `a = 0, 1`.
    pub eta: [f64; 2],
    /// `μ(M_i, A_i, X_i)`.
    pub mu_own: f64,
    /// `f(M_i | a0, X_i) / f(M_i | A_i, X_i)`.
    pub ratio: f64,
    pub pi1: f64,
}

/// Evaluated nuisances for one row with a binary mediator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryMediatorRow {
    /// `mu[m][a] = μ(m, a, X_i)`.
    pub mu: [[f64; 2]; 2],
    pub pi1: f64,
    /// `fm1[a] = P(M = 1 | a, X_i)`.
    pub fm1: [f64; 2],
}

impl BinaryMediatorRow {
    pub fn f(&self, m: usize, a: usize) -> f64 {
        if m == 1 {
            self.fm1[a]
        } else {
            1.0 - self.fm1[a]
        }
    }

    pub fn xi(&self, m: usize) -> f64 {
        self.mu[m][0] * (1.0 - self.pi1) + self.mu[m][1] * self.pi1
    }

    pub fn eta(&self, a: usize, a0: usize) -> f64 {
        self.mu[1][a] * self.fm1[a0] + self.mu[0][a] * (1.0 - self.fm1[a0])
    }

    pub fn theta(&self, a0: usize) -> f64 {
        self.xi(1) * self.fm1[a0] + self.xi(0) * (1.0 - self.fm1[a0])
    }

    pub fn summarize(&self, a: u8, m: f64, a0: u8) -> RowSummary {
        let (a, a0, mi) = (a as usize, a0 as usize, m as usize);
        RowSummary {
            xi_obs: self.xi(mi),
            theta: self.theta(a0),
            eta: [self.eta(0, a0), self.eta(1, a0)],
            mu_own: self.mu[mi][a],
            ratio: if a == a0 { 1.0 } else { self.f(mi, a0) / self.f(mi, a) },
            pi1: self.pi1,
        }
    }
}

/// Evaluated nuisances for one row with a continuous univariate mediator.
/// `f_grid` and the observed densities are normalized so the quadrature
/// integrates each conditional density to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousMediatorRow {
    pub grid: Arc<Grid>,
    /// `mu_grid[a][k] = μ(m_k, a, X_i)`.
    pub mu_grid: [Vec<f64>; 2],
    /// `f(m_k | a0, X_i)`.
    pub f_grid: Vec<f64>,
    /// `μ(M_i, a, X_i)`.
    pub mu_obs: [f64; 2],
    /// `f(M_i | a0, X_i)`.
    pub f_obs_a0: f64,
    /// `f(M_i | A_i, X_i)`; equals `f_obs_a0` when `A_i = a0`.
    pub f_obs_own: f64,
    pub pi1: f64,
}

impl ContinuousMediatorRow {
    pub fn xi_grid(&self) -> Vec<f64> {
        self.mu_grid[0]
            .iter()
            .zip(&self.mu_grid[1])
            .map(|(m0, m1)| m0 * (1.0 - self.pi1) + m1 * self.pi1)
            .collect()
    }

    pub fn xi_obs(&self) -> f64 {
        self.mu_obs[0] * (1.0 - self.pi1) + self.mu_obs[1] * self.pi1
    }

    fn integrate(&self, g: &[f64]) -> f64 {
        self.grid
            .weights
            .iter()
            .zip(g)
            .zip(&self.f_grid)
            .map(|((w, g), f)| w * g * f)
            .sum()
    }

    pub fn eta(&self, a: usize) -> f64 {
        self.integrate(&self.mu_grid[a])
    }

    pub fn theta(&self) -> f64 {
        (1.0 - self.pi1) * self.eta(0) + self.pi1 * self.eta(1)
    }

    pub fn summarize(&self, a: u8) -> RowSummary {
        let eta = [self.eta(0), self.eta(1)];
        RowSummary {
            xi_obs: self.xi_obs(),
            theta: (1.0 - self.pi1) * eta[0] + self.pi1 * eta[1],
            eta,
            mu_own: self.mu_obs[a as usize],
            ratio: if self.f_obs_own > 0.0 { self.f_obs_a0 / self.f_obs_own } else { 1.0 },
            pi1: self.pi1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DensityRows {
    Binary(Vec<BinaryMediatorRow>),
    Continuous(Vec<ContinuousMediatorRow>),
}

impl DensityRows {
    pub fn len(&self) -> usize {
        match self {
            DensityRows::Binary(r) => r.len(),
            DensityRows::Continuous(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn summaries(&self, data: &Dataset, a0: u8) -> Result<Vec<RowSummary>> {
        if self.len() != data.n() {
            return Err(Error::RowMismatch(format!("{} nuisance rows for {} data rows", self.len(), data.n())));
        }
        Ok(match self {
            DensityRows::Binary(rows) => rows
                .iter()
                .enumerate()
                .map(|(i, r)| r.summarize(data.a()[i], data.m_scalar(i), a0))
                .collect(),
            DensityRows::Continuous(rows) => rows.iter().enumerate().map(|(i, r)| r.summarize(data.a()[i])).collect(),
        })
    }

    /// Rows at the given positions, in order.
    pub fn select(&self, idx: &[usize]) -> DensityRows {
        match self {
            DensityRows::Binary(r) => DensityRows::Binary(idx.iter().map(|&i| r[i]).collect()),
            DensityRows::Continuous(r) => DensityRows::Continuous(idx.iter().map(|&i| r[i].clone()).collect()),
        }
    }
}

/// `(μ, f_M, π)` with `p_X` the empirical distribution.
#[derive(Debug, Clone)]
pub struct NuisanceSetDensity {
    pub mu: OutcomeModel,
    pub pi: PropensityModel,
    pub fm: CondDensityModel,
}

pub fn fit_mediator_density(data: &Dataset, cfg: &EstimatorConfig) -> Result<CondDensityModel> {
    let kind = match data.mediator_kind() {
        MediatorKind::Binary => DensityKind::BernoulliLogistic,
        MediatorKind::Continuous => match cfg.learners.density {
            MediatorDensity::Kernel => DensityKind::KernelGaussian,
            MediatorDensity::Normal => DensityKind::ParametricNormal,
        },
        MediatorKind::Multivariate => {
            return Err(Error::Unsupported(
                "mediator densities are not fit for multivariate mediators; use tmle-2b/onestep-2b or a plugged ratio"
                    .into(),
            ))
        }
    };
    CondDensityModel::fit(data, kind, &BandwidthRule::Silverman, cfg.learners.mediator, cfg.prob_clip)
}

impl NuisanceSetDensity {
    pub fn fit(data: &Dataset, cfg: &EstimatorConfig) -> Result<Self> {
        let fm = fit_mediator_density(data, cfg)?;
        let mu = OutcomeModel::fit(data, cfg.outcome_kind, cfg.learners.outcome, cfg.prob_clip)?;
        let pi = PropensityModel::fit(data, cfg.learners.propensity, cfg.prob_clip)?;
        Ok(NuisanceSetDensity { mu, pi, fm })
    }

    /// `ξ(m, x) = Σ_a μ(m, a, x) π(a | x)`.
    pub fn xi(&self, m: &[f64], x: &[f64]) -> f64 {
        let pi1 = self.pi.pi1(x);
        self.mu.predict(m, 0, x) * (1.0 - pi1) + self.mu.predict(m, 1, x) * pi1
    }

    /// `η(a, x) = ∫ μ(m, a, x) f(m | a0, x) dm`.
    pub fn eta(&self, a: u8, x: &[f64], a0: u8, grid_size: usize) -> Result<f64> {
        density::integrate_mediator(|m| self.mu.predict(&[m], a, x), &self.fm, a0, x, grid_size)
    }

    /// `θ(x) = ∫ ξ(m, x) f(m | a0, x) dm`.
    pub fn theta(&self, x: &[f64], a0: u8, grid_size: usize) -> Result<f64> {
        density::integrate_mediator(|m| self.xi(&[m], x), &self.fm, a0, x, grid_size)
    }

    /// Evaluates the nuisances on the rows of `data` (which need not be the
    /// training data).
    pub fn rows(&self, data: &Dataset, a0: u8, grid_size: usize) -> Result<DensityRows> {
        if self.fm.is_binary() {
            let rows = (0..data.n())
                .map(|i| {
                    let x = data.x_row(i);
                    let mut mu = [[0.0; 2]; 2];
                    for (m, mu_m) in mu.iter_mut().enumerate() {
                        for (a, v) in mu_m.iter_mut().enumerate() {
                            *v = self.mu.predict(&[m as f64], a as u8, &x);
                        }
                    }
                    Ok(BinaryMediatorRow {
                        mu,
                        pi1: self.pi.pi1(&x),
                        fm1: [self.fm.prob_one(0, &x)?, self.fm.prob_one(1, &x)?],
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(DensityRows::Binary(rows));
        }
        if data.n_mediators() != 1 {
            return Err(Error::DimensionMismatch("density rows need a single mediator column".into()));
        }
        let grid = Arc::new(self.fm.grid(grid_size)?);
        let rows = (0..data.n())
            .map(|i| {
                let x = data.x_row(i);
                let mi = data.m_scalar(i);
                let ai = data.a()[i];
                let mu_grid = [0u8, 1].map(|a| grid.points.iter().map(|&m| self.mu.predict(&[m], a, &x)).collect());
                let mut f_grid = self.fm.eval_many(&grid.points, a0, &x);
                let norm = grid.integrate(&f_grid);
                let norm = if norm > 0.0 { norm } else { 1.0 };
                f_grid.iter_mut().for_each(|f| *f /= norm);
                let f_obs_a0 = self.fm.eval(mi, a0, &x) / norm;
                let f_obs_own = if ai == a0 {
                    f_obs_a0
                } else {
                    let own = self.fm.eval_many(&grid.points, ai, &x);
                    let own_norm = grid.integrate(&own);
                    self.fm.eval(mi, ai, &x) / if own_norm > 0.0 { own_norm } else { 1.0 }
                };
                ContinuousMediatorRow {
                    grid: Arc::clone(&grid),
                    mu_grid,
                    f_grid,
                    mu_obs: [self.mu.predict(&[mi], 0, &x), self.mu.predict(&[mi], 1, &x)],
                    f_obs_a0,
                    f_obs_own: f_obs_own.max(f64::MIN_POSITIVE),
                    pi1: self.pi.pi1(&x),
                }
            })
            .collect();
        Ok(DensityRows::Continuous(rows))
    }
}

/// Where the density ratio `f(M | a0, X) / f(M | A, X)` comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum RatioSource {
    BayesRule,
    FromDensity,
    Plugged(Vec<f64>),
}

/// Regression of `pseudo` on `X` among training rows with `A = a0`.
pub fn fit_sequential(
    data: &Dataset,
    pseudo: &[f64],
    a0: u8,
    train: &[usize],
    learner: Learner,
) -> Result<LinearFit> {
    let rows: Vec<usize> = train.iter().copied().filter(|&i| data.a()[i] == a0).collect();
    if rows.len() < 2 {
        return Err(Error::InsufficientRowsInArm { arm: a0, found: rows.len(), required: 2 });
    }
    let p = data.n_covariates();
    let x = DMatrix::from_fn(rows.len(), p, |r, c| data.x()[(rows[r], c)]);
    let y: Vec<f64> = rows.iter().map(|&i| pseudo[i]).collect();
    glm::fit_linear(&x, DesignSpec::new(learner, p), &y, None, None, true)
}

/// `γ`: regression of `ξ(M_i, X_i)` on `X` among `A = a0`.
pub fn sequential_gamma(
    mu: &OutcomeModel,
    pi: &PropensityModel,
    data: &Dataset,
    a0: u8,
    learner: Learner,
) -> Result<LinearFit> {
    let xi: Vec<f64> = (0..data.n())
        .map(|i| {
            let (m, x) = (data.m_row(i), data.x_row(i));
            let pi1 = pi.pi1(&x);
            mu.predict(&m, 0, &x) * (1.0 - pi1) + mu.predict(&m, 1, &x) * pi1
        })
        .collect();
    let all: Vec<usize> = (0..data.n()).collect();
    fit_sequential(data, &xi, a0, &all, learner)
}

/// `κ_a`: regression of `μ(M_i, a, X_i)` on `X` among `A = a0`.
pub fn sequential_kappa(mu: &OutcomeModel, data: &Dataset, a0: u8, a: u8, learner: Learner) -> Result<LinearFit> {
    let pseudo: Vec<f64> = (0..data.n()).map(|i| mu.predict(&data.m_row(i), a, &data.x_row(i))).collect();
    let all: Vec<usize> = (0..data.n()).collect();
    fit_sequential(data, &pseudo, a0, &all, learner)
}

/// Evaluated ratio-parameterization nuisances for one row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioRow {
    /// `μ(M_i, a, X_i)` for `a = 0, 1`.
    pub mu: [f64; 2],
    pub pi1: f64,
    /// `f(M_i | a0, X_i) / f(M_i | A_i, X_i)`.
    pub ratio: f64,
    pub gamma: f64,
    pub kappa: [f64; 2],
}

impl RatioRow {
    pub fn xi(&self) -> f64 {
        self.mu[0] * (1.0 - self.pi1) + self.mu[1] * self.pi1
    }
}

/// `(μ, π, γ, κ0, κ1, f^r[, λ])` for a fixed `a0`.
#[derive(Debug, Clone)]
pub struct NuisanceSetRatio {
    pub a0: u8,
    pub mu: OutcomeModel,
    pub pi: PropensityModel,
    pub gamma: LinearFit,
    pub kappa: [LinearFit; 2],
    pub fratio: DensityRatioModel,
    pub lambda: Option<LogisticFit>,
}

impl NuisanceSetRatio {
    pub fn fit(data: &Dataset, cfg: &EstimatorConfig, source: &RatioSource) -> Result<Self> {
        let a0 = cfg.a0;
        let l = &cfg.learners;
        let mu = OutcomeModel::fit(data, cfg.outcome_kind, l.outcome, cfg.prob_clip)?;
        let pi = PropensityModel::fit(data, l.propensity, cfg.prob_clip)?;
        let gamma = sequential_gamma(&mu, &pi, data, a0, l.sequential)?;
        let kappa = [
            sequential_kappa(&mu, data, a0, 0, l.sequential)?,
            sequential_kappa(&mu, data, a0, 1, l.sequential)?,
        ];
        let (fratio, lambda) = match source {
            RatioSource::BayesRule => {
                let lambda = density::fit_lambda(data, l.treatment_given_mediator)?;
                (DensityRatioModel::bayes(lambda.clone(), pi.fit.clone(), cfg.prob_clip), Some(lambda))
            }
            RatioSource::FromDensity => (DensityRatioModel::from_density(fit_mediator_density(data, cfg)?), None),
            RatioSource::Plugged(values) => {
                if values.len() != data.n() {
                    return Err(Error::RowMismatch(format!(
                        "ratio table has {} rows, data has {}",
                        values.len(),
                        data.n()
                    )));
                }
                (DensityRatioModel::Plugged(values.clone()), None)
            }
        };
        Ok(NuisanceSetRatio { a0, mu, pi, gamma, kappa, fratio, lambda })
    }

    pub fn rows(&self, data: &Dataset) -> Result<Vec<RatioRow>> {
        let ratio = self.fratio.observed(data, self.a0)?;
        Ok((0..data.n())
            .map(|i| {
                let (m, x) = (data.m_row(i), data.x_row(i));
                RatioRow {
                    mu: [self.mu.predict(&m, 0, &x), self.mu.predict(&m, 1, &x)],
                    pi1: self.pi.pi1(&x),
                    ratio: ratio[i],
                    gamma: self.gamma.predict_row(&x),
                    kappa: [self.kappa[0].predict_row(&x), self.kappa[1].predict_row(&x)],
                }
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::NuisanceLearners;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn binary_data(n: usize, seed: u64, constant_y: Option<f64>) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut a = Vec::new();
        let mut m = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let xi: f64 = rng.random();
            let ai = (rng.random::<f64>() < 0.3 + 0.2 * xi) as u8;
            let mi = (rng.random::<f64>() < glm::expit(-1.0 + ai as f64 + xi)) as u8 as f64;
            x.push(xi);
            a.push(ai);
            m.push(mi);
            y.push(constant_y.unwrap_or(1.0 + ai as f64 + mi + 2.0 * xi + rng.random::<f64>() - 0.5));
        }
        Dataset::new(
            DMatrix::from_column_slice(n, 1, &x),
            a,
            DMatrix::from_column_slice(n, 1, &m),
            y,
            None,
        )
        .unwrap()
    }

    #[test]
    fn constant_outcome_is_predicted_everywhere() {
        let d = binary_data(200, 3, Some(2.5));
        let set = NuisanceSetDensity::fit(&d, &EstimatorConfig::default()).unwrap();
        for (m, a, x) in [(0.0, 0u8, 0.1), (1.0, 1, 0.9)] {
            assert_abs_diff_eq!(set.mu.predict(&[m], a, &[x]), 2.5, epsilon = 1e-9);
        }
    }

    #[test]
    fn all_treated_is_rejected() {
        let d = binary_data(50, 1, None);
        let d = Dataset::new(d.x().clone(), vec![1; 50], d.m().clone(), d.y().to_vec(), None).unwrap();
        assert!(matches!(
            NuisanceSetDensity::fit(&d, &EstimatorConfig::default()),
            Err(Error::EmptyTreatmentArm { arm: 0 })
        ));
    }

    #[test]
    fn xi_two_ways_and_theta_by_summation() {
        let d = binary_data(300, 5, None);
        let set = NuisanceSetDensity::fit(&d, &EstimatorConfig::default()).unwrap();
        let DensityRows::Binary(rows) = set.rows(&d, 1, 200).unwrap() else { panic!() };
        for (i, r) in rows.iter().enumerate().take(20) {
            let x = d.x_row(i);
            let pi1 = set.pi.pi1(&x);
            for m in 0..2 {
                let direct = set.mu.predict(&[m as f64], 0, &x) * (1.0 - pi1) + set.mu.predict(&[m as f64], 1, &x) * pi1;
                assert_eq!(r.xi(m), direct);
                assert_eq!(set.xi(&[m as f64], &x), direct);
            }
            assert_eq!(r.theta(1), set.theta(&x, 1, 200).unwrap());
        }
    }

    #[test]
    fn sequential_regressions_on_constant_mu() {
        let d = binary_data(100, 9, Some(1.5));
        let mu = OutcomeModel::fit(&d, OutcomeKind::Continuous, Learner::MainTerms, 1e-3).unwrap();
        let pi = PropensityModel::fit(&d, Learner::MainTerms, 1e-3).unwrap();
        let g = sequential_gamma(&mu, &pi, &d, 1, Learner::MainTerms).unwrap();
        let k = sequential_kappa(&mu, &d, 1, 0, Learner::MainTerms).unwrap();
        for x in [0.0, 0.4, 1.0] {
            assert_abs_diff_eq!(g.predict_row(&[x]), 1.5, epsilon = 1e-8);
            assert_abs_diff_eq!(k.predict_row(&[x]), 1.5, epsilon = 1e-8);
        }
    }

    #[test]
    fn sequential_needs_reference_rows() {
        let d = binary_data(40, 2, None);
        let d = Dataset::new(d.x().clone(), vec![0; 40], d.m().clone(), d.y().to_vec(), None).unwrap();
        let mu = OutcomeModel::fit(&d, OutcomeKind::Continuous, Learner::MainTerms, 1e-3).unwrap();
        assert!(matches!(
            sequential_kappa(&mu, &d, 1, 1, Learner::MainTerms),
            Err(Error::InsufficientRowsInArm { arm: 1, found: 0, .. })
        ));
    }

    #[test]
    fn gamma_residuals_have_zero_mean() {
        let d = binary_data(400, 4, None);
        let cfg = EstimatorConfig { learners: NuisanceLearners::default(), ..EstimatorConfig::default() };
        let set = NuisanceSetRatio::fit(&d, &cfg, &RatioSource::BayesRule).unwrap();
        let rows = set.rows(&d).unwrap();
        let resid: f64 = rows
            .iter()
            .enumerate()
            .filter(|(i, _)| d.a()[*i] == 1)
            .map(|(_, r)| r.xi() - r.gamma)
            .sum();
        assert!(resid.abs() < 1e-8, "{resid}");
        for (i, r) in rows.iter().enumerate() {
            if d.a()[i] == 1 {
                assert_eq!(r.ratio, 1.0);
            }
        }
    }
}
