//! Conditional mediator densities, density ratios and quadrature over the
//! mediator.

use std::path::Path;

use nalgebra::DMatrix;

use crate::config::Learner;
use crate::data::{Dataset, MediatorKind};
use crate::error::{Error, Result};
use crate::glm::{self, clip_prob, DesignSpec, IrlsOptions, LinearFit, LogisticFit};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf(z: f64, sd: f64) -> f64 {
    INV_SQRT_2PI / sd * (-0.5 * (z / sd) * (z / sd)).exp()
}

fn sample_sd(v: &[f64]) -> f64 {
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
}

/// `1.06 σ n^{-1/5}`, or 1 when the sample has no spread.
pub fn silverman(v: &[f64]) -> f64 {
    let sd = sample_sd(v);
    if sd > 0.0 && sd.is_finite() {
        1.06 * sd * (v.len() as f64).powf(-0.2)
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BandwidthRule {
    Silverman,
    /// Same bandwidth for the mediator and every covariate.
    Fixed(f64),
}

/// Equally spaced trapezoid rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Grid {
    pub fn trapezoid(lo: f64, hi: f64, size: usize) -> Self {
        let size = size.max(2);
        let step = (hi - lo) / (size - 1) as f64;
        let points = (0..size).map(|k| lo + step * k as f64).collect();
        let mut weights = vec![step; size];
        weights[0] *= 0.5;
        weights[size - 1] *= 0.5;
        Grid { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

#[derive(Debug, Clone)]
struct KernelArm {
    m: Vec<f64>,
    /// Row-major `n_a × p`.
    x: Vec<f64>,
    h_m: f64,
    h_x: Vec<f64>,
}

impl KernelArm {
    fn n(&self) -> usize {
        self.m.len()
    }

    /// Normalized covariate-kernel weights at `x`, computed on the log scale.
    fn weights(&self, x: &[f64]) -> Vec<f64> {
        let p = x.len();
        let mut logw: Vec<f64> = (0..self.n())
            .map(|i| {
                let row = &self.x[i * p..(i + 1) * p];
                -0.5 * row
                    .iter()
                    .zip(x)
                    .zip(&self.h_x)
                    .map(|((xi, x), h)| ((x - xi) / h).powi(2))
                    .sum::<f64>()
            })
            .collect();
        let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for w in logw.iter_mut() {
            *w = (*w - max).exp();
            total += *w;
        }
        for w in logw.iter_mut() {
            *w /= total;
        }
        logw
    }

    fn eval_many(&self, ms: &[f64], x: &[f64]) -> Vec<f64> {
        let w = self.weights(x);
        let active: Vec<(f64, f64)> = w
            .iter()
            .zip(&self.m)
            .filter(|(w, _)| **w > 1e-300)
            .map(|(w, m)| (*w, *m))
            .collect();
        ms.iter()
            .map(|&m| active.iter().map(|(w, mi)| w * normal_pdf(m - mi, self.h_m)).sum())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct KernelDensity {
    arms: [KernelArm; 2],
    m_range: (f64, f64),
}

impl KernelDensity {
    pub fn mediator_bandwidth(&self, a: u8) -> f64 {
        self.arms[a as usize].h_m
    }

    pub fn covariate_bandwidths(&self, a: u8) -> &[f64] {
        &self.arms[a as usize].h_x
    }
}

#[derive(Debug, Clone)]
pub struct NormalDensity {
    /// Mean model over inputs `[A, X...]`.
    pub mean: LinearFit,
    pub sd: f64,
    pub m_range: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct BernoulliDensity {
    /// Model for `P(M = 1 | A, X)` over inputs `[A, X...]`.
    pub fit: LogisticFit,
    pub clip: f64,
}

#[derive(Debug, Clone)]
pub enum CondDensityModel {
    KernelGaussian(KernelDensity),
    ParametricNormal(NormalDensity),
    BernoulliLogistic(BernoulliDensity),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityKind {
    KernelGaussian,
    ParametricNormal,
    BernoulliLogistic,
}

fn ax_row(a: u8, x: &[f64]) -> Vec<f64> {
    let mut row = Vec::with_capacity(x.len() + 1);
    row.push(a as f64);
    row.extend_from_slice(x);
    row
}

/// `[A, X]` design for every row.
pub fn ax_matrix(data: &Dataset) -> DMatrix<f64> {
    let p = data.n_covariates();
    DMatrix::from_fn(data.n(), p + 1, |r, c| if c == 0 { data.a_f64(r) } else { data.x()[(r, c - 1)] })
}

impl CondDensityModel {
    /// `learner` drives the regression inside the parametric and logistic
    /// kinds; the kernel kind ignores it.
    pub fn fit(
        data: &Dataset,
        kind: DensityKind,
        bandwidth: &BandwidthRule,
        learner: Learner,
        clip: f64,
    ) -> Result<Self> {
        for arm in [0u8, 1] {
            if data.arm_size(arm) == 0 {
                return Err(Error::EmptyTreatmentArm { arm });
            }
        }
        match kind {
            DensityKind::BernoulliLogistic => {
                if data.mediator_kind() != MediatorKind::Binary {
                    return Err(Error::Unsupported(
                        "logistic mediator model requires a binary mediator".into(),
                    ));
                }
                let m: Vec<f64> = (0..data.n()).map(|i| data.m_scalar(i)).collect();
                let design = ax_matrix(data);
                let spec = DesignSpec::new(learner, design.ncols());
                let fit = match glm::fit_logistic(&design, spec, &m, None, None, true, IrlsOptions::default()) {
                    Ok(f) => f,
                    Err(Error::DegenerateOutcome) => {
                        let p = if m[0] == 1.0 { 1.0 } else { 0.0 };
                        let b0 = glm::logit(clip_prob(p, clip));
                        LogisticFit::from_coefficients(DesignSpec::new(Learner::InterceptOnly, design.ncols()), true, vec![b0])
                    }
                    Err(e) => return Err(e),
                };
                Ok(CondDensityModel::BernoulliLogistic(BernoulliDensity { fit, clip }))
            }
            DensityKind::ParametricNormal | DensityKind::KernelGaussian => {
                if data.n_mediators() != 1 {
                    return Err(Error::Unsupported(
                        "mediator densities are only fit for a single mediator".into(),
                    ));
                }
                let m: Vec<f64> = (0..data.n()).map(|i| data.m_scalar(i)).collect();
                let lo = m.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if kind == DensityKind::ParametricNormal {
                    let design = ax_matrix(data);
                    let spec = DesignSpec::new(learner, design.ncols());
                    let mean = glm::fit_linear(&design, spec, &m, None, None, true)?;
                    let pred = glm::predict_linear(&mean, &design, None)?;
                    let rss: f64 = pred.iter().zip(&m).map(|(p, m)| (m - p).powi(2)).sum();
                    let sd = (rss / data.n() as f64).sqrt();
                    let sd = if sd > 1e-8 { sd } else { 1.0 };
                    return Ok(CondDensityModel::ParametricNormal(NormalDensity { mean, sd, m_range: (lo, hi) }));
                }
                let p = data.n_covariates();
                let arm = |a: u8| {
                    let rows: Vec<usize> = (0..data.n()).filter(|&i| data.a()[i] == a).collect();
                    let ms: Vec<f64> = rows.iter().map(|&i| data.m_scalar(i)).collect();
                    let mut xs = Vec::with_capacity(rows.len() * p);
                    for &i in &rows {
                        xs.extend(data.x().row(i).iter().copied());
                    }
                    let (h_m, h_x) = match bandwidth {
                        BandwidthRule::Fixed(h) => (*h, vec![*h; p]),
                        BandwidthRule::Silverman => {
                            let hx = (0..p)
                                .map(|j| {
                                    let col: Vec<f64> = rows.iter().map(|&i| data.x()[(i, j)]).collect();
                                    silverman(&col)
                                })
                                .collect();
                            (silverman(&ms), hx)
                        }
                    };
                    KernelArm { m: ms, x: xs, h_m, h_x }
                };
                Ok(CondDensityModel::KernelGaussian(KernelDensity {
                    arms: [arm(0), arm(1)],
                    m_range: (lo, hi),
                }))
            }
        }
    }

    pub fn kind(&self) -> DensityKind {
        match self {
            CondDensityModel::KernelGaussian(_) => DensityKind::KernelGaussian,
            CondDensityModel::ParametricNormal(_) => DensityKind::ParametricNormal,
            CondDensityModel::BernoulliLogistic(_) => DensityKind::BernoulliLogistic,
        }
    }

    pub fn is_binary(&self) -> bool {
        matches!(self, CondDensityModel::BernoulliLogistic(_))
    }

    /// `P(M = 1 | a, x)` for the logistic kind.
    pub fn prob_one(&self, a: u8, x: &[f64]) -> Result<f64> {
        match self {
            CondDensityModel::BernoulliLogistic(b) => Ok(clip_prob(b.fit.prob_row(&ax_row(a, x), 0.0), b.clip)),
            _ => Err(Error::Unsupported("prob_one needs a binary mediator model".into())),
        }
    }

    pub fn eval(&self, m: f64, a: u8, x: &[f64]) -> f64 {
        self.eval_many(&[m], a, x)[0]
    }

    pub fn eval_many(&self, ms: &[f64], a: u8, x: &[f64]) -> Vec<f64> {
        match self {
            CondDensityModel::KernelGaussian(k) => k.arms[a as usize].eval_many(ms, x),
            CondDensityModel::ParametricNormal(nd) => {
                let mean = nd.mean.predict_row(&ax_row(a, x));
                ms.iter().map(|m| normal_pdf(m - mean, nd.sd)).collect()
            }
            CondDensityModel::BernoulliLogistic(b) => {
                let p1 = clip_prob(b.fit.prob_row(&ax_row(a, x), 0.0), b.clip);
                ms.iter().map(|&m| if m == 1.0 { p1 } else if m == 0.0 { 1.0 - p1 } else { 0.0 }).collect()
            }
        }
    }

    /// Quadrature grid over `[min M − 4h, max M + 4h]`.
    pub fn grid(&self, size: usize) -> Result<Grid> {
        let (lo, hi, h) = match self {
            CondDensityModel::KernelGaussian(k) => {
                (k.m_range.0, k.m_range.1, k.arms[0].h_m.max(k.arms[1].h_m))
            }
            CondDensityModel::ParametricNormal(nd) => (nd.m_range.0, nd.m_range.1, nd.sd),
            CondDensityModel::BernoulliLogistic(_) => {
                return Err(Error::Unsupported("binary mediators are summed, not integrated".into()))
            }
        };
        Ok(Grid::trapezoid(lo - 4.0 * h, hi + 4.0 * h, size))
    }
}

/// `∫ g(m) f(m | a0, x) dm`: trapezoid rule for continuous models, exact sum
/// over `{0, 1}` for binary ones.
pub fn integrate_mediator<G: Fn(f64) -> f64>(
    g: G,
    model: &CondDensityModel,
    a0: u8,
    x: &[f64],
    grid_size: usize,
) -> Result<f64> {
    if model.is_binary() {
        let p1 = model.prob_one(a0, x)?;
        return Ok(g(1.0) * p1 + g(0.0) * (1.0 - p1));
    }
    let grid = model.grid(grid_size)?;
    let f = model.eval_many(&grid.points, a0, x);
    let vals: Vec<f64> = grid.points.iter().zip(&f).map(|(&m, f)| g(m) * f).collect();
    Ok(grid.integrate(&vals))
}

#[derive(Debug, Clone)]
pub enum DensityRatioModel {
    /// `[λ(a0|x,m)/λ(a|x,m)]·[π(a|x)/π(a0|x)]`. `lambda` takes inputs
    /// `[M..., X...]`, `pi` takes `X`.
    BayesRule { lambda: LogisticFit, pi: LogisticFit, clip: f64 },
    FromDensity(CondDensityModel),
    /// Externally supplied ratio per row.
    Plugged(Vec<f64>),
}

fn prob_of(p1: f64, a: u8) -> f64 {
    if a == 1 {
        p1
    } else {
        1.0 - p1
    }
}

impl DensityRatioModel {
    pub fn from_density(model: CondDensityModel) -> Self {
        DensityRatioModel::FromDensity(model)
    }

    pub fn bayes(lambda: LogisticFit, pi: LogisticFit, clip: f64) -> Self {
        DensityRatioModel::BayesRule { lambda, pi, clip }
    }

    /// Ratio at one point. `row` indexes the plugged table.
    pub fn ratio(&self, row: usize, m: &[f64], a: u8, x: &[f64], a0: u8) -> Result<f64> {
        if a == a0 {
            return Ok(1.0);
        }
        match self {
            DensityRatioModel::BayesRule { lambda, pi, clip } => {
                let mut mx = Vec::with_capacity(m.len() + x.len());
                mx.extend_from_slice(m);
                mx.extend_from_slice(x);
                let l1 = clip_prob(lambda.prob_row(&mx, 0.0), *clip);
                let p1 = clip_prob(pi.prob_row(x, 0.0), *clip);
                Ok(prob_of(l1, a0) / prob_of(l1, a) * prob_of(p1, a) / prob_of(p1, a0))
            }
            DensityRatioModel::FromDensity(model) => {
                if m.len() != 1 {
                    return Err(Error::Unsupported("density ratios need a single mediator".into()));
                }
                let num = model.eval(m[0], a0, x);
                let den = model.eval(m[0], a, x);
                Ok(if den > 0.0 { num / den } else if num > 0.0 { f64::MAX } else { 1.0 })
            }
            DensityRatioModel::Plugged(values) => values.get(row).copied().ok_or_else(|| {
                Error::RowMismatch(format!("plugged ratio table has no row {row}"))
            }),
        }
    }

    /// Ratio at every observed row.
    pub fn observed(&self, data: &Dataset, a0: u8) -> Result<Vec<f64>> {
        if let DensityRatioModel::Plugged(values) = self {
            if values.len() != data.n() {
                return Err(Error::RowMismatch(format!(
                    "plugged ratio table has {} rows, data has {}",
                    values.len(),
                    data.n()
                )));
            }
        }
        (0..data.n())
            .map(|i| self.ratio(i, &data.m_row(i), data.a()[i], &data.x_row(i), a0))
            .collect()
    }

    /// Restriction of a plugged table to `rows`; other kinds are unchanged.
    pub fn subset(&self, rows: &[usize]) -> Self {
        match self {
            DensityRatioModel::Plugged(values) => {
                DensityRatioModel::Plugged(rows.iter().map(|&i| values[i]).collect())
            }
            other => other.clone(),
        }
    }
}

/// Reads the `fm_ratio` column of a CSV file.
pub fn load_ratio_csv(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path.as_ref())?;
    let headers = rdr.headers()?.clone();
    let idx = headers
        .iter()
        .position(|h| h.trim() == "fm_ratio")
        .ok_or_else(|| Error::MissingColumn("fm_ratio".into()))?;
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let v: f64 = rec
            .get(idx)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| Error::NonFiniteValue { column: "fm_ratio".into(), row })?;
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::NonFiniteValue { column: "fm_ratio".into(), row });
        }
        out.push(v);
    }
    Ok(out)
}

/// `A ~ [M, X]` treatment model used by the Bayes-rule ratio.
pub fn fit_lambda(data: &Dataset, learner: Learner) -> Result<LogisticFit> {
    let d = data.n_mediators();
    let p = data.n_covariates();
    let design = DMatrix::from_fn(data.n(), d + p, |r, c| {
        if c < d {
            data.m()[(r, c)]
        } else {
            data.x()[(r, c - d)]
        }
    });
    let a: Vec<f64> = (0..data.n()).map(|i| data.a_f64(i)).collect();
    glm::fit_logistic(&design, DesignSpec::new(learner, d + p), &a, None, None, true, IrlsOptions::default())
}
